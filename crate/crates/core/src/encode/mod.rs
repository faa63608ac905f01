//! CNF encoding of joint observation/policy synthesis.
//!
//! Variables (see [`VarMap`]):
//! `A(m,a)` action support, `M(m,z,a,m')` memory-update support,
//! `O(s,z)` completed observation support, `C(s,m)` reachability of a
//! state-memory pair, and `P(s,m,j)` "the goal is reachable from `(s,m)` in
//! at most `j` steps". Observations range over `Z' = Z ∪ Z_A`, where `Z_A`
//! holds `ν` fresh observations.
//!
//! The path predicate is a biconditional; it is converted to CNF with
//! auxiliary variables in one of two shapes, see [`TseitinMode`].

mod card;
mod vars;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{ActionId, MemId, ObsId, Pomdp, StateId};
pub use crate::sat::Cnf;

pub use card::{at_most_one, exactly_one, PAIRWISE_MAX};
pub use vars::{SemanticVar, VarMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("variable count overflows the DIMACS id range")]
    Overflow,
    #[error("unknown {kind} in side constraint: {name}")]
    UnknownReference { kind: &'static str, name: String },
    /// Some state cannot be given any observation, so no completion exists
    /// for these parameters regardless of the policy.
    #[error("state {state} admits no observation in the completed alphabet")]
    NoCompletion { state: String },
}

/// CNF shape of the path-predicate biconditional.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum TseitinMode {
    /// One auxiliary per inner conjunct `O(i',z) ∧ M(m,z,a,m') ∧ P(i',m',j-1)`
    /// (shared between predecessors) and one per action-level conjunct.
    #[default]
    Flat,
    /// Factors the disjunction through `T(i',m,a,m') ⇔ ∨_z O(i',z) ∧ M(m,z,a,m')`
    /// and `W(i',m,a,j) ⇔ ∨_m' T(i',m,a,m') ∧ P(i',m',j)`, which removes the
    /// `|Z'|` factor from the per-level auxiliaries.
    Factored,
}

/// An extra sensor: the completed alphabet becomes `Z × Val(C)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SensorSpec {
    pub name: String,
    pub values: Vec<String>,
}

/// Observation reference in a side constraint, resolved against `Z'`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ObsRef {
    Index(ObsId),
    Name(String),
}

/// Optional constraints on the completion.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SideConstraints {
    /// Pairs that must receive identical observation supports.
    pub same: Vec<(StateId, StateId)>,
    /// Pairs whose supports must be complementary on every observation.
    pub diff: Vec<(StateId, StateId)>,
    /// `(s, z, z')`: whenever `z` is observed in `s`, so is `z'`.
    pub implies: Vec<(StateId, ObsRef, ObsRef)>,
    pub sensor: Option<SensorSpec>,
    /// Every completed support is a singleton.
    pub deterministic: bool,
    /// Undefined states may only gain fresh observations.
    pub strict: bool,
    /// Each memory element selects exactly one action.
    pub single_action: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodeOptions {
    pub mu: usize,
    pub nu: usize,
    pub k: usize,
    pub tseitin: TseitinMode,
    pub pairwise_max: usize,
}

impl EncodeOptions {
    /// Options with the completeness bound `k = |S|·μ`.
    pub fn full(p: &Pomdp, mu: usize, nu: usize) -> Self {
        Self {
            mu,
            nu,
            k: completeness_bound(p, mu),
            tseitin: TseitinMode::Flat,
            pairwise_max: PAIRWISE_MAX,
        }
    }
}

/// Smallest `k` for which satisfiability is equivalent to realizability.
pub fn completeness_bound(p: &Pomdp, mu: usize) -> usize {
    p.num_states().saturating_mul(mu)
}

/// Allocate the semantic variables for `p` with the declared alphabet.
pub fn alloc_vars(p: &Pomdp, mu: usize, nu: usize, k: usize) -> Result<VarMap, EncodeError> {
    VarMap::new(p, mu, nu, k)
}

fn alloc_for(p: &Pomdp, opts: &EncodeOptions, sc: &SideConstraints) -> Result<VarMap, EncodeError> {
    match &sc.sensor {
        None => VarMap::new(p, opts.mu, opts.nu, opts.k),
        Some(sensor) => {
            if sensor.values.is_empty() {
                return Err(EncodeError::Precondition("sensor has no values"));
            }
            let names = p
                .obs_names()
                .iter()
                .flat_map(|z| sensor.values.iter().map(move |c| format!("{z}.{c}")))
                .collect();
            VarMap::with_alphabet(p, opts.mu, opts.nu, opts.k, names, 0)
        }
    }
}

/// One clause `∨_a A(m,a)` per memory element.
pub fn encode_action_selection(vm: &VarMap, cnf: &mut Cnf) {
    let mut c = Vec::with_capacity(vm.num_actions());
    for m in vm.memories() {
        c.clear();
        c.extend((0..vm.num_actions()).map(|a| vm.action(m, ActionId::from_index(a))));
        cnf.add_clause(&c);
    }
}

/// One clause `∨_m' M(m,z,a,m')` per `(m, z, a)`.
pub fn encode_memory_update(vm: &VarMap, cnf: &mut Cnf) {
    let mut c = Vec::with_capacity(vm.mu());
    for m in vm.memories() {
        for z in vm.observations() {
            for a in 0..vm.num_actions() {
                let a = ActionId::from_index(a);
                c.clear();
                c.extend(vm.memories().map(|m2| vm.update(m, z, a, m2)));
                cnf.add_clause(&c);
            }
        }
    }
}

/// Completion constraints: coverage, consistency with declared observations,
/// no fresh observations on fully defined states, and optionally strictness
/// and determinism.
///
/// In strict mode a state that keeps some undefined mass must gain a fresh
/// observation, and declared observations outside its support are excluded.
pub fn encode_observation_fn(
    p: &Pomdp,
    vm: &VarMap,
    sc: &SideConstraints,
    pairwise_max: usize,
    cnf: &mut Cnf,
) -> Result<(), EncodeError> {
    let sensor_mode = sc.sensor.is_some();
    let strict = sc.strict && !sensor_mode;
    let mut all = Vec::with_capacity(vm.num_obs());
    let mut cover = Vec::with_capacity(vm.num_obs());
    for s in p.states() {
        // In sensor mode every state starts out undefined over Z x Val(C).
        let declared: Vec<ObsId> = if sensor_mode {
            Vec::new()
        } else {
            p.obs_fn().defined_support(s).collect()
        };
        let fully_defined = !sensor_mode && p.obs_fn().is_fully_defined(s);

        all.clear();
        all.extend(vm.observations().map(|z| vm.obs(s, z)));
        cover.clear();
        if strict && !fully_defined {
            // the undefined mass has to go to fresh observations
            cover.extend(vm.additional().map(|z| vm.obs(s, z)));
        } else {
            cover.extend_from_slice(&all);
        }
        if cover.is_empty() {
            return Err(EncodeError::NoCompletion {
                state: p.state_name(s).into(),
            });
        }
        if sc.deterministic {
            exactly_one(&all, cnf, pairwise_max);
            if cover.len() != all.len() {
                cnf.add_clause(&cover);
            }
        } else {
            cnf.add_clause(&cover);
        }
        for &z in &declared {
            cnf.add_clause(&[vm.obs(s, z)]);
        }
        if fully_defined {
            for z in vm.additional() {
                cnf.add_clause(&[-vm.obs(s, z)]);
            }
        }
        if strict {
            for z in (0..vm.base_obs()).map(ObsId::from_index) {
                if !declared.contains(&z) {
                    cnf.add_clause(&[-vm.obs(s, z)]);
                }
            }
        }
    }
    Ok(())
}

/// Reachability closure: `C(I,m₀)`, and `C(i,m) ∧ A(m,a) ∧ O(j,z) ∧ M(m,z,a,m')
/// ⇒ C(j,m')` for every transition `δ(i,a)(j) > 0`.
pub fn encode_reach_closure(p: &Pomdp, vm: &VarMap, cnf: &mut Cnf) {
    cnf.add_clause(&[vm.reach(p.initial(), MemId(0))]);
    for i in p.states() {
        for a in p.actions() {
            for j in p.successors(i, a) {
                for z in vm.observations() {
                    for m in vm.memories() {
                        for m2 in vm.memories() {
                            cnf.add_clause(&[
                                -vm.reach(i, m),
                                -vm.action(m, a),
                                -vm.obs(j, z),
                                -vm.update(m, z, a, m2),
                                vm.reach(j, m2),
                            ]);
                        }
                    }
                }
            }
        }
    }
}

/// Fresh variable `x ⇔ l₁ ∧ … ∧ lₙ`.
fn define_and(cnf: &mut Cnf, conj: &[i32]) -> i32 {
    let x = cnf.new_var();
    let mut back = Vec::with_capacity(conj.len() + 1);
    back.push(x);
    for &l in conj {
        cnf.add_clause(&[-x, l]);
        back.push(-l);
    }
    cnf.add_clause(&back);
    x
}

/// Fresh variable `x ⇔ l₁ ∨ … ∨ lₙ`, or `None` for an empty disjunction.
fn define_or(cnf: &mut Cnf, disj: &[i32]) -> Option<i32> {
    match disj {
        [] => None,
        [single] => Some(*single),
        _ => {
            let x = cnf.new_var();
            let mut fwd = Vec::with_capacity(disj.len() + 1);
            fwd.push(-x);
            fwd.extend_from_slice(disj);
            cnf.add_clause(&fwd);
            for &l in disj {
                cnf.add_clause(&[x, -l]);
            }
            Some(x)
        }
    }
}

/// `lhs ⇔ ∨ disj`.
fn define_equiv_or(cnf: &mut Cnf, lhs: i32, disj: &[i32]) {
    if disj.is_empty() {
        cnf.add_clause(&[-lhs]);
        return;
    }
    let mut fwd = Vec::with_capacity(disj.len() + 1);
    fwd.push(-lhs);
    fwd.extend_from_slice(disj);
    cnf.add_clause(&fwd);
    for &l in disj {
        cnf.add_clause(&[lhs, -l]);
    }
}

/// Lazily created auxiliaries keyed by a dense index.
struct AuxTable {
    ids: Vec<i32>,
}

impl AuxTable {
    fn new(len: usize) -> Self {
        Self { ids: vec![0; len] }
    }

    fn get_or(&mut self, idx: usize, make: impl FnOnce() -> i32) -> i32 {
        if self.ids[idx] == 0 {
            self.ids[idx] = make();
        }
        self.ids[idx]
    }

    fn clear(&mut self) {
        self.ids.iter_mut().for_each(|x| *x = 0);
    }
}

/// Path predicate: goal units, base negatives, `C(i,m) ⇒ P(i,m,k)`, and the
/// biconditional
/// `P(i,m,j) ⇔ ∨_a [A(m,a) ∧ ∨_{m',z,i'} (O(i',z) ∧ M(m,z,a,m') ∧ P(i',m',j-1))]`
/// for every non-goal `i` and `1 ≤ j ≤ k`.
pub fn encode_path_predicate(p: &Pomdp, vm: &VarMap, mode: TseitinMode, cnf: &mut Cnf) {
    let k = vm.k();
    let goal = p.goal();
    for m in vm.memories() {
        for j in 0..=k {
            cnf.add_clause(&[vm.path(goal, m, j)]);
        }
    }
    for i in p.states().filter(|&i| i != goal) {
        for m in vm.memories() {
            cnf.add_clause(&[-vm.path(i, m, 0)]);
        }
    }
    for i in p.states() {
        for m in vm.memories() {
            cnf.add_clause(&[-vm.reach(i, m), vm.path(i, m, k)]);
        }
    }
    match mode {
        TseitinMode::Flat => path_flat(p, vm, cnf),
        TseitinMode::Factored => path_factored(p, vm, cnf),
    }
}

fn path_flat(p: &Pomdp, vm: &VarMap, cnf: &mut Cnf) {
    let (ns, na, nz, mu) = (p.num_states(), p.num_actions(), vm.num_obs(), vm.mu());
    let goal = p.goal();
    // inner[(((i' * nz + z) * na + a) * mu + m) * mu + m'] for the current level
    let mut inner = AuxTable::new(ns * nz * na * mu * mu);
    let mut xs = Vec::new();
    let mut ys = Vec::with_capacity(na);
    for j in 1..=vm.k() {
        inner.clear();
        for i in p.states().filter(|&i| i != goal) {
            for m in vm.memories() {
                ys.clear();
                for a in p.actions() {
                    xs.clear();
                    for i2 in p.successors(i, a) {
                        for m2 in vm.memories() {
                            for z in vm.observations() {
                                let idx = (((i2.index() * nz + z.index()) * na + a.index()) * mu
                                    + m.index())
                                    * mu
                                    + m2.index();
                                let x = inner.get_or(idx, || {
                                    define_and(
                                        cnf,
                                        &[vm.obs(i2, z), vm.update(m, z, a, m2), vm.path(i2, m2, j - 1)],
                                    )
                                });
                                xs.push(x);
                            }
                        }
                    }
                    if xs.is_empty() {
                        continue;
                    }
                    // y <=> A(m,a) ∧ ∨ xs
                    let y = cnf.new_var();
                    cnf.add_clause(&[-y, vm.action(m, a)]);
                    let mut fwd = Vec::with_capacity(xs.len() + 1);
                    fwd.push(-y);
                    fwd.extend_from_slice(&xs);
                    cnf.add_clause(&fwd);
                    for &x in &xs {
                        cnf.add_clause(&[y, -vm.action(m, a), -x]);
                    }
                    ys.push(y);
                }
                define_equiv_or(cnf, vm.path(i, m, j), &ys);
            }
        }
    }
}

fn path_factored(p: &Pomdp, vm: &VarMap, cnf: &mut Cnf) {
    let (ns, na, mu) = (p.num_states(), p.num_actions(), vm.mu());
    let goal = p.goal();
    // Target states that some non-goal state can move into, per action.
    let mut entered = vec![false; ns * na];
    for i in p.states().filter(|&i| i != goal) {
        for a in p.actions() {
            for i2 in p.successors(i, a) {
                entered[i2.index() * na + a.index()] = true;
            }
        }
    }
    // T(i',m,a,m') <=> ∨_z O(i',z) ∧ M(m,z,a,m'), independent of the level.
    let t_idx = |i2: StateId, m: MemId, a: ActionId, m2: MemId| {
        ((i2.index() * mu + m.index()) * na + a.index()) * mu + m2.index()
    };
    let mut trans = vec![0i32; ns * mu * na * mu];
    let mut conj = Vec::new();
    for i2 in p.states() {
        for a in p.actions() {
            if !entered[i2.index() * na + a.index()] {
                continue;
            }
            for m in vm.memories() {
                for m2 in vm.memories() {
                    conj.clear();
                    for z in vm.observations() {
                        conj.push(define_and(cnf, &[vm.obs(i2, z), vm.update(m, z, a, m2)]));
                    }
                    let t = define_or(cnf, &conj);
                    trans[t_idx(i2, m, a, m2)] = t.unwrap_or(0);
                }
            }
        }
    }
    let w_idx = |i2: StateId, m: MemId, a: ActionId| (i2.index() * mu + m.index()) * na + a.index();
    let mut step = AuxTable::new(ns * mu * na);
    let mut ws = Vec::new();
    let mut ys = Vec::with_capacity(na);
    for j in 1..=vm.k() {
        step.clear();
        for i in p.states().filter(|&i| i != goal) {
            for m in vm.memories() {
                ys.clear();
                for a in p.actions() {
                    ws.clear();
                    for i2 in p.successors(i, a) {
                        let w = step.get_or(w_idx(i2, m, a), || {
                            // W(i',m,a,j-1) <=> ∨_m' T(i',m,a,m') ∧ P(i',m',j-1)
                            let mut vs = Vec::with_capacity(mu);
                            for m2 in vm.memories() {
                                let t = trans[t_idx(i2, m, a, m2)];
                                if t != 0 {
                                    vs.push(define_and(cnf, &[t, vm.path(i2, m2, j - 1)]));
                                }
                            }
                            match define_or(cnf, &vs) {
                                Some(w) => w,
                                None => {
                                    let f = cnf.new_var();
                                    cnf.add_clause(&[-f]);
                                    f
                                }
                            }
                        });
                        ws.push(w);
                    }
                    if ws.is_empty() {
                        continue;
                    }
                    let y = cnf.new_var();
                    cnf.add_clause(&[-y, vm.action(m, a)]);
                    let mut fwd = Vec::with_capacity(ws.len() + 1);
                    fwd.push(-y);
                    fwd.extend_from_slice(&ws);
                    cnf.add_clause(&fwd);
                    for &w in &ws {
                        cnf.add_clause(&[y, -vm.action(m, a), -w]);
                    }
                    ys.push(y);
                }
                define_equiv_or(cnf, vm.path(i, m, j), &ys);
            }
        }
    }
}

fn resolve_obs(vm: &VarMap, r: &ObsRef) -> Result<ObsId, EncodeError> {
    match r {
        ObsRef::Index(z) if z.index() < vm.num_obs() => Ok(*z),
        ObsRef::Index(z) => Err(EncodeError::UnknownReference {
            kind: "observation",
            name: format!("#{}", z.0),
        }),
        ObsRef::Name(n) => vm.obs_by_name(n).ok_or_else(|| EncodeError::UnknownReference {
            kind: "observation",
            name: n.clone(),
        }),
    }
}

fn check_state(p: &Pomdp, s: StateId) -> Result<(), EncodeError> {
    if s.index() < p.num_states() {
        Ok(())
    } else {
        Err(EncodeError::UnknownReference {
            kind: "state",
            name: format!("#{}", s.0),
        })
    }
}

/// Non-distinguishable and distinguishable pairs, observation dependencies,
/// and the sensor-variable constraints.
pub fn encode_side_constraints(
    p: &Pomdp,
    sc: &SideConstraints,
    vm: &VarMap,
    cnf: &mut Cnf,
) -> Result<(), EncodeError> {
    for &(s, t) in &sc.same {
        check_state(p, s)?;
        check_state(p, t)?;
        for z in vm.observations() {
            cnf.add_clause(&[-vm.obs(s, z), vm.obs(t, z)]);
            cnf.add_clause(&[vm.obs(s, z), -vm.obs(t, z)]);
        }
    }
    for &(s, t) in &sc.diff {
        check_state(p, s)?;
        check_state(p, t)?;
        for z in vm.observations() {
            cnf.add_clause(&[vm.obs(s, z), vm.obs(t, z)]);
            cnf.add_clause(&[-vm.obs(s, z), -vm.obs(t, z)]);
        }
    }
    for (s, z, z2) in &sc.implies {
        check_state(p, *s)?;
        let z = resolve_obs(vm, z)?;
        let z2 = resolve_obs(vm, z2)?;
        cnf.add_clause(&[-vm.obs(*s, z), vm.obs(*s, z2)]);
    }
    if let Some(sensor) = &sc.sensor {
        let nc = sensor.values.len();
        let mut c = Vec::with_capacity(nc);
        for s in p.states() {
            let base: Vec<ObsId> = p.obs_fn().defined_support(s).collect();
            if base.is_empty() {
                continue;
            }
            for z in 0..p.num_observations() {
                let pair = |c: usize| ObsId::from_index(z * nc + c);
                if base.contains(&ObsId::from_index(z)) {
                    c.clear();
                    c.extend((0..nc).map(|ci| vm.obs(s, pair(ci))));
                    cnf.add_clause(&c);
                } else {
                    for ci in 0..nc {
                        cnf.add_clause(&[-vm.obs(s, pair(ci))]);
                    }
                }
            }
        }
    }
    if sc.single_action {
        let mut lits = Vec::with_capacity(vm.num_actions());
        for m in vm.memories() {
            lits.clear();
            lits.extend(p.actions().map(|a| vm.action(m, a)));
            at_most_one(&lits, cnf, PAIRWISE_MAX);
        }
    }
    Ok(())
}

/// Build the full formula.
pub fn encode(
    p: &Pomdp,
    opts: &EncodeOptions,
    sc: &SideConstraints,
) -> Result<(Cnf, VarMap), EncodeError> {
    let mut vm = alloc_for(p, opts, sc)?;
    let mut cnf = Cnf::new(vm.semantic_count());
    encode_action_selection(&vm, &mut cnf);
    encode_memory_update(&vm, &mut cnf);
    encode_observation_fn(p, &vm, sc, opts.pairwise_max, &mut cnf)?;
    encode_side_constraints(p, sc, &vm, &mut cnf)?;
    encode_reach_closure(p, &vm, &mut cnf);
    encode_path_predicate(p, &vm, opts.tseitin, &mut cnf);
    vm.set_total(cnf.num_vars());
    Ok((cnf, vm))
}
