//! Qualitative verification of a completion/policy pair.
//!
//! A pair wins almost surely iff every state-memory pair reachable from
//! `(I, m₀)` in the product graph can reach a goal pair. Only supports are
//! consulted, never weights.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ActionId, Completion, MemId, ObsId, Policy, Pomdp, Prob, StateId};

/// Product of a POMDP with a policy under a completion. Vertex `(s, m)` has
/// index `s * |M| + m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductGraph {
    num_states: usize,
    memory: usize,
    initial: u32,
    goal: StateId,
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl ProductGraph {
    pub fn num_vertices(&self) -> usize {
        self.num_states * self.memory
    }

    pub fn memory_size(&self) -> usize {
        self.memory
    }

    pub fn vertex(&self, s: StateId, m: MemId) -> u32 {
        (s.index() * self.memory + m.index()) as u32
    }

    pub fn pair(&self, v: u32) -> (StateId, MemId) {
        let v = v as usize;
        (StateId::from_index(v / self.memory), MemId::from_index(v % self.memory))
    }

    pub fn initial(&self) -> (StateId, MemId) {
        self.pair(self.initial)
    }

    pub fn is_goal(&self, v: u32) -> bool {
        self.pair(v).0 == self.goal
    }

    pub fn successors(&self, v: u32) -> &[u32] {
        &self.targets[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    pub fn has_edge(&self, from: (StateId, MemId), to: (StateId, MemId)) -> bool {
        self.successors(self.vertex(from.0, from.1))
            .binary_search(&self.vertex(to.0, to.1))
            .is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }
}

/// Build the product graph. Panics if `c` or `pol` do not match the
/// dimensions of `p`.
pub fn build_product(p: &Pomdp, c: &Completion, pol: &Policy) -> ProductGraph {
    assert_eq!(c.num_states(), p.num_states(), "completion does not match the model");
    assert_eq!(pol.num_actions(), p.num_actions(), "policy does not match the model");
    assert!(
        pol.num_observations() >= c.num_observations(),
        "policy does not cover the completed alphabet"
    );
    let mu = pol.memory_size();
    let nv = p.num_states() * mu;
    let mut offsets = Vec::with_capacity(nv + 1);
    let mut targets = Vec::new();
    let mut row = Vec::new();
    offsets.push(0);
    for s in p.states() {
        for m in pol.memories() {
            row.clear();
            for &a in pol.actions(m) {
                for s2 in p.successors(s, a) {
                    for z in c.support(s2) {
                        for &m2 in pol.update(m, z, a) {
                            row.push((s2.index() * mu + m2.index()) as u32);
                        }
                    }
                }
            }
            row.sort_unstable();
            row.dedup();
            targets.extend_from_slice(&row);
            offsets.push(targets.len() as u32);
        }
    }
    ProductGraph {
        num_states: p.num_states(),
        memory: mu,
        initial: (p.initial().index() * mu + pol.initial().index()) as u32,
        goal: p.goal(),
        offsets,
        targets,
    }
}

/// Result of [`check_almost_sure`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyCertificate {
    pub almost_sure: bool,
    /// Pairs reachable from the initial pair with their shortest distance to
    /// a goal pair (`None` when no goal pair is reachable).
    pub reachable: Vec<((StateId, MemId), Option<u32>)>,
    /// A reachable pair with no path to the goal, when verification fails.
    pub witness: Option<(StateId, MemId)>,
}

impl VerifyCertificate {
    /// Largest goal distance over the reachable pairs.
    pub fn max_distance(&self) -> Option<u32> {
        self.reachable.iter().filter_map(|(_, d)| *d).max()
    }

    /// Text listing of reachable pairs and distances.
    pub fn render(&self, p: &Pomdp) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "almost-sure: {}", self.almost_sure);
        if let Some((s, m)) = self.witness {
            let _ = writeln!(out, "witness: ({}, m{})", p.state_name(s), m.0);
        }
        for ((s, m), d) in &self.reachable {
            let d = d.map_or_else(|| String::from("inf"), |d| format!("{d}"));
            let _ = writeln!(out, "reach ({}, m{}) {d}", p.state_name(*s), m.0);
        }
        out
    }
}

/// Forward reachability from the initial pair, then backward breadth-first
/// search from the goal pairs.
pub fn check_almost_sure(g: &ProductGraph) -> VerifyCertificate {
    let nv = g.num_vertices();
    let mut seen = vec![false; nv];
    let mut order = Vec::new();
    seen[g.initial as usize] = true;
    let mut stack = vec![g.initial];
    while let Some(v) = stack.pop() {
        order.push(v);
        for &w in g.successors(v) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                stack.push(w);
            }
        }
    }
    // reverse edges restricted to reachable vertices
    let mut indeg = vec![0u32; nv + 1];
    for &v in &order {
        for &w in g.successors(v) {
            indeg[w as usize + 1] += 1;
        }
    }
    for i in 0..nv {
        indeg[i + 1] += indeg[i];
    }
    let mut fill = indeg.clone();
    let mut preds = vec![0u32; indeg[nv] as usize];
    for &v in &order {
        for &w in g.successors(v) {
            preds[fill[w as usize] as usize] = v;
            fill[w as usize] += 1;
        }
    }
    let mut dist: Vec<Option<u32>> = vec![None; nv];
    let mut queue = VecDeque::new();
    for &v in &order {
        if g.is_goal(v) {
            dist[v as usize] = Some(0);
            queue.push_back(v);
        }
    }
    while let Some(w) = queue.pop_front() {
        let d = dist[w as usize].unwrap() + 1;
        for &v in &preds[indeg[w as usize] as usize..indeg[w as usize + 1] as usize] {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(d);
                queue.push_back(v);
            }
        }
    }
    order.sort_unstable();
    let witness = order.iter().find(|&&v| dist[v as usize].is_none()).map(|&v| g.pair(v));
    VerifyCertificate {
        almost_sure: witness.is_none(),
        reachable: order.iter().map(|&v| (g.pair(v), dist[v as usize])).collect(),
        witness,
    }
}

/// Build the product and check it.
pub fn verify(p: &Pomdp, c: &Completion, pol: &Policy) -> VerifyCertificate {
    check_almost_sure(&build_product(p, c, pol))
}

fn cumulative(ws: impl Iterator<Item = Prob>) -> Vec<f64> {
    let mut acc = 0.0;
    ws.map(|w| {
        acc += *w.numer() as f64 / *w.denom() as f64;
        acc
    })
    .collect()
}

fn pick(cum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let x = rng.gen::<f64>() * cum.last().copied().unwrap_or(1.0);
    cum.iter().position(|&c| x < c).unwrap_or(cum.len() - 1)
}

/// Fraction of `episodes` runs that visit the goal within `horizon` steps.
///
/// Actions and memory updates are drawn uniformly from the policy supports;
/// transitions and observations follow the model and completion weights.
/// Episode `e` uses its own ChaCha stream derived from `seed`.
pub fn simulate(
    p: &Pomdp,
    c: &Completion,
    pol: &Policy,
    episodes: u64,
    horizon: u64,
    seed: u64,
) -> f64 {
    assert!(episodes >= 1 && horizon >= 1);
    let na = p.num_actions();
    let trans: Vec<(Vec<StateId>, Vec<f64>)> = p
        .states()
        .flat_map(|s| p.actions().map(move |a| (s, a)))
        .map(|(s, a)| {
            let t = p.transition(s, a);
            (t.iter().map(|e| e.0).collect(), cumulative(t.iter().map(|e| e.1)))
        })
        .collect();
    let obs: Vec<(Vec<ObsId>, Vec<f64>)> = p
        .states()
        .map(|s| {
            let d = c.dist(s);
            (d.iter().map(|e| e.0).collect(), cumulative(d.iter().map(|e| e.1)))
        })
        .collect();
    let mut hits = 0u64;
    for e in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(e);
        let (mut s, mut m) = (p.initial(), pol.initial());
        for _ in 0..horizon {
            if s == p.goal() {
                break;
            }
            let acts = pol.actions(m);
            let a = acts[rng.gen_range(0..acts.len())];
            let (succ, cum) = &trans[s.index() * na + a.index()];
            let s2 = succ[pick(cum, &mut rng)];
            let (zs, zcum) = &obs[s2.index()];
            let z = zs[pick(zcum, &mut rng)];
            let next = pol.update(m, z, a);
            m = next[rng.gen_range(0..next.len())];
            s = s2;
        }
        if s == p.goal() {
            hits += 1;
        }
    }
    hits as f64 / episodes as f64
}

/// Node budget of the brute-force oracle.
pub const ORACLE_NODE_LIMIT: u64 = 1 << 24;

#[derive(Copy, Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("brute-force search exceeded {limit} nodes")]
pub struct GuardExceeded {
    pub limit: u64,
}

/// Exhaustive search for a completion with at most `nu` new observations and
/// a support-based policy with at most `mu` memory elements that wins almost
/// surely. With `deterministic`, completions have singleton supports.
pub fn brute_force_decide(
    p: &Pomdp,
    mu: usize,
    nu: usize,
    deterministic: bool,
) -> Result<bool, GuardExceeded> {
    brute_force_witness(p, mu, nu, deterministic).map(|w| w.is_some())
}

/// As [`brute_force_decide`], returning a winning pair when one exists.
pub fn brute_force_witness(
    p: &Pomdp,
    mu: usize,
    nu: usize,
    deterministic: bool,
) -> Result<Option<(Completion, Policy)>, GuardExceeded> {
    assert!(mu >= 1, "memory bound must be at least 1");
    let mut search = Oracle::new(p, mu, nu, deterministic);
    if search.supports.iter().any(Vec::is_empty) {
        return Ok(None);
    }
    search.run()?;
    Ok(search.found.take().map(|(c, pol)| search.assemble(c, pol)))
}

/// Choice for one table entry; `u32::MAX` means unassigned. Entries hold
/// either an index into the state's support list or a bit mask.
const UNSET: u32 = u32::MAX;

struct Oracle<'p> {
    p: &'p Pomdp,
    mu: usize,
    nz: usize,
    base: usize,
    /// Candidate completion supports per state, as bit masks over `Z'`.
    supports: Vec<Vec<u32>>,
    comp: Vec<u32>,
    act: Vec<u32>,
    upd: Vec<u32>,
    nodes: u64,
    found: Option<(Vec<u32>, (Vec<u32>, Vec<u32>))>,
}

enum Need {
    Comp(usize),
    Act(usize),
    Upd(usize),
}

impl<'p> Oracle<'p> {
    fn new(p: &'p Pomdp, mu: usize, nu: usize, deterministic: bool) -> Self {
        let base = p.num_observations();
        let nz = base + nu;
        assert!(nz <= 16 && mu <= 16 && p.num_actions() <= 16, "instance too large for the oracle");
        let supports = p
            .states()
            .map(|s| {
                let declared: u32 = p.obs_fn().defined_support(s).fold(0, |acc, z| acc | 1 << z.0);
                if p.obs_fn().is_fully_defined(s) {
                    if deterministic && declared.count_ones() != 1 {
                        return Vec::new();
                    }
                    return vec![declared];
                }
                if deterministic {
                    return match declared.count_ones() {
                        0 => (0..nz).map(|z| 1u32 << z).collect(),
                        1 => vec![declared],
                        _ => Vec::new(),
                    };
                }
                (1u32..1 << nz).filter(|m| m & declared == declared).collect()
            })
            .collect();
        Self {
            p,
            mu,
            nz,
            base,
            supports,
            comp: vec![UNSET; p.num_states()],
            act: vec![UNSET; mu],
            upd: vec![UNSET; mu * nz * p.num_actions()],
            nodes: 0,
            found: None,
        }
    }

    fn upd_index(&self, m: usize, z: usize, a: usize) -> usize {
        (m * self.nz + z) * self.p.num_actions() + a
    }

    /// Explore the product under the current partial choice. Returns the
    /// first unassigned entry met, or `None` when the reachable part is
    /// fully determined.
    fn first_need(&self) -> Option<Need> {
        let mu = self.mu;
        let mut seen = vec![false; self.p.num_states() * mu];
        let start = self.p.initial().index() * mu;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let (s, m) = (v / mu, v % mu);
            if self.act[m] == UNSET {
                return Some(Need::Act(m));
            }
            for a in bits(self.act[m]) {
                for s2 in self.p.successors(StateId::from_index(s), ActionId::from_index(a)) {
                    let ci = self.comp[s2.index()];
                    if ci == UNSET {
                        return Some(Need::Comp(s2.index()));
                    }
                    for z in bits(self.supports[s2.index()][ci as usize]) {
                        let u = self.upd[self.upd_index(m, z, a)];
                        if u == UNSET {
                            return Some(Need::Upd(self.upd_index(m, z, a)));
                        }
                        for m2 in bits(u) {
                            let w = s2.index() * mu + m2;
                            if !seen[w] {
                                seen[w] = true;
                                queue.push_back(w);
                            }
                        }
                    }
                }
            }
        }
        None
    }

    /// Highest memory element and new observation referenced so far.
    fn used(&self) -> (u32, u32) {
        let mut mem = 1u32; // m0 is always in use
        for &u in self.upd.iter().filter(|&&u| u != UNSET) {
            mem |= u;
        }
        for (m, &a) in self.act.iter().enumerate() {
            if a != UNSET {
                mem |= 1 << m;
            }
        }
        let mut obs = 0u32;
        for (s, &ci) in self.comp.iter().enumerate() {
            if ci != UNSET {
                obs |= self.supports[s][ci as usize];
            }
        }
        (mem, obs >> self.base)
    }

    fn run(&mut self) -> Result<(), GuardExceeded> {
        self.nodes += 1;
        if self.nodes > ORACLE_NODE_LIMIT {
            return Err(GuardExceeded {
                limit: ORACLE_NODE_LIMIT,
            });
        }
        let need = match self.first_need() {
            None => {
                if self.leaf_wins() {
                    self.found = Some((self.comp.clone(), (self.act.clone(), self.upd.clone())));
                }
                return Ok(());
            }
            Some(n) => n,
        };
        let (mem_used, new_used) = self.used();
        match need {
            Need::Act(m) => {
                for mask in 1u32..1 << self.p.num_actions() {
                    self.act[m] = mask;
                    self.run()?;
                    if self.found.is_some() {
                        return Ok(());
                    }
                }
                self.act[m] = UNSET;
            }
            Need::Upd(i) => {
                for mask in 1u32..1 << self.mu {
                    // unused memory elements are interchangeable: only
                    // introduce them in index order
                    if !prefix_of_unused(mask, mem_used, self.mu) {
                        continue;
                    }
                    self.upd[i] = mask;
                    self.run()?;
                    if self.found.is_some() {
                        return Ok(());
                    }
                }
                self.upd[i] = UNSET;
            }
            Need::Comp(s) => {
                let nnew = self.nz - self.base;
                for ci in 0..self.supports[s].len() {
                    let fresh = self.supports[s][ci] >> self.base;
                    if !prefix_of_unused(fresh, new_used, nnew) {
                        continue;
                    }
                    self.comp[s] = ci as u32;
                    self.run()?;
                    if self.found.is_some() {
                        return Ok(());
                    }
                }
                self.comp[s] = UNSET;
            }
        }
        Ok(())
    }

    fn leaf_wins(&self) -> bool {
        let (c, pol) = self.assemble(self.comp.clone(), (self.act.clone(), self.upd.clone()));
        verify(self.p, &c, &pol).almost_sure
    }

    /// Fill unassigned entries with arbitrary choices and build the pair.
    fn assemble(&self, comp: Vec<u32>, (act, upd): (Vec<u32>, Vec<u32>)) -> (Completion, Policy) {
        let mut names: Vec<String> = self.p.obs_names().to_vec();
        for i in 1..=self.nz - self.base {
            names.push(format!("new{i}"));
        }
        let support = comp
            .iter()
            .enumerate()
            .map(|(s, &ci)| {
                let mask = self.supports[s][if ci == UNSET { 0 } else { ci as usize }];
                let zs: Vec<usize> = bits(mask).collect();
                let w = Prob::new(1, zs.len() as u64);
                zs.into_iter().map(|z| (ObsId::from_index(z), w)).collect()
            })
            .collect();
        let completion = Completion::new(names, self.base, support).expect("oracle completion");
        let to_ids = |mask: u32| -> Vec<usize> {
            if mask == UNSET {
                vec![0]
            } else {
                bits(mask).collect()
            }
        };
        let policy = Policy::new(
            self.mu,
            MemId(0),
            self.nz,
            self.p.num_actions(),
            act.iter().map(|&m| to_ids(m).into_iter().map(ActionId::from_index).collect()).collect(),
            upd.iter().map(|&m| to_ids(m).into_iter().map(MemId::from_index).collect()).collect(),
        )
        .expect("oracle policy");
        (completion, policy)
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask >> i & 1 == 1)
}

/// `mask` restricted to elements outside `used` is `{u₀, …, u_t}`, the `t+1`
/// smallest unused elements below `n`.
fn prefix_of_unused(mask: u32, used: u32, n: usize) -> bool {
    let extra = mask & !used;
    let mut expect = 0u32;
    let mut left = extra.count_ones();
    for i in 0..n {
        if left == 0 {
            break;
        }
        if used >> i & 1 == 0 {
            expect |= 1 << i;
            left -= 1;
        }
    }
    extra == expect
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_fig1, gen_random, RandomSpec};
    use crate::model::PomdpBuilder;
    use num_traits::One;

    fn uniform_completion(p: &Pomdp, names: Vec<String>, base: usize, zs: &[usize]) -> Completion {
        let support = zs.iter().map(|&z| vec![(ObsId::from_index(z), Prob::one())]).collect();
        let _ = p;
        Completion::new(names, base, support).unwrap()
    }

    /// The three-memory counter on the treasure grid: right, right, grab.
    fn fig1_counter() -> (Pomdp, Completion, Policy) {
        let p = gen_fig1();
        let c = uniform_completion(&p, vec!["new1".into()], 0, &[0; 5]);
        let (left, right, grab) = (ActionId(0), ActionId(1), ActionId(2));
        let _ = left;
        let pol = Policy::new(
            3,
            MemId(0),
            1,
            3,
            vec![vec![right], vec![right], vec![grab]],
            (0..3)
                .flat_map(|m| (0..3).map(move |_a| vec![MemId::from_index((m + 1).min(2))]))
                .collect(),
        )
        .unwrap();
        (p, c, pol)
    }

    #[test]
    fn fig1_counter_wins() {
        let (p, c, pol) = fig1_counter();
        let g = build_product(&p, &c, &pol);
        let c0 = p.state_by_name("c0").unwrap();
        let c1 = p.state_by_name("c1").unwrap();
        let c2 = p.state_by_name("c2").unwrap();
        let win = p.goal();
        assert!(g.has_edge((c0, MemId(0)), (c1, MemId(1))));
        assert!(g.has_edge((c1, MemId(1)), (c2, MemId(2))));
        assert!(g.has_edge((c2, MemId(2)), (win, MemId(2))));
        let cert = check_almost_sure(&g);
        assert!(cert.almost_sure);
        assert_eq!(cert.max_distance(), Some(3));
        assert!(cert.max_distance().unwrap() as usize <= p.num_states() * 3);
    }

    #[test]
    fn dead_pair_is_the_witness() {
        let p = gen_fig1();
        let c = uniform_completion(&p, vec!["new1".into()], 0, &[0; 5]);
        // always move left: c0 -> lose
        let pol = Policy::new(1, MemId(0), 1, 3, vec![vec![ActionId(0)]], vec![vec![MemId(0)]; 3]).unwrap();
        let cert = verify(&p, &c, &pol);
        assert!(!cert.almost_sure);
        let lose = p.state_by_name("lose").unwrap();
        let w = cert.witness.unwrap();
        assert!(w == (p.initial(), MemId(0)) || w == (lose, MemId(0)));
        assert!(cert.render(&p).contains("witness"));
        assert_eq!(simulate(&p, &c, &pol, 200, 20, 1), 0.0);
    }

    #[test]
    fn goal_only_model() {
        let mut b = PomdpBuilder::new();
        let g = b.add_state("g").unwrap();
        let a = b.add_action("stay").unwrap();
        let z = b.add_observation("z").unwrap();
        b.step(g, a, g).set_initial(g).add_target(g);
        b.observe(g, vec![(crate::model::ObsSymbol::Obs(z), Prob::one())]);
        let p = b.build().unwrap();
        let c = uniform_completion(&p, vec!["z".into()], 1, &[0]);
        let pol = Policy::new(1, MemId(0), 1, 1, vec![vec![a]], vec![vec![MemId(0)]]).unwrap();
        let g = build_product(&p, &c, &pol);
        assert_eq!(g.successors(0), &[0]);
        assert!(check_almost_sure(&g).almost_sure);
        assert_eq!(simulate(&p, &c, &pol, 10, 1, 0), 1.0);
        assert!(brute_force_decide(&p, 1, 0, true).unwrap());
    }

    #[test]
    fn counter_simulates_to_one() {
        let (p, c, pol) = fig1_counter();
        let horizon = 10 * p.num_states() as u64 * 3;
        assert_eq!(simulate(&p, &c, &pol, 1000, horizon, 42), 1.0);
    }

    #[test]
    fn simulation_is_reproducible() {
        let spec = RandomSpec {
            states: 4,
            actions: 2,
            observations: 1,
            max_successors: 3,
        };
        let p = gen_random(spec, 3);
        let c = uniform_completion(&p, vec!["z0".into(), "new1".into()], 1, &[0, 0, 0, 0]);
        let pol = Policy::new(1, MemId(0), 2, 2, vec![vec![ActionId(0), ActionId(1)]], vec![vec![MemId(0)]; 4]);
        let pol = pol.unwrap();
        let f1 = simulate(&p, &c, &pol, 500, 8, 11);
        let f2 = simulate(&p, &c, &pol, 500, 8, 11);
        assert_eq!(f1, f2);
    }

    #[test]
    fn oracle_on_treasure_grid() {
        let p = gen_fig1();
        assert!(!brute_force_decide(&p, 2, 1, true).unwrap());
        assert!(brute_force_decide(&p, 3, 1, true).unwrap());
        assert!(brute_force_decide(&p, 2, 2, true).unwrap());
        let (c, pol) = brute_force_witness(&p, 2, 2, true).unwrap().unwrap();
        assert!(verify(&p, &c, &pol).almost_sure);
    }

    #[test]
    fn prefix_rule() {
        // used = {0}; unused = 1, 2, 3
        assert!(prefix_of_unused(0b0001, 0b0001, 4));
        assert!(prefix_of_unused(0b0011, 0b0001, 4));
        assert!(prefix_of_unused(0b0111, 0b0001, 4));
        assert!(!prefix_of_unused(0b0101, 0b0001, 4));
        assert!(!prefix_of_unused(0b0100, 0b0001, 4));
        assert!(prefix_of_unused(0b0100, 0b0011, 4));
    }

    /// Edge relation straight from the definition, by enumeration.
    fn edges_by_definition(p: &Pomdp, c: &Completion, pol: &Policy) -> Vec<((StateId, MemId), (StateId, MemId))> {
        let mut out = Vec::new();
        for s in p.states() {
            for m in pol.memories() {
                for s2 in p.states() {
                    for m2 in pol.memories() {
                        let ok = pol.actions(m).iter().any(|&a| {
                            p.transition(s, a).iter().any(|&(t, w)| t == s2 && w > Prob::from_integer(0))
                                && c.support(s2).any(|z| pol.update(m, z, a).contains(&m2))
                        });
                        if ok {
                            out.push(((s, m), (s2, m2)));
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn edges_match_definition_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let spec = RandomSpec {
            states: 4,
            actions: 2,
            observations: 2,
            max_successors: 3,
        };
        for seed in 0..50 {
            let p = gen_random(spec, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nz = 3;
            let names = vec!["z0".into(), "z1".into(), "new1".into()];
            let support = p
                .states()
                .map(|s| {
                    let mut zs: Vec<ObsId> = p.obs_fn().defined_support(s).collect();
                    if !p.obs_fn().is_fully_defined(s) {
                        zs.push(ObsId(rng.gen_range(0..nz)));
                    }
                    zs.sort();
                    zs.dedup();
                    let w = Prob::new(1, zs.len() as u64);
                    zs.into_iter().map(|z| (z, w)).collect()
                })
                .collect();
            let c = Completion::new(names, 2, support).unwrap();
            let mu = 2;
            let acts = (0..mu)
                .map(|_| {
                    let v: Vec<ActionId> = (0..2).filter(|_| rng.gen_bool(0.6)).map(ActionId).collect();
                    if v.is_empty() { vec![ActionId(0)] } else { v }
                })
                .collect();
            let upd = (0..mu * nz as usize * 2)
                .map(|_| {
                    let v: Vec<MemId> = (0..mu as u32).filter(|_| rng.gen_bool(0.6)).map(MemId).collect();
                    if v.is_empty() { vec![MemId(1)] } else { v }
                })
                .collect();
            let pol = Policy::new(mu, MemId(0), nz as usize, 2, acts, upd).unwrap();
            let g = build_product(&p, &c, &pol);
            let want = edges_by_definition(&p, &c, &pol);
            let mut got = Vec::new();
            for v in 0..g.num_vertices() as u32 {
                for &w in g.successors(v) {
                    got.push((g.pair(v), g.pair(w)));
                }
            }
            assert_eq!(got, want, "seed {seed}");
        }
    }
}
