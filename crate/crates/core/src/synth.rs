//! End-to-end synthesis: encode, solve, decode, verify.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::RangeInclusive;

use num_traits::{One, Zero};

use crate::encode::{
    completeness_bound, encode, EncodeError, EncodeOptions, SideConstraints, TseitinMode, VarMap,
    PAIRWISE_MAX,
};
use crate::model::{ActionId, Completion, MemId, ObsId, ObsSymbol, Policy, Pomdp, Prob};
use crate::sat::{Assignment, Budget, Cnf, SolveResult, Solver};
use crate::verify::{verify, VerifyCertificate};

/// Errors a SAT backend can report.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("solver budget exhausted after {conflicts} conflicts")]
    Exhausted { conflicts: u64 },
    #[error("solver failed: {0}")]
    Failed(String),
}

/// A SAT solver usable by [`synthesize_with`].
pub trait SatBackend {
    /// Decide `f`, returning the result and the number of conflicts (0 when
    /// unknown).
    fn solve(&mut self, f: &Cnf, budget: Budget<'_>) -> Result<(SolveResult, u64), BackendError>;
}

/// The embedded CDCL solver.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct Embedded {
    pub seed: u64,
}

impl SatBackend for Embedded {
    fn solve(&mut self, f: &Cnf, budget: Budget<'_>) -> Result<(SolveResult, u64), BackendError> {
        let mut s = Solver::new(f, self.seed);
        let r = s.solve(budget);
        let conflicts = s.stats().conflicts;
        r.map(|r| (r, conflicts))
            .map_err(|_| BackendError::Exhausted { conflicts })
    }
}

#[derive(Clone, Copy, Default)]
pub struct SynthOptions<'a> {
    /// Path bound; defaults to the completeness bound `|S|·μ`.
    pub k: Option<usize>,
    pub tseitin: TseitinMode,
    pub budget: Budget<'a>,
    pub seed: u64,
    /// Millisecond clock used for the timing statistic.
    pub clock: Option<&'a dyn Fn() -> u64>,
}

impl fmt::Debug for SynthOptions<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SynthOptions")
            .field("k", &self.k)
            .field("tseitin", &self.tseitin)
            .field("budget", &self.budget)
            .field("seed", &self.seed)
            .finish()
    }
}

/// Coarse outcome label.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Realizable,
    Unrealizable,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Realizable => "realizable",
            Verdict::Unrealizable => "unrealizable",
            Verdict::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "realizable" => Ok(Verdict::Realizable),
            "unrealizable" => Ok(Verdict::Unrealizable),
            "unknown" => Ok(Verdict::Unknown),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    /// Unsatisfiable, but `k` was below the completeness bound.
    BoundBelowCompleteness { k: usize, bound: usize },
    BudgetExhausted { conflicts: u64 },
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownReason::BoundBelowCompleteness { k, bound } => {
                write!(f, "unsatisfiable with k={k} below the completeness bound {bound}")
            }
            UnknownReason::BudgetExhausted { conflicts } => {
                write!(f, "solver budget exhausted after {conflicts} conflicts")
            }
        }
    }
}

/// A verified completion/policy pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub completion: Completion,
    pub policy: Policy,
    pub certificate: VerifyCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SynthResult {
    Realizable(Box<Solution>),
    Unrealizable { k: usize },
    Unknown { k: usize, reason: UnknownReason },
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct SynthStats {
    pub k: usize,
    pub vars: u32,
    pub semantic_vars: u32,
    pub clauses: usize,
    pub conflicts: u64,
    pub time_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthOutcome {
    pub result: SynthResult,
    pub stats: SynthStats,
}

impl SynthOutcome {
    pub fn verdict(&self) -> Verdict {
        match self.result {
            SynthResult::Realizable(_) => Verdict::Realizable,
            SynthResult::Unrealizable { .. } => Verdict::Unrealizable,
            SynthResult::Unknown { .. } => Verdict::Unknown,
        }
    }

    pub fn solution(&self) -> Option<&Solution> {
        match &self.result {
            SynthResult::Realizable(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Encode(EncodeError),
    #[error(transparent)]
    Backend(BackendError),
    /// A satisfying valuation decoded to a pair the verifier rejects; this
    /// means the encoding or decoder is wrong.
    #[error("internal fault: decoded pair failed verification ({0})")]
    VerificationFault(String),
}

/// Decide realizability of `(p, mu, nu)` with the embedded solver.
pub fn synthesize(
    p: &Pomdp,
    mu: usize,
    nu: usize,
    sc: &SideConstraints,
    opts: &SynthOptions<'_>,
) -> Result<SynthOutcome, SynthError> {
    let mut backend = Embedded { seed: opts.seed };
    synthesize_with(p, mu, nu, sc, opts, &mut backend)
}

/// Decide realizability of `(p, mu, nu)` with a given backend.
pub fn synthesize_with(
    p: &Pomdp,
    mu: usize,
    nu: usize,
    sc: &SideConstraints,
    opts: &SynthOptions<'_>,
    backend: &mut dyn SatBackend,
) -> Result<SynthOutcome, SynthError> {
    if let Some(v) = p.validate().into_iter().next() {
        return Err(SynthError::InvalidModel(format!("{v}")));
    }
    let now = || opts.clock.map_or(0, |c| c());
    let start = now();
    let bound = completeness_bound(p, mu);
    let k = opts.k.unwrap_or(bound);
    let eopts = EncodeOptions {
        mu,
        nu,
        k,
        tseitin: opts.tseitin,
        pairwise_max: PAIRWISE_MAX,
    };
    let mut stats = SynthStats {
        k,
        ..SynthStats::default()
    };
    let (cnf, vm) = match encode(p, &eopts, sc) {
        Ok(x) => x,
        Err(EncodeError::NoCompletion { .. }) => {
            // no completion exists at all, independently of k
            stats.time_ms = now().saturating_sub(start);
            return Ok(SynthOutcome {
                result: SynthResult::Unrealizable { k },
                stats,
            });
        }
        Err(e) => return Err(SynthError::Encode(e)),
    };
    stats.vars = cnf.num_vars();
    stats.semantic_vars = vm.semantic_count();
    stats.clauses = cnf.num_clauses();
    let solved = backend.solve(&cnf, opts.budget);
    drop(cnf);
    let result = match solved {
        Err(BackendError::Exhausted { conflicts }) => {
            stats.conflicts = conflicts;
            SynthResult::Unknown {
                k,
                reason: UnknownReason::BudgetExhausted { conflicts },
            }
        }
        Err(e) => return Err(SynthError::Backend(e)),
        Ok((SolveResult::Unsat, conflicts)) => {
            stats.conflicts = conflicts;
            if k >= bound {
                SynthResult::Unrealizable { k }
            } else {
                SynthResult::Unknown {
                    k,
                    reason: UnknownReason::BoundBelowCompleteness { k, bound },
                }
            }
        }
        Ok((SolveResult::Sat(a), conflicts)) => {
            stats.conflicts = conflicts;
            SynthResult::Realizable(Box::new(decode_and_verify(p, &a, &vm, sc)?))
        }
    };
    stats.time_ms = now().saturating_sub(start);
    Ok(SynthOutcome { result, stats })
}

fn decode_and_verify(
    p: &Pomdp,
    a: &Assignment,
    vm: &VarMap,
    sc: &SideConstraints,
) -> Result<Solution, SynthError> {
    let fault = |m: String| SynthError::VerificationFault(m);
    let (completion, remap) = decode_completion(a, vm, p, sc).map_err(fault)?;
    let policy = decode_policy(a, vm).map_err(fault)?;
    let policy = remap_policy(&policy, &remap, completion.num_observations()).map_err(fault)?;
    if completion.additional_used() > vm.nu() {
        return Err(fault(format!(
            "completion uses {} new observations",
            completion.additional_used()
        )));
    }
    if sc.sensor.is_none() {
        if let Some(v) = completion.check_against(p, sc.strict).into_iter().next() {
            return Err(fault(format!("completion is inconsistent: {v}")));
        }
    }
    let certificate = verify(p, &completion, &policy);
    if !certificate.almost_sure {
        let (s, m) = certificate.witness.expect("failing certificate carries a witness");
        return Err(fault(format!("({}, m{}) cannot reach the goal", p.state_name(s), m.0)));
    }
    Ok(Solution {
        completion,
        policy,
        certificate,
    })
}

/// Observation supports from the `O` variables.
///
/// Fresh observations are renumbered in order of the first state that uses
/// them and unused ones are dropped; the returned table maps each index of
/// `Z'` to its new index. Weights are uniform over the support, except in
/// strict mode, where declared weights are kept and the undefined mass is
/// spread uniformly over the chosen fresh observations.
pub fn decode_completion(
    a: &Assignment,
    vm: &VarMap,
    p: &Pomdp,
    sc: &SideConstraints,
) -> Result<(Completion, Vec<Option<ObsId>>), String> {
    let sensor = sc.sensor.is_some();
    let base = if sensor { vm.num_obs() } else { vm.base_obs() };
    let mut remap: Vec<Option<ObsId>> = (0..vm.num_obs())
        .map(|z| (z < base).then(|| ObsId::from_index(z)))
        .collect();
    let mut names: Vec<String> = vm.obs_names()[..base].to_vec();
    let mut fresh = 0usize;
    let mut support = Vec::with_capacity(p.num_states());
    for s in p.states() {
        let chosen: Vec<ObsId> = vm.observations().filter(|&z| a.lit(vm.obs(s, z))).collect();
        if chosen.is_empty() {
            return Err(format!("state {} has an empty observation support", p.state_name(s)));
        }
        for &z in &chosen {
            if remap[z.index()].is_none() {
                remap[z.index()] = Some(ObsId::from_index(base + fresh));
                fresh += 1;
                names.push(format!("new{fresh}"));
            }
        }
        let ids: Vec<ObsId> = chosen.iter().map(|z| remap[z.index()].unwrap()).collect();
        let dist = if sc.strict && !sensor {
            strict_weights(p, s, &ids, base)?
        } else {
            let w = Prob::new(1, ids.len() as u64);
            ids.iter().map(|&z| (z, w)).collect()
        };
        support.push(dist);
    }
    // keep names of declared observations; fresh ones get canonical names
    // unless they collide with a declared name
    for i in base..names.len() {
        while names[..base].contains(&names[i]) {
            names[i].insert(0, '_');
        }
    }
    let c = Completion::new(names, base, support).map_err(|e| format!("{e}"))?;
    Ok((c, remap))
}

fn strict_weights(
    p: &Pomdp,
    s: crate::model::StateId,
    ids: &[ObsId],
    base: usize,
) -> Result<Vec<(ObsId, Prob)>, String> {
    let mut out: Vec<(ObsId, Prob)> = p
        .obs_fn()
        .dist(s)
        .iter()
        .filter_map(|&(z, w)| match z {
            ObsSymbol::Obs(z) => Some((z, w)),
            ObsSymbol::Bot => None,
        })
        .collect();
    let bot = p.obs_fn().bot_weight(s);
    let new: Vec<ObsId> = ids.iter().copied().filter(|z| z.index() >= base).collect();
    if bot.is_zero() {
        return Ok(out);
    }
    if new.is_empty() {
        return Err(format!(
            "state {} keeps undefined mass but gained no new observation",
            p.state_name(s)
        ));
    }
    let share = bot / Prob::from_integer(new.len() as u64);
    out.extend(new.into_iter().map(|z| (z, share)));
    debug_assert!(out.iter().fold(Prob::zero(), |acc, e| acc + e.1).is_one());
    Ok(out)
}

/// Policy supports from the `A` and `M` variables, over the alphabet of the
/// variable map.
pub fn decode_policy(a: &Assignment, vm: &VarMap) -> Result<Policy, String> {
    let na = vm.num_actions();
    let acts = vm
        .memories()
        .map(|m| {
            (0..na)
                .map(ActionId::from_index)
                .filter(|&act| a.lit(vm.action(m, act)))
                .collect()
        })
        .collect();
    let mut upd = Vec::with_capacity(vm.mu() * vm.num_obs() * na);
    for m in vm.memories() {
        for z in vm.observations() {
            for act in (0..na).map(ActionId::from_index) {
                upd.push(vm.memories().filter(|&m2| a.lit(vm.update(m, z, act, m2))).collect());
            }
        }
    }
    Policy::new(vm.mu(), MemId(0), vm.num_obs(), na, acts, upd).map_err(|e| format!("{e}"))
}

fn remap_policy(pol: &Policy, remap: &[Option<ObsId>], nz: usize) -> Result<Policy, String> {
    let na = pol.num_actions();
    let mut upd = vec![Vec::new(); pol.memory_size() * nz * na];
    for m in pol.memories() {
        for (old, new) in remap.iter().enumerate() {
            let Some(new) = new else { continue };
            for act in (0..na).map(ActionId::from_index) {
                upd[(m.index() * nz + new.index()) * na + act.index()] =
                    pol.update(m, ObsId::from_index(old), act).to_vec();
            }
        }
    }
    let acts = pol.memories().map(|m| pol.actions(m).to_vec()).collect();
    Policy::new(pol.memory_size(), pol.initial(), nz, na, acts, upd).map_err(|e| format!("{e}"))
}

/// One cell of a `(μ, ν)` sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontierRow {
    pub mu: usize,
    pub nu: usize,
    pub verdict: Verdict,
    pub stats: SynthStats,
    /// Error message when the cell failed.
    pub error: Option<String>,
}

/// Run every `(μ, ν)` cell independently, in ascending order. A failing
/// cell is recorded as unknown and the sweep continues.
pub fn sweep(
    p: &Pomdp,
    mus: RangeInclusive<usize>,
    nus: RangeInclusive<usize>,
    sc: &SideConstraints,
    opts: &SynthOptions<'_>,
    backend: &mut dyn SatBackend,
) -> Vec<FrontierRow> {
    let mut rows = Vec::new();
    for mu in mus {
        for nu in nus.clone() {
            let row = match synthesize_with(p, mu, nu, sc, opts, backend) {
                Ok(o) => FrontierRow {
                    mu,
                    nu,
                    verdict: o.verdict(),
                    stats: o.stats,
                    error: None,
                },
                Err(e) => FrontierRow {
                    mu,
                    nu,
                    verdict: Verdict::Unknown,
                    stats: SynthStats::default(),
                    error: Some(format!("{e}")),
                },
            };
            rows.push(row);
        }
    }
    rows
}

#[cfg(test)]
mod tests;
