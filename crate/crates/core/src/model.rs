//! POMDP data model: states, actions, exact-rational transition and
//! observation distributions, completions of partial observation functions,
//! and support-based finite-memory policies.
//!
//! All probabilities are exact rationals. Qualitative questions only look at
//! supports, so weights are carried along for simulation and printing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, One, Zero};

/// Exact probability weight.
pub type Prob = Ratio<u64>;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(i: usize) -> Self {
                Self(i as u32)
            }
        }
    };
}

id_type!(
    /// Index of a state.
    StateId
);
id_type!(
    /// Index of an action.
    ActionId
);
id_type!(
    /// Index of an observation. Completed alphabets place the declared
    /// observations first and the synthesized ones after them.
    ObsId
);
id_type!(
    /// Index of a policy memory element.
    MemId
);

/// Symbol in the range of a partially defined observation function.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObsSymbol {
    Obs(ObsId),
    /// The undefined symbol `⊥`.
    Bot,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(Violation),
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("target set is empty")]
    EmptyTargets,
    #[error("{0} out of range")]
    OutOfRange(String),
    #[error("policy {0}")]
    MalformedPolicy(String),
    #[error("completion {0}")]
    MalformedCompletion(String),
}

/// Which model invariant a [`Violation`] breaks.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    DeltaNotTotal,
    DeltaSum,
    ObsSum,
    ObsEmpty,
    IndexOutOfRange,
    InitialOutOfRange,
    GoalOutOfRange,
    WeightOverflow,
}

impl ViolationKind {
    pub fn describe(self) -> &'static str {
        match self {
            ViolationKind::DeltaNotTotal => "delta not total",
            ViolationKind::DeltaSum => "transition weights do not sum to 1",
            ViolationKind::ObsSum => "observation weights do not sum to 1",
            ViolationKind::ObsEmpty => "observation distribution is empty",
            ViolationKind::IndexOutOfRange => "index out of range",
            ViolationKind::InitialOutOfRange => "initial state out of range",
            ViolationKind::GoalOutOfRange => "goal state out of range",
            ViolationKind::WeightOverflow => "weight sum overflows",
        }
    }
}

/// A broken invariant together with the entity that breaks it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Violation {
    pub kind: ViolationKind,
    pub entity: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.kind.describe(), self.entity)
    }
}

/// Sum weights, `None` on overflow.
pub(crate) fn weight_sum<'a, I: IntoIterator<Item = &'a Prob>>(ws: I) -> Option<Prob> {
    ws.into_iter()
        .try_fold(Prob::zero(), |acc, w| acc.checked_add(w))
}

/// Partially defined observation function `S → D(Z ∪ {⊥})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialObsFn {
    per_state: Vec<Vec<(ObsSymbol, Prob)>>,
}

impl PartialObsFn {
    pub fn new(per_state: Vec<Vec<(ObsSymbol, Prob)>>) -> Self {
        let per_state = per_state.into_iter().map(normalize_entries).collect();
        Self { per_state }
    }

    /// Every state maps to `⊥` with probability one.
    pub fn undefined(num_states: usize) -> Self {
        Self {
            per_state: vec![vec![(ObsSymbol::Bot, Prob::one())]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.per_state.len()
    }

    pub fn dist(&self, s: StateId) -> &[(ObsSymbol, Prob)] {
        &self.per_state[s.index()]
    }

    /// `⊥` is not in the support of state `s`.
    pub fn is_fully_defined(&self, s: StateId) -> bool {
        !self.per_state[s.index()]
            .iter()
            .any(|(z, _)| *z == ObsSymbol::Bot)
    }

    /// Declared observations with positive weight at `s`.
    pub fn defined_support(&self, s: StateId) -> impl Iterator<Item = ObsId> + '_ {
        self.per_state[s.index()].iter().filter_map(|(z, _)| match z {
            ObsSymbol::Obs(o) => Some(*o),
            ObsSymbol::Bot => None,
        })
    }

    pub fn bot_weight(&self, s: StateId) -> Prob {
        self.per_state[s.index()]
            .iter()
            .find(|(z, _)| *z == ObsSymbol::Bot)
            .map(|(_, w)| *w)
            .unwrap_or_else(Prob::zero)
    }
}

/// Drop zero weights, merge duplicates and sort by key.
fn normalize_entries<T: Ord + Copy>(entries: Vec<(T, Prob)>) -> Vec<(T, Prob)> {
    let mut merged: BTreeMap<T, Prob> = BTreeMap::new();
    for (k, w) in entries {
        if w.is_zero() {
            continue;
        }
        let e = merged.entry(k).or_insert_with(Prob::zero);
        // Overflow here is reported by validate through the sum check.
        *e = e.checked_add(&w).unwrap_or(*e);
    }
    merged.into_iter().collect()
}

/// A POMDP with a single goal state and a partially defined observation
/// function. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pomdp {
    state_names: Vec<String>,
    action_names: Vec<String>,
    obs_names: Vec<String>,
    delta: Vec<Vec<(StateId, Prob)>>,
    initial: StateId,
    goal: StateId,
    obs: PartialObsFn,
}

impl Pomdp {
    /// Assemble a model without checking invariants; see [`Pomdp::validate`].
    ///
    /// `delta` is indexed by `state * |actions| + action`; an empty entry
    /// means the transition is missing.
    pub fn from_parts(
        state_names: Vec<String>,
        action_names: Vec<String>,
        obs_names: Vec<String>,
        delta: Vec<Vec<(StateId, Prob)>>,
        initial: StateId,
        goal: StateId,
        obs: PartialObsFn,
    ) -> Self {
        let delta = delta.into_iter().map(normalize_entries).collect();
        Self {
            state_names,
            action_names,
            obs_names,
            delta,
            initial,
            goal,
            obs,
        }
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn num_observations(&self) -> usize {
        self.obs_names.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + Clone {
        (0..self.num_states()).map(StateId::from_index)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + Clone {
        (0..self.num_actions()).map(ActionId::from_index)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s.index()]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.action_names[a.index()]
    }

    pub fn obs_name(&self, z: ObsId) -> &str {
        &self.obs_names[z.index()]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn obs_names(&self) -> &[String] {
        &self.obs_names
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.state_names
            .iter()
            .position(|n| n == name)
            .map(StateId::from_index)
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        self.action_names
            .iter()
            .position(|n| n == name)
            .map(ActionId::from_index)
    }

    pub fn obs_by_name(&self, name: &str) -> Option<ObsId> {
        self.obs_names
            .iter()
            .position(|n| n == name)
            .map(ObsId::from_index)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn goal(&self) -> StateId {
        self.goal
    }

    pub fn obs_fn(&self) -> &PartialObsFn {
        &self.obs
    }

    /// Distribution `δ(s, a)`, sorted by successor.
    pub fn transition(&self, s: StateId, a: ActionId) -> &[(StateId, Prob)] {
        &self.delta[s.index() * self.num_actions() + a.index()]
    }

    /// Successors of `s` under `a` with positive probability.
    pub fn successors(&self, s: StateId, a: ActionId) -> impl Iterator<Item = StateId> + '_ {
        self.transition(s, a).iter().map(|(t, _)| *t)
    }

    /// `s` loops to itself with probability one under every action.
    pub fn is_absorbing(&self, s: StateId) -> bool {
        self.actions().all(|a| {
            let d = self.transition(s, a);
            d.len() == 1 && d[0].0 == s
        })
    }

    /// Replace the observation function, keeping everything else.
    pub fn with_obs_fn(&self, obs: PartialObsFn) -> Pomdp {
        Pomdp {
            obs,
            ..self.clone()
        }
    }

    /// Check every model invariant. An empty list means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let ns = self.num_states();
        let na = self.num_actions();
        let nz = self.num_observations();
        if self.initial.index() >= ns {
            out.push(Violation {
                kind: ViolationKind::InitialOutOfRange,
                entity: format!("initial #{}", self.initial.0),
            });
        }
        if self.goal.index() >= ns {
            out.push(Violation {
                kind: ViolationKind::GoalOutOfRange,
                entity: format!("goal #{}", self.goal.0),
            });
        }
        if self.delta.len() != ns * na {
            out.push(Violation {
                kind: ViolationKind::DeltaNotTotal,
                entity: format!("{} entries for {}x{}", self.delta.len(), ns, na),
            });
        }
        for (idx, dist) in self.delta.iter().enumerate() {
            let entity = if na > 0 && idx / na < ns {
                format!(
                    "{}, {}",
                    self.state_names[idx / na],
                    self.action_names[idx % na]
                )
            } else {
                format!("delta entry #{idx}")
            };
            if dist.is_empty() {
                out.push(Violation {
                    kind: ViolationKind::DeltaNotTotal,
                    entity,
                });
                continue;
            }
            if let Some((t, _)) = dist.iter().find(|(t, _)| t.index() >= ns) {
                out.push(Violation {
                    kind: ViolationKind::IndexOutOfRange,
                    entity: format!("{entity} -> #{}", t.0),
                });
            }
            match weight_sum(dist.iter().map(|(_, w)| w)) {
                None => out.push(Violation {
                    kind: ViolationKind::WeightOverflow,
                    entity,
                }),
                Some(sum) if !sum.is_one() => out.push(Violation {
                    kind: ViolationKind::DeltaSum,
                    entity: format!("{entity}: sum {sum}"),
                }),
                Some(_) => {}
            }
        }
        if self.obs.num_states() != ns {
            out.push(Violation {
                kind: ViolationKind::IndexOutOfRange,
                entity: format!(
                    "observation function covers {} of {} states",
                    self.obs.num_states(),
                    ns
                ),
            });
        }
        for (i, dist) in self.obs.per_state.iter().enumerate() {
            let entity = self
                .state_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("#{i}"));
            if dist.is_empty() {
                out.push(Violation {
                    kind: ViolationKind::ObsEmpty,
                    entity,
                });
                continue;
            }
            if dist
                .iter()
                .any(|(z, _)| matches!(z, ObsSymbol::Obs(o) if o.index() >= nz))
            {
                out.push(Violation {
                    kind: ViolationKind::IndexOutOfRange,
                    entity: format!("observation of {entity}"),
                });
            }
            match weight_sum(dist.iter().map(|(_, w)| w)) {
                None => out.push(Violation {
                    kind: ViolationKind::WeightOverflow,
                    entity,
                }),
                Some(sum) if !sum.is_one() => out.push(Violation {
                    kind: ViolationKind::ObsSum,
                    entity: format!("{entity}: sum {sum}"),
                }),
                Some(_) => {}
            }
        }
        out
    }
}

fn unique_name(taken: &[String], base: &str) -> String {
    if !taken.iter().any(|n| n == base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|c| !taken.iter().any(|n| n == c))
        .expect("infinite iterator")
}

/// Reduce a target set to a single absorbing goal.
///
/// A single absorbing target is used as the goal directly. Otherwise a fresh
/// absorbing state is appended and every target moves to it with probability
/// one under every action, so a play visits `T` exactly when it later visits
/// the fresh goal.
pub fn reduce_targets(p: &Pomdp, targets: &[StateId]) -> Result<Pomdp, ModelError> {
    if targets.is_empty() {
        return Err(ModelError::EmptyTargets);
    }
    if let Some(t) = targets.iter().find(|t| t.index() >= p.num_states()) {
        return Err(ModelError::OutOfRange(format!("target #{}", t.0)));
    }
    let mut uniq: Vec<StateId> = targets.to_vec();
    uniq.sort();
    uniq.dedup();
    if uniq.len() == 1 && p.is_absorbing(uniq[0]) {
        return Ok(Pomdp {
            goal: uniq[0],
            ..p.clone()
        });
    }
    let na = p.num_actions();
    let goal = StateId::from_index(p.num_states());
    let mut state_names = p.state_names.clone();
    state_names.push(unique_name(&p.state_names, "goal"));
    let mut delta = p.delta.clone();
    for t in &uniq {
        for a in 0..na {
            delta[t.index() * na + a] = vec![(goal, Prob::one())];
        }
    }
    for _ in 0..na {
        delta.push(vec![(goal, Prob::one())]);
    }
    let mut per_state = p.obs.per_state.clone();
    per_state.push(vec![(ObsSymbol::Bot, Prob::one())]);
    Ok(Pomdp {
        state_names,
        action_names: p.action_names.clone(),
        obs_names: p.obs_names.clone(),
        delta,
        initial: p.initial,
        goal,
        obs: PartialObsFn { per_state },
    })
}

/// Incremental construction of a [`Pomdp`] by name.
#[derive(Clone, Debug, Default)]
pub struct PomdpBuilder {
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
    delta: BTreeMap<(StateId, ActionId), Vec<(StateId, Prob)>>,
    obs: BTreeMap<StateId, Vec<(ObsSymbol, Prob)>>,
    initial: Option<StateId>,
    targets: Vec<StateId>,
}

impl PomdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_named(list: &mut Vec<String>, kind: &'static str, name: &str) -> Result<usize, ModelError> {
        if list.iter().any(|n| n == name) {
            return Err(ModelError::DuplicateName {
                kind,
                name: name.to_string(),
            });
        }
        list.push(name.to_string());
        Ok(list.len() - 1)
    }

    pub fn add_state(&mut self, name: &str) -> Result<StateId, ModelError> {
        Self::add_named(&mut self.states, "state", name).map(StateId::from_index)
    }

    pub fn add_action(&mut self, name: &str) -> Result<ActionId, ModelError> {
        Self::add_named(&mut self.actions, "action", name).map(ActionId::from_index)
    }

    pub fn add_observation(&mut self, name: &str) -> Result<ObsId, ModelError> {
        Self::add_named(&mut self.observations, "observation", name).map(ObsId::from_index)
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|n| n == name).map(StateId::from_index)
    }

    pub fn action(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|n| n == name).map(ActionId::from_index)
    }

    pub fn observation(&self, name: &str) -> Option<ObsId> {
        self.observations
            .iter()
            .position(|n| n == name)
            .map(ObsId::from_index)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn set_initial(&mut self, s: StateId) -> &mut Self {
        self.initial = Some(s);
        self
    }

    pub fn add_target(&mut self, s: StateId) -> &mut Self {
        self.targets.push(s);
        self
    }

    pub fn transition(&mut self, s: StateId, a: ActionId, dist: Vec<(StateId, Prob)>) -> &mut Self {
        self.delta.insert((s, a), dist);
        self
    }

    /// Deterministic transition.
    pub fn step(&mut self, s: StateId, a: ActionId, t: StateId) -> &mut Self {
        self.transition(s, a, vec![(t, Prob::one())])
    }

    pub fn observe(&mut self, s: StateId, dist: Vec<(ObsSymbol, Prob)>) -> &mut Self {
        self.obs.insert(s, dist);
        self
    }

    pub fn has_transition(&self, s: StateId, a: ActionId) -> bool {
        self.delta.contains_key(&(s, a))
    }

    /// Assemble without validation. States with no observation entry map to
    /// `⊥`; missing transitions stay missing. The first target (if any) is
    /// used as goal, no reduction happens.
    pub fn build_unchecked(&self) -> Pomdp {
        let ns = self.states.len();
        let na = self.actions.len();
        let mut delta = vec![Vec::new(); ns * na];
        for (&(s, a), d) in &self.delta {
            if s.index() < ns && a.index() < na {
                delta[s.index() * na + a.index()] = d.clone();
            }
        }
        let per_state = (0..ns)
            .map(|i| {
                self.obs
                    .get(&StateId::from_index(i))
                    .cloned()
                    .unwrap_or_else(|| vec![(ObsSymbol::Bot, Prob::one())])
            })
            .collect();
        Pomdp::from_parts(
            self.states.clone(),
            self.actions.clone(),
            self.observations.clone(),
            delta,
            self.initial.unwrap_or(StateId(u32::MAX)),
            self.targets.first().copied().unwrap_or(StateId(u32::MAX)),
            PartialObsFn::new(per_state),
        )
    }

    /// Validate and build. Several targets are reduced to one absorbing goal.
    pub fn build(&self) -> Result<Pomdp, ModelError> {
        if self.targets.is_empty() {
            return Err(ModelError::EmptyTargets);
        }
        let p = self.build_unchecked();
        if let Some(v) = p.validate().into_iter().next() {
            return Err(ModelError::Invalid(v));
        }
        let mut uniq = self.targets.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() == 1 {
            Ok(p)
        } else {
            reduce_targets(&p, &uniq)
        }
    }
}

/// A fully defined observation function over `Z ∪ Z_A`.
///
/// The alphabet lists the declared observations first (`base_count` of them)
/// followed by the synthesized ones that are actually used.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Completion {
    obs_names: Vec<String>,
    base_count: usize,
    support: Vec<Vec<(ObsId, Prob)>>,
}

impl Completion {
    pub fn new(
        obs_names: Vec<String>,
        base_count: usize,
        support: Vec<Vec<(ObsId, Prob)>>,
    ) -> Result<Self, ModelError> {
        if base_count > obs_names.len() {
            return Err(ModelError::MalformedCompletion(format!(
                "declares {base_count} base observations but only {} names",
                obs_names.len()
            )));
        }
        let support: Vec<_> = support.into_iter().map(normalize_entries).collect();
        for (s, d) in support.iter().enumerate() {
            if d.is_empty() {
                return Err(ModelError::MalformedCompletion(format!(
                    "state #{s} has empty support"
                )));
            }
            if d.iter().any(|(z, _)| z.index() >= obs_names.len()) {
                return Err(ModelError::MalformedCompletion(format!(
                    "state #{s} uses an unknown observation"
                )));
            }
        }
        Ok(Self {
            obs_names,
            base_count,
            support,
        })
    }

    /// The completion that keeps a fully defined observation function as is.
    pub fn from_fully_defined(p: &Pomdp) -> Result<Self, ModelError> {
        let support = p
            .states()
            .map(|s| {
                if !p.obs_fn().is_fully_defined(s) {
                    return Err(ModelError::MalformedCompletion(format!(
                        "state {} is not fully defined",
                        p.state_name(s)
                    )));
                }
                Ok(p.obs_fn()
                    .dist(s)
                    .iter()
                    .filter_map(|(z, w)| match z {
                        ObsSymbol::Obs(o) => Some((*o, *w)),
                        ObsSymbol::Bot => None,
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(p.obs_names().to_vec(), p.num_observations(), support)
    }

    pub fn num_states(&self) -> usize {
        self.support.len()
    }

    /// Size of the completed alphabet.
    pub fn num_observations(&self) -> usize {
        self.obs_names.len()
    }

    pub fn base_count(&self) -> usize {
        self.base_count
    }

    /// Number of synthesized observations in the alphabet.
    pub fn additional_used(&self) -> usize {
        self.obs_names.len() - self.base_count
    }

    pub fn obs_names(&self) -> &[String] {
        &self.obs_names
    }

    pub fn obs_name(&self, z: ObsId) -> &str {
        &self.obs_names[z.index()]
    }

    pub fn dist(&self, s: StateId) -> &[(ObsId, Prob)] {
        &self.support[s.index()]
    }

    pub fn support(&self, s: StateId) -> impl Iterator<Item = ObsId> + '_ {
        self.support[s.index()].iter().map(|(z, _)| *z)
    }

    /// Check that this completes the observation function of `p`: every
    /// state is covered, declared observations with positive weight stay in
    /// the support, and fully defined states use no new observation. With
    /// `strict`, weights on declared observations must be identical.
    pub fn check_against(&self, p: &Pomdp, strict: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.support.len() != p.num_states() {
            out.push(Violation {
                kind: ViolationKind::IndexOutOfRange,
                entity: format!(
                    "completion covers {} of {} states",
                    self.support.len(),
                    p.num_states()
                ),
            });
            return out;
        }
        let base = self.base_count;
        for s in p.states() {
            let name = p.state_name(s);
            let d = &self.support[s.index()];
            match weight_sum(d.iter().map(|(_, w)| w)) {
                Some(sum) if sum.is_one() => {}
                _ => out.push(Violation {
                    kind: ViolationKind::ObsSum,
                    entity: format!("completion of {name}"),
                }),
            }
            for z in p.obs_fn().defined_support(s) {
                let w_here = d.iter().find(|(o, _)| *o == z).map(|(_, w)| *w);
                match w_here {
                    None => out.push(Violation {
                        kind: ViolationKind::ObsEmpty,
                        entity: format!("{name} lost observation {}", p.obs_name(z)),
                    }),
                    Some(w) if strict => {
                        let orig = p
                            .obs_fn()
                            .dist(s)
                            .iter()
                            .find(|(o, _)| *o == ObsSymbol::Obs(z))
                            .map(|(_, w)| *w)
                            .unwrap_or_else(Prob::zero);
                        if w != orig {
                            out.push(Violation {
                                kind: ViolationKind::ObsSum,
                                entity: format!("{name} changed weight of {}", p.obs_name(z)),
                            });
                        }
                    }
                    Some(_) => {}
                }
            }
            if strict {
                for (z, _) in d {
                    if z.index() < base
                        && !p.obs_fn().defined_support(s).any(|o| o == *z)
                    {
                        out.push(Violation {
                            kind: ViolationKind::ObsSum,
                            entity: format!("{name} gained declared observation {}", self.obs_name(*z)),
                        });
                    }
                }
            }
            if p.obs_fn().is_fully_defined(s) && d.iter().any(|(z, _)| z.index() >= base) {
                out.push(Violation {
                    kind: ViolationKind::IndexOutOfRange,
                    entity: format!("fully defined {name} uses a new observation"),
                });
            }
        }
        out
    }
}

/// Support-based finite-memory policy `(σ_u, σ_n, M, m₀)`.
///
/// Only supports are stored; the induced randomized policy plays uniformly
/// over them.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Policy {
    memory: usize,
    initial: MemId,
    num_obs: usize,
    num_actions: usize,
    action_support: Vec<Vec<ActionId>>,
    update: Vec<Vec<MemId>>,
}

impl Policy {
    /// `update` is indexed by `(m * num_obs + z) * num_actions + a`.
    pub fn new(
        memory: usize,
        initial: MemId,
        num_obs: usize,
        num_actions: usize,
        action_support: Vec<Vec<ActionId>>,
        update: Vec<Vec<MemId>>,
    ) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::MalformedPolicy(msg));
        if memory == 0 {
            return bad("has no memory elements".into());
        }
        if initial.index() >= memory {
            return bad("initial memory element out of range".into());
        }
        if action_support.len() != memory {
            return bad(format!(
                "action selection covers {} of {memory} memory elements",
                action_support.len()
            ));
        }
        if update.len() != memory * num_obs * num_actions {
            return bad("memory update is not total".into());
        }
        let mut action_support = action_support;
        for (m, acts) in action_support.iter_mut().enumerate() {
            acts.sort();
            acts.dedup();
            if acts.is_empty() {
                return bad(format!("action support of m{m} is empty"));
            }
            if acts.iter().any(|a| a.index() >= num_actions) {
                return bad(format!("action support of m{m} is out of range"));
            }
        }
        let mut update = update;
        for (i, next) in update.iter_mut().enumerate() {
            next.sort();
            next.dedup();
            if next.is_empty() {
                return bad(format!("memory update entry #{i} is empty"));
            }
            if next.iter().any(|m| m.index() >= memory) {
                return bad(format!("memory update entry #{i} is out of range"));
            }
        }
        Ok(Self {
            memory,
            initial,
            num_obs,
            num_actions,
            action_support,
            update,
        })
    }

    pub fn memory_size(&self) -> usize {
        self.memory
    }

    pub fn initial(&self) -> MemId {
        self.initial
    }

    pub fn num_observations(&self) -> usize {
        self.num_obs
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn memories(&self) -> impl Iterator<Item = MemId> + Clone {
        (0..self.memory).map(MemId::from_index)
    }

    /// Support of `σ_n(m)`.
    pub fn actions(&self, m: MemId) -> &[ActionId] {
        &self.action_support[m.index()]
    }

    /// Support of `σ_u(m, z, a)`.
    pub fn update(&self, m: MemId, z: ObsId, a: ActionId) -> &[MemId] {
        &self.update[(m.index() * self.num_obs + z.index()) * self.num_actions + a.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u64, d: u64) -> Prob {
        Prob::new(n, d)
    }

    fn line() -> PomdpBuilder {
        let mut b = PomdpBuilder::new();
        let s0 = b.add_state("s0").unwrap();
        let s1 = b.add_state("s1").unwrap();
        let a = b.add_action("go").unwrap();
        b.step(s0, a, s1).step(s1, a, s1).set_initial(s0).add_target(s1);
        b
    }

    #[test]
    fn single_absorbing_goal_is_valid() {
        let mut b = PomdpBuilder::new();
        let g = b.add_state("g").unwrap();
        let a = b.add_action("stay").unwrap();
        b.step(g, a, g).set_initial(g).add_target(g);
        let m = b.build().unwrap();
        assert_eq!(m.num_states(), 1);
        assert!(m.validate().is_empty());
        assert!(m.is_absorbing(m.goal()));
    }

    #[test]
    fn distribution_summing_below_one_names_the_entry() {
        let mut b = line();
        let (s0, a, s1) = (b.state("s0").unwrap(), b.action("go").unwrap(), b.state("s1").unwrap());
        b.transition(s0, a, vec![(s1, p(9, 10))]);
        match b.build() {
            Err(ModelError::Invalid(v)) => {
                assert_eq!(v.kind, ViolationKind::DeltaSum);
                assert!(v.entity.contains("s0, go"), "{}", v.entity);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_transition_is_one_violation() {
        let mut b = PomdpBuilder::new();
        let s0 = b.add_state("s0").unwrap();
        let s1 = b.add_state("s1").unwrap();
        let a = b.add_action("go").unwrap();
        b.step(s0, a, s1).set_initial(s0).add_target(s1);
        let v = b.build_unchecked().validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::DeltaNotTotal);
        assert_eq!(v[0].kind.describe(), "delta not total");
    }

    #[test]
    fn fully_undefined_observations_are_legal() {
        let m = line().build().unwrap();
        assert!(m.validate().is_empty());
        assert!(m.states().all(|s| !m.obs_fn().is_fully_defined(s)));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut b = PomdpBuilder::new();
        b.add_state("x").unwrap();
        assert!(matches!(b.add_state("x"), Err(ModelError::DuplicateName { .. })));
    }

    #[test]
    fn reduce_targets_identity_on_absorbing_singleton() {
        let m = line().build().unwrap();
        let r = reduce_targets(&m, &[m.goal()]).unwrap();
        assert_eq!(r, m);
    }

    #[test]
    fn reduce_targets_rejects_empty() {
        let m = line().build().unwrap();
        assert_eq!(reduce_targets(&m, &[]), Err(ModelError::EmptyTargets));
    }

    #[test]
    fn reduce_all_states_reaches_goal_in_one_step() {
        let m = line().build().unwrap();
        let all: Vec<_> = m.states().collect();
        let r = reduce_targets(&m, &all).unwrap();
        assert_eq!(r.num_states(), 3);
        assert!(r.is_absorbing(r.goal()));
        for s in m.states() {
            for a in r.actions() {
                assert_eq!(r.transition(s, a), &[(r.goal(), Prob::one())]);
            }
        }
        assert!(r.validate().is_empty());
    }

    #[test]
    fn policy_rejects_empty_supports() {
        let e = Policy::new(1, MemId(0), 1, 1, vec![vec![]], vec![vec![MemId(0)]]);
        assert!(e.is_err());
        let e = Policy::new(1, MemId(0), 1, 1, vec![vec![ActionId(0)]], vec![vec![]]);
        assert!(e.is_err());
        let ok = Policy::new(1, MemId(0), 1, 1, vec![vec![ActionId(0)]], vec![vec![MemId(0)]]);
        assert!(ok.is_ok());
    }

    #[test]
    fn completion_consistency() {
        let mut b = line();
        let z = b.add_observation("z").unwrap();
        let s0 = b.state("s0").unwrap();
        b.observe(s0, vec![(ObsSymbol::Obs(z), p(1, 2)), (ObsSymbol::Bot, p(1, 2))]);
        let m = b.build().unwrap();
        let names = vec!["z".into(), "new1".into()];
        let good = Completion::new(
            names.clone(),
            1,
            vec![vec![(ObsId(0), p(1, 2)), (ObsId(1), p(1, 2))], vec![(ObsId(1), p(1, 1))]],
        )
        .unwrap();
        assert!(good.check_against(&m, true).is_empty());
        let lost = Completion::new(names, 1, vec![vec![(ObsId(1), p(1, 1))], vec![(ObsId(1), p(1, 1))]])
            .unwrap();
        assert_eq!(lost.check_against(&m, false).len(), 1);
    }
}
