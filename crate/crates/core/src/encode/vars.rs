use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{ActionId, MemId, ObsId, Pomdp, StateId};

use super::EncodeError;

/// A semantic variable of the encoding.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SemanticVar {
    /// Action `a` is in the support of `σ_n(m)`.
    Action { m: MemId, a: ActionId },
    /// `m2` is in the support of `σ_u(m, z, a)`.
    Update { m: MemId, z: ObsId, a: ActionId, m2: MemId },
    /// Observation `z` is in the completed support of state `s`.
    Obs { s: StateId, z: ObsId },
    /// `(s, m)` is reachable under the policy.
    Reach { s: StateId, m: MemId },
    /// `(s, m)` has a policy-compatible path of length at most `j` to the goal.
    Path { s: StateId, m: MemId, j: usize },
}

/// Numbering of semantic variables onto DIMACS ids.
///
/// Blocks are laid out in a fixed order (A, M, O, C, P) starting at 1, so
/// the numbering only depends on the model dimensions and the parameters.
/// Tseitin auxiliaries follow the semantic block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarMap {
    num_states: usize,
    num_actions: usize,
    obs_names: Vec<String>,
    base_obs: usize,
    mu: usize,
    nu: usize,
    k: usize,
    a_base: u32,
    m_base: u32,
    o_base: u32,
    c_base: u32,
    p_base: u32,
    semantic: u32,
    total: u32,
}

fn checked_product(factors: &[usize]) -> Option<usize> {
    factors.iter().try_fold(1usize, |acc, &f| acc.checked_mul(f))
}

impl VarMap {
    /// Numbering for memory size `mu`, `nu` fresh observations and path
    /// bound `k` over the declared alphabet of `p`.
    pub fn new(p: &Pomdp, mu: usize, nu: usize, k: usize) -> Result<Self, EncodeError> {
        let mut names: Vec<String> = p.obs_names().to_vec();
        for i in 1..=nu {
            let mut name = format!("new{i}");
            while names.contains(&name) {
                name.insert(0, '_');
            }
            names.push(name);
        }
        Self::with_alphabet(p, mu, nu, k, names, p.num_observations())
    }

    /// Numbering over an explicit observation alphabet `Z'` whose first
    /// `base_obs` entries are declared observations.
    pub fn with_alphabet(
        p: &Pomdp,
        mu: usize,
        nu: usize,
        k: usize,
        obs_names: Vec<String>,
        base_obs: usize,
    ) -> Result<Self, EncodeError> {
        if mu == 0 {
            return Err(EncodeError::Precondition("memory bound must be at least 1"));
        }
        if k == 0 {
            return Err(EncodeError::Precondition("path bound k must be at least 1"));
        }
        let ns = p.num_states();
        let na = p.num_actions();
        let nz = obs_names.len();
        let blocks = [
            checked_product(&[mu, na]),
            checked_product(&[mu, mu, nz, na]),
            checked_product(&[ns, nz]),
            checked_product(&[ns, mu]),
            k.checked_add(1).and_then(|k1| checked_product(&[ns, mu, k1])),
        ];
        let mut bases = [0u32; 5];
        let mut next: u64 = 1;
        for (i, b) in blocks.iter().enumerate() {
            let b = b.ok_or(EncodeError::Overflow)?;
            bases[i] = u32::try_from(next).map_err(|_| EncodeError::Overflow)?;
            next = next.checked_add(b as u64).ok_or(EncodeError::Overflow)?;
        }
        let semantic = next - 1;
        if semantic > i32::MAX as u64 {
            return Err(EncodeError::Overflow);
        }
        Ok(Self {
            num_states: ns,
            num_actions: na,
            obs_names,
            base_obs,
            mu,
            nu,
            k,
            a_base: bases[0],
            m_base: bases[1],
            o_base: bases[2],
            c_base: bases[3],
            p_base: bases[4],
            semantic: semantic as u32,
            total: semantic as u32,
        })
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `|Z'|`.
    pub fn num_obs(&self) -> usize {
        self.obs_names.len()
    }

    /// Number of declared observations at the front of `Z'`.
    pub fn base_obs(&self) -> usize {
        self.base_obs
    }

    pub fn obs_names(&self) -> &[String] {
        &self.obs_names
    }

    pub fn obs_by_name(&self, name: &str) -> Option<ObsId> {
        self.obs_names
            .iter()
            .position(|n| n == name)
            .map(ObsId::from_index)
    }

    pub fn observations(&self) -> impl Iterator<Item = ObsId> + Clone {
        (0..self.num_obs()).map(ObsId::from_index)
    }

    /// Fresh observations `Z_A`.
    pub fn additional(&self) -> impl Iterator<Item = ObsId> + Clone {
        (self.base_obs..self.num_obs()).map(ObsId::from_index)
    }

    pub fn memories(&self) -> impl Iterator<Item = MemId> + Clone {
        (0..self.mu).map(MemId::from_index)
    }

    /// Count of semantic variables.
    pub fn semantic_count(&self) -> u32 {
        self.semantic
    }

    /// Semantic plus auxiliary variables.
    pub fn total_count(&self) -> u32 {
        self.total
    }

    pub fn aux_count(&self) -> u32 {
        self.total - self.semantic
    }

    pub(crate) fn set_total(&mut self, total: u32) {
        debug_assert!(total >= self.semantic);
        self.total = total;
    }

    #[inline]
    pub fn action(&self, m: MemId, a: ActionId) -> i32 {
        (self.a_base as usize + m.index() * self.num_actions + a.index()) as i32
    }

    #[inline]
    pub fn update(&self, m: MemId, z: ObsId, a: ActionId, m2: MemId) -> i32 {
        let idx = ((m.index() * self.num_obs() + z.index()) * self.num_actions + a.index()) * self.mu
            + m2.index();
        (self.m_base as usize + idx) as i32
    }

    #[inline]
    pub fn obs(&self, s: StateId, z: ObsId) -> i32 {
        (self.o_base as usize + s.index() * self.num_obs() + z.index()) as i32
    }

    #[inline]
    pub fn reach(&self, s: StateId, m: MemId) -> i32 {
        (self.c_base as usize + s.index() * self.mu + m.index()) as i32
    }

    #[inline]
    pub fn path(&self, s: StateId, m: MemId, j: usize) -> i32 {
        debug_assert!(j <= self.k);
        (self.p_base as usize + (s.index() * self.mu + m.index()) * (self.k + 1) + j) as i32
    }

    /// Inverse of the numbering; `None` for auxiliaries and out-of-range ids.
    pub fn decode(&self, var: u32) -> Option<SemanticVar> {
        if var == 0 || var > self.semantic {
            return None;
        }
        let (na, nz, mu) = (self.num_actions, self.num_obs(), self.mu);
        let v = var as usize;
        if v < self.m_base as usize {
            let i = v - self.a_base as usize;
            return Some(SemanticVar::Action {
                m: MemId::from_index(i / na),
                a: ActionId::from_index(i % na),
            });
        }
        if v < self.o_base as usize {
            let mut i = v - self.m_base as usize;
            let m2 = i % mu;
            i /= mu;
            let a = i % na;
            i /= na;
            let z = i % nz;
            let m = i / nz;
            return Some(SemanticVar::Update {
                m: MemId::from_index(m),
                z: ObsId::from_index(z),
                a: ActionId::from_index(a),
                m2: MemId::from_index(m2),
            });
        }
        if v < self.c_base as usize {
            let i = v - self.o_base as usize;
            return Some(SemanticVar::Obs {
                s: StateId::from_index(i / nz),
                z: ObsId::from_index(i % nz),
            });
        }
        if v < self.p_base as usize {
            let i = v - self.c_base as usize;
            return Some(SemanticVar::Reach {
                s: StateId::from_index(i / mu),
                m: MemId::from_index(i % mu),
            });
        }
        let i = v - self.p_base as usize;
        let j = i % (self.k + 1);
        let sm = i / (self.k + 1);
        Some(SemanticVar::Path {
            s: StateId::from_index(sm / mu),
            m: MemId::from_index(sm % mu),
            j,
        })
    }

    /// Human-readable name of a variable, resolving model names.
    pub fn describe(&self, p: &Pomdp, var: u32) -> String {
        match self.decode(var) {
            None => format!("aux{}", var - self.semantic),
            Some(sv) => format!("{}", Named { vm: self, p, sv }),
        }
    }
}

struct Named<'a> {
    vm: &'a VarMap,
    p: &'a Pomdp,
    sv: SemanticVar,
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (vm, p) = (self.vm, self.p);
        let state = |s: StateId| p.state_names().get(s.index()).map(String::as_str).unwrap_or("?");
        let action = |a: ActionId| p.action_names().get(a.index()).map(String::as_str).unwrap_or("?");
        match self.sv {
            SemanticVar::Action { m, a } => write!(f, "A(m{},{})", m.0, action(a)),
            SemanticVar::Update { m, z, a, m2 } => write!(
                f,
                "M(m{},{},{},m{})",
                m.0,
                vm.obs_names[z.index()],
                action(a),
                m2.0
            ),
            SemanticVar::Obs { s, z } => write!(f, "O({},{})", state(s), vm.obs_names[z.index()]),
            SemanticVar::Reach { s, m } => write!(f, "C({},m{})", state(s), m.0),
            SemanticVar::Path { s, m, j } => write!(f, "P({},m{},{})", state(s), m.0, j),
        }
    }
}
