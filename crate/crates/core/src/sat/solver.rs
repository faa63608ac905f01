//! Conflict-driven clause learning.
//!
//! - two watched literals with blocker literals
//! - first-UIP learning with recursive clause minimization
//! - activity-based branching (binary heap, exponential bumping)
//! - phase saving
//! - Luby restarts
//! - learned-clause deletion by activity, with arena compaction

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evaluate, Assignment, BudgetExhausted, Budget, Cnf, SolveResult};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Lit(u32);

impl Lit {
    #[inline]
    fn from_dimacs(l: i32) -> Lit {
        let v = l.unsigned_abs() - 1;
        Lit(v << 1 | (l < 0) as u32)
    }

    #[inline]
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    fn idx(self) -> usize {
        self.0 as usize
    }

    #[inline]
    fn negated(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    #[inline]
    fn positive(var: usize) -> Lit {
        Lit((var as u32) << 1)
    }

    #[inline]
    fn with_sign(var: usize, negative: bool) -> Lit {
        Lit((var as u32) << 1 | negative as u32)
    }
}

const TRUE: i8 = 1;
const FALSE: i8 = -1;
const UNDEF: i8 = 0;

const NO_REASON: u32 = u32::MAX;

// Clause layout in the arena: [len, flags, activity bits, lits...]
const HEADER: usize = 3;
const F_LEARNT: u32 = 1;
const F_DELETED: u32 = 2;
const F_MOVED: u32 = 4;

#[derive(Copy, Clone, Debug)]
struct Watch {
    cref: u32,
    blocker: Lit,
}

/// Counters for one solver instance.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub learnt_literals: u64,
    pub deleted_clauses: u64,
}

/// Max-heap of variables ordered by activity.
#[derive(Clone, Debug, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

const NOT_IN_HEAP: u32 = u32::MAX;

impl VarHeap {
    fn with_vars(n: usize) -> Self {
        Self {
            heap: Vec::with_capacity(n),
            pos: vec![NOT_IN_HEAP; n],
        }
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] != NOT_IN_HEAP
    }

    fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv as usize] = i as u32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[child];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.pos[cv as usize] = i as u32;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v as u32);
        let i = self.heap.len() - 1;
        self.pos[v] = i as u32;
        self.up(i, act);
    }

    fn increased(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top as usize)
    }
}

/// Finite Luby sequence value for restart `i` (0-based), base 2.
fn luby(mut x: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

/// Embedded CDCL solver for one formula.
pub struct Solver<'f> {
    num_vars: usize,
    formula: &'f Cnf,
    arena: Vec<u32>,
    wasted: usize,
    originals: Vec<u32>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watch>>,
    vals: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f32,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<u8>,
    analyze_stack: Vec<Lit>,
    analyze_clear: Vec<Lit>,
    max_learnts: f64,
    unsat_at_root: bool,
    stats: SolverStats,
}

const VAR_DECAY: f64 = 0.95;
const CLA_DECAY: f32 = 0.999;
const RESTART_BASE: u64 = 100;
const LEARNT_GROWTH: f64 = 1.01;

impl<'f> Solver<'f> {
    /// Load `f`. A nonzero `seed` perturbs the initial branching order.
    pub fn new(f: &'f Cnf, seed: u64) -> Self {
        let n = f.num_vars() as usize;
        let mut s = Solver {
            num_vars: n,
            formula: f,
            arena: Vec::with_capacity(f.num_literals() + HEADER * f.num_clauses()),
            wasted: 0,
            originals: Vec::with_capacity(f.num_clauses()),
            learnts: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            vals: vec![UNDEF; 2 * n],
            level: vec![0; n],
            reason: vec![NO_REASON; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::with_vars(n),
            phase: vec![false; n],
            seen: vec![0; n],
            analyze_stack: Vec::new(),
            analyze_clear: Vec::new(),
            max_learnts: 0.0,
            unsat_at_root: false,
            stats: SolverStats::default(),
        };
        if seed != 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for a in s.activity.iter_mut() {
                *a = rng.gen::<f64>() * 1e-5;
            }
        }
        for v in 0..n {
            s.heap.insert(v, &s.activity);
        }
        let mut units = Vec::new();
        let mut scratch = Vec::new();
        let mut mark = vec![0u32; 2 * n];
        for (ci, c) in f.clauses().enumerate() {
            if c.len() == 1 {
                units.push(Lit::from_dimacs(c[0]));
                continue;
            }
            scratch.clear();
            scratch.extend(c.iter().map(|&l| Lit::from_dimacs(l)));
            let tag = ci as u32 + 1;
            for l in &scratch {
                mark[l.idx()] = tag;
            }
            if scratch.iter().any(|l| mark[l.negated().idx()] == tag) {
                continue;
            }
            let cref = s.alloc_clause(&scratch, false);
            s.originals.push(cref);
            s.attach(cref);
        }
        for u in units {
            match s.value(u) {
                TRUE => {}
                FALSE => s.unsat_at_root = true,
                _ => s.assign(u, NO_REASON),
            }
        }
        s.max_learnts = (f.num_clauses() as f64 / 3.0).max(2000.0);
        s
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    #[inline]
    fn value(&self, l: Lit) -> i8 {
        self.vals[l.idx()]
    }

    #[inline]
    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn alloc_clause(&mut self, lits: &[Lit], learnt: bool) -> u32 {
        let cref = self.arena.len();
        assert!(cref < u32::MAX as usize, "clause arena overflow");
        self.arena.push(lits.len() as u32);
        self.arena.push(if learnt { F_LEARNT } else { 0 });
        self.arena.push(0f32.to_bits());
        self.arena.extend(lits.iter().map(|l| l.0));
        cref as u32
    }

    #[inline]
    fn clause_len(&self, cref: u32) -> usize {
        self.arena[cref as usize] as usize
    }

    #[inline]
    fn clause_lit(&self, cref: u32, i: usize) -> Lit {
        Lit(self.arena[cref as usize + HEADER + i])
    }

    #[inline]
    fn flags(&self, cref: u32) -> u32 {
        self.arena[cref as usize + 1]
    }

    fn activity_of(&self, cref: u32) -> f32 {
        f32::from_bits(self.arena[cref as usize + 2])
    }

    fn set_activity(&mut self, cref: u32, a: f32) {
        self.arena[cref as usize + 2] = a.to_bits();
    }

    fn attach(&mut self, cref: u32) {
        let c0 = self.clause_lit(cref, 0);
        let c1 = self.clause_lit(cref, 1);
        self.watches[c0.idx()].push(Watch { cref, blocker: c1 });
        self.watches[c1.idx()].push(Watch { cref, blocker: c0 });
    }

    #[inline]
    fn assign(&mut self, l: Lit, reason: u32) {
        let v = l.var();
        self.vals[l.idx()] = TRUE;
        self.vals[l.negated().idx()] = FALSE;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation. Returns a conflicting clause, if any.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p.negated();
            let mut ws = core::mem::take(&mut self.watches[false_lit.idx()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                let base = cref as usize + HEADER;
                if self.arena[base] == false_lit.0 {
                    self.arena.swap(base, base + 1);
                }
                let first = Lit(self.arena[base]);
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = Watch { cref, blocker: first };
                    j += 1;
                    continue;
                }
                let len = self.arena[cref as usize] as usize;
                let mut moved = false;
                for k in 2..len {
                    let lk = Lit(self.arena[base + k]);
                    if self.value(lk) != FALSE {
                        self.arena[base + 1] = lk.0;
                        self.arena[base + k] = false_lit.0;
                        self.watches[lk.idx()].push(Watch { cref, blocker: first });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch { cref, blocker: first };
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.assign(first, cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.idx()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let a = self.activity_of(cref) + self.cla_inc;
        self.set_activity(cref, a);
        if a > 1e20 {
            for k in 0..self.learnts.len() {
                let c = self.learnts[k];
                let scaled = self.activity_of(c) * 1e-20;
                self.set_activity(c, scaled);
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn abstract_level(&self, v: usize) -> u32 {
        1u32 << (self.level[v] & 31)
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut confl: u32, learnt: &mut Vec<Lit>) -> u32 {
        learnt.clear();
        learnt.push(Lit(0));
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            if self.flags(confl) & F_LEARNT != 0 {
                self.bump_clause(confl);
            }
            let len = self.clause_len(confl);
            let start = if p.is_some() { 1 } else { 0 };
            for k in start..len {
                let q = self.clause_lit(confl, k);
                let v = q.var();
                if self.seen[v] == 0 && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = 1;
                    if self.level[v] >= self.decision_level() {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] != 0 {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            confl = self.reason[lit.var()];
            self.seen[lit.var()] = 0;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = p.unwrap().negated();

        // Minimize: drop literals implied by the rest of the clause.
        self.analyze_clear.clear();
        self.analyze_clear.extend_from_slice(learnt);
        let abstract_levels = learnt[1..]
            .iter()
            .fold(0u32, |acc, l| acc | self.abstract_level(l.var()));
        let mut keep = 1;
        for k in 1..learnt.len() {
            let l = learnt[k];
            if self.reason[l.var()] == NO_REASON || !self.lit_redundant(l, abstract_levels) {
                learnt[keep] = l;
                keep += 1;
            }
        }
        learnt.truncate(keep);
        for k in 0..self.analyze_clear.len() {
            let v = self.analyze_clear[k].var();
            self.seen[v] = 0;
        }
        self.stats.learnt_literals += learnt.len() as u64;

        if learnt.len() == 1 {
            return 0;
        }
        let mut max_i = 1;
        for k in 2..learnt.len() {
            if self.level[learnt[k].var()] > self.level[learnt[max_i].var()] {
                max_i = k;
            }
        }
        learnt.swap(1, max_i);
        self.level[learnt[1].var()]
    }

    fn lit_redundant(&mut self, p: Lit, abstract_levels: u32) -> bool {
        self.analyze_stack.clear();
        self.analyze_stack.push(p);
        let top = self.analyze_clear.len();
        while let Some(q) = self.analyze_stack.pop() {
            let r = self.reason[q.var()];
            let len = self.clause_len(r);
            for k in 1..len {
                let l = self.clause_lit(r, k);
                let v = l.var();
                if self.seen[v] == 0 && self.level[v] > 0 {
                    if self.reason[v] != NO_REASON
                        && self.abstract_level(v) & abstract_levels != 0
                    {
                        self.seen[v] = 1;
                        self.analyze_stack.push(l);
                        self.analyze_clear.push(l);
                    } else {
                        for k2 in top..self.analyze_clear.len() {
                            let u = self.analyze_clear[k2].var();
                            self.seen[u] = 0;
                        }
                        self.analyze_clear.truncate(top);
                        return false;
                    }
                }
            }
        }
        true
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var();
            self.vals[l.idx()] = UNDEF;
            self.vals[l.negated().idx()] = UNDEF;
            self.reason[v] = NO_REASON;
            self.phase[v] = l.0 & 1 == 0;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while !self.heap.is_empty() {
            let v = self.heap.pop(&self.activity)?;
            if self.vals[Lit::positive(v).idx()] == UNDEF {
                return Some(Lit::with_sign(v, !self.phase[v]));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let c0 = self.clause_lit(cref, 0);
        self.value(c0) == TRUE && self.reason[c0.var()] == cref
    }

    fn reduce_db(&mut self) {
        let mut ls = core::mem::take(&mut self.learnts);
        ls.sort_by(|&a, &b| {
            let la = self.clause_len(a) > 2;
            let lb = self.clause_len(b) > 2;
            // Binary clauses sort last so they are kept.
            lb.cmp(&la).then(
                self.activity_of(a)
                    .partial_cmp(&self.activity_of(b))
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
        });
        let extra = self.cla_inc / ls.len().max(1) as f32;
        let half = ls.len() / 2;
        let mut kept = Vec::with_capacity(ls.len());
        let mut removed = 0u64;
        for (i, &c) in ls.iter().enumerate() {
            let removable = self.clause_len(c) > 2 && !self.locked(c);
            if removable && (i < half || self.activity_of(c) < extra) {
                self.arena[c as usize + 1] |= F_DELETED;
                self.wasted += HEADER + self.clause_len(c);
                removed += 1;
            } else {
                kept.push(c);
            }
        }
        self.learnts = kept;
        self.stats.deleted_clauses += removed;
        if removed > 0 {
            let arena = &self.arena;
            for ws in self.watches.iter_mut() {
                ws.retain(|w| arena[w.cref as usize + 1] & F_DELETED == 0);
            }
        }
        if self.wasted * 5 > self.arena.len() {
            self.compact();
        }
    }

    /// Copy live clauses into a fresh arena and rewrite references.
    fn compact(&mut self) {
        let mut fresh = Vec::with_capacity(self.arena.len() - self.wasted);
        let mut relocate = |arena: &mut Vec<u32>, cref: u32| -> u32 {
            let c = cref as usize;
            if arena[c + 1] & F_MOVED != 0 {
                return arena[c + 2];
            }
            let len = arena[c] as usize;
            let new = fresh.len() as u32;
            fresh.extend_from_slice(&arena[c..c + HEADER + len]);
            arena[c + 1] |= F_MOVED;
            arena[c + 2] = new;
            new
        };
        let mut arena = core::mem::take(&mut self.arena);
        for c in self.originals.iter_mut() {
            *c = relocate(&mut arena, *c);
        }
        for c in self.learnts.iter_mut() {
            *c = relocate(&mut arena, *c);
        }
        for ws in self.watches.iter_mut() {
            for w in ws.iter_mut() {
                w.cref = relocate(&mut arena, w.cref);
            }
        }
        for l in &self.trail {
            let r = &mut self.reason[l.var()];
            if *r != NO_REASON {
                *r = relocate(&mut arena, *r);
            }
        }
        self.arena = fresh;
        self.wasted = 0;
    }

    fn model(&self) -> Assignment {
        Assignment::new(
            (0..self.num_vars)
                .map(|v| self.vals[Lit::positive(v).idx()] == TRUE)
                .collect(),
        )
    }

    /// Run the search. `Sat` results are checked against the input formula.
    pub fn solve(&mut self, budget: Budget<'_>) -> Result<SolveResult, BudgetExhausted> {
        if self.unsat_at_root || self.propagate().is_some() {
            self.unsat_at_root = true;
            return Ok(SolveResult::Unsat);
        }
        let start_conflicts = self.stats.conflicts;
        let mut learnt = Vec::new();
        let mut restart_no = 0u64;
        loop {
            let limit = luby(restart_no) * RESTART_BASE;
            let mut in_restart = 0u64;
            loop {
                if let Some(confl) = self.propagate() {
                    self.stats.conflicts += 1;
                    in_restart += 1;
                    if self.decision_level() == 0 {
                        self.unsat_at_root = true;
                        return Ok(SolveResult::Unsat);
                    }
                    let bt = self.analyze(confl, &mut learnt);
                    self.cancel_until(bt);
                    if learnt.len() == 1 {
                        self.assign(learnt[0], NO_REASON);
                    } else {
                        let cref = self.alloc_clause(&learnt, true);
                        self.learnts.push(cref);
                        self.attach(cref);
                        self.bump_clause(cref);
                        self.assign(learnt[0], cref);
                    }
                    self.var_inc /= VAR_DECAY;
                    self.cla_inc /= CLA_DECAY;

                    let used = self.stats.conflicts - start_conflicts;
                    if budget.max_conflicts.is_some_and(|m| used >= m) {
                        self.cancel_until(0);
                        return Err(BudgetExhausted { conflicts: used });
                    }
                    if used % 64 == 0 && budget.interrupt.is_some_and(|f| f()) {
                        self.cancel_until(0);
                        return Err(BudgetExhausted { conflicts: used });
                    }
                } else {
                    if in_restart >= limit {
                        self.stats.restarts += 1;
                        self.cancel_until(0);
                        break;
                    }
                    if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                        self.reduce_db();
                    }
                    match self.pick_branch() {
                        None => {
                            let model = self.model();
                            assert!(
                                evaluate(self.formula, &model),
                                "solver produced an assignment that violates the formula"
                            );
                            self.cancel_until(0);
                            return Ok(SolveResult::Sat(model));
                        }
                        Some(d) => {
                            self.stats.decisions += 1;
                            if self.stats.decisions % 16384 == 0
                                && budget.interrupt.is_some_and(|f| f())
                            {
                                self.cancel_until(0);
                                return Err(BudgetExhausted {
                                    conflicts: self.stats.conflicts - start_conflicts,
                                });
                            }
                            self.trail_lim.push(self.trail.len());
                            self.assign(d, NO_REASON);
                        }
                    }
                }
            }
            restart_no += 1;
            self.max_learnts *= LEARNT_GROWTH;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn heap_orders_by_activity() {
        let act = [0.5, 3.0, 1.0, 2.0];
        let mut h = VarHeap::with_vars(4);
        for v in 0..4 {
            h.insert(v, &act);
        }
        let order: Vec<usize> = core::iter::from_fn(|| h.pop(&act)).collect();
        assert_eq!(order, [1, 3, 2, 0]);
    }
}
