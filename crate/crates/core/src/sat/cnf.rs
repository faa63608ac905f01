use alloc::vec::Vec;

/// Clause database over DIMACS-style literals: variables are `1..=num_vars`,
/// a negative literal is the negation of its variable.
///
/// Clauses are stored flat. Adding a clause drops repeated literals; a
/// tautology is kept as given so clause counts follow the generating
/// families. Empty clauses are rejected.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    num_vars: u32,
    lits: Vec<i32>,
    ends: Vec<usize>,
    stamp: Vec<u32>,
    stamp_gen: u32,
}

impl Cnf {
    pub fn new(num_vars: u32) -> Self {
        Self {
            num_vars,
            ..Self::default()
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.ends.len()
    }

    pub fn num_literals(&self) -> usize {
        self.lits.len()
    }

    /// Allocate a fresh variable and return it as a positive literal.
    pub fn new_var(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }

    pub fn reserve(&mut self, clauses: usize, lits: usize) {
        self.ends.reserve(clauses);
        self.lits.reserve(lits);
    }

    /// Append a clause.
    ///
    /// Panics on an empty clause or a literal outside `1..=num_vars`; both are
    /// encoder bugs.
    pub fn add_clause(&mut self, clause: &[i32]) {
        assert!(!clause.is_empty(), "empty clause");
        let slots = 2 * (self.num_vars as usize + 1);
        if self.stamp.len() < slots {
            self.stamp.resize(slots, 0);
        }
        self.stamp_gen = self.stamp_gen.wrapping_add(1);
        if self.stamp_gen == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.stamp_gen = 1;
        }
        for &l in clause {
            let v = l.unsigned_abs() as usize;
            assert!(
                l != 0 && v <= self.num_vars as usize,
                "literal {l} out of range 1..={}",
                self.num_vars
            );
            let slot = 2 * v + usize::from(l < 0);
            if self.stamp[slot] == self.stamp_gen {
                continue;
            }
            self.stamp[slot] = self.stamp_gen;
            self.lits.push(l);
        }
        self.ends.push(self.lits.len());
    }

    pub fn clause(&self, i: usize) -> &[i32] {
        let start = if i == 0 { 0 } else { self.ends[i - 1] };
        &self.lits[start..self.ends[i]]
    }

    pub fn clauses(&self) -> impl Iterator<Item = &[i32]> + '_ {
        let mut start = 0;
        self.ends.iter().map(move |&end| {
            let c = &self.lits[start..end];
            start = end;
            c
        })
    }

    /// Append every clause of `other`, which must not use more variables.
    pub fn extend_from(&mut self, other: &Cnf) {
        assert!(other.num_vars <= self.num_vars);
        for c in other.clauses() {
            self.add_clause(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn dedups_and_keeps_tautologies() {
        let mut f = Cnf::new(3);
        f.add_clause(&[1, 1, -2]);
        f.add_clause(&[3, -3, 3]);
        f.add_clause(&[-1, 2, -1]);
        assert_eq!(f.num_clauses(), 3);
        assert_eq!(f.clause(0), &[1, -2]);
        assert_eq!(f.clause(1), &[3, -3]);
        let all: Vec<_> = f.clauses().map(|c| c.to_vec()).collect();
        assert_eq!(all, vec![vec![1, -2], vec![3, -3], vec![-1, 2]]);
    }

    #[test]
    #[should_panic(expected = "empty clause")]
    fn rejects_empty_clause() {
        Cnf::new(1).add_clause(&[]);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn rejects_unallocated_literal() {
        Cnf::new(1).add_clause(&[2]);
    }

    #[test]
    fn new_var_grows() {
        let mut f = Cnf::new(0);
        let x = f.new_var();
        f.add_clause(&[-x]);
        assert_eq!(f.num_vars(), 1);
    }
}
