use alloc::vec::Vec;

use crate::sat::Cnf;

/// Literal count up to which exactly-one uses the pairwise encoding.
pub const PAIRWISE_MAX: usize = 8;

/// Constrain exactly one of `lits` to be true.
///
/// Up to `pairwise_max` literals the at-most-one part is pairwise; above
/// that it is a sequential counter with `n - 1` auxiliaries.
pub fn exactly_one(lits: &[i32], cnf: &mut Cnf, pairwise_max: usize) {
    assert!(!lits.is_empty(), "exactly_one over an empty set");
    cnf.add_clause(lits);
    at_most_one(lits, cnf, pairwise_max);
}

pub fn at_most_one(lits: &[i32], cnf: &mut Cnf, pairwise_max: usize) {
    let n = lits.len();
    if n <= 1 {
        return;
    }
    if n <= pairwise_max {
        for i in 0..n {
            for j in i + 1..n {
                cnf.add_clause(&[-lits[i], -lits[j]]);
            }
        }
        return;
    }
    // s[i] <=> some of lits[0..=i] is true
    let s: Vec<i32> = (0..n - 1).map(|_| cnf.new_var()).collect();
    cnf.add_clause(&[-lits[0], s[0]]);
    for i in 1..n - 1 {
        cnf.add_clause(&[-lits[i], s[i]]);
        cnf.add_clause(&[-s[i - 1], s[i]]);
        cnf.add_clause(&[-lits[i], -s[i - 1]]);
    }
    cnf.add_clause(&[-lits[n - 1], -s[n - 2]]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{evaluate, Assignment};

    /// Number of assignments to the first `n` variables that extend to a
    /// model of `f`, by enumeration over all variables.
    fn projected_models(f: &Cnf, n: u32) -> usize {
        let total = f.num_vars();
        let mut seen = alloc::collections::BTreeSet::new();
        for bits in 0u64..(1 << total) {
            let a = Assignment::new((0..total).map(|i| bits >> i & 1 == 1).collect());
            if evaluate(f, &a) {
                seen.insert(bits & ((1 << n) - 1));
            }
        }
        seen.len()
    }

    #[test]
    fn single_literal_is_unit() {
        let mut f = Cnf::new(1);
        exactly_one(&[1], &mut f, PAIRWISE_MAX);
        assert_eq!(f.num_clauses(), 1);
        assert_eq!(f.clause(0), &[1]);
    }

    #[test]
    fn three_literals_pairwise() {
        let mut f = Cnf::new(3);
        exactly_one(&[1, 2, 3], &mut f, PAIRWISE_MAX);
        assert_eq!(f.num_clauses(), 1 + 3);
        assert_eq!(f.num_vars(), 3);
        assert_eq!(projected_models(&f, 3), 3);
    }

    #[test]
    fn ten_literals_sequential() {
        let mut f = Cnf::new(10);
        let lits: Vec<i32> = (1..=10).collect();
        exactly_one(&lits, &mut f, PAIRWISE_MAX);
        assert_eq!(f.num_vars(), 10 + 9);
        // every projected model has exactly one true literal, and all ten occur
        let mut ones = alloc::collections::BTreeSet::new();
        let total = f.num_vars();
        for bits in 0u64..(1 << total) {
            let a = Assignment::new((0..total).map(|i| bits >> i & 1 == 1).collect());
            if evaluate(&f, &a) {
                let proj = bits & 0x3ff;
                assert_eq!(proj.count_ones(), 1);
                ones.insert(proj);
            }
        }
        assert_eq!(ones.len(), 10);
    }

    #[test]
    fn threshold_is_configurable() {
        let mut f = Cnf::new(4);
        exactly_one(&[1, 2, 3, 4], &mut f, 2);
        assert_eq!(f.num_vars(), 7);
        assert_eq!(projected_models(&f, 4), 4);
    }
}
