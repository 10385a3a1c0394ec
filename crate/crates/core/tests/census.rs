//! Exact counts against a brute-force census of every permutation.

mod common;

use derange::combinatorics::{
    cauchy_count, dnk_inclusion_exclusion, dnk_recursion, perfect_matching_count, rencontres,
    CycleType,
};
use num_bigint::BigUint;

#[test]
fn counts_match_enumeration_up_to_nine() {
    for n in 2..=9 {
        let c = common::census(n);
        assert_eq!(rencontres(n), BigUint::from(c.derangements), "d_{n}");
        for k in 1..=n / 2 {
            let expected = BigUint::from(c.by_cycles[k - 1]);
            assert_eq!(dnk_recursion(n, k), expected, "d_{n}^({k})");
            assert_eq!(dnk_inclusion_exclusion(n, k), expected, "d_{n}^({k})");
        }
        assert!(c.by_cycles[n / 2..].iter().all(|&x| x == 0));
        for (ty, &count) in &c.by_type {
            let t = CycleType::new(n, ty.clone()).unwrap();
            assert_eq!(cauchy_count(&t), BigUint::from(count), "type {ty:?}");
        }
        if n % 2 == 0 {
            assert_eq!(
                perfect_matching_count(n).unwrap(),
                BigUint::from(c.fixed_point_free_involutions)
            );
        }
    }
}

#[test]
fn small_censuses() {
    let expect: [(usize, &[u64]); 4] = [
        (4, &[6, 3]),
        (5, &[24, 20]),
        (6, &[120, 130, 15]),
        (7, &[720, 924, 210]),
    ];
    for (n, by_k) in expect {
        let c = common::census(n);
        assert_eq!(&c.by_cycles[..n / 2], by_k, "n = {n}");
    }
}
