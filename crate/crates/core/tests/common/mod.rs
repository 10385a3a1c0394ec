#![allow(dead_code)]

use std::collections::BTreeMap;

/// Tallies over all `n!` permutations, gathered by Heap's algorithm.
#[derive(Debug, Default)]
pub struct Census {
    pub permutations: u64,
    pub derangements: u64,
    /// derangements by cycle count, index `k - 1`
    pub by_cycles: Vec<u64>,
    /// permutations by cycle type `(a_1, ..., a_n)`
    pub by_type: BTreeMap<Vec<usize>, u64>,
    pub fixed_point_free_involutions: u64,
}

pub fn census(n: usize) -> Census {
    let mut c = Census {
        by_cycles: vec![0; n.max(1)],
        ..Census::default()
    };
    let mut a: Vec<usize> = (0..n).collect();
    let mut stack = vec![0usize; n];
    tally(&a, &mut c);
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(stack[i], i);
            }
            tally(&a, &mut c);
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    c
}

fn tally(p: &[usize], c: &mut Census) {
    let n = p.len();
    c.permutations += 1;
    let mut seen = vec![false; n];
    let mut ty = vec![0usize; n];
    let mut cycles = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            x = p[x];
            len += 1;
        }
        ty[len - 1] += 1;
        cycles += 1;
    }
    *c.by_type.entry(ty.clone()).or_default() += 1;
    if n > 0 && ty[0] == 0 {
        c.derangements += 1;
        c.by_cycles[cycles - 1] += 1;
        if n >= 2 && ty[1] * 2 == n {
            c.fixed_point_free_involutions += 1;
        }
    }
}

/// `k` standard deviations of a binomial count around `trials · p`.
pub fn within_binomial(count: u64, trials: u64, p: f64, k: f64) -> bool {
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - trials as f64 * p).abs() <= k * sigma
}
