//! Empirical measures and the experiments built on them.
//!
//! Every experiment has a single-stream form taking any
//! [`RandomSource`](crate::RandomSource) and
//! a `_parallel` form taking `(seed, workers)`: worker `w` draws from
//! [`Xoshiro256Plus::derive_stream`]`(seed, w)` and partial results are merged
//! in worker order, so output depends only on the seed and worker count.

mod failure;
mod fit;
mod gof;
mod measure;
mod mixing;
mod uniformity;

pub use failure::{
    failure_count, failure_experiment, failure_experiment_parallel, refined_failure_bound,
    FailureReport,
};
pub use fit::{fit_mixing_law, mixing_law, sqrt_n_log_n2, unit_constant_exponent, FitResult};
pub use gof::{chi_square_gof, GofResult, MIN_EXPECTED};
pub use measure::{tv_distance, tv_distance_probs, EmpiricalMeasure};
pub use mixing::{
    default_epsilon, default_max_t, first_crossing, mixing_time, mixing_time_parallel,
    mixing_time_with, MixingConvention, MixingResult, PooledTrajectory, TimeAverageTrajectory,
};
pub use uniformity::{
    derangements_lex, repeat_collision_check, repeat_collision_check_with,
    uniformity_experiment, uniformity_experiment_parallel, CollisionReport, DerangementRanker,
    HistogramBin, UniformityReport, BIN_WIDTH, MAX_RANK_N, UNIFORMITY_RANGE,
};

use rayon::prelude::*;

use crate::combinatorics::{
    cycle_count_distribution, cycle_count_distribution_float, CycleCountDistribution, MAX_EXACT_N,
};
use crate::error::{Error, Result};
use crate::rng::{RngState, Xoshiro256Plus};

/// `ν` for any `n ≥ 2`: exact up to [`MAX_EXACT_N`], the floating-point
/// recursion beyond.
pub fn reference_distribution(n: usize) -> Result<CycleCountDistribution> {
    if n <= MAX_EXACT_N {
        cycle_count_distribution(n)
    } else {
        cycle_count_distribution_float(n)
    }
}

/// Splits `total` into `workers` near-equal parts, larger parts first.
pub fn split_quota(total: u64, workers: usize) -> Vec<u64> {
    let w = workers as u64;
    (0..w).map(|i| total / w + u64::from(i < total % w)).collect()
}

/// Runs `job(stream, quota)` for each worker on its derived stream and
/// returns the results in worker order.
pub fn farm<T, F>(seed: u64, workers: usize, total: u64, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngState, u64) -> T + Sync,
{
    if workers == 0 {
        return Err(Error::out_of_range("workers", 0, "workers >= 1"));
    }
    let quotas = split_quota(total, workers);
    Ok(quotas
        .par_iter()
        .enumerate()
        .map(|(w, &quota)| {
            let mut rng = Xoshiro256Plus::derive_stream(seed, w as u64);
            job(&mut rng, quota)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    #[test]
    fn quotas_cover_the_total() {
        assert_eq!(split_quota(10, 3), vec![4, 3, 3]);
        assert_eq!(split_quota(2, 4), vec![1, 1, 0, 0]);
        assert_eq!(split_quota(0, 1), vec![0]);
    }

    #[test]
    fn farm_is_ordered_and_seeded() {
        let words = farm(5, 4, 8, |rng, q| (q, rng.next_u64())).unwrap();
        let again = farm(5, 4, 8, |rng, q| (q, rng.next_u64())).unwrap();
        assert_eq!(words, again);
        assert_eq!(words[2].1, Xoshiro256Plus::derive_stream(5, 2).next_u64());
        assert!(farm(5, 0, 8, |_, q| q).is_err());
    }

    #[test]
    fn reference_switches_to_float_route() {
        let big = reference_distribution(2000).unwrap();
        assert_eq!(big.max_k(), 1000);
        assert!((big.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
