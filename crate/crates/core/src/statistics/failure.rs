use serde::{Deserialize, Serialize};

use super::farm;
use crate::error::{Error, Result};
use crate::rng::{RandomSource, Xoshiro256Plus};
use crate::samplers::SisSampler;

/// `(1/(n−1)) · Π_{i=1}^{n−1} [1 + 1/((n−2)(n−i))]⁻¹`.
///
/// An approximation that ignores correlations between steps, not a bound:
/// at `n = 3` it gives 1/6 while the failure probability is 1/4.
pub fn refined_failure_bound(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::out_of_range("n", n, "n >= 3"));
    }
    let m = (n - 2) as f64;
    let product: f64 = (1..n)
        .map(|i| 1.0 / (1.0 + 1.0 / (m * (n - i) as f64)))
        .product();
    Ok(product / (n - 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub n: usize,
    pub samples: u64,
    pub failures: u64,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub std_error: f64,
    pub bound_1_over_n: f64,
    /// [`refined_failure_bound`]; `None` for `n = 2`.
    pub bound_refined: Option<f64>,
}

impl FailureReport {
    pub fn from_counts(n: usize, samples: u64, failures: u64) -> Self {
        let rate = if samples == 0 {
            0.0
        } else {
            failures as f64 / samples as f64
        };
        FailureReport {
            n,
            samples,
            failures,
            rate,
            std_error: if samples == 0 {
                0.0
            } else {
                (rate * (1.0 - rate) / samples as f64).sqrt()
            },
            bound_1_over_n: 1.0 / n as f64,
            bound_refined: refined_failure_bound(n).ok(),
        }
    }

    /// `(1/n − rate) / std_error`; infinite when no failure was seen.
    pub fn sigmas_below_one_over_n(&self) -> f64 {
        (self.bound_1_over_n - self.rate) / self.std_error
    }
}

/// Failed passes out of `samples` runs of the sequential importance sampler.
pub fn failure_count<R: RandomSource + ?Sized>(n: usize, samples: u64, rng: &mut R) -> Result<u64> {
    let mut sampler = SisSampler::new(n)?;
    let mut failures = 0;
    for _ in 0..samples {
        if !sampler.sample(rng).0 {
            failures += 1;
        }
    }
    Ok(failures)
}

fn check(n_list: &[usize], samples: u64) -> Result<()> {
    if samples == 0 {
        return Err(Error::out_of_range("samples", samples, "samples >= 1"));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n < 2) {
        return Err(Error::out_of_range("n", n, "n >= 2"));
    }
    Ok(())
}

pub fn failure_experiment<R: RandomSource + ?Sized>(
    n_list: &[usize],
    samples: u64,
    rng: &mut R,
) -> Result<Vec<FailureReport>> {
    check(n_list, samples)?;
    n_list
        .iter()
        .map(|&n| Ok(FailureReport::from_counts(n, samples, failure_count(n, samples, rng)?)))
        .collect()
}

/// Parallel [`failure_experiment`]; each `n` gets its own derived master
/// seed so adding or removing sizes leaves the others unchanged.
pub fn failure_experiment_parallel(
    n_list: &[usize],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<FailureReport>> {
    check(n_list, samples)?;
    n_list
        .iter()
        .map(|&n| {
            let master = Xoshiro256Plus::stream_seed(seed, n as u64);
            let parts = farm(master, workers, samples, |rng, quota| {
                failure_count(n, quota, rng).expect("validated n")
            })?;
            Ok(FailureReport::from_counts(n, samples, parts.iter().sum()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refined_bound_values() {
        assert!((refined_failure_bound(3).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        // independent evaluation in Python
        assert!((refined_failure_bound(64).unwrap() - 0.014_710_6).abs() < 5e-8);
        assert!(refined_failure_bound(2).is_err());
        for n in 3..200 {
            let b = refined_failure_bound(n).unwrap();
            assert!(b > 0.0 && b < 1.0 / (n - 1) as f64);
        }
    }

    #[test]
    fn two_labels_never_fail() {
        let mut rng = Xoshiro256Plus::seed_from(1);
        let r = failure_experiment(&[2], 10_000, &mut rng).unwrap();
        assert_eq!(r[0].failures, 0);
        assert_eq!(r[0].bound_refined, None);
        assert_eq!(r[0].bound_1_over_n, 0.5);
    }

    #[test]
    fn three_labels_fail_a_quarter_of_the_time() {
        let mut rng = Xoshiro256Plus::seed_from(2);
        let r = &failure_experiment(&[3], 400_000, &mut rng).unwrap()[0];
        assert!((r.rate - 0.25).abs() < 5.0 * r.std_error, "{r:?}");
        // above the refined approximation at n = 3
        assert!(r.rate > r.bound_refined.unwrap());
    }

    #[test]
    fn parallel_matches_itself_and_is_below_one_over_n() {
        let a = failure_experiment_parallel(&[8, 16], 50_000, 7, 2).unwrap();
        assert_eq!(a, failure_experiment_parallel(&[8, 16], 50_000, 7, 2).unwrap());
        let solo = failure_experiment_parallel(&[16], 50_000, 7, 2).unwrap();
        assert_eq!(a[1], solo[0]);
        for r in &a {
            assert!(r.sigmas_below_one_over_n() > 0.0, "{r:?}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = Xoshiro256Plus::seed_from(3);
        assert!(failure_experiment(&[1], 10, &mut rng).is_err());
        assert!(failure_experiment(&[5], 0, &mut rng).is_err());
    }
}
