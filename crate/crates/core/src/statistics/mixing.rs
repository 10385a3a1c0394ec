use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::measure::{tv_distance_probs, EmpiricalMeasure};
use super::{farm, reference_distribution};
use crate::combinatorics::CycleCountDistribution;
use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::rng::RandomSource;
use crate::samplers::{RestrictedWalk, WalkMode};

/// `½ e⁻¹`.
pub fn default_epsilon() -> f64 {
    0.5 * (-1.0f64).exp()
}

/// Default horizon: `max(4n, 64)` attempted transpositions.
pub fn default_max_t(n: usize) -> usize {
    (4 * n).max(64)
}

/// How the distance at step `t` is averaged over runs.
///
/// The time average is the default: with it the estimated mixing times land
/// on the published values (67 at `n = 64`, 112 at `n = 128`), while the
/// pooled ensemble distance of the cycle count falls below `½ e⁻¹` within a
/// few dozen steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingConvention {
    /// Mean over runs of the TV of each run's own time average
    /// `μ_t(k) = #{1 ≤ s ≤ t : σ_s has k cycles} / t` (`μ_0` is the start).
    #[default]
    TimeAverage,
    /// TV of the cycle-count distribution pooled across runs at fixed `t`.
    Ensemble,
}

impl fmt::Display for MixingConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixingConvention::Ensemble => "ensemble",
            MixingConvention::TimeAverage => "time-average",
        })
    }
}

impl FromStr for MixingConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ensemble" | "pooled" => Ok(MixingConvention::Ensemble),
            "time-average" | "time" => Ok(MixingConvention::TimeAverage),
            _ => Err(Error::Usage(format!(
                "unknown convention `{s}` (expected ensemble or time-average)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingResult {
    pub n: usize,
    pub epsilon: f64,
    /// First `t` with distance below `epsilon`; `None` if `max_t` was reached.
    pub t_mix: Option<usize>,
    /// Distance at `t = 0..=max_t`.
    pub trajectory: Vec<f64>,
    pub runs: u64,
    pub convention: MixingConvention,
}

impl MixingResult {
    pub fn mixed(&self) -> bool {
        self.t_mix.is_some()
    }
}

/// `min{t : trajectory[t] < epsilon}`.
pub fn first_crossing(trajectory: &[f64], epsilon: f64) -> Option<usize> {
    trajectory.iter().position(|&d| d < epsilon)
}

/// Cycle counts of many walks from the cyclic start, pooled per step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PooledTrajectory {
    n: usize,
    max_t: usize,
    runs: u64,
    /// Row `t` holds the counts for `k = 1..=⌊n/2⌋`.
    counts: Vec<u64>,
}

impl PooledTrajectory {
    pub fn new(n: usize, max_t: usize) -> Result<Self> {
        check_walk_size(n)?;
        Ok(PooledTrajectory {
            n,
            max_t,
            runs: 0,
            counts: vec![0; (max_t + 1) * (n / 2)],
        })
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    pub fn max_t(&self) -> usize {
        self.max_t
    }

    /// Runs `runs` more walks of `max_t` attempted transpositions each.
    pub fn record<R: RandomSource + ?Sized>(&mut self, runs: u64, rng: &mut R) {
        let width = self.n / 2;
        let mut walk = cyclic_walk(self.n);
        for _ in 0..runs {
            walk.reset_cyclic();
            self.counts[0] += 1;
            for t in 1..=self.max_t {
                walk.step(rng);
                self.counts[t * width + walk.cycle_count() - 1] += 1;
            }
        }
        self.runs += runs;
    }

    pub fn merge(&mut self, other: &PooledTrajectory) -> Result<()> {
        if (other.n, other.max_t) != (self.n, self.max_t) {
            return Err(Error::Usage(format!(
                "cannot merge trajectories for (n, max_t) = ({}, {}) and ({}, {})",
                self.n, self.max_t, other.n, other.max_t
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.runs += other.runs;
        Ok(())
    }

    /// The pooled measure at step `t`.
    pub fn measure_at(&self, t: usize) -> EmpiricalMeasure {
        let width = self.n / 2;
        EmpiricalMeasure::from_counts(self.n, self.counts[t * width..(t + 1) * width].to_vec())
            .expect("row width is n/2")
    }

    pub fn tv_trajectory(&self, nu: &CycleCountDistribution) -> Vec<f64> {
        let width = self.n / 2;
        let runs = self.runs.max(1) as f64;
        let mut probs = vec![0.0; width];
        self.counts
            .chunks_exact(width)
            .map(|row| {
                for (p, &c) in probs.iter_mut().zip(row) {
                    *p = c as f64 / runs;
                }
                tv_distance_probs(&probs, nu.probabilities())
            })
            .collect()
    }
}

/// Sum over runs of each run's time-averaged distance, per step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAverageTrajectory {
    n: usize,
    max_t: usize,
    runs: u64,
    tv_sum: Vec<f64>,
}

impl TimeAverageTrajectory {
    pub fn new(n: usize, max_t: usize) -> Result<Self> {
        check_walk_size(n)?;
        Ok(TimeAverageTrajectory {
            n,
            max_t,
            runs: 0,
            tv_sum: vec![0.0; max_t + 1],
        })
    }

    /// Only the visited range of cycle counts is summed; unvisited bins
    /// contribute `t · ν(k)` each, taken from prefix sums of `ν`.
    pub fn record<R: RandomSource + ?Sized>(
        &mut self,
        runs: u64,
        nu: &CycleCountDistribution,
        rng: &mut R,
    ) {
        let nu = nu.probabilities();
        let mut prefix = Vec::with_capacity(nu.len() + 1);
        prefix.push(0.0);
        for &p in nu {
            prefix.push(prefix.last().unwrap() + p);
        }
        let d0 = {
            let mut start = vec![0.0; nu.len()];
            start[0] = 1.0;
            tv_distance_probs(&start, nu)
        };
        let mut walk = cyclic_walk(self.n);
        let mut visits = vec![0u64; nu.len()];
        for _ in 0..runs {
            walk.reset_cyclic();
            visits.iter_mut().for_each(|v| *v = 0);
            let (mut lo, mut hi) = (usize::MAX, 0usize);
            self.tv_sum[0] += d0;
            for t in 1..=self.max_t {
                walk.step(rng);
                let b = walk.cycle_count() - 1;
                visits[b] += 1;
                lo = lo.min(b);
                hi = hi.max(b);
                let tf = t as f64;
                let inside: f64 = visits[lo..=hi]
                    .iter()
                    .zip(&nu[lo..=hi])
                    .map(|(&c, &p)| (c as f64 - tf * p).abs())
                    .sum();
                let outside = (1.0 - (prefix[hi + 1] - prefix[lo])).max(0.0) * tf;
                self.tv_sum[t] += ((inside + outside) / (2.0 * tf)).min(1.0);
            }
        }
        self.runs += runs;
    }

    pub fn merge(&mut self, other: &TimeAverageTrajectory) -> Result<()> {
        if (other.n, other.max_t) != (self.n, self.max_t) {
            return Err(Error::Usage("cannot merge trajectories of different shape".into()));
        }
        for (a, b) in self.tv_sum.iter_mut().zip(&other.tv_sum) {
            *a += b;
        }
        self.runs += other.runs;
        Ok(())
    }

    pub fn mean(&self) -> Vec<f64> {
        let runs = self.runs.max(1) as f64;
        self.tv_sum.iter().map(|s| (s / runs).clamp(0.0, 1.0)).collect()
    }
}

fn check_walk_size(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::out_of_range("n", n, "n >= 4 for the restricted transposition walk"));
    }
    Ok(())
}

fn cyclic_walk(n: usize) -> RestrictedWalk {
    RestrictedWalk::new(Permutation::cyclic(n), WalkMode::Derangement)
        .expect("cyclic start is a derangement")
        .with_cycle_tracking()
}

fn check_args(n: usize, epsilon: f64, runs: u64) -> Result<()> {
    check_walk_size(n)?;
    if !(epsilon > 0.0) {
        return Err(Error::out_of_range("epsilon", epsilon, "epsilon > 0"));
    }
    if runs == 0 {
        return Err(Error::out_of_range("runs", runs, "runs >= 1"));
    }
    Ok(())
}

/// Mixing time of the walk from the cyclic start under the default
/// [`MixingConvention`].
pub fn mixing_time<R: RandomSource + ?Sized>(
    n: usize,
    epsilon: f64,
    runs: u64,
    max_t: usize,
    rng: &mut R,
) -> Result<MixingResult> {
    mixing_time_with(n, epsilon, runs, max_t, MixingConvention::default(), rng)
}

pub fn mixing_time_with<R: RandomSource + ?Sized>(
    n: usize,
    epsilon: f64,
    runs: u64,
    max_t: usize,
    convention: MixingConvention,
    rng: &mut R,
) -> Result<MixingResult> {
    check_args(n, epsilon, runs)?;
    let nu = reference_distribution(n)?;
    let trajectory = match convention {
        MixingConvention::Ensemble => {
            let mut pooled = PooledTrajectory::new(n, max_t)?;
            pooled.record(runs, rng);
            pooled.tv_trajectory(&nu)
        }
        MixingConvention::TimeAverage => {
            let mut avg = TimeAverageTrajectory::new(n, max_t)?;
            avg.record(runs, &nu, rng);
            avg.mean()
        }
    };
    Ok(MixingResult {
        n,
        epsilon,
        t_mix: first_crossing(&trajectory, epsilon),
        trajectory,
        runs,
        convention,
    })
}

/// [`mixing_time_with`] with runs split over `workers` derived streams.
/// Reproducible for a fixed `(seed, workers)`.
pub fn mixing_time_parallel(
    n: usize,
    epsilon: f64,
    runs: u64,
    max_t: usize,
    convention: MixingConvention,
    seed: u64,
    workers: usize,
) -> Result<MixingResult> {
    check_args(n, epsilon, runs)?;
    let nu = reference_distribution(n)?;
    let trajectory = match convention {
        MixingConvention::Ensemble => {
            let parts = farm(seed, workers, runs, |rng, quota| {
                let mut p = PooledTrajectory::new(n, max_t).expect("validated n");
                p.record(quota, rng);
                p
            })?;
            let mut pooled = PooledTrajectory::new(n, max_t)?;
            for p in &parts {
                pooled.merge(p)?;
            }
            pooled.tv_trajectory(&nu)
        }
        MixingConvention::TimeAverage => {
            let parts = farm(seed, workers, runs, |rng, quota| {
                let mut p = TimeAverageTrajectory::new(n, max_t).expect("validated n");
                p.record(quota, &nu, rng);
                p
            })?;
            let mut avg = TimeAverageTrajectory::new(n, max_t)?;
            for p in &parts {
                avg.merge(p)?;
            }
            avg.mean()
        }
    };
    Ok(MixingResult {
        n,
        epsilon,
        t_mix: first_crossing(&trajectory, epsilon),
        trajectory,
        runs,
        convention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256Plus;
    use crate::statistics::tv_distance;

    #[test]
    fn starts_at_one_minus_nu_one() {
        let mut rng = Xoshiro256Plus::seed_from(1);
        let r = mixing_time(16, default_epsilon(), 50, 40, &mut rng).unwrap();
        let nu = reference_distribution(16).unwrap();
        assert!((r.trajectory[0] - (1.0 - nu.prob(1))).abs() < 1e-12);
        assert_eq!(r.trajectory.len(), 41);
        assert!(r.trajectory.iter().all(|d| d.is_finite() && (0.0..=1.0).contains(d)));
    }

    #[test]
    fn epsilon_at_least_one_mixes_immediately() {
        let mut rng = Xoshiro256Plus::seed_from(2);
        for conv in [MixingConvention::Ensemble, MixingConvention::TimeAverage] {
            let r = mixing_time_with(8, 1.0, 10, 5, conv, &mut rng).unwrap();
            assert_eq!(r.t_mix, Some(0));
        }
    }

    #[test]
    fn visited_range_shortcut_matches_the_full_sum() {
        let nu = reference_distribution(20).unwrap();
        let (runs, max_t) = (30u64, 80usize);
        let mut fast = TimeAverageTrajectory::new(20, max_t).unwrap();
        fast.record(runs, &nu, &mut Xoshiro256Plus::seed_from(8));

        let mut rng = Xoshiro256Plus::seed_from(8);
        let mut walk = cyclic_walk(20);
        let mut sums = vec![0.0; max_t + 1];
        for _ in 0..runs {
            walk.reset_cyclic();
            let mut m = EmpiricalMeasure::new(20).unwrap();
            sums[0] += 1.0 - nu.prob(1);
            for t in 1..=max_t {
                walk.step(&mut rng);
                m.record_cycle_count(walk.cycle_count()).unwrap();
                sums[t] += tv_distance(&m, &nu).unwrap();
            }
        }
        for (a, b) in fast.mean().iter().zip(&sums) {
            assert!((a - b / runs as f64).abs() < 1e-12, "{a} vs {}", b / runs as f64);
        }
    }

    #[test]
    fn pooled_rows_sum_to_runs() {
        let mut rng = Xoshiro256Plus::seed_from(3);
        let mut p = PooledTrajectory::new(10, 30).unwrap();
        p.record(200, &mut rng);
        for t in 0..=30 {
            assert_eq!(p.measure_at(t).total(), 200);
        }
    }

    #[test]
    fn unmixed_within_horizon_is_reported() {
        let mut rng = Xoshiro256Plus::seed_from(4);
        let r = mixing_time(64, 1e-6, 20, 10, &mut rng).unwrap();
        assert!(!r.mixed());
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = Xoshiro256Plus::seed_from(5);
        assert!(mixing_time(3, 0.1, 10, 10, &mut rng).is_err());
        assert!(mixing_time(8, 0.0, 10, 10, &mut rng).is_err());
        assert!(mixing_time(8, f64::NAN, 10, 10, &mut rng).is_err());
        assert!(mixing_time(8, 0.1, 0, 10, &mut rng).is_err());
    }

    #[test]
    fn parallel_is_reproducible() {
        let a = mixing_time_parallel(12, 0.2, 300, 60, MixingConvention::Ensemble, 9, 3).unwrap();
        let b = mixing_time_parallel(12, 0.2, 300, 60, MixingConvention::Ensemble, 9, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs, 300);
    }

    #[test]
    fn time_average_lags_the_ensemble() {
        let mut rng = Xoshiro256Plus::seed_from(6);
        let eps = default_epsilon();
        let e = mixing_time_with(32, eps, 2000, 400, MixingConvention::Ensemble, &mut rng).unwrap();
        let t = mixing_time_with(32, eps, 2000, 400, MixingConvention::TimeAverage, &mut rng).unwrap();
        let (te, tt) = (e.t_mix.unwrap(), t.t_mix.unwrap());
        assert!(tt > te, "time average {tt} vs ensemble {te}");
    }
}
