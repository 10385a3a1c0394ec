use serde::{Deserialize, Serialize};

use crate::combinatorics::CycleCountDistribution;
use crate::error::{Error, Result};
use crate::permutation::{cycle_count_of, Permutation};

/// Histogram of cycle counts: `counts[k - 1]` derangements with `k` cycles
/// out of `total`, so `μ(k) = counts[k - 1] / total`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    n: usize,
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalMeasure {
    /// The empty measure over `k = 1..=⌊n/2⌋`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::out_of_range("n", n, "n >= 2"));
        }
        Ok(EmpiricalMeasure {
            n,
            counts: vec![0; n / 2],
            total: 0,
        })
    }

    /// `counts[k - 1]` for `k = 1..=⌊n/2⌋`; the total is their sum.
    pub fn from_counts(n: usize, counts: Vec<u64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::out_of_range("n", n, "n >= 2"));
        }
        if counts.len() != n / 2 {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: n / 2,
            });
        }
        let total = counts.iter().sum();
        Ok(EmpiricalMeasure { n, counts, total })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Adds one derangement of length `n`.
    pub fn accumulate(&mut self, p: &Permutation) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: self.n,
            });
        }
        if !p.is_derangement() {
            return Err(Error::NotADerangement);
        }
        self.record_map(p.as_zero_based());
        Ok(())
    }

    /// Hot-path variant of [`Self::accumulate`] for sampler output.
    pub(crate) fn record_map(&mut self, map: &[u32]) {
        debug_assert_eq!(map.len(), self.n);
        debug_assert!(map.iter().enumerate().all(|(i, &v)| v as usize != i));
        let k = cycle_count_of(map);
        self.counts[k - 1] += 1;
        self.total += 1;
    }

    /// Adds one observation with `k` cycles.
    pub fn record_cycle_count(&mut self, k: usize) -> Result<()> {
        if k == 0 || k > self.counts.len() {
            return Err(Error::out_of_range(
                "cycle count",
                k,
                format!("1 <= k <= {}", self.counts.len()),
            ));
        }
        self.counts[k - 1] += 1;
        self.total += 1;
        Ok(())
    }

    /// Adds another measure's counts (order-independent).
    pub fn merge(&mut self, other: &EmpiricalMeasure) -> Result<()> {
        if other.n != self.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: other.n,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }

    /// `μ(k)`; zero outside the support or for an empty measure.
    pub fn prob(&self, k: usize) -> f64 {
        if k == 0 || k > self.counts.len() || self.total == 0 {
            return 0.0;
        }
        self.counts[k - 1] as f64 / self.total as f64
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (1..=self.counts.len()).map(|k| self.prob(k)).collect()
    }

    /// Multinomial standard error of `μ(k)`.
    pub fn std_error(&self, k: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let p = self.prob(k);
        (p * (1.0 - p) / self.total as f64).sqrt()
    }
}

/// `½ Σ_k |μ(k) − ν(k)|`.
pub fn tv_distance(m: &EmpiricalMeasure, nu: &CycleCountDistribution) -> Result<f64> {
    if m.n != nu.n() {
        return Err(Error::LengthMismatch {
            left: m.n,
            right: nu.n(),
        });
    }
    if m.total == 0 {
        return Err(Error::EmptyMeasure);
    }
    Ok(tv_distance_probs(&m.probabilities(), nu.probabilities()))
}

/// Total variation between two probability vectors; the shorter one is
/// padded with zeros. The result is clamped to `[0, 1]` against rounding.
pub fn tv_distance_probs(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let sum: f64 = (0..len).map(|i| (at(a, i) - at(b, i)).abs()).sum();
    (0.5 * sum).clamp(0.0, 1.0)
}
