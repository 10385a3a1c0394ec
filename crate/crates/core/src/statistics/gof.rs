use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::measure::EmpiricalMeasure;
use crate::combinatorics::CycleCountDistribution;
use crate::error::{Error, Result};

/// Minimum expected count per bin after tail merging.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins left after merging.
    pub bins: usize,
}

/// Pearson χ² of observed cycle counts against `total · ν(k)`.
///
/// Bins are merged from the right until each has an expected count of at
/// least [`MIN_EXPECTED`]; an underfull remainder on the left joins its
/// right neighbour.
pub fn chi_square_gof(m: &EmpiricalMeasure, nu: &CycleCountDistribution) -> Result<GofResult> {
    if m.n() != nu.n() {
        return Err(Error::LengthMismatch {
            left: m.n(),
            right: nu.n(),
        });
    }
    if m.total() == 0 {
        return Err(Error::EmptyMeasure);
    }
    let total = m.total() as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in m.counts().iter().zip(nu.probabilities()).rev() {
        obs += c as f64;
        exp += total * p;
        if exp >= MIN_EXPECTED {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if obs > 0.0 || exp > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => bins.push((obs, exp)),
        }
    }
    if bins.len() < 2 {
        return Err(Error::TooFewBins(bins.len()));
    }
    let statistic: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(GofResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        bins: bins.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::cycle_count_distribution;

    #[test]
    fn exact_expectations_give_p_one() {
        // the n = 6 census: 120, 130 and 15 of 265 derangements
        let nu = cycle_count_distribution(6).unwrap();
        let m = EmpiricalMeasure::from_counts(6, vec![120, 130, 15]).unwrap();
        let r = chi_square_gof(&m, &nu).unwrap();
        assert!(r.statistic < 1e-20);
        assert_eq!(r.dof, 2);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_is_rejected() {
        let nu = cycle_count_distribution(64).unwrap();
        let mut counts = vec![0u64; 32];
        counts[0] = 100_000;
        let m = EmpiricalMeasure::from_counts(64, counts).unwrap();
        let r = chi_square_gof(&m, &nu).unwrap();
        assert!(r.p_value < 1e-100);
    }

    #[test]
    fn tail_merging_respects_minimum() {
        let nu = cycle_count_distribution(64).unwrap();
        let total = 10_000u64;
        let counts: Vec<u64> = nu
            .probabilities()
            .iter()
            .map(|p| (p * total as f64).round() as u64)
            .collect();
        let m = EmpiricalMeasure::from_counts(64, counts).unwrap();
        let r = chi_square_gof(&m, &nu).unwrap();
        // k ≥ 10 carries about 4 expected counts, so it merges into k = 9
        assert_eq!(r.bins, 9);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn single_bin_is_an_error() {
        let nu = cycle_count_distribution(4).unwrap();
        let m = EmpiricalMeasure::from_counts(4, vec![3, 0]).unwrap();
        assert!(matches!(chi_square_gof(&m, &nu), Err(Error::TooFewBins(1))));
        let empty = EmpiricalMeasure::new(4).unwrap();
        assert!(matches!(chi_square_gof(&empty, &nu), Err(Error::EmptyMeasure)));
    }

    #[test]
    fn survival_function_reference_values() {
        // χ²_1 at 3.841459 → 0.05; χ²_10 at 18.307038 → 0.05
        let one = ChiSquared::new(1.0).unwrap();
        assert!((one.sf(3.841_458_820_694_124) - 0.05).abs() < 1e-10);
        let ten = ChiSquared::new(10.0).unwrap();
        assert!((ten.sf(18.307_038_053_275_146) - 0.05).abs() < 1e-10);
    }
}
