use std::collections::HashSet;

use serde::Serialize;

use super::farm;
use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::rng::RandomSource;
use crate::samplers::{Algorithm, Generator};

/// Largest `n` the ranker supports (`d_20` still fits in 64 bits).
pub const MAX_RANK_N: usize = 20;
/// Supported sizes of the uniformity census.
pub const UNIFORMITY_RANGE: std::ops::RangeInclusive<usize> = 4..=11;
/// Histogram bin width for occurrence counts.
pub const BIN_WIDTH: u64 = 5;

/// Lexicographic rank of a derangement among all derangements of `n`.
///
/// `A(m, f)`, the number of ways to fill `m` positions with `m` labels when
/// `f` of the positions may not take their own label, satisfies
/// `A(m, 0) = m!` and `A(m, f) = A(m, f−1) − A(m−1, f−1)`; `A(n, n) = d_n`.
#[derive(Clone, Debug)]
pub struct DerangementRanker {
    n: usize,
    table: Vec<Vec<u64>>,
}

impl DerangementRanker {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=MAX_RANK_N).contains(&n) {
            return Err(Error::out_of_range("n", n, format!("2 <= n <= {MAX_RANK_N}")));
        }
        let mut table: Vec<Vec<u64>> = Vec::with_capacity(n + 1);
        let mut fact = 1u64;
        for m in 0..=n {
            if m > 0 {
                fact *= m as u64;
            }
            let mut row = vec![fact; m + 1];
            for f in 1..=m {
                row[f] = row[f - 1] - table[m - 1][f - 1];
            }
            table.push(row);
        }
        Ok(DerangementRanker { n, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `d_n`.
    pub fn count(&self) -> u64 {
        self.table[self.n][self.n]
    }

    /// Rank in `0..d_n` of a 0-based derangement map.
    pub fn rank(&self, map: &[u32]) -> u64 {
        debug_assert_eq!(map.len(), self.n);
        let n = self.n;
        let mut unused: u32 = (1u32 << n) - 1;
        let mut rank = 0u64;
        for (i, &v) in map.iter().enumerate() {
            let v = v as usize;
            debug_assert!(v != i && unused & (1 << v) != 0);
            let m = n - i - 1;
            // positions after i whose own label is still free
            let above_i = unused & !((2u32 << i) - 1);
            let free_after = above_i.count_ones() as usize;
            let below_v = unused & ((1u32 << v) - 1);
            let lt = (below_v & ((1u32 << i) - 1)).count_ones() as u64;
            let gt = (below_v & above_i).count_ones() as u64;
            // choosing a label < i leaves free_after restricted positions,
            // a label > i frees one of them
            if lt > 0 {
                rank += lt * self.table[m][free_after];
            }
            if gt > 0 {
                rank += gt * self.table[m][free_after - 1];
            }
            unused &= !(1 << v);
        }
        rank
    }

    pub fn rank_permutation(&self, p: &Permutation) -> Result<u64> {
        if p.len() != self.n {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: self.n,
            });
        }
        if !p.is_derangement() {
            return Err(Error::NotADerangement);
        }
        Ok(self.rank(p.as_zero_based()))
    }
}

/// All derangements of `n` in lexicographic order of their one-line form.
pub fn derangements_lex(n: usize) -> Vec<Permutation> {
    fn go(i: usize, map: &mut Vec<u32>, used: &mut Vec<bool>, out: &mut Vec<Permutation>) {
        let n = used.len();
        if i == n {
            out.push(Permutation::from_zero_based_unchecked(map.clone()));
            return;
        }
        for v in 0..n {
            if v != i && !used[v] {
                used[v] = true;
                map.push(v as u32);
                go(i + 1, map, used, out);
                map.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, &mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HistogramBin {
    /// Occurrence counts `lo..=hi`.
    pub lo: u64,
    pub hi: u64,
    /// Derangements whose occurrence count falls in the bin.
    pub derangements: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityReport {
    pub n: usize,
    pub multiplier: u64,
    pub algorithm: &'static str,
    /// `d_n`.
    pub derangements: u64,
    pub samples: u64,
    /// Sampler attempts, e.g. SIS passes including failures.
    pub attempts: u64,
    pub mean: f64,
    pub sd: f64,
    pub min: u64,
    pub max: u64,
    /// Distinct derangements seen at least once.
    pub covered: u64,
    pub full_coverage: bool,
    pub histogram: Vec<HistogramBin>,
}

impl UniformityReport {
    fn from_occurrences(
        n: usize,
        multiplier: u64,
        algorithm: Algorithm,
        attempts: u64,
        occ: &[u32],
    ) -> Self {
        let d = occ.len() as u64;
        let samples: u64 = occ.iter().map(|&c| c as u64).sum();
        let mean = samples as f64 / d as f64;
        let var = occ
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / d as f64;
        let max = occ.iter().copied().max().unwrap_or(0) as u64;
        let mut bins = vec![0u64; (max / BIN_WIDTH + 1) as usize];
        for &c in occ {
            bins[(c as u64 / BIN_WIDTH) as usize] += 1;
        }
        let covered = occ.iter().filter(|&&c| c > 0).count() as u64;
        UniformityReport {
            n,
            multiplier,
            algorithm: algorithm.name(),
            derangements: d,
            samples,
            attempts,
            mean,
            sd: var.sqrt(),
            min: occ.iter().copied().min().unwrap_or(0) as u64,
            max,
            covered,
            full_coverage: covered == d,
            histogram: bins
                .into_iter()
                .enumerate()
                .map(|(b, count)| HistogramBin {
                    lo: b as u64 * BIN_WIDTH,
                    hi: b as u64 * BIN_WIDTH + BIN_WIDTH - 1,
                    derangements: count,
                })
                .collect(),
        }
    }
}

fn check_uniformity(n: usize, multiplier: u64) -> Result<DerangementRanker> {
    if !UNIFORMITY_RANGE.contains(&n) {
        return Err(Error::out_of_range(
            "n",
            n,
            format!("{} <= n <= {}", UNIFORMITY_RANGE.start(), UNIFORMITY_RANGE.end()),
        ));
    }
    if multiplier == 0 {
        return Err(Error::out_of_range("multiplier", multiplier, "multiplier >= 1"));
    }
    DerangementRanker::new(n)
}

fn occurrences<R: RandomSource + ?Sized>(
    ranker: &DerangementRanker,
    algorithm: Algorithm,
    samples: u64,
    rng: &mut R,
) -> Result<(Vec<u32>, u64)> {
    let mut gen = Generator::new(algorithm, ranker.n())?;
    let mut occ = vec![0u32; ranker.count() as usize];
    for _ in 0..samples {
        occ[ranker.rank(gen.next(rng)) as usize] += 1;
    }
    Ok((occ, gen.attempts()))
}

/// Draws `multiplier · d_n` derangements and counts how often each one of
/// `D_n` occurs; a uniform sampler gives counts with mean `multiplier` and
/// standard deviation close to `√multiplier`.
pub fn uniformity_experiment<R: RandomSource + ?Sized>(
    n: usize,
    multiplier: u64,
    algorithm: Algorithm,
    rng: &mut R,
) -> Result<UniformityReport> {
    let ranker = check_uniformity(n, multiplier)?;
    let samples = multiplier * ranker.count();
    let (occ, attempts) = occurrences(&ranker, algorithm, samples, rng)?;
    Ok(UniformityReport::from_occurrences(n, multiplier, algorithm, attempts, &occ))
}

pub fn uniformity_experiment_parallel(
    n: usize,
    multiplier: u64,
    algorithm: Algorithm,
    seed: u64,
    workers: usize,
) -> Result<UniformityReport> {
    let ranker = check_uniformity(n, multiplier)?;
    Generator::new(algorithm, n)?;
    let samples = multiplier * ranker.count();
    let parts = farm(seed, workers, samples, |rng, quota| {
        occurrences(&ranker, algorithm, quota, rng).expect("validated generator")
    })?;
    let mut occ = vec![0u32; ranker.count() as usize];
    let mut attempts = 0;
    for (part, a) in &parts {
        for (o, p) in occ.iter_mut().zip(part) {
            *o += p;
        }
        attempts += a;
    }
    Ok(UniformityReport::from_occurrences(n, multiplier, algorithm, attempts, &occ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollisionReport {
    pub n: usize,
    pub samples: u64,
    pub distinct: u64,
    /// `samples − distinct`.
    pub collisions: u64,
}

/// Counts repeated derangements among `samples` draws of the sequential
/// importance sampler.
pub fn repeat_collision_check<R: RandomSource + ?Sized>(
    n: usize,
    samples: u64,
    rng: &mut R,
) -> Result<CollisionReport> {
    repeat_collision_check_with(Algorithm::Sis, n, samples, rng)
}

pub fn repeat_collision_check_with<R: RandomSource + ?Sized>(
    algorithm: Algorithm,
    n: usize,
    samples: u64,
    rng: &mut R,
) -> Result<CollisionReport> {
    let mut gen = Generator::new(algorithm, n)?;
    let mut seen: HashSet<Box<[u8]>> = HashSet::new();
    for _ in 0..samples {
        seen.insert(compact_key(gen.next(rng)));
    }
    let distinct = seen.len() as u64;
    Ok(CollisionReport {
        n,
        samples,
        distinct,
        collisions: samples - distinct,
    })
}

/// One byte per label up to 256 labels, four otherwise.
fn compact_key(map: &[u32]) -> Box<[u8]> {
    if map.len() <= 256 {
        map.iter().map(|&v| v as u8).collect()
    } else {
        map.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::rencontres;
    use crate::rng::Xoshiro256Plus;
    use crate::samplers::MixSpec;
    use num_traits::ToPrimitive;

    #[test]
    fn ranker_counts_match_rencontres() {
        for n in 2..=MAX_RANK_N {
            let r = DerangementRanker::new(n).unwrap();
            assert_eq!(r.count(), rencontres(n).to_u64().unwrap(), "n = {n}");
        }
        assert!(DerangementRanker::new(21).is_err());
    }

    #[test]
    fn ranks_follow_lexicographic_enumeration() {
        for n in 2..=8 {
            let all = derangements_lex(n);
            let r = DerangementRanker::new(n).unwrap();
            assert_eq!(all.len() as u64, r.count());
            for (i, p) in all.iter().enumerate() {
                assert!(p.is_derangement());
                assert_eq!(r.rank(p.as_zero_based()), i as u64, "n = {n}, {p}");
            }
            assert!(all.windows(2).all(|w| w[0].one_line() < w[1].one_line()));
        }
    }

    #[test]
    fn rank_permutation_validates() {
        let r = DerangementRanker::new(4).unwrap();
        assert!(r.rank_permutation(&Permutation::identity(4)).is_err());
        assert!(r.rank_permutation(&Permutation::cyclic(5)).is_err());
        assert_eq!(r.rank_permutation(&"2 1 4 3".parse().unwrap()).unwrap(), 0);
        assert_eq!(r.rank_permutation(&"4 3 2 1".parse().unwrap()).unwrap(), 8);
    }

    #[test]
    fn rejection_is_poisson_like() {
        let mut rng = Xoshiro256Plus::seed_from(1);
        let rep = uniformity_experiment(6, 400, Algorithm::Rejection, &mut rng).unwrap();
        assert_eq!(rep.derangements, 265);
        assert_eq!(rep.samples, 400 * 265);
        assert!((rep.mean - 400.0).abs() < 1e-9);
        assert!(rep.full_coverage);
        // sd of a uniform multinomial cell ≈ √400 = 20
        assert!((15.0..25.0).contains(&rep.sd), "{}", rep.sd);
        let binned: u64 = rep.histogram.iter().map(|b| b.derangements).sum();
        assert_eq!(binned, 265);
    }

    #[test]
    fn sis_is_visibly_non_uniform() {
        let mut rng = Xoshiro256Plus::seed_from(2);
        let rep = uniformity_experiment(6, 400, Algorithm::Sis, &mut rng).unwrap();
        assert!(rep.sd > 60.0, "{}", rep.sd);
        assert!(rep.attempts > rep.samples);
    }

    #[test]
    fn uniformity_range_and_parallel_determinism() {
        let mut rng = Xoshiro256Plus::seed_from(3);
        assert!(uniformity_experiment(3, 10, Algorithm::Sis, &mut rng).is_err());
        assert!(uniformity_experiment(12, 10, Algorithm::Sis, &mut rng).is_err());
        let walk = Algorithm::Walk(MixSpec::TwoN);
        let a = uniformity_experiment_parallel(5, 20, walk, 4, 3).unwrap();
        assert_eq!(a, uniformity_experiment_parallel(5, 20, walk, 4, 3).unwrap());
        assert_eq!(a.samples, 20 * 44);
    }

    #[test]
    fn collisions() {
        let mut rng = Xoshiro256Plus::seed_from(5);
        let small = repeat_collision_check(4, 100, &mut rng).unwrap();
        assert_eq!(small.distinct, 9);
        assert_eq!(small.collisions, 91);
        let big = repeat_collision_check(20, 20_000, &mut rng).unwrap();
        assert_eq!(big.collisions, 0);
        let a = repeat_collision_check(6, 500, &mut Xoshiro256Plus::seed_from(6)).unwrap();
        let b = repeat_collision_check(6, 500, &mut Xoshiro256Plus::seed_from(6)).unwrap();
        assert_eq!(a, b);
    }
}
