//! Exact counting for derangements.
//!
//! All counts are arbitrary-precision integers. The associated Stirling
//! numbers `d_n^(k)` (derangements of `n` labels with exactly `k` cycles) are
//! available through two independent routes, inclusion-exclusion over the
//! unsigned Stirling numbers of the first kind and a two-term recursion, and
//! [`cycle_count_distribution`] refuses to produce probabilities unless both
//! routes agree.

use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact nonnegative count.
pub type BigCount = BigUint;

/// Largest `n` for which the exact big-integer distribution is built.
pub const MAX_EXACT_N: usize = 1024;

// ---------------------------------------------------------------------------
// Elementary counts

pub fn factorial(n: usize) -> BigCount {
    (1..=n as u64).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn binomial(n: usize, k: usize) -> BigCount {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for j in 0..k {
        c = c * (n - j) / (j + 1);
    }
    c
}

/// Double factorial `(n-1)(n-3)...3·1` for even `n`; 1 for `n = 0`.
pub fn odd_double_factorial_below(n: usize) -> BigCount {
    (1..n).step_by(2).fold(BigUint::one(), |acc, i| acc * i)
}

/// Rencontres number `d_n`, by `d_{n+1} = n (d_n + d_{n-1})` with `d₀ = 1`, `d₁ = 0`.
pub fn rencontres(n: usize) -> BigCount {
    let mut prev = BigUint::one(); // d_0
    if n == 0 {
        return prev;
    }
    let mut cur = BigUint::zero(); // d_1
    for m in 1..n {
        let next = (&cur + &prev) * m;
        prev = cur;
        cur = next;
    }
    cur
}

// ---------------------------------------------------------------------------
// Cycle types

/// Cycle type `(a₁, ..., aₙ)`: `a_k` is the number of `k`-cycles.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycleType {
    n: usize,
    counts: Vec<usize>,
}

impl CycleType {
    /// `counts[k-1] = a_k`. Trailing zeros may be omitted.
    pub fn new(n: usize, mut counts: Vec<usize>) -> Result<Self> {
        if counts.len() > n {
            if counts[n..].iter().any(|&a| a != 0) {
                let sum = weighted_sum(&counts);
                return Err(Error::InvalidCycleType { sum, n });
            }
            counts.truncate(n);
        }
        counts.resize(n, 0);
        let sum = weighted_sum(&counts);
        if sum != n {
            return Err(Error::InvalidCycleType { sum, n });
        }
        Ok(CycleType { n, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `a₁ ... aₙ`, always of length `n`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cycle_count(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_derangement_type(&self) -> bool {
        self.counts.first().map_or(true, |&a1| a1 == 0)
    }
}

fn weighted_sum(counts: &[usize]) -> usize {
    counts.iter().enumerate().map(|(i, &a)| (i + 1) * a).sum()
}

/// Cauchy's formula: the number of `n`-permutations of the given type,
/// `n! / Π_k (k^{a_k} a_k!)`.
pub fn cauchy_count(t: &CycleType) -> BigCount {
    let mut denom = BigUint::one();
    for (i, &a) in t.counts().iter().enumerate() {
        if a > 0 {
            denom *= BigUint::from(i + 1).pow(a as u32) * factorial(a);
        }
    }
    factorial(t.n()) / denom
}

// ---------------------------------------------------------------------------
// Stirling numbers of the first kind

/// Triangle of unsigned Stirling numbers of the first kind `[m k]`, `m ≤ max_n`.
#[derive(Clone, Debug)]
pub struct StirlingTable {
    rows: Vec<Vec<BigCount>>,
}

impl StirlingTable {
    /// Builds rows `0..=max_n` with `[m+1 k] = m [m k] + [m k-1]`.
    pub fn up_to(max_n: usize) -> Self {
        let mut table = StirlingTable {
            rows: vec![vec![BigUint::one()]],
        };
        table.extend_to(max_n);
        table
    }

    fn extend_to(&mut self, max_n: usize) {
        while self.rows.len() <= max_n {
            let m = self.rows.len() - 1;
            let prev = &self.rows[m];
            let mut row = Vec::with_capacity(m + 2);
            row.push(BigUint::zero());
            for k in 1..=m + 1 {
                let mut v = if k <= m { &prev[k] * m } else { BigUint::zero() };
                v += &prev[k - 1];
                row.push(v);
            }
            self.rows.push(row);
        }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    /// `[n k]`, zero outside the triangle. Panics if `n > max_n`.
    pub fn get(&self, n: usize, k: usize) -> BigCount {
        self.rows[n].get(k).cloned().unwrap_or_default()
    }

    pub fn row(&self, n: usize) -> &[BigCount] {
        &self.rows[n]
    }
}

// ---------------------------------------------------------------------------
// Associated Stirling numbers d_n^(k)

/// Triangle of `d_m^(k)` for `m ≤ max_n`, `k ≤ m/2`, built by the recursion
/// `d_{m+1}^(k) = m (d_m^(k) + d_{m-1}^(k-1))`, `d₀^(0) = 1`, `d_m^(0) = 0`.
#[derive(Clone, Debug)]
pub struct DerangementCycleTable {
    rows: Vec<Vec<BigCount>>,
}

impl DerangementCycleTable {
    pub fn up_to(max_n: usize) -> Self {
        let mut table = DerangementCycleTable {
            rows: vec![vec![BigUint::one()]],
        };
        table.extend_to(max_n);
        table
    }

    fn extend_to(&mut self, max_n: usize) {
        while self.rows.len() <= max_n {
            let next = self.rows.len(); // building row m + 1 = next
            let row = if next == 1 {
                vec![BigUint::zero()]
            } else {
                let m = next - 1;
                let cur = &self.rows[m];
                let older = &self.rows[m - 1];
                (0..=next / 2)
                    .map(|k| {
                        if k == 0 {
                            return BigUint::zero();
                        }
                        let mut v = cur.get(k).cloned().unwrap_or_default();
                        if let Some(o) = older.get(k - 1) {
                            v += o;
                        }
                        v * m
                    })
                    .collect()
            };
            self.rows.push(row);
        }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    /// `d_n^(k)`, zero for `k > n/2`. Panics if `n > max_n`.
    pub fn get(&self, n: usize, k: usize) -> BigCount {
        self.rows[n].get(k).cloned().unwrap_or_default()
    }

    /// `d_n^(0), ..., d_n^(⌊n/2⌋)`.
    pub fn row(&self, n: usize) -> &[BigCount] {
        &self.rows[n]
    }
}

// Grow-on-demand memo tables shared by the point-query functions. A table is
// immutable once published; growing swaps in a larger copy.
fn stirling_memo() -> &'static RwLock<Arc<StirlingTable>> {
    static MEMO: OnceLock<RwLock<Arc<StirlingTable>>> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(Arc::new(StirlingTable::up_to(0))))
}

fn dnk_memo() -> &'static RwLock<Arc<DerangementCycleTable>> {
    static MEMO: OnceLock<RwLock<Arc<DerangementCycleTable>>> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(Arc::new(DerangementCycleTable::up_to(0))))
}

fn stirling_table(n: usize) -> Arc<StirlingTable> {
    let memo = stirling_memo();
    {
        let t = memo.read().expect("memo lock poisoned");
        if t.max_n() >= n {
            return Arc::clone(&t);
        }
    }
    let mut guard = memo.write().expect("memo lock poisoned");
    if guard.max_n() < n {
        let mut grown = (**guard).clone();
        grown.extend_to(n);
        *guard = Arc::new(grown);
    }
    Arc::clone(&guard)
}

fn dnk_table(n: usize) -> Arc<DerangementCycleTable> {
    let memo = dnk_memo();
    {
        let t = memo.read().expect("memo lock poisoned");
        if t.max_n() >= n {
            return Arc::clone(&t);
        }
    }
    let mut guard = memo.write().expect("memo lock poisoned");
    if guard.max_n() < n {
        let mut grown = (**guard).clone();
        grown.extend_to(n);
        *guard = Arc::new(grown);
    }
    Arc::clone(&guard)
}

/// Unsigned Stirling number of the first kind `[n k]` (memoized).
pub fn stirling_first_unsigned(n: usize, k: usize) -> BigCount {
    stirling_table(n).get(n, k)
}

/// `d_n^(k)` by the recursion (memoized).
pub fn dnk_recursion(n: usize, k: usize) -> BigCount {
    dnk_table(n).get(n, k)
}

/// `d_n^(k) = Σ_{j=0}^{k} (-1)^j C(n,j) [n-j k-j]` (memoized Stirling table).
pub fn dnk_inclusion_exclusion(n: usize, k: usize) -> BigCount {
    if k > n / 2 {
        return BigUint::zero();
    }
    dnk_inclusion_exclusion_with(&stirling_table(n), n, k)
}

/// Inclusion-exclusion against a caller-supplied Stirling table with `max_n ≥ n`.
pub fn dnk_inclusion_exclusion_with(table: &StirlingTable, n: usize, k: usize) -> BigCount {
    if k > n / 2 {
        return BigUint::zero();
    }
    let mut sum = BigInt::zero();
    let mut choose = BigUint::one(); // C(n, j)
    for j in 0..=k {
        let term = BigInt::from_biguint(Sign::Plus, &choose * table.get(n - j, k - j));
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        choose = choose * (n - j) / (j + 1);
    }
    assert!(
        sum.sign() != Sign::Minus,
        "inclusion-exclusion produced a negative count for n={n}, k={k}"
    );
    sum.to_biguint().expect("nonnegative")
}

/// Harmonic number `H_m` as an exact rational.
pub fn harmonic(m: usize) -> BigRational {
    (1..=m).fold(BigRational::zero(), |acc, i| {
        acc + BigRational::new(BigInt::one(), BigInt::from(i))
    })
}

/// `(n-1)! (H_{n-2} - 1)` evaluated exactly; equals `d_n^(2)` for `n ≥ 3`.
pub fn dn2_closed_form(n: usize) -> BigRational {
    assert!(n >= 3, "closed form for d_n^(2) needs n >= 3");
    let fact = BigRational::from_integer(BigInt::from_biguint(Sign::Plus, factorial(n - 1)));
    fact * (harmonic(n - 2) - BigRational::one())
}

// ---------------------------------------------------------------------------
// Big ratio to float

/// `num / den` correctly rounded to within one ulp, without floating overflow.
///
/// The quotient is formed by integer division with at least 64 fraction bits
/// beyond its leading bit, then scaled by a power of two.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "zero denominator");
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 66;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        (num >> (-shift) as u64) / den
    };
    // q has 66 or 67 significant bits; keep the top 96 in a u128.
    let extra = q.bits().saturating_sub(96);
    let top = (&q >> extra).to_u128().expect("fits in 96 bits");
    scale_by_pow2(top as f64, extra as i64 - shift)
}

fn scale_by_pow2(mut x: f64, mut exp: i64) -> f64 {
    while exp > 1000 {
        x *= 2f64.powi(1000);
        exp -= 1000;
    }
    while exp < -1000 {
        x *= 2f64.powi(-1000);
        exp += 1000;
    }
    x * 2f64.powi(exp as i32)
}

// ---------------------------------------------------------------------------
// Cycle-count distribution

/// Exact law of the number of cycles of a uniform random `n`-derangement:
/// `ν(k) = d_n^(k) / d_n` for `k = 1..=⌊n/2⌋`.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleCountDistribution {
    n: usize,
    nu: Vec<f64>,
}

impl CycleCountDistribution {
    /// Wraps probabilities `nu[k-1] = ν(k)`; the vector must have length `⌊n/2⌋`
    /// and sum to 1 within `1e-12`.
    pub fn from_probabilities(n: usize, nu: Vec<f64>) -> Result<Self> {
        if nu.len() != n / 2 {
            return Err(Error::LengthMismatch {
                left: nu.len(),
                right: n / 2,
            });
        }
        let total: f64 = nu.iter().sum();
        if nu.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Inconsistency(format!(
                "cycle-count probabilities for n={n} sum to {total}"
            )));
        }
        Ok(CycleCountDistribution { n, nu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest cycle count with positive mass, `⌊n/2⌋`.
    pub fn max_k(&self) -> usize {
        self.nu.len()
    }

    /// `ν(k)`; zero outside `1..=⌊n/2⌋`.
    pub fn prob(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.nu.get(k - 1).copied().unwrap_or(0.0)
    }

    /// `ν(1), ..., ν(⌊n/2⌋)`.
    pub fn probabilities(&self) -> &[f64] {
        &self.nu
    }

    pub fn mean(&self) -> f64 {
        self.nu
            .iter()
            .enumerate()
            .map(|(i, &p)| (i + 1) as f64 * p)
            .sum()
    }

    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = self
            .nu
            .iter()
            .enumerate()
            .map(|(i, &p)| ((i + 1) as f64).powi(2) * p)
            .sum();
        (second - mean * mean).max(0.0).sqrt()
    }
}

/// Exact counts behind a [`CycleCountDistribution`].
#[derive(Clone, Debug)]
pub struct ExactCycleCounts {
    pub n: usize,
    /// `d_n`.
    pub total: BigCount,
    /// `d_n^(k)` at index `k - 1`.
    pub by_cycles: Vec<BigCount>,
}

/// Computes `d_n^(1..=n/2)` by both routes and fails loudly if they differ.
pub fn exact_cycle_counts(n: usize) -> Result<ExactCycleCounts> {
    if !(2..=MAX_EXACT_N).contains(&n) {
        return Err(Error::out_of_range("n", n, format!("2 <= n <= {MAX_EXACT_N}")));
    }
    let recursion = DerangementCycleTable::up_to(n);
    let stirling = StirlingTable::up_to(n);
    let mut by_cycles = Vec::with_capacity(n / 2);
    for k in 1..=n / 2 {
        let a = recursion.get(n, k);
        let b = dnk_inclusion_exclusion_with(&stirling, n, k);
        if a != b {
            return Err(Error::Inconsistency(format!(
                "d_{n}^({k}) differs between recursion ({a}) and inclusion-exclusion ({b})"
            )));
        }
        by_cycles.push(a);
    }
    let total: BigUint = by_cycles.iter().sum();
    let direct = rencontres(n);
    if total != direct {
        return Err(Error::Inconsistency(format!(
            "sum of d_{n}^(k) is {total} but d_{n} is {direct}"
        )));
    }
    Ok(ExactCycleCounts {
        n,
        total,
        by_cycles,
    })
}

impl ExactCycleCounts {
    pub fn distribution(&self) -> Result<CycleCountDistribution> {
        let nu = self
            .by_cycles
            .iter()
            .map(|c| ratio_to_f64(c, &self.total))
            .collect();
        CycleCountDistribution::from_probabilities(self.n, nu)
    }
}

/// `ν(k) = d_n^(k)/d_n` for `2 ≤ n ≤ 1024`, cross-checked between both routes.
pub fn cycle_count_distribution(n: usize) -> Result<CycleCountDistribution> {
    exact_cycle_counts(n)?.distribution()
}

/// Floating-point cycle-count law for any `n ≥ 2`.
///
/// Runs the `d_n^(k)` recursion on `q_m^(k) = d_m^(k) / m!`, which becomes
/// `q_{m+1}^(k) = (m q_m^(k) + q_{m-1}^(k-1)) / (m + 1)`: every term is
/// nonnegative, so there is no cancellation. Entries below `1e-300` are
/// flushed to zero.
pub fn cycle_count_distribution_float(n: usize) -> Result<CycleCountDistribution> {
    if n < 2 {
        return Err(Error::out_of_range("n", n, "n >= 2"));
    }
    let kmax = n / 2;
    let mut older = vec![0.0f64; kmax + 1]; // q_0
    older[0] = 1.0;
    let mut cur = vec![0.0f64; kmax + 1]; // q_1
    let mut next = vec![0.0f64; kmax + 1];
    // highest index that can be nonzero in `cur`
    let mut hi = 0usize;
    for m in 1..n {
        let new_hi = ((m + 1) / 2).min(kmax);
        next[0] = 0.0;
        let mf = m as f64;
        let inv = 1.0 / (m as f64 + 1.0);
        for k in 1..=new_hi {
            let v = (mf * cur[k] + older[k - 1]) * inv;
            next[k] = if v < 1e-300 { 0.0 } else { v };
        }
        hi = new_hi;
        std::mem::swap(&mut older, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let total: f64 = cur[1..=hi].iter().sum();
    let nu = (1..=kmax).map(|k| cur[k] / total).collect::<Vec<_>>();
    let sum: f64 = nu.iter().sum();
    let nu = nu.into_iter().map(|p| p / sum).collect();
    CycleCountDistribution::from_probabilities(n, nu)
}

// ---------------------------------------------------------------------------
// Perfect matchings

/// Perfect matchings of the complete graph on `n` (even) vertices:
/// `n! / (2^{n/2} (n/2)!)`.
pub fn perfect_matching_count(n: usize) -> Result<BigCount> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::out_of_range("n", n, "even n >= 2"));
    }
    Ok(factorial(n) / (BigUint::from(2u32).pow((n / 2) as u32) * factorial(n / 2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbabilityMode {
    Exact,
    Asymptotic,
}

/// Probability that a uniform random `n`-derangement is a perfect matching.
///
/// Exact mode is `perfect_matching_count(n) / d_n`; asymptotic mode is
/// `(e / √(πn)) · √((e/n)^n)`.
pub fn perfect_matching_probability(n: usize, mode: ProbabilityMode) -> Result<f64> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::out_of_range("n", n, "even n >= 4"));
    }
    Ok(match mode {
        ProbabilityMode::Exact => ratio_to_f64(&perfect_matching_count(n)?, &rencontres(n)),
        ProbabilityMode::Asymptotic => {
            let nf = n as f64;
            let e = std::f64::consts::E;
            // √((e/n)^n) = exp(n/2 · ln(e/n)) keeps large n from underflowing early
            (e / (std::f64::consts::PI * nf).sqrt()) * (0.5 * nf * (e / nf).ln()).exp()
        }
    })
}

// ---------------------------------------------------------------------------
// Normal approximation

/// `N(log n, √log n)` next to the exact mean and standard deviation of the
/// cycle count of a uniform random `n`-derangement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalApproximation {
    pub log_mean: f64,
    pub log_sd: f64,
    pub exact_mean: f64,
    pub exact_sd: f64,
}

/// Exact moments come from [`cycle_count_distribution`] for `n ≤ 1024` and
/// from [`cycle_count_distribution_float`] above that.
pub fn normal_approximation_params(n: usize) -> Result<NormalApproximation> {
    if n < 2 {
        return Err(Error::out_of_range("n", n, "n >= 2"));
    }
    let dist = if n <= MAX_EXACT_N {
        cycle_count_distribution(n)?
    } else {
        cycle_count_distribution_float(n)?
    };
    let ln = (n as f64).ln();
    Ok(NormalApproximation {
        log_mean: ln,
        log_sd: ln.sqrt(),
        exact_mean: dist.mean(),
        exact_sd: dist.std_dev(),
    })
}
