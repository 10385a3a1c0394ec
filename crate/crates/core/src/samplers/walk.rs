use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::permutation::{cycle_count_of, Permutation};
use crate::rng::RandomSource;

/// How many restricted transpositions to attempt, relative to `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixSpec {
    N,
    TwoN,
    /// `round(n ln n)`.
    NLogN,
    Explicit(usize),
}

impl MixSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            MixSpec::N => n,
            MixSpec::TwoN => 2 * n,
            MixSpec::NLogN => ((n as f64) * (n as f64).ln()).round() as usize,
            MixSpec::Explicit(m) => m,
        }
    }
}

impl Default for MixSpec {
    fn default() -> Self {
        MixSpec::TwoN
    }
}

impl FromStr for MixSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match t.to_ascii_lowercase().as_str() {
            "n" => Ok(MixSpec::N),
            "2n" => Ok(MixSpec::TwoN),
            "nlogn" | "nlnn" | "n*log(n)" | "nlog(n)" => Ok(MixSpec::NLogN),
            other => other
                .parse::<usize>()
                .map(MixSpec::Explicit)
                .map_err(|_| Error::Usage(format!("invalid mix `{s}` (use n, 2n, nlogn or an integer)"))),
        }
    }
}

impl fmt::Display for MixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixSpec::N => f.write_str("n"),
            MixSpec::TwoN => f.write_str("2n"),
            MixSpec::NLogN => f.write_str("nlogn"),
            MixSpec::Explicit(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// `2 3 ... n 1`.
    Cyclic,
    /// `2 1 4 3 ... n n-1`; switches the walk to perfect-matching mode.
    Involution,
    Given(Permutation),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WalkMode {
    /// Plain restricted transpositions over all derangements.
    Derangement,
    /// Each accepted move re-pairs two edges of a perfect matching, keeping
    /// the state a fixed-point-free involution.
    PerfectMatching,
}

/// Parameters of one restricted-transposition walk.
#[derive(Clone, Debug)]
pub struct WalkConfig {
    n: usize,
    mix: usize,
    initial: InitialState,
}

impl WalkConfig {
    /// Validates `n ≥ 4`, `mix ≥ ⌈n/2⌉` for a cyclic start, even `n` for an
    /// involution start, and that a given start is an `n`-derangement.
    pub fn new(n: usize, mix: usize, initial: InitialState) -> Result<Self> {
        if n < 4 {
            return Err(Error::out_of_range("n", n, "n >= 4 for the restricted transposition walk"));
        }
        match &initial {
            InitialState::Cyclic => {
                let min_mix = n.div_ceil(2);
                if mix < min_mix {
                    return Err(Error::out_of_range(
                        "mix",
                        mix,
                        format!("mix >= {min_mix} from a cyclic start"),
                    ));
                }
            }
            InitialState::Involution => {
                if n % 2 != 0 {
                    return Err(Error::out_of_range("n", n, "even n for an involution start"));
                }
            }
            InitialState::Given(p) => {
                if p.len() != n {
                    return Err(Error::LengthMismatch {
                        left: p.len(),
                        right: n,
                    });
                }
                if !p.is_derangement() {
                    return Err(Error::NotADerangement);
                }
            }
        }
        Ok(WalkConfig { n, mix, initial })
    }

    /// Cyclic start with `mix = 2n`.
    pub fn with_default_mix(n: usize) -> Result<Self> {
        Self::new(n, MixSpec::TwoN.resolve(n), InitialState::Cyclic)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mix(&self) -> usize {
        self.mix
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn mode(&self) -> WalkMode {
        match self.initial {
            InitialState::Involution => WalkMode::PerfectMatching,
            _ => WalkMode::Derangement,
        }
    }

    fn initial_permutation(&self) -> Permutation {
        match &self.initial {
            InitialState::Cyclic => Permutation::cyclic(self.n),
            InitialState::Involution => {
                Permutation::adjacent_involution(self.n).expect("validated even n")
            }
            InitialState::Given(p) => p.clone(),
        }
    }
}

/// Result of one attempted restricted transposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// `i = j`: the condition holds but the swap changes nothing.
    Vacuous,
    /// `σ_i = j` or `σ_j = i`: the swap would create a fixed point.
    Rejected,
    Accepted,
}

/// Cycle membership maintained under transpositions of positions.
///
/// Swapping `σ_i ↔ σ_j` splits the common cycle when `i` and `j` share one
/// and joins their cycles otherwise. Only the smaller of the two cycles
/// involved is relabelled, so the count stays exact at `O(min size)` per swap.
#[derive(Clone, Debug)]
pub struct CycleTracker {
    id: Vec<u32>,
    size: Vec<u32>,
    free: Vec<u32>,
    count: usize,
}

impl CycleTracker {
    pub fn new(map: &[u32]) -> Self {
        let n = map.len();
        let mut id = vec![u32::MAX; n];
        let mut size = vec![0u32; n];
        let mut count = 0usize;
        for start in 0..n {
            if id[start] != u32::MAX {
                continue;
            }
            let mut x = start;
            while id[x] == u32::MAX {
                id[x] = count as u32;
                size[count] += 1;
                x = map[x] as usize;
            }
            count += 1;
        }
        let free = (count as u32..n as u32).rev().collect();
        CycleTracker {
            id,
            size,
            free,
            count,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Resets to a single cycle covering all `n` elements.
    fn reset_single_cycle(&mut self) {
        let n = self.id.len();
        self.id.fill(0);
        self.size.fill(0);
        self.size[0] = n as u32;
        self.free.clear();
        self.free.extend((1..n as u32).rev());
        self.count = 1;
    }

    /// Updates membership after `map[i]` and `map[j]` (with `i ≠ j`) were swapped.
    pub fn on_swap(&mut self, map: &[u32], i: usize, j: usize) {
        let (ci, cj) = (self.id[i], self.id[j]);
        if ci == cj {
            // split: i → map[i] → ... → i and j → map[j] → ... → j
            let (mut x, mut y) = (i, j);
            let mut len = 0u32;
            let start = loop {
                len += 1;
                x = map[x] as usize;
                if x == i {
                    break i;
                }
                y = map[y] as usize;
                if y == j {
                    break j;
                }
            };
            let fresh = self.free.pop().expect("at most n cycles");
            let mut z = start;
            for _ in 0..len {
                self.id[z] = fresh;
                z = map[z] as usize;
            }
            self.size[fresh as usize] = len;
            self.size[ci as usize] -= len;
            self.count += 1;
        } else {
            // join: i → (old cycle of j) → j → (old cycle of i) → i
            let (small, large, first) = if self.size[ci as usize] <= self.size[cj as usize] {
                (ci, cj, map[j] as usize)
            } else {
                (cj, ci, map[i] as usize)
            };
            let len = self.size[small as usize];
            let mut z = first;
            for _ in 0..len {
                self.id[z] = large;
                z = map[z] as usize;
            }
            self.size[large as usize] += len;
            self.size[small as usize] = 0;
            self.free.push(small);
            self.count -= 1;
        }
    }
}

/// A restricted-transposition walk whose state is updated in place.
#[derive(Clone, Debug)]
pub struct RestrictedWalk {
    sigma: Vec<u32>,
    mode: WalkMode,
    tracker: Option<CycleTracker>,
}

impl RestrictedWalk {
    /// Starts a walk from `initial`, which must be a derangement of `n ≥ 4`
    /// labels (and a fixed-point-free involution in perfect-matching mode).
    pub fn new(initial: Permutation, mode: WalkMode) -> Result<Self> {
        let n = initial.len();
        if n < 4 {
            return Err(Error::out_of_range("n", n, "n >= 4 for the restricted transposition walk"));
        }
        if !initial.is_derangement() {
            return Err(Error::NotADerangement);
        }
        if mode == WalkMode::PerfectMatching && !initial.is_fixed_point_free_involution() {
            return Err(Error::InvalidPermutation(
                "perfect-matching mode needs a fixed-point-free involution".into(),
            ));
        }
        Ok(RestrictedWalk {
            sigma: initial.into_zero_based(),
            mode,
            tracker: None,
        })
    }

    /// Maintains the cycle count incrementally from now on.
    pub fn with_cycle_tracking(mut self) -> Self {
        self.tracker = Some(CycleTracker::new(&self.sigma));
        self
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn mode(&self) -> WalkMode {
        self.mode
    }

    /// Current cycle count; `O(1)` with tracking, `O(n)` otherwise.
    pub fn cycle_count(&self) -> usize {
        match &self.tracker {
            Some(t) => t.count(),
            None => cycle_count_of(&self.sigma),
        }
    }

    pub fn as_zero_based(&self) -> &[u32] {
        &self.sigma
    }

    pub fn permutation(&self) -> Permutation {
        Permutation::from_zero_based_unchecked(self.sigma.clone())
    }

    /// Returns to the cyclic derangement `2 3 ... n 1` (derangement mode only).
    pub fn reset_cyclic(&mut self) {
        debug_assert_eq!(self.mode, WalkMode::Derangement);
        let n = self.sigma.len() as u32;
        for (i, v) in self.sigma.iter_mut().enumerate() {
            *v = (i as u32 + 1) % n;
        }
        if let Some(t) = &mut self.tracker {
            t.reset_single_cycle();
        }
    }

    /// One attempt with `i, j` drawn independently and uniformly from `1..=n`.
    #[inline]
    pub fn step<R: RandomSource + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let n = self.sigma.len();
        let i = rng.next_below(n);
        let j = rng.next_below(n);
        self.propose_zero_based(i, j)
    }

    /// Attempts `mix` steps, consuming exactly `2 * mix` index draws.
    pub fn run<R: RandomSource + ?Sized>(&mut self, mix: usize, rng: &mut R) {
        for _ in 0..mix {
            self.step(rng);
        }
    }

    /// Attempts the restricted transposition of 1-based positions `i` and `j`.
    pub fn propose(&mut self, i: usize, j: usize) -> StepOutcome {
        self.propose_zero_based(i - 1, j - 1)
    }

    #[inline]
    fn propose_zero_based(&mut self, i: usize, j: usize) -> StepOutcome {
        if self.sigma[i] as usize == j || self.sigma[j] as usize == i {
            return StepOutcome::Rejected;
        }
        if i == j {
            return StepOutcome::Vacuous;
        }
        self.swap(i, j);
        if self.mode == WalkMode::PerfectMatching {
            // (i a)(j b) became the 4-cycle i → b → j → a; swapping the
            // partners' entries closes it into (i b)(j a).
            let a = self.sigma[j] as usize;
            let b = self.sigma[i] as usize;
            self.swap(a, b);
        }
        StepOutcome::Accepted
    }

    #[inline]
    fn swap(&mut self, i: usize, j: usize) {
        self.sigma.swap(i, j);
        if let Some(t) = &mut self.tracker {
            t.on_swap(&self.sigma, i, j);
        }
    }
}

/// Runs the walk described by `cfg` and returns its final state, always a
/// derangement (a fixed-point-free involution for an involution start).
pub fn restricted_transposition_walk<R: RandomSource + ?Sized>(
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<Permutation> {
    let mut walk = RestrictedWalk::new(cfg.initial_permutation(), cfg.mode())?;
    walk.run(cfg.mix(), rng);
    Ok(walk.permutation())
}

/// A random perfect matching of the complete graph on `n` vertices, as a
/// fixed-point-free involution produced by the walk in perfect-matching mode.
pub fn perfect_matching_sampler<R: RandomSource + ?Sized>(
    n: usize,
    mix: usize,
    rng: &mut R,
) -> Result<Permutation> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::out_of_range("n", n, "even n >= 4"));
    }
    let cfg = WalkConfig::new(n, mix, InitialState::Involution)?;
    let p = restricted_transposition_walk(&cfg, rng)?;
    assert!(
        p.is_fixed_point_free_involution(),
        "perfect-matching walk left the involution class"
    );
    Ok(p)
}
