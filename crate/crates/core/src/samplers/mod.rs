//! Random derangement generators.
//!
//! - [`sattolo`]: uniform cyclic derangements (a single `n`-cycle).
//! - [`restricted_transposition_walk`]: scrambles an initial derangement with
//!   random restricted transpositions; with an involution start it runs in
//!   perfect-matching mode ([`perfect_matching_sampler`]).
//! - [`sis_derangement`]: sequential importance sampling, may fail at the
//!   last position.
//! - [`rejection_sampler`]: Fisher-Yates until a derangement appears; exactly
//!   uniform on the derangements and used as the reference sampler.

mod sis;
mod walk;

pub use sis::{sis_derangement, sis_retry, SisOutcome, SisSampler};
pub use walk::{
    perfect_matching_sampler, restricted_transposition_walk, CycleTracker, InitialState,
    MixSpec, RestrictedWalk, StepOutcome, WalkConfig, WalkMode,
};

use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::rng::RandomSource;

/// Sattolo's algorithm: a uniformly random cyclic permutation in one pass,
/// using exactly `n - 1` index draws.
pub fn sattolo<R: RandomSource + ?Sized>(n: usize, rng: &mut R) -> Result<Permutation> {
    if n < 2 {
        return Err(Error::out_of_range("n", n, "n >= 2"));
    }
    let mut map: Vec<u32> = (0..n as u32).collect();
    sattolo_in_place(&mut map, rng);
    Ok(Permutation::from_zero_based_unchecked(map))
}

pub(crate) fn sattolo_in_place<R: RandomSource + ?Sized>(map: &mut [u32], rng: &mut R) {
    for i in (1..map.len()).rev() {
        let j = rng.next_below(i);
        map.swap(i, j);
    }
}

pub(crate) fn fisher_yates_in_place<R: RandomSource + ?Sized>(map: &mut [u32], rng: &mut R) {
    for i in (1..map.len()).rev() {
        let j = rng.next_below(i + 1);
        map.swap(i, j);
    }
}

/// A uniformly random permutation of `n` labels.
pub fn fisher_yates<R: RandomSource + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut map: Vec<u32> = (0..n as u32).collect();
    fisher_yates_in_place(&mut map, rng);
    Permutation::from_zero_based_unchecked(map)
}

/// Rejection sampler with reusable storage and an attempt counter.
#[derive(Clone, Debug)]
pub struct RejectionSampler {
    map: Vec<u32>,
    attempts: u64,
}

impl RejectionSampler {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::out_of_range("n", n, "n >= 2"));
        }
        Ok(RejectionSampler {
            map: (0..n as u32).collect(),
            attempts: 0,
        })
    }

    /// Draws until a derangement appears; the result is left in [`Self::current`].
    pub fn sample<R: RandomSource + ?Sized>(&mut self, rng: &mut R) -> &[u32] {
        loop {
            self.attempts += 1;
            fisher_yates_in_place(&mut self.map, rng);
            if self.map.iter().enumerate().all(|(i, &v)| v as usize != i) {
                return &self.map;
            }
        }
    }

    pub fn current(&self) -> &[u32] {
        &self.map
    }

    /// Total Fisher-Yates shuffles performed so far.
    pub fn attempts(&self) -> u64 {
        self.attempts
    }
}

/// Fisher-Yates shuffles retried until the result is a derangement.
pub fn rejection_sampler<R: RandomSource + ?Sized>(n: usize, rng: &mut R) -> Result<Permutation> {
    let mut sampler = RejectionSampler::new(n)?;
    Ok(Permutation::from_zero_based_unchecked(sampler.sample(rng).to_vec()))
}


/// Derangement generators selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Restricted-transposition walk from the cyclic start (`t`).
    Walk(MixSpec),
    /// Sequential importance sampling, retried on failure (`s`).
    Sis,
    Sattolo,
    /// Fisher-Yates with rejection (`reject`).
    Rejection,
    /// The walk in perfect-matching mode (`matching`).
    Matching(MixSpec),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Walk(_) => "t",
            Algorithm::Sis => "s",
            Algorithm::Sattolo => "sattolo",
            Algorithm::Rejection => "reject",
            Algorithm::Matching(_) => "matching",
        }
    }

    /// Parses `t`, `s`, `sattolo`, `reject` or `matching`; walks use `mix`.
    pub fn parse(name: &str, mix: MixSpec) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "t" | "walk" => Ok(Algorithm::Walk(mix)),
            "s" | "sis" => Ok(Algorithm::Sis),
            "sattolo" => Ok(Algorithm::Sattolo),
            "reject" | "rejection" => Ok(Algorithm::Rejection),
            "matching" | "pm" => Ok(Algorithm::Matching(mix)),
            other => Err(Error::Usage(format!(
                "unknown algorithm `{other}` (expected t, s, sattolo, reject or matching)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
enum GeneratorState {
    Walk { start: RestrictedWalk, walk: RestrictedWalk, mix: usize },
    Sis(SisSampler),
    Sattolo(Vec<u32>),
    Rejection(RejectionSampler),
}

/// Produces one derangement per call with reusable storage.
///
/// Walks restart from their initial state for every sample. Failed SIS
/// passes are retried and counted in [`Generator::attempts`].
#[derive(Clone, Debug)]
pub struct Generator {
    algorithm: Algorithm,
    state: GeneratorState,
    attempts: u64,
    produced: u64,
}

impl Generator {
    pub fn new(algorithm: Algorithm, n: usize) -> Result<Self> {
        let state = match algorithm {
            Algorithm::Walk(mix) => {
                let cfg = WalkConfig::new(n, mix.resolve(n), InitialState::Cyclic)?;
                let start = RestrictedWalk::new(Permutation::cyclic(n), cfg.mode())?;
                GeneratorState::Walk {
                    walk: start.clone(),
                    start,
                    mix: cfg.mix(),
                }
            }
            Algorithm::Matching(mix) => {
                let cfg = WalkConfig::new(n, mix.resolve(n), InitialState::Involution)?;
                let start = RestrictedWalk::new(
                    Permutation::adjacent_involution(n).expect("validated even n"),
                    cfg.mode(),
                )?;
                GeneratorState::Walk {
                    walk: start.clone(),
                    start,
                    mix: cfg.mix(),
                }
            }
            Algorithm::Sis => GeneratorState::Sis(SisSampler::new(n)?),
            Algorithm::Sattolo => {
                if n < 2 {
                    return Err(Error::out_of_range("n", n, "n >= 2"));
                }
                GeneratorState::Sattolo(vec![0; n])
            }
            Algorithm::Rejection => GeneratorState::Rejection(RejectionSampler::new(n)?),
        };
        Ok(Generator {
            algorithm,
            state,
            attempts: 0,
            produced: 0,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    /// Next derangement as a 0-based one-line map.
    pub fn next<R: RandomSource + ?Sized>(&mut self, rng: &mut R) -> &[u32] {
        self.produced += 1;
        match &mut self.state {
            GeneratorState::Walk { start, walk, mix } => {
                self.attempts += 1;
                walk.clone_from(start);
                walk.run(*mix, rng);
                walk.as_zero_based()
            }
            GeneratorState::Sis(s) => loop {
                self.attempts += 1;
                if s.sample(rng).0 {
                    return s.current();
                }
            },
            GeneratorState::Sattolo(map) => {
                self.attempts += 1;
                for (i, v) in map.iter_mut().enumerate() {
                    *v = i as u32;
                }
                sattolo_in_place(map, rng);
                map
            }
            GeneratorState::Rejection(r) => {
                r.sample(rng);
                self.attempts = r.attempts();
                r.current()
            }
        }
    }

    /// Attempts made: SIS passes including failures, shuffles for rejection
    /// sampling, one per sample otherwise.
    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn produced(&self) -> u64 {
        self.produced
    }
}
