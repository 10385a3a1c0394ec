use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::rng::RandomSource;

/// Outcome of one pass of sequential importance sampling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SisOutcome {
    /// The derangement, or `None` when the last remaining label was `n`.
    pub result: Option<Permutation>,
    /// Index draws consumed, including redraws.
    pub draws: u64,
}

impl SisOutcome {
    pub fn is_success(&self) -> bool {
        self.result.is_some()
    }
}

/// Sequential importance sampler with reusable storage.
///
/// Position `i` takes a label uniformly from the unused labels other than
/// `i`. The unused set is a swap-with-last array with a positional index, so
/// each choice and removal is `O(1)`. Only position `n` can find its
/// candidate set empty.
#[derive(Clone, Debug)]
pub struct SisSampler {
    unused: Vec<u32>,
    slot: Vec<u32>,
    sigma: Vec<u32>,
}

impl SisSampler {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::out_of_range("n", n, "n >= 2"));
        }
        Ok(SisSampler {
            unused: Vec::with_capacity(n),
            slot: vec![0; n],
            sigma: vec![0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    /// One pass. On success the derangement is in [`Self::current`].
    /// Returns `(success, draws)`.
    pub fn sample<R: RandomSource + ?Sized>(&mut self, rng: &mut R) -> (bool, u64) {
        let n = self.sigma.len();
        self.unused.clear();
        self.unused.extend(0..n as u32);
        for (label, s) in self.slot.iter_mut().enumerate() {
            *s = label as u32;
        }
        let mut draws = 0u64;
        for i in 0..n {
            let remaining = n - i;
            debug_assert_eq!(self.unused.len(), remaining);
            let i_unused = self.slot[i] != u32::MAX;
            if remaining == 1 {
                if i_unused {
                    return (false, draws);
                }
                self.sigma[i] = self.unused[0];
                break;
            }
            // uniform on unused \ {i}: redraw while the draw is i itself
            let r = loop {
                draws += 1;
                let r = rng.next_below(remaining);
                if self.unused[r] as usize != i {
                    break r;
                }
            };
            let label = self.unused[r];
            self.sigma[i] = label;
            let last = self.unused[remaining - 1];
            self.unused[r] = last;
            self.slot[last as usize] = r as u32;
            self.unused.pop();
            self.slot[label as usize] = u32::MAX;
        }
        (true, draws)
    }

    pub fn current(&self) -> &[u32] {
        &self.sigma
    }
}

/// One run of sequential importance sampling for an `n`-derangement.
pub fn sis_derangement<R: RandomSource + ?Sized>(n: usize, rng: &mut R) -> Result<SisOutcome> {
    let mut sampler = SisSampler::new(n)?;
    let (ok, draws) = sampler.sample(rng);
    Ok(SisOutcome {
        result: ok.then(|| Permutation::from_zero_based_unchecked(sampler.current().to_vec())),
        draws,
    })
}

/// Repeats [`sis_derangement`] until it succeeds; returns the derangement and
/// the number of attempts (≥ 1).
pub fn sis_retry<R: RandomSource + ?Sized>(n: usize, rng: &mut R) -> Result<(Permutation, u64)> {
    let mut sampler = SisSampler::new(n)?;
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        if sampler.sample(rng).0 {
            return Ok((
                Permutation::from_zero_based_unchecked(sampler.current().to_vec()),
                attempts,
            ));
        }
    }
}
