//! One-line permutations and their cycle structure.
//!
//! Labels are stored 0-based internally. Everything that crosses the I/O
//! boundary (parsing, [`Display`](std::fmt::Display), [`Permutation::image`],
//! [`Permutation::one_line`], the cycles of a [`CycleDecomposition`]) uses
//! 1-based labels.

use std::fmt;
use std::str::FromStr;

use crate::combinatorics::CycleType;
use crate::error::{Error, Result};

/// Largest supported permutation length.
pub const MAX_LEN: usize = 1 << 24;

/// A bijection of `{1, ..., n}` stored in one-line form.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Permutation {
    map: Vec<u32>,
}

impl Permutation {
    /// Builds a permutation from 1-based labels, e.g. `[2, 3, 4, 1]`.
    pub fn from_one_line(labels: &[usize]) -> Result<Self> {
        let n = labels.len();
        check_len(n)?;
        let mut map = Vec::with_capacity(n);
        for &label in labels {
            if label == 0 || label > n {
                return Err(Error::InvalidPermutation(format!(
                    "label {label} is outside 1..={n}"
                )));
            }
            map.push((label - 1) as u32);
        }
        Self::from_zero_based(map)
    }

    /// Builds a permutation from 0-based images, validating bijectivity.
    pub fn from_zero_based(map: Vec<u32>) -> Result<Self> {
        let n = map.len();
        check_len(n)?;
        if let Some(&v) = map.iter().find(|&&v| v as usize >= n) {
            return Err(Error::InvalidPermutation(format!(
                "label {} is outside 1..={n}",
                v as usize + 1
            )));
        }
        let mut seen = vec![false; n];
        for &v in &map {
            let v = v as usize;
            if seen[v] {
                let mut present = vec![false; n];
                for &x in &map {
                    present[x as usize] = true;
                }
                let msg = match present.iter().position(|&p| !p) {
                    Some(m) => format!(
                        "label {} is duplicated and label {} is missing",
                        v + 1,
                        m + 1
                    ),
                    None => format!("label {} is duplicated", v + 1),
                };
                return Err(Error::InvalidPermutation(msg));
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    /// Wraps a map already known to be a bijection.
    pub(crate) fn from_zero_based_unchecked(map: Vec<u32>) -> Self {
        debug_assert!(Self::from_zero_based(map.clone()).is_ok());
        Permutation { map }
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n as u32).collect(),
        }
    }

    /// The cyclic derangement `2 3 ... n 1`.
    pub fn cyclic(n: usize) -> Self {
        Permutation {
            map: (0..n as u32).map(|i| (i + 1) % n as u32).collect(),
        }
    }

    /// The fixed-point-free involution `(1 2)(3 4)...(n-1 n)`, i.e. `2 1 4 3 ...`.
    ///
    /// Returns `None` for odd `n`.
    pub fn adjacent_involution(n: usize) -> Option<Self> {
        if n % 2 != 0 {
            return None;
        }
        Some(Permutation {
            map: (0..n as u32).map(|i| i ^ 1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `σ(i)` for a 1-based index, as a 1-based label.
    pub fn image(&self, i: usize) -> usize {
        self.map[i - 1] as usize + 1
    }

    pub fn as_zero_based(&self) -> &[u32] {
        &self.map
    }

    pub fn into_zero_based(self) -> Vec<u32> {
        self.map
    }

    /// The 1-based one-line form `σ₁ ... σₙ`.
    pub fn one_line(&self) -> Vec<usize> {
        self.map.iter().map(|&v| v as usize + 1).collect()
    }

    pub fn is_derangement(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| v as usize != i)
    }

    /// True iff `σ² = id` and `σ` has no fixed point.
    pub fn is_fixed_point_free_involution(&self) -> bool {
        self.map
            .iter()
            .enumerate()
            .all(|(i, &v)| v as usize != i && self.map[v as usize] as usize == i)
    }

    /// `r = p ∘ q`, i.e. `r(i) = p(q(i))`.
    pub fn compose(&self, q: &Permutation) -> Result<Permutation> {
        if self.len() != q.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: q.len(),
            });
        }
        Ok(Permutation {
            map: q.map.iter().map(|&qi| self.map[qi as usize]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v as usize] = i as u32;
        }
        Permutation { map: inv }
    }

    /// Number of cycles, without materialising them.
    pub fn cycle_count(&self) -> usize {
        cycle_count_of(&self.map)
    }

    /// Full cycle decomposition by a single visited-mark sweep.
    pub fn decompose(&self) -> CycleDecomposition {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        let mut counts = vec![0usize; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i + 1);
                i = self.map[i] as usize;
            }
            counts[cycle.len() - 1] += 1;
            cycles.push(cycle);
        }
        let cycle_type = CycleType::new(n, counts).expect("cycle lengths always sum to n");
        CycleDecomposition { cycles, cycle_type }
    }
}

/// Cycle count of a raw 0-based map. Allocates one mark vector.
pub(crate) fn cycle_count_of(map: &[u32]) -> usize {
    let mut seen = vec![false; map.len()];
    let mut count = 0;
    for start in 0..map.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = map[i] as usize;
        }
    }
    count
}

fn check_len(n: usize) -> Result<()> {
    if n > MAX_LEN {
        return Err(Error::out_of_range("n", n, format!("n <= {MAX_LEN}")));
    }
    Ok(())
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &v) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", v + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses space-separated 1-based labels such as `"2 3 4 1"`.
    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| {
                    Error::InvalidPermutation(format!("`{tok}` is not a positive integer label"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_one_line(&labels)
    }
}

/// Disjoint cycles of a permutation, in order of their smallest element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleDecomposition {
    /// Each cycle as 1-based indices `i₁ ... i_k` with `σ(i₁) = i₂`, ...
    pub cycles: Vec<Vec<usize>>,
    pub cycle_type: CycleType,
}

impl CycleDecomposition {
    pub fn count(&self) -> usize {
        self.cycles.len()
    }

    /// Rebuilds the permutation by multiplying out the cycles.
    pub fn to_permutation(&self) -> Permutation {
        let n = self.cycle_type.n();
        let mut map = vec![0u32; n];
        for cycle in &self.cycles {
            for (pos, &i) in cycle.iter().enumerate() {
                let next = cycle[(pos + 1) % cycle.len()];
                map[i - 1] = (next - 1) as u32;
            }
        }
        Permutation::from_zero_based_unchecked(map)
    }
}
