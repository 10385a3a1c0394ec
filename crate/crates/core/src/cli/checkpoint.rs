use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Samples between checkpoints, per unit of work.
pub const CHECKPOINT_EVERY: u64 = 10_000_000;

/// One independently seeded slice of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unit<P> {
    pub label: String,
    pub rng: RngState,
    pub target: u64,
    pub done: u64,
    pub attempts: u64,
    pub partial: P,
}

impl<P> Unit<P> {
    pub fn new(label: impl Into<String>, rng: RngState, target: u64, partial: P) -> Self {
        Unit {
            label: label.into(),
            rng,
            target,
            done: 0,
            attempts: 0,
            partial,
        }
    }

    pub fn finished(&self) -> bool {
        self.done >= self.target
    }
}

#[derive(Deserialize)]
struct CheckpointFile<P> {
    fingerprint: String,
    units: Vec<Unit<P>>,
}

#[derive(Serialize)]
struct CheckpointRef<'a, P> {
    fingerprint: &'a str,
    units: &'a [Unit<P>],
}

/// Advances units in rounds of at most `every` samples each and, with a
/// path, saves all units (partial counts and generator states) after every
/// round. Results do not depend on `every`.
#[derive(Clone, Debug)]
pub struct Checkpointer {
    pub path: Option<PathBuf>,
    pub fingerprint: String,
    pub every: u64,
}

impl Checkpointer {
    /// Units saved by an earlier run with the same fingerprint, if any.
    pub fn load<P: DeserializeOwned>(&self) -> Result<Option<Vec<Unit<P>>>> {
        let Some(path) = &self.path else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let file: CheckpointFile<P> = serde_json::from_slice(&fs::read(path)?)?;
        if file.fingerprint != self.fingerprint {
            return Err(Error::Usage(format!(
                "checkpoint {} belongs to a different configuration ({})",
                path.display(),
                file.fingerprint
            )));
        }
        Ok(Some(file.units))
    }

    fn save<P: Serialize>(&self, units: &[Unit<P>]) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let file = CheckpointRef {
            fingerprint: &self.fingerprint,
            units,
        };
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(&file)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Runs at most `max_rounds` rounds; returns whether every unit finished.
    pub fn run_rounds<P, F>(
        &self,
        units: &mut [Unit<P>],
        advance: &F,
        max_rounds: usize,
    ) -> Result<bool>
    where
        P: Send + Serialize,
        F: Fn(&mut Unit<P>, u64) + Sync,
    {
        let every = self.every.max(1);
        for _ in 0..max_rounds {
            if units.iter().all(Unit::finished) {
                return Ok(true);
            }
            units.par_iter_mut().for_each(|u| {
                let k = every.min(u.target - u.done);
                if k > 0 {
                    advance(u, k);
                    u.done += k;
                }
            });
            self.save(units)?;
        }
        Ok(units.iter().all(Unit::finished))
    }

    /// Resumes from the checkpoint when present, otherwise starts from
    /// `fresh`, and runs to completion.
    pub fn run<P, F>(&self, fresh: Vec<Unit<P>>, advance: F) -> Result<Vec<Unit<P>>>
    where
        P: Send + Serialize + DeserializeOwned,
        F: Fn(&mut Unit<P>, u64) + Sync,
    {
        let mut units = self.load()?.unwrap_or(fresh);
        self.run_rounds(&mut units, &advance, usize::MAX)?;
        Ok(units)
    }
}
