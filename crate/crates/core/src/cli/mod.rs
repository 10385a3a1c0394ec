//! The `derange` command line.
//!
//! Subcommands write a [`Report`]: CSV (default) starts with `# key: value`
//! lines giving the seed and resolved configuration, followed by one
//! `# table: <name>` section per table, each with its own header row. JSON
//! writes the same content as one object and adds the wall time. `lines`
//! (sample only) writes one permutation per line.

mod checkpoint;
mod commands;
mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use checkpoint::{Checkpointer, Unit, CHECKPOINT_EVERY};
pub use output::{read_csv_tables, to_json, write_csv, write_json, CsvTable, Report, Table};

use crate::error::{Error, Result};
use crate::samplers::MixSpec;
use crate::statistics::MixingConvention;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "DERANGE_SEED";

#[derive(Parser, Debug)]
#[command(name = "derange", version, about = "Random derangements and their cycle statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Master seed; defaults to $DERANGE_SEED, else fresh entropy. Always echoed.
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,

    /// Worker threads; results are reproducible for a fixed seed and worker count.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// One permutation per line (sample only).
    Lines,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact cycle-count distribution of uniform n-derangements.
    Exact {
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Draw derangements with one of the samplers.
    Sample {
        /// t (walk), s (importance sampling), sattolo, reject or matching.
        #[arg(long, default_value = "t")]
        algorithm: String,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value = "10", value_parser = parse_count)]
        count: u64,
        /// Walk length: n, 2n, nlogn or an integer.
        #[arg(long, default_value = "2n")]
        mix: MixSpec,
    },
    /// Empirical cycle-count proportions of the walk and the importance sampler.
    Table1 {
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Samples per column (at least 1e4).
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        count: u64,
        #[arg(long, value_delimiter = ',', default_value = "n,2n")]
        mix_list: Vec<MixSpec>,
        /// Resume from and periodically save to this file.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, hide = true, default_value_t = CHECKPOINT_EVERY, value_parser = parse_count)]
        checkpoint_every: u64,
    },
    /// Mixing time of the walk from the cyclic start, with the power-law fit.
    Mixing {
        #[arg(long = "n-list", alias = "n", value_delimiter = ',', default_value = "64,128")]
        n_list: Vec<usize>,
        /// Independent walks per n (at least 1e3).
        #[arg(long, default_value = "1e4", value_parser = parse_count)]
        runs: u64,
        /// Distance threshold; defaults to 1/(2e).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Attempted transpositions per walk; defaults to max(4n, 64).
        #[arg(long)]
        max_t: Option<usize>,
        /// time-average (per-run time averages, the default) or ensemble (pooled across runs).
        #[arg(long, default_value = "time-average")]
        convention: MixingConvention,
        /// Leave out the per-step trajectory table.
        #[arg(long)]
        no_trajectory: bool,
    },
    /// Failure rate of the importance sampler against 1/n.
    Failure {
        #[arg(long = "n-list", alias = "n", value_delimiter = ',', default_value = "8,16,32,64,128")]
        n_list: Vec<usize>,
        /// Passes per n (at least 1e4).
        #[arg(long, alias = "samples", default_value = "1e6", value_parser = parse_count)]
        count: u64,
        /// Resume from and periodically save to this file.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, hide = true, default_value_t = CHECKPOINT_EVERY, value_parser = parse_count)]
        checkpoint_every: u64,
    },
    /// Occurrence counts of every derangement in a sample of multiplier * d_n.
    Uniformity {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value = "100", value_parser = parse_count)]
        multiplier: u64,
        #[arg(long, default_value = "s")]
        algorithm: String,
        #[arg(long, default_value = "2n")]
        mix: MixSpec,
    },
    /// Count repeated derangements in a large sample.
    Collisions {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        count: u64,
        #[arg(long, default_value = "s")]
        algorithm: String,
        #[arg(long, default_value = "2n")]
        mix: MixSpec,
    },
}

/// Decimal or `0x` hexadecimal.
fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

/// A nonnegative integer, also written like `1e6` or `10_000`.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let t = s.replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    match t.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15 => Ok(v as u64),
        _ => Err(format!("invalid count `{s}`")),
    }
}

fn entropy_seed() -> u64 {
    use std::collections::hash_map::RandomState;
    use std::hash::{BuildHasher, Hasher};
    let mut h = RandomState::new().build_hasher();
    if let Ok(d) = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH) {
        h.write_u128(d.as_nanos());
    }
    h.write_u32(std::process::id());
    h.finish()
}

/// `--seed`, then `$DERANGE_SEED`, then entropy.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_seed(v.trim()).map_err(|e| Error::Usage(format!("{SEED_ENV}: {e}"))),
        Err(_) => Ok(entropy_seed()),
    }
}

/// Runs a parsed command line, writing to `--output` or standard output.
pub fn run(cli: Cli) -> Result<()> {
    if cli.workers == 0 {
        return Err(Error::out_of_range("workers", 0, "workers >= 1"));
    }
    if cli.format == Format::Lines && !matches!(cli.command, Command::Sample { .. }) {
        return Err(Error::Usage("--format lines is only available for `sample`".into()));
    }
    let seed = resolve_seed(cli.seed)?;
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    commands::execute(&cli, seed, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Parses `args` (program name first), runs, and returns the exit code:
/// 0 on success, 1 on usage errors, 2 on internal consistency failures.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("derange: {e}");
            e.exit_code()
        }
    }
}
