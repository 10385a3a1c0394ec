use std::io::Write;
use std::time::Instant;

use serde_json::{json, Value};

use super::checkpoint::{Checkpointer, Unit};
use super::output::{write_csv, write_json, write_preamble, Report, Table};
use super::{Cli, Command, Format};
use crate::combinatorics::{
    exact_cycle_counts, normal_approximation_params, perfect_matching_count,
    perfect_matching_probability, rencontres, ProbabilityMode,
};
use crate::error::{Error, Result};
use crate::permutation::{cycle_count_of, Permutation};
use crate::rng::Xoshiro256Plus;
use crate::samplers::{Algorithm, Generator, MixSpec, SisSampler};
use crate::statistics::{
    chi_square_gof, default_epsilon, default_max_t, fit_mixing_law, mixing_time_parallel,
    reference_distribution, repeat_collision_check_with, split_quota, sqrt_n_log_n2, tv_distance,
    unit_constant_exponent, uniformity_experiment_parallel, EmpiricalMeasure, FailureReport,
    UNIFORMITY_RANGE,
};

pub const MIN_TABLE1_COUNT: u64 = 10_000;
pub const MIN_MIXING_RUNS: u64 = 1_000;
pub const MIN_FAILURE_SAMPLES: u64 = 10_000;

pub(super) fn execute(cli: &Cli, seed: u64, out: &mut dyn Write) -> Result<()> {
    let started = Instant::now();
    let workers = cli.workers;
    let mut report = match &cli.command {
        Command::Exact { n } => exact(*n, seed, workers)?,
        Command::Sample {
            algorithm,
            n,
            count,
            mix,
        } => {
            let algorithm = Algorithm::parse(algorithm, *mix)?;
            if cli.format == Format::Lines {
                return sample_lines(algorithm, *n, *count, *mix, seed, workers, out);
            }
            sample(algorithm, *n, *count, *mix, seed, workers)?
        }
        Command::Table1 {
            n,
            count,
            mix_list,
            checkpoint,
            checkpoint_every,
        } => {
            let cp = Checkpointer {
                path: checkpoint.clone(),
                fingerprint: String::new(),
                every: *checkpoint_every,
            };
            table1(*n, *count, mix_list, seed, workers, cp)?
        }
        Command::Mixing {
            n_list,
            runs,
            epsilon,
            max_t,
            convention,
            no_trajectory,
        } => {
            let eps = epsilon.unwrap_or_else(default_epsilon);
            let mut r = Report::new("mixing", Some(seed), workers);
            mixing(&mut r, n_list, *runs, eps, *max_t, *convention, !no_trajectory)?;
            r
        }
        Command::Failure {
            n_list,
            count,
            checkpoint,
            checkpoint_every,
        } => {
            let cp = Checkpointer {
                path: checkpoint.clone(),
                fingerprint: String::new(),
                every: *checkpoint_every,
            };
            failure(n_list, *count, seed, workers, cp)?
        }
        Command::Uniformity {
            n,
            multiplier,
            algorithm,
            mix,
        } => uniformity(*n, *multiplier, Algorithm::parse(algorithm, *mix)?, *mix, seed, workers)?,
        Command::Collisions {
            n,
            count,
            algorithm,
            mix,
        } => collisions(*n, *count, Algorithm::parse(algorithm, *mix)?, *mix, seed, workers)?,
    };
    match cli.format {
        Format::Csv => write_csv(&report, out),
        Format::Json => {
            report.wall_time = Some(started.elapsed().as_secs_f64());
            write_json(&report, out)
        }
        Format::Lines => unreachable!("rejected before dispatch"),
    }
}

fn exact(n: usize, seed: u64, workers: usize) -> Result<Report> {
    let counts = exact_cycle_counts(n)?;
    let nu = counts.distribution()?;
    let mut r = Report::new("exact", Some(seed), workers);
    r.set("n", n);
    let mut t = Table::new("exact", &["k", "count", "probability"]);
    for (i, c) in counts.by_cycles.iter().enumerate() {
        t.push(vec![json!(i + 1), json!(c.to_string()), json!(nu.prob(i + 1))]);
    }
    r.tables.push(t);

    let normal = normal_approximation_params(n)?;
    let (pm, pm_exact, pm_asym) = if n % 2 == 0 {
        let count = perfect_matching_count(n)?.to_string();
        if n >= 4 {
            (
                json!(count),
                json!(perfect_matching_probability(n, ProbabilityMode::Exact)?),
                json!(perfect_matching_probability(n, ProbabilityMode::Asymptotic)?),
            )
        } else {
            (json!(count), json!(1.0), Value::Null)
        }
    } else {
        (Value::Null, Value::Null, Value::Null)
    };
    let mut s = Table::new(
        "summary",
        &[
            "n",
            "derangements",
            "mean",
            "sd",
            "normal_mean",
            "normal_sd",
            "perfect_matchings",
            "perfect_matching_probability",
            "perfect_matching_probability_asymptotic",
        ],
    );
    s.push(vec![
        json!(n),
        json!(counts.total.to_string()),
        json!(normal.exact_mean),
        json!(normal.exact_sd),
        json!(normal.log_mean),
        json!(normal.log_sd),
        pm,
        pm_exact,
        pm_asym,
    ]);
    r.tables.push(s);
    Ok(r)
}

fn sample_config(r: &mut Report, algorithm: Algorithm, n: usize, count: u64, mix: MixSpec) {
    r.set("algorithm", algorithm.name());
    r.set("n", n);
    r.set("count", count);
    if matches!(algorithm, Algorithm::Walk(_) | Algorithm::Matching(_)) {
        r.set("mix", mix.resolve(n));
    }
}

fn sample_generator(algorithm: Algorithm, n: usize, count: u64) -> Result<Generator> {
    if count == 0 {
        return Err(Error::out_of_range("count", count, "count >= 1"));
    }
    Generator::new(algorithm, n)
}

/// Samples always come from worker stream 0 so the output does not depend
/// on `--workers`.
fn sample_lines(
    algorithm: Algorithm,
    n: usize,
    count: u64,
    mix: MixSpec,
    seed: u64,
    workers: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let mut gen = sample_generator(algorithm, n, count)?;
    let mut r = Report::new("sample", Some(seed), workers);
    sample_config(&mut r, algorithm, n, count, mix);
    write_preamble(&r, out)?;
    let mut rng = Xoshiro256Plus::derive_stream(seed, 0);
    let mut line = String::new();
    for _ in 0..count {
        line.clear();
        for (i, &v) in gen.next(&mut rng).iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(itoa(v as usize + 1).as_str());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    writeln!(out, "# attempts: {}", gen.attempts())?;
    writeln!(
        out,
        "# completed/attempted: {}",
        count as f64 / gen.attempts() as f64
    )?;
    Ok(())
}

fn itoa(v: usize) -> String {
    v.to_string()
}

fn sample(
    algorithm: Algorithm,
    n: usize,
    count: u64,
    mix: MixSpec,
    seed: u64,
    workers: usize,
) -> Result<Report> {
    let mut gen = sample_generator(algorithm, n, count)?;
    let mut r = Report::new("sample", Some(seed), workers);
    sample_config(&mut r, algorithm, n, count, mix);
    let mut rng = Xoshiro256Plus::derive_stream(seed, 0);
    let mut t = Table::new("samples", &["index", "permutation", "cycles"]);
    for i in 0..count {
        let map = gen.next(&mut rng);
        let perm = Permutation::from_zero_based_unchecked(map.to_vec());
        t.push(vec![json!(i + 1), json!(perm.to_string()), json!(cycle_count_of(map))]);
    }
    r.tables.push(t);
    let mut s = Table::new("summary", &["algorithm", "count", "attempts", "completed_ratio"]);
    s.push(vec![
        json!(algorithm.name()),
        json!(count),
        json!(gen.attempts()),
        json!(count as f64 / gen.attempts() as f64),
    ]);
    r.tables.push(s);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
struct ColumnPartial {
    column: usize,
    measure: EmpiricalMeasure,
}

fn table1(
    n: usize,
    count: u64,
    mix_list: &[MixSpec],
    seed: u64,
    workers: usize,
    mut cp: Checkpointer,
) -> Result<Report> {
    if count < MIN_TABLE1_COUNT {
        return Err(Error::out_of_range("count", count, format!("count >= {MIN_TABLE1_COUNT}")));
    }
    let mut columns: Vec<(String, Algorithm)> = mix_list
        .iter()
        .map(|&m| (format!("t_mix_{m}"), Algorithm::Walk(m)))
        .collect();
    columns.push(("s".into(), Algorithm::Sis));
    for (_, a) in &columns {
        Generator::new(*a, n)?;
    }
    let nu = reference_distribution(n)?;
    let mixes: Vec<String> = mix_list.iter().map(|m| m.to_string()).collect();
    cp.fingerprint = format!(
        "table1 n={n} count={count} mix_list={} seed={seed} workers={workers}",
        mixes.join(",")
    );

    let mut fresh = Vec::new();
    for c in 0..columns.len() {
        let master = Xoshiro256Plus::stream_seed(seed, c as u64);
        for (w, quota) in split_quota(count, workers).into_iter().enumerate() {
            fresh.push(Unit::new(
                format!("{}/{w}", columns[c].0),
                Xoshiro256Plus::derive_stream(master, w as u64),
                quota,
                ColumnPartial {
                    column: c,
                    measure: EmpiricalMeasure::new(n)?,
                },
            ));
        }
    }
    let algorithms: Vec<Algorithm> = columns.iter().map(|c| c.1).collect();
    let units = cp.run(fresh, |u: &mut Unit<ColumnPartial>, k| {
        let mut gen = Generator::new(algorithms[u.partial.column], n).expect("validated");
        for _ in 0..k {
            u.partial.measure.record_map(gen.next(&mut u.rng));
        }
        u.attempts += gen.attempts();
    })?;

    let mut measures: Vec<EmpiricalMeasure> =
        (0..columns.len()).map(|_| EmpiricalMeasure::new(n)).collect::<Result<_>>()?;
    let mut attempts = vec![0u64; columns.len()];
    for u in &units {
        measures[u.partial.column].merge(&u.partial.measure)?;
        attempts[u.partial.column] += u.attempts;
    }

    let mut r = Report::new("table1", Some(seed), workers);
    r.set("n", n);
    r.set("count", count);
    r.set("mix_list", mixes.join(","));
    if let Some(p) = &cp.path {
        r.set("checkpoint", p.display().to_string());
    }

    let mut header: Vec<&str> = vec!["k"];
    header.extend(columns.iter().map(|c| c.0.as_str()));
    header.push("exact");
    let mut t = Table::new("table1", &header);
    for k in 1..=n / 2 {
        let mut row = vec![json!(k)];
        row.extend(measures.iter().map(|m| json!(m.prob(k))));
        row.push(json!(nu.prob(k)));
        t.push(row);
    }
    r.tables.push(t);

    let mut s = Table::new(
        "columns",
        &[
            "column",
            "algorithm",
            "mix",
            "samples",
            "attempts",
            "completed_ratio",
            "tv_distance",
            "chi_square",
            "dof",
            "p_value",
            "k1_excess_sigma",
        ],
    );
    for (c, (name, algo)) in columns.iter().enumerate() {
        let m = &measures[c];
        let gof = chi_square_gof(m, &nu)?;
        let mix = match algo {
            Algorithm::Walk(spec) => json!(spec.resolve(n)),
            _ => Value::Null,
        };
        let se = m.std_error(1);
        let excess = if se > 0.0 {
            json!((m.prob(1) - nu.prob(1)) / se)
        } else {
            Value::Null
        };
        s.push(vec![
            json!(name),
            json!(algo.name()),
            mix,
            json!(m.total()),
            json!(attempts[c]),
            json!(m.total() as f64 / attempts[c] as f64),
            json!(tv_distance(m, &nu)?),
            json!(gof.statistic),
            json!(gof.dof),
            json!(gof.p_value),
            excess,
        ]);
    }
    r.tables.push(s);
    Ok(r)
}

fn mixing(
    r: &mut Report,
    n_list: &[usize],
    runs: u64,
    epsilon: f64,
    max_t: Option<usize>,
    convention: crate::statistics::MixingConvention,
    with_trajectory: bool,
) -> Result<()> {
    if runs < MIN_MIXING_RUNS {
        return Err(Error::out_of_range("runs", runs, format!("runs >= {MIN_MIXING_RUNS}")));
    }
    if n_list.is_empty() {
        return Err(Error::Usage("--n-list is empty".into()));
    }
    let seed = r.seed.expect("resolved seed");
    let workers = r.workers;
    r.set(
        "n_list",
        n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    r.set("runs", runs);
    r.set("epsilon", epsilon);
    r.set("convention", convention.to_string());
    if let Some(m) = max_t {
        r.set("max_t", m);
    }

    let mut summary = Table::new(
        "mixing",
        &["n", "runs", "max_t", "t_mix", "mixed", "sqrt_n_log_n2", "exponent_c1"],
    );
    let mut trajectory = Table::new("trajectory", &["n", "t", "tv"]);
    let mut points = Vec::new();
    for &n in n_list {
        let horizon = max_t.unwrap_or_else(|| default_max_t(n));
        let res = mixing_time_parallel(
            n,
            epsilon,
            runs,
            horizon,
            convention,
            Xoshiro256Plus::stream_seed(seed, n as u64),
            workers,
        )?;
        if let Some(t) = res.t_mix {
            points.push((n, t as f64));
        } else {
            eprintln!("derange: n = {n} did not mix within {horizon} steps");
        }
        summary.push(vec![
            json!(n),
            json!(runs),
            json!(horizon),
            res.t_mix.map_or(Value::Null, |t| json!(t)),
            json!(res.mixed()),
            json!(sqrt_n_log_n2(n)),
            res.t_mix
                .map_or(Value::Null, |t| json!(unit_constant_exponent(n, t as f64))),
        ]);
        if with_trajectory {
            for (t, d) in res.trajectory.iter().enumerate() {
                trajectory.push(vec![json!(n), json!(t), json!(d)]);
            }
        }
    }
    r.tables.push(summary);
    if points.len() >= 2 {
        let fit = fit_mixing_law(&points)?;
        let mut f = Table::new("fit", &["a", "c", "residual", "points"]);
        f.push(vec![json!(fit.a), json!(fit.c), json!(fit.residual), json!(points.len())]);
        r.tables.push(f);
    }
    if with_trajectory {
        r.tables.push(trajectory);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
struct FailurePartial {
    n: usize,
    failures: u64,
}

/// Uses the same streams as
/// [`failure_experiment_parallel`](crate::statistics::failure_experiment_parallel).
fn failure(
    n_list: &[usize],
    count: u64,
    seed: u64,
    workers: usize,
    mut cp: Checkpointer,
) -> Result<Report> {
    if count < MIN_FAILURE_SAMPLES {
        return Err(Error::out_of_range("count", count, format!("count >= {MIN_FAILURE_SAMPLES}")));
    }
    if n_list.is_empty() {
        return Err(Error::Usage("--n-list is empty".into()));
    }
    for &n in n_list {
        SisSampler::new(n)?;
    }
    let list = n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
    cp.fingerprint = format!("failure n_list={list} count={count} seed={seed} workers={workers}");
    let mut fresh = Vec::new();
    for &n in n_list {
        let master = Xoshiro256Plus::stream_seed(seed, n as u64);
        for (w, quota) in split_quota(count, workers).into_iter().enumerate() {
            fresh.push(Unit::new(
                format!("{n}/{w}"),
                Xoshiro256Plus::derive_stream(master, w as u64),
                quota,
                FailurePartial { n, failures: 0 },
            ));
        }
    }
    let units = cp.run(fresh, |u: &mut Unit<FailurePartial>, k| {
        let mut s = SisSampler::new(u.partial.n).expect("validated");
        for _ in 0..k {
            if !s.sample(&mut u.rng).0 {
                u.partial.failures += 1;
            }
        }
        u.attempts += k;
    })?;

    let mut r = Report::new("failure", Some(seed), workers);
    r.set("n_list", list);
    r.set("count", count);
    if let Some(p) = &cp.path {
        r.set("checkpoint", p.display().to_string());
    }
    let mut t = Table::new(
        "failure",
        &["n", "samples", "failures", "rate", "std_error", "one_over_n", "refined_bound"],
    );
    for &n in n_list {
        let failures = units
            .iter()
            .filter(|u| u.partial.n == n)
            .map(|u| u.partial.failures)
            .sum();
        let rep = FailureReport::from_counts(n, count, failures);
        t.push(vec![
            json!(n),
            json!(rep.samples),
            json!(rep.failures),
            json!(rep.rate),
            json!(rep.std_error),
            json!(rep.bound_1_over_n),
            rep.bound_refined.map_or(Value::Null, |b| json!(b)),
        ]);
    }
    r.tables.push(t);
    Ok(r)
}

fn uniformity(
    n: usize,
    multiplier: u64,
    algorithm: Algorithm,
    mix: MixSpec,
    seed: u64,
    workers: usize,
) -> Result<Report> {
    if !UNIFORMITY_RANGE.contains(&n) {
        return Err(Error::out_of_range(
            "n",
            n,
            format!("{} <= n <= {}", UNIFORMITY_RANGE.start(), UNIFORMITY_RANGE.end()),
        ));
    }
    let rep = uniformity_experiment_parallel(n, multiplier, algorithm, seed, workers)?;
    let mut r = Report::new("uniformity", Some(seed), workers);
    r.set("n", n);
    r.set("multiplier", multiplier);
    r.set("algorithm", algorithm.name());
    if matches!(algorithm, Algorithm::Walk(_) | Algorithm::Matching(_)) {
        r.set("mix", mix.resolve(n));
    }
    let mut s = Table::new(
        "summary",
        &[
            "n",
            "algorithm",
            "multiplier",
            "derangements",
            "samples",
            "attempts",
            "mean",
            "sd",
            "min",
            "max",
            "covered",
            "full_coverage",
        ],
    );
    s.push(vec![
        json!(n),
        json!(rep.algorithm),
        json!(multiplier),
        json!(rep.derangements),
        json!(rep.samples),
        json!(rep.attempts),
        json!(rep.mean),
        json!(rep.sd),
        json!(rep.min),
        json!(rep.max),
        json!(rep.covered),
        json!(rep.full_coverage),
    ]);
    r.tables.push(s);
    let mut h = Table::new("histogram", &["lo", "hi", "derangements"]);
    for b in &rep.histogram {
        h.push(vec![json!(b.lo), json!(b.hi), json!(b.derangements)]);
    }
    r.tables.push(h);
    Ok(r)
}

/// Single stream (worker 0), like `sample`.
fn collisions(
    n: usize,
    count: u64,
    algorithm: Algorithm,
    mix: MixSpec,
    seed: u64,
    workers: usize,
) -> Result<Report> {
    if count == 0 {
        return Err(Error::out_of_range("count", count, "count >= 1"));
    }
    let mut rng = Xoshiro256Plus::derive_stream(seed, 0);
    let rep = repeat_collision_check_with(algorithm, n, count, &mut rng)?;
    let d = num_traits::ToPrimitive::to_f64(&rencontres(n)).unwrap_or(f64::INFINITY);
    let s = count as f64;
    let mut r = Report::new("collisions", Some(seed), workers);
    r.set("n", n);
    r.set("count", count);
    r.set("algorithm", algorithm.name());
    if matches!(algorithm, Algorithm::Walk(_) | Algorithm::Matching(_)) {
        r.set("mix", mix.resolve(n));
    }
    let mut t = Table::new(
        "collisions",
        &["n", "algorithm", "samples", "distinct", "collisions", "birthday_expected"],
    );
    t.push(vec![
        json!(n),
        json!(algorithm.name()),
        json!(rep.samples),
        json!(rep.distinct),
        json!(rep.collisions),
        json!(s * (s - 1.0) / (2.0 * d)),
    ]);
    r.tables.push(t);
    Ok(r)
}
