//! Grids of runs with repetitions, executed on a bounded worker pool.
//!
//! An [`Experiment`] has two kinds of axes. *Series* overrides each produce
//! one curve. *Averaged* overrides (and, for procedural environment families,
//! the environment seeds) are pooled: within one repetition their runs are
//! averaged, and the standard error is taken across repetitions.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{write_run, RunConfig, RunLog};
use crate::error::{Error, Result};
use crate::eval::{aggregate_curves, mean_stderr, CurvePoint};
use crate::explorer;

/// Environment seeds pooled for the procedurally generated families.
pub const PROCEDURAL_ENV_SEEDS: u64 = 10;

/// Ordered `(key, value)` pairs applied to a [`RunConfig`].
pub type Overrides = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Experiment {
    pub name: String,
    pub base: Overrides,
    pub series: Vec<Overrides>,
    pub averaged: Vec<Overrides>,
}

impl Experiment {
    pub fn new(name: impl Into<String>) -> Self {
        Experiment {
            name: name.into(),
            base: Vec::new(),
            series: vec![Vec::new()],
            averaged: vec![Vec::new()],
        }
    }

    pub fn with_base(mut self, key: &str, value: &str) -> Self {
        self.base.push((key.to_string(), value.to_string()));
        self
    }

    /// Multiplies the series by one more axis.
    pub fn series_axis(mut self, key: &str, values: &[&str]) -> Self {
        self.series = product(&self.series, key, values);
        self
    }

    /// Multiplies the averaged set by one more axis.
    pub fn averaged_axis(mut self, key: &str, values: &[&str]) -> Self {
        self.averaged = product(&self.averaged, key, values);
        self
    }

    /// Appends the series of `other` (its base and averaged sets are ignored).
    pub fn union_series(mut self, other: Experiment) -> Self {
        if self.series == [Vec::<(String, String)>::new()] {
            self.series.clear();
        }
        self.series.extend(other.series);
        self
    }

    /// Parses a grid file.
    ///
    /// ```text
    /// budget = 50000              # single value: applies to every run
    /// pe_mode = always, off       # several values: one curve each
    /// epsilon ~ 0, 0.1, 0.3       # pooled within each repetition
    /// ```
    pub fn parse_grid(name: &str, text: &str) -> Result<Experiment> {
        let mut exp = Experiment::new(name);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: name.to_string(),
                line: n + 1,
                msg,
            };
            let (key, values, pooled) = match (line.split_once('='), line.split_once('~')) {
                (Some((k, v)), None) => (k.trim(), v, false),
                (None, Some((k, v))) => (k.trim(), v, true),
                _ => return Err(err("expected `key = values` or `key ~ values`".into())),
            };
            if !super::KEYS.contains(&key) {
                return Err(err(format!("unknown key {key:?}")));
            }
            let values: Vec<&str> = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .collect();
            if values.is_empty() {
                return Err(err(format!("{key} has no values")));
            }
            exp = match (pooled, values.len()) {
                (true, _) => exp.averaged_axis(key, &values),
                (false, 1) => exp.with_base(key, values[0]),
                (false, _) => exp.series_axis(key, &values),
            };
        }
        Ok(exp)
    }
}

fn product(sets: &[Overrides], key: &str, values: &[&str]) -> Vec<Overrides> {
    sets.iter()
        .flat_map(|set| {
            values.iter().map(move |v| {
                let mut next = set.clone();
                next.push((key.to_string(), v.to_string()));
                next
            })
        })
        .collect()
}

fn label(overrides: &[(String, String)]) -> String {
    if overrides.is_empty() {
        return "base".to_string();
    }
    overrides
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn slug(overrides: &[(String, String)]) -> String {
    if overrides.is_empty() {
        return "base".to_string();
    }
    overrides
        .iter()
        .map(|(k, v)| format!("{k}-{v}"))
        .collect::<Vec<_>>()
        .join("_")
}

fn apply(config: &mut RunConfig, overrides: &[(String, String)]) -> Result<()> {
    overrides.iter().try_for_each(|(k, v)| config.set(k, v))
}

/// Stable per-run seed: the first eight bytes of a SHA-256 digest over the
/// sweep seed and everything that identifies the run.
pub fn derive_seed(
    sweep_seed: u64,
    experiment: &str,
    series: &[(String, String)],
    averaged: &[(String, String)],
    repetition: usize,
) -> u64 {
    let mut key = String::new();
    let _ = write!(
        key,
        "{sweep_seed}|{experiment}|{}|{}|rep={repetition}",
        label(series),
        label(averaged)
    );
    let digest = Sha256::digest(key.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub base: RunConfig,
    pub repetitions: usize,
    pub jobs: usize,
    pub sweep_seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            base: RunConfig::default(),
            repetitions: 5,
            jobs: 1,
            sweep_seed: 0,
            out: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub label: String,
    pub overrides: Overrides,
    pub curve: Vec<CurvePoint>,
    /// Runs grouped by repetition.
    pub runs: Vec<Vec<RunLog>>,
}

impl SeriesResult {
    pub fn final_point(&self) -> CurvePoint {
        *self
            .curve
            .last()
            .expect("series has at least one checkpoint")
    }

    /// Mean and standard error of a per-run quantity, pooled within each
    /// repetition first.
    pub fn stat(&self, f: impl Fn(&RunLog) -> f64) -> (f64, f64) {
        let per_rep: Vec<f64> = self
            .runs
            .iter()
            .map(|runs| runs.iter().map(&f).sum::<f64>() / runs.len() as f64)
            .collect();
        mean_stderr(&per_rep)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub name: String,
    pub series: Vec<SeriesResult>,
}

impl ExperimentResult {
    pub fn series(&self, label: &str) -> Option<&SeriesResult> {
        self.series.iter().find(|s| s.label == label)
    }
}

struct Job {
    exp: usize,
    series: usize,
    rep: usize,
    config: RunConfig,
    dir: Option<PathBuf>,
}

/// Runs every experiment, writing per-run files plus `aggregate.csv` and
/// `totals.csv` per experiment when `opts.out` is set.
///
/// Results do not depend on `opts.jobs` or on scheduling order.
pub fn sweep(experiments: &[Experiment], opts: &SweepOptions) -> Result<Vec<ExperimentResult>> {
    if opts.repetitions == 0 {
        return Err(Error::config("repetitions must be at least 1"));
    }
    let mut jobs = Vec::new();
    for (ei, exp) in experiments.iter().enumerate() {
        for (si, series) in exp.series.iter().enumerate() {
            let mut config = opts.base.clone();
            apply(&mut config, &exp.base)?;
            apply(&mut config, series)?;
            let averaged = pooled_sets(exp, &config);
            for rep in 0..opts.repetitions {
                for avg in &averaged {
                    let mut c = config.clone();
                    apply(&mut c, avg)?;
                    c.master_seed = derive_seed(opts.sweep_seed, &exp.name, series, avg, rep);
                    c.validate().map_err(|e| {
                        Error::config(format!("{} / {}: {e}", exp.name, label(series)))
                    })?;
                    let dir = opts.out.as_ref().map(|out| {
                        out.join(&exp.name)
                            .join(slug(series))
                            .join(format!("rep{rep}"))
                            .join(slug(avg))
                    });
                    jobs.push(Job {
                        exp: ei,
                        series: si,
                        rep,
                        config: c,
                        dir,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let logs: Vec<RunLog> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let map = job.config.env_family.build(job.config.env_seed)?;
                let log = explorer::train_on(&map, &job.config)?;
                if let Some(dir) = &job.dir {
                    write_run(&log, &map, dir)?;
                }
                Ok(log)
            })
            .collect::<Result<_>>()
    })?;

    let mut results: Vec<ExperimentResult> = experiments
        .iter()
        .map(|exp| ExperimentResult {
            name: exp.name.clone(),
            series: exp
                .series
                .iter()
                .map(|s| SeriesResult {
                    label: label(s),
                    overrides: s.clone(),
                    curve: Vec::new(),
                    runs: vec![Vec::new(); opts.repetitions],
                })
                .collect(),
        })
        .collect();
    for (job, log) in jobs.iter().zip(logs) {
        results[job.exp].series[job.series].runs[job.rep].push(log);
    }
    for exp in &mut results {
        for s in &mut exp.series {
            let reps: Vec<Vec<&RunLog>> = s.runs.iter().map(|r| r.iter().collect()).collect();
            s.curve = aggregate_curves(&reps)?;
        }
        if let Some(out) = &opts.out {
            write_aggregate(exp, &out.join(&exp.name))?;
        }
    }
    Ok(results)
}

/// Averaged override sets for one series, with environment seeds folded in
/// for procedural families.
fn pooled_sets(exp: &Experiment, config: &RunConfig) -> Vec<Overrides> {
    if !config.env_family.is_procedural() {
        return exp.averaged.clone();
    }
    let seeds: Vec<String> = (0..PROCEDURAL_ENV_SEEDS).map(|s| s.to_string()).collect();
    let seeds: Vec<&str> = seeds.iter().map(String::as_str).collect();
    product(&exp.averaged, "env_seed", &seeds)
}

fn write_aggregate(exp: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("aggregate.csv"))?);
    writeln!(w, "series,step,mean,stderr")?;
    for s in &exp.series {
        for p in &s.curve {
            writeln!(w, "{},{},{},{}", s.label, p.step, p.mean, p.stderr)?;
        }
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(dir.join("totals.csv"))?);
    writeln!(w, "series,metric,mean,stderr")?;
    for s in &exp.series {
        let metrics: [(&str, (f64, f64)); 4] = [
            ("pe_steps", s.stat(|r| r.counters.pe_steps as f64)),
            (
                "relabel_updates",
                s.stat(|r| r.counters.relabel_updates as f64),
            ),
            (
                "goal_successes",
                s.stat(|r| r.counters.goal_successes as f64),
            ),
            (
                "final_coverage",
                s.stat(|r| r.final_coverage().unwrap_or(0.0)),
            ),
        ];
        for (metric, (mean, se)) in metrics {
            writeln!(w, "{},{metric},{mean},{se}", s.label)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The five research-question experiment sets.
///
/// * `rq1`: post-exploration on and off in all three families (four-rooms
///   pooled over epsilon 0, 0.1 and 0.3).
/// * `rq2`: epsilon sweep with and without post-exploration.
/// * `rq3`: novelty-gated post-exploration over beta.
/// * `rq4`: proportional against fixed post-exploration duration.
/// * `rq5`: post-exploration on and off without episode resets.
pub fn preset(name: &str) -> Result<Vec<Experiment>> {
    let on_off = ["always", "off"];
    let four_rooms = |n: &str| Experiment::new(n).with_base("env_family", "four_rooms");
    Ok(match name {
        "rq1" => vec![
            four_rooms("rq1_four_rooms")
                .series_axis("pe_mode", &on_off)
                .averaged_axis("epsilon", &["0", "0.1", "0.3"]),
            Experiment::new("rq1_lava_crossing")
                .with_base("env_family", "lava_crossing")
                .with_base("budget", "20000")
                .with_base("eval_interval", "500")
                .series_axis("pe_mode", &on_off),
            Experiment::new("rq1_lava_gap")
                .with_base("env_family", "lava_gap")
                .with_base("budget", "5000")
                .with_base("eval_interval", "250")
                .series_axis("pe_mode", &on_off),
        ],
        "rq2" => vec![four_rooms("rq2_epsilon")
            .series_axis("pe_mode", &on_off)
            .series_axis("epsilon", &["0", "0.1", "0.3", "1"])],
        "rq3" => vec![four_rooms("rq3_beta")
            .with_base("pe_mode", "gated")
            .series_axis("beta", &["0", "0.01", "0.05", "1"])],
        "rq4" => vec![four_rooms("rq4_duration")
            .with_base("pe_mode", "always")
            .series_axis("pe_duration", &["proportional"])
            .series_axis("p_pe", &["0.1", "0.5", "0.8"])
            .union_series(
                Experiment::new("")
                    .series_axis("pe_duration", &["fixed"])
                    .series_axis("n_pe", &["10", "15", "20"]),
            )],
        "rq5" => vec![four_rooms("rq5_continuing")
            .with_base("episodic", "false")
            .series_axis("pe_mode", &on_off)],
        other => {
            return Err(Error::config(format!(
                "unknown preset {other:?} (expected rq1..rq5)"
            )))
        }
    })
}
