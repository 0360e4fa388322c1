use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use postexplore::harness::{self, Experiment, SweepOptions};
use postexplore::{EnvFamily, RunConfig};
use walkdir::WalkDir;

#[derive(Parser)]
#[command(
    name = "postexplore",
    version,
    about = "Goal exploration with adaptive post-exploration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write run.csv, run.json and heat maps.
    Run(RunArgs),
    /// Run a grid of configurations with repetitions and aggregate the curves.
    Sweep(SweepArgs),
    /// Render SVG plots for every aggregate.csv below a directory.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print an environment layout.
    Map {
        #[arg(long, default_value = "four_rooms")]
        family: String,
        #[arg(long, default_value_t = 0)]
        env_seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "POSTEXPLORE_OUT", default_value = "results")]
    out: PathBuf,
    /// Field overrides as `--key value` pairs, e.g. `--epsilon 0.3`.
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--KEY VALUE"
    )]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    preset: Option<String>,
    /// Grid file: `key = a, b` for curves, `key ~ a, b` for pooled values.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, env = "POSTEXPLORE_OUT", default_value = "results")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Base configuration file applied before the grid.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    no_plots: bool,
}

fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            bail!("expected `--key value`, found {arg:?}");
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let value = it
                    .next()
                    .with_context(|| format!("--{key} needs a value"))?;
                (key.to_string(), value.clone())
            }
        };
        out.push((key.replace('-', "_"), value));
    }
    Ok(out)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    })
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = load_config(args.config.as_deref())?;
    for (k, v) in parse_overrides(&args.overrides)? {
        config.set(&k, &v)?;
    }
    config.validate()?;
    let log = harness::run(&config, Some(&args.out))?;
    let c = &log.counters;
    println!(
        "{} steps, {} episodes, {} goals discovered, final coverage {:.4}",
        c.env_steps,
        c.episodes,
        c.goals_discovered,
        log.final_coverage().unwrap_or(0.0)
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut base = load_config(args.config.as_deref())?;
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects key=value, got {kv:?}"))?;
        base.set(k, v)?;
    }
    let experiments = match (&args.preset, &args.grid) {
        (Some(name), _) => harness::preset(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "grid".into());
            vec![Experiment::parse_grid(&name, &text)?]
        }
        (None, None) => bail!("either --preset or --grid is required"),
    };
    let opts = SweepOptions {
        base,
        repetitions: args.reps,
        jobs: args.jobs,
        sweep_seed: args.seed,
        out: Some(args.out.clone()),
    };
    let results = harness::sweep(&experiments, &opts)?;
    for exp in &results {
        println!("{}", exp.name);
        for s in &exp.series {
            let p = s.final_point();
            let (pe, _) = s.stat(|r| r.counters.pe_steps as f64);
            println!(
                "  {:<40} final coverage {:.4} ± {:.4}  pe steps {:.0}",
                s.label, p.mean, p.stderr, pe
            );
        }
        if !args.no_plots {
            harness::emit_plots(&args.out.join(&exp.name))?;
        }
    }
    Ok(())
}

fn plot(input: &Path) -> Result<()> {
    let mut found = false;
    for entry in WalkDir::new(input).sort_by_file_name() {
        let entry = entry?;
        if entry.file_name() == "aggregate.csv" {
            let dir = entry.path().parent().unwrap_or(input);
            for f in harness::emit_plots(dir)? {
                println!("wrote {}", f.display());
            }
            found = true;
        }
    }
    if !found {
        bail!("no aggregate.csv found under {}", input.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Plot { input } => plot(&input),
        Command::Map { family, env_seed } => family
            .parse::<EnvFamily>()
            .and_then(|f| f.build(env_seed))
            .map(|m| print!("{m}"))
            .map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
