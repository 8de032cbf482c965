//! `dlab`: command-line front end of the Dirichlet-form laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dirichlet_lab::experiment::{
    run_experiment, ExperimentConfig, FunctionSource, LiouvilleMode, ModelSource, Operation,
};
use dirichlet_lab::family::{FamilySpec, ModelFamily};
use dirichlet_lab::io::save_model;
use dirichlet_lab::verify::verify_all;
use dirichlet_lab::Tolerances;

#[derive(Parser)]
#[command(
    name = "dlab",
    version,
    about = "Liouville-theorem laboratory for Dirichlet forms on finite models"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory receiving reports.
    #[arg(long, global = true, default_value = "dlab-out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write truncations `0..=radius` of a family as `<name>.<k>.model`.
    Generate {
        #[arg(long)]
        family: String,
        #[arg(long)]
        radius: usize,
    },
    /// Ergodic convergence curve of `T_t f`.
    Semigroup {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
        times: Vec<f64>,
    },
    /// Solve the Dirichlet problem with the given boundary values.
    Harmonic {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
    },
    /// Liouville certificates.
    Liouville(LiouvilleArgs),
    /// Volume-growth and resistance recurrence test on a family.
    Recurrence {
        #[arg(long)]
        family: String,
        /// Largest truncation level.
        #[arg(long)]
        max_radius: usize,
    },
    /// Run the full acceptance suite.
    VerifyAll,
}

#[derive(Args)]
struct LiouvilleArgs {
    /// Model file (alternatively `--family` with `--radius`).
    #[arg(long, conflicts_with = "family")]
    model: Option<PathBuf>,
    #[arg(long, requires = "radius")]
    family: Option<String>,
    #[arg(long)]
    radius: Option<usize>,
    /// Vector file for `f`.
    #[arg(long, conflicts_with = "f_kind")]
    f: Option<PathBuf>,
    /// Built-in `f`: `abs`, `const:<c>` or `cone:<c>`.
    #[arg(long)]
    f_kind: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    p: Vec<f64>,
    #[arg(long, default_value = "caccioppoli")]
    mode: String,
    /// Inner radii (paired with `--big-r`); defaults to a grid.
    #[arg(long, value_delimiter = ',')]
    r: Vec<f64>,
    #[arg(long = "big-r", value_delimiter = ',')]
    big_r: Vec<f64>,
}

fn function_source(a: &LiouvilleArgs) -> anyhow::Result<FunctionSource> {
    if let Some(f) = &a.f {
        return Ok(FunctionSource::File(f.clone()));
    }
    let kind = a.f_kind.as_deref().unwrap_or("abs");
    let value = |v: &str| {
        v.parse::<f64>()
            .with_context(|| format!("bad number in --f-kind {kind}"))
    };
    Ok(match kind.split_once(':') {
        None if kind == "abs" => FunctionSource::AbsCoordinate,
        Some(("const", v)) => FunctionSource::Constant(value(v)?),
        Some(("cone", v)) => FunctionSource::Cone(value(v)?),
        _ => bail!("unknown --f-kind '{kind}' (expected abs, const:<c> or cone:<c>)"),
    })
}

fn liouville_operation(a: &LiouvilleArgs, seed: u64) -> anyhow::Result<Operation> {
    let model = match (&a.model, &a.family, a.radius) {
        (Some(p), _, _) => ModelSource::File(p.clone()),
        (None, Some(fam), Some(level)) => ModelSource::Family {
            spec: fam.parse()?,
            level,
            seed,
        },
        _ => bail!("liouville needs --model or --family with --radius"),
    };
    if a.r.len() != a.big_r.len() {
        bail!("--r and --big-r need the same number of values");
    }
    Ok(Operation::Liouville {
        model,
        f: function_source(a)?,
        p: a.p.clone(),
        mode: a.mode.parse::<LiouvilleMode>()?,
        radii: a.r.iter().copied().zip(a.big_r.iter().copied()).collect(),
    })
}

fn file_stem(spec: &FamilySpec) -> String {
    spec.to_string().replace([':', '/', '\\'], "-")
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let tol = Tolerances::from_env().context("loading tolerance overrides")?;
    let Common { seed, out_dir } = cli.common;
    let operation = match cli.command {
        Command::Generate { family, radius } => {
            let spec: FamilySpec = family.parse()?;
            let fam = ModelFamily::new(spec.clone(), seed)?;
            std::fs::create_dir_all(&out_dir)?;
            let stem = file_stem(&spec);
            for k in 0..=radius {
                let path = out_dir.join(format!("{stem}.{k}.model"));
                save_model(&fam.model(k)?, &path).with_context(|| format!("writing {}", path.display()))?;
            }
            println!(
                "wrote {} truncations to {}/{stem}.<k>.model",
                radius + 1,
                out_dir.display()
            );
            return Ok(true);
        }
        Command::VerifyAll => {
            let results = verify_all(seed, &out_dir, &tol)?;
            for r in &results {
                println!("{}", r.line());
            }
            return Ok(results.iter().all(|r| r.pass));
        }
        Command::Semigroup { model, f, p, times } => Operation::Semigroup { model, f, p, times },
        Command::Harmonic { model, boundary } => Operation::Harmonic { model, boundary },
        Command::Liouville(a) => liouville_operation(&a, seed)?,
        Command::Recurrence { family, max_radius } => Operation::Recurrence {
            family: family.parse()?,
            level: max_radius,
            seed,
        },
    };
    let name = operation.name();
    let config = ExperimentConfig {
        operation,
        tolerances: tol,
        out_dir,
    };
    let outcome = run_experiment(&config).with_context(|| format!("{name} experiment failed"))?;
    print!("{}", outcome.summary);
    Ok(outcome.all_pass())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
