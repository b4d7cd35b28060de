//! Command-line front end: generate instances, run benchmark experiments and
//! trials, and validate parameter schedules.
//!
//! Every subcommand takes an optional `--config <file.json>` whose fields
//! mirror the long flags; explicit flags win over the config file, which wins
//! over built-in defaults.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use gipsa::bench::{
    generate_instance, parse_algorithm, parse_algorithm_list, read_instance_file, run_experiment,
    run_trials, write_instance_file, write_trials_outputs, ExperimentConfig, GenSpec, InstanceMeta,
    TrialsConfig,
};
use gipsa::diagnostics::estimate_active_set;
use gipsa::error::{Error, Result};
use gipsa::oracle::high_accuracy_solve;
use gipsa::problem::CompositeProblem;
use gipsa::schedules::{validate_gipsa, DEFAULT_VALIDATION_HORIZON};

#[derive(Parser)]
#[command(
    name = "gipsa",
    version,
    about = "Inertial proximal gradient solvers for l1-regularized least squares"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write it to a file.
    Gen(GenArgs),
    /// Run algorithm variants on one instance; write traces and a summary.
    Solve(SolveArgs),
    /// Run repeated randomized trials and aggregate iteration counts.
    Trials(TrialsArgs),
    /// Check a schedule against the convergence conditions.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output path for the instance file.
    #[arg(long)]
    out: PathBuf,
    /// Dimension (columns of A). Default 2000.
    #[arg(long)]
    n: Option<usize>,
    /// Rows of A. Default 1000.
    #[arg(long)]
    m: Option<usize>,
    /// Regularization weight. Default 0.1.
    #[arg(long)]
    rho: Option<f64>,
    /// Nonzeros in the planted signal. Default 260.
    #[arg(long)]
    nnz: Option<usize>,
    /// Variance of the entries of A. Default 0.01.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Generator seed. Default 1.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with the same fields as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenFileConfig {
    n: Option<usize>,
    m: Option<usize>,
    rho: Option<f64>,
    nnz: Option<usize>,
    sigma2: Option<f64>,
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file to solve.
    #[arg(long)]
    instance: PathBuf,
    /// Directory for trace CSVs and summary.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated algorithm descriptors.
    /// Default "fbs,ifbs:0.4,ifbs:star,fista-cd,fista-cd-re".
    #[arg(long)]
    algorithms: Option<String>,
    /// Comma-separated relative objective-gap tolerances to report.
    /// Default "1e-2,1e-6".
    #[arg(long)]
    tols: Option<String>,
    /// Step budget per variant. Default 50000.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Fixed-point residual at which runs stop. Default 1e-10.
    #[arg(long)]
    residual_tol: Option<f64>,
    /// Cache directory for reference solutions.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// JSON file with the same fields as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveFileConfig {
    algorithms: Option<String>,
    tols: Option<String>,
    max_iters: Option<usize>,
    residual_tol: Option<f64>,
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TrialsArgs {
    /// Directory for trials.csv and trials.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Dimension. Default 200 (2000 with --full).
    #[arg(long)]
    n: Option<usize>,
    /// Rows. Default 100 (1000 with --full).
    #[arg(long)]
    m: Option<usize>,
    /// Regularization weight. Default 0.1.
    #[arg(long)]
    rho: Option<f64>,
    /// Planted nonzeros. Default 26 (260 with --full).
    #[arg(long)]
    nnz: Option<usize>,
    /// Variance of the entries of A. Default 0.01.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Base seed; trial t uses seed + t. Default 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials. Default 50 (1000 with --full).
    #[arg(long)]
    trials: Option<usize>,
    /// Full-size configuration: 1000x2000 instances, 1000 trials.
    #[arg(long)]
    full: bool,
    /// Comma-separated algorithm descriptors.
    #[arg(long)]
    algorithms: Option<String>,
    /// Comma-separated tolerances. Default "1e-2,1e-6".
    #[arg(long)]
    tols: Option<String>,
    /// Step budget per run. Default 50000.
    #[arg(long)]
    max_iters: Option<usize>,
    /// JSON file with the same fields as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrialsFileConfig {
    n: Option<usize>,
    m: Option<usize>,
    rho: Option<f64>,
    nnz: Option<usize>,
    sigma2: Option<f64>,
    seed: Option<u64>,
    trials: Option<usize>,
    algorithms: Option<String>,
    tols: Option<String>,
    max_iters: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Schedule descriptor, e.g. "ifbs:0.5", "gipsa:0.3:0.6@1.2", "fista-cd".
    #[arg(long)]
    schedule: String,
    /// Gradient Lipschitz constant to validate against.
    #[arg(long, conflicts_with = "instance")]
    lipschitz: Option<f64>,
    /// Instance file whose Lipschitz constant (and structure, for
    /// "ifbs:star") is used instead of --lipschitz.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Iterations of the schedule to sweep. Default 10000.
    #[arg(long)]
    horizon: Option<usize>,
    /// Print the full report as JSON instead of a text summary.
    #[arg(long)]
    json: bool,
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("config {}: {e}", p.display())))
        }
        None => Ok(T::default()),
    }
}

fn parse_tols(s: &str) -> Result<Vec<f64>> {
    let tols: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("cannot parse tolerance '{t}'")))
        })
        .collect::<Result<_>>()?;
    if tols.is_empty() {
        return Err(Error::Format("empty tolerance list".into()));
    }
    Ok(tols)
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let file: GenFileConfig = load_config(args.config.as_ref())?;
    let spec = GenSpec {
        n: args.n.or(file.n).unwrap_or(2000),
        m: args.m.or(file.m).unwrap_or(1000),
        rho: args.rho.or(file.rho).unwrap_or(0.1),
        nnz: args.nnz.or(file.nnz).unwrap_or(260),
        sigma2: args.sigma2.or(file.sigma2).unwrap_or(0.01),
        seed: args.seed.or(file.seed).unwrap_or(1),
    };
    let generated = generate_instance(&spec)?;
    write_instance_file(
        &args.out,
        &generated.instance,
        &InstanceMeta::from_gen_spec(&spec),
    )?;
    println!(
        "wrote {} ({}x{}, rho={}, nnz={}, seed={})",
        args.out.display(),
        spec.m,
        spec.n,
        spec.rho,
        spec.nnz,
        spec.seed
    );
    Ok(0)
}

fn cmd_solve(args: SolveArgs) -> Result<u8> {
    let file: SolveFileConfig = load_config(args.config.as_ref())?;
    let defaults = ExperimentConfig::default();
    let cfg = ExperimentConfig {
        algorithms: match args.algorithms.or(file.algorithms) {
            Some(s) => parse_algorithm_list(&s)?,
            None => defaults.algorithms,
        },
        tols: match args.tols.or(file.tols) {
            Some(s) => parse_tols(&s)?,
            None => defaults.tols,
        },
        max_iters: args
            .max_iters
            .or(file.max_iters)
            .unwrap_or(defaults.max_iters),
        residual_tol: args
            .residual_tol
            .or(file.residual_tol)
            .unwrap_or(defaults.residual_tol),
        cache_dir: args.cache_dir.or(file.cache_dir),
    };
    let (inst, meta) = read_instance_file(&args.instance)?;
    let summary = run_experiment(&inst, &meta, &cfg, &args.out_dir)?;
    println!(
        "instance {}x{} rho={} L={:.6e} F*={:.12e} |supp|={} (residual {:.2e})",
        summary.instance.m,
        summary.instance.n,
        summary.instance.rho,
        summary.lipschitz,
        summary.reference.f_star,
        summary.reference.support_size,
        summary.reference.residual,
    );
    println!(
        "structure: |E|={} omega={:.3e} l_E={:.6e} l_E^={:.6e}",
        summary.structure.active_size,
        summary.structure.omega,
        summary.structure.l_e,
        summary.structure.l_e_hat,
    );
    for alg in &summary.algorithms {
        let tol_parts: Vec<String> = alg
            .iters_to_tol
            .iter()
            .map(|t| match t.iters {
                Some(k) => format!("{:.0e}:{k}", t.tol),
                None => format!("{:.0e}:censored", t.tol),
            })
            .collect();
        let rate = alg
            .rate
            .as_ref()
            .map(|r| format!(" q_hat={:.4}", r.q_hat))
            .unwrap_or_default();
        let ident = alg
            .identification_iteration
            .map(|k| format!(" ident@{k}"))
            .unwrap_or_default();
        println!(
            "{}: {} steps, {} restarts, [{}]{}{}",
            alg.descriptor,
            alg.iterations,
            alg.restarts,
            tol_parts.join(" "),
            ident,
            rate,
        );
    }
    println!("traces and summary.json in {}", args.out_dir.display());
    Ok(0)
}

fn cmd_trials(args: TrialsArgs) -> Result<u8> {
    let file: TrialsFileConfig = load_config(args.config.as_ref())?;
    let (dn, dm, dnnz, dtrials) = if args.full {
        (2000, 1000, 260, 1000)
    } else {
        (200, 100, 26, 50)
    };
    let cfg = TrialsConfig {
        base: GenSpec {
            n: args.n.or(file.n).unwrap_or(dn),
            m: args.m.or(file.m).unwrap_or(dm),
            rho: args.rho.or(file.rho).unwrap_or(0.1),
            nnz: args.nnz.or(file.nnz).unwrap_or(dnnz),
            sigma2: args.sigma2.or(file.sigma2).unwrap_or(0.01),
            seed: args.seed.or(file.seed).unwrap_or(1),
        },
        num_trials: args.trials.or(file.trials).unwrap_or(dtrials),
        algorithms: match args.algorithms.or(file.algorithms) {
            Some(s) => parse_algorithm_list(&s)?,
            None => ExperimentConfig::default().algorithms,
        },
        tols: match args.tols.or(file.tols) {
            Some(s) => parse_tols(&s)?,
            None => vec![1e-2, 1e-6],
        },
        max_iters: args.max_iters.or(file.max_iters).unwrap_or(50_000),
    };
    let report = run_trials(&cfg)?;
    write_trials_outputs(&report, &args.out_dir)?;
    println!(
        "{} trials of {}x{} (seed base {}):",
        report.num_trials, cfg.base.m, cfg.base.n, cfg.base.seed
    );
    println!(
        "{:<24} {:>10} {:>12} {:>10} {:>9}",
        "algorithm", "tol", "mean", "std", "censored"
    );
    for c in &report.cells {
        println!(
            "{:<24} {:>10.0e} {:>12.1} {:>10.1} {:>9}",
            c.descriptor, c.tol, c.mean, c.std, c.censored
        );
    }
    println!("outputs in {}", args.out_dir.display());
    Ok(0)
}

fn cmd_validate(args: ValidateArgs) -> Result<u8> {
    let alg = parse_algorithm(&args.schedule)?;
    let horizon = args.horizon.unwrap_or(DEFAULT_VALIDATION_HORIZON);
    let (schedule, restart, l) = match (&args.instance, args.lipschitz) {
        (Some(path), None) => {
            let (inst, _) = read_instance_file(path)?;
            let l = inst.lipschitz();
            let est = if alg.requires_structure() {
                let reference = high_accuracy_solve(&inst)?;
                Some(estimate_active_set(&inst, &reference.x_star, None)?)
            } else {
                None
            };
            let (schedule, restart) = alg.resolve(&inst, est.as_ref())?;
            (schedule, restart, l)
        }
        (None, Some(l)) => {
            let (schedule, restart) = alg.resolve_with_l(l, None)?;
            (schedule, restart, l)
        }
        (None, None) => {
            return Err(Error::Format(
                "one of --lipschitz or --instance is required".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let report = validate_gipsa(&schedule, l, horizon)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{}", report.summary());
        if restart {
            println!(
                "note: restarts rewind the momentum counter; the conditions above cover the base rule"
            );
        }
    }
    let lemma_covered = report
        .fista_cd_lemma
        .as_ref()
        .is_some_and(|note| note.covered);
    Ok(u8::from(
        !(report.satisfies_global_theorem || lemma_covered),
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Trials(args) => cmd_trials(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
