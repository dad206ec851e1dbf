use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mmc::baseline::baseline_regression_cluster;
use mmc::data::{read_labels, save_dataset};
use mmc::synth::{generate, generate_interaction, InteractionSpec, SynthSpec};
use mmc::{accuracy, fit, load_dataset, nmi, FitConfig, FitReport, MultiViewDataset, Partition};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Mmc(#[from] mmc::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid report {path}: {source}")]
    Report { path: PathBuf, source: mmc::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0} oracle check(s) failed")]
    ChecksFailed(usize),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "mmc", version, about = "Multi-linear multi-view clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-view dataset.
    Gen(GenArgs),
    /// Fit the multi-view model and write a JSON report.
    Fit(FitArgs),
    /// Fit over a grid of ranks and keep the best by NMI.
    Sweep(SweepArgs),
    /// Score a report's labels against ground truth.
    Eval(EvalArgs),
    /// Fit the single-regression baseline on concatenated views.
    Baseline(BaselineArgs),
    /// Run the fast-path vs brute-force equivalence suites.
    OracleCheck(OracleArgs),
}

fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{t}` is not a non-negative integer"))
        })
        .collect()
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Number of views; defaults to the length of --dims.
    #[arg(long)]
    views: Option<usize>,
    /// Comma-separated feature counts, one per view (a single value is
    /// repeated for every view). Defaults to 10 per view, or one feature per
    /// view with --interaction.
    #[arg(long, value_parser = parse_list)]
    dims: Option<::std::vec::Vec<usize>>,
    /// Minimum distance between cluster centers, in noise standard deviations.
    #[arg(long, default_value_t = 6.0)]
    sep: f64,
    #[arg(long, default_value_t = 0)]
    noise_views: usize,
    /// Two views whose class is the sign of a cross-view feature product.
    #[arg(long)]
    interaction: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Regularization weight.
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative objective change that stops the outer loop.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = FitConfig::default().init_scale)]
    init_scale: f64,
}

impl SolverArgs {
    fn config(&self, rank: usize) -> FitConfig {
        FitConfig {
            rank,
            gamma: self.gamma,
            seed: self.seed,
            outer_tol: self.tol,
            max_outer_iters: self.max_iters,
            init_scale: self.init_scale,
            ..FitConfig::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    manifest: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    rank: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    manifest: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = parse_list, default_value = "10,20,30,40,50")]
    ranks: ::std::vec::Vec<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Where to write the best report.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Optional JSON table of every rank's scores.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    report: PathBuf,
    /// Ground-truth labels, one per line.
    #[arg(long, conflicts_with = "manifest")]
    labels: Option<PathBuf>,
    /// Dataset manifest carrying ground-truth labels.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    manifest: PathBuf,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn write_report(path: &Path, report: &FitReport) -> Result<()> {
    fs::write(path, report.to_json()?).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn read_report(path: &Path) -> Result<FitReport> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    FitReport::from_json(&text).map_err(|source| CliError::Report {
        path: path.to_path_buf(),
        source,
    })
}

fn scores(truth: &[usize], pred: &[usize]) -> Result<(f64, f64)> {
    let t = Partition::new(truth.to_vec())?;
    let p = Partition::new(pred.to_vec())?;
    Ok((accuracy(&t, &p)?, nmi(&t, &p)?))
}

fn summarize(report: &FitReport, d: &MultiViewDataset) -> Result<()> {
    let last = report
        .objectives()
        .last()
        .copied()
        .unwrap_or(report.initial_objective);
    println!(
        "iterations {} converged {} objective {last:.6e} time {:.2}s",
        report.iterations.len(),
        report.converged,
        report.total_secs
    );
    if let Some(truth) = d.labels() {
        let (a, n) = scores(truth, &report.labels)?;
        println!("ACC {a:.4} NMI {n:.4}");
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let d = if args.interaction {
        if args.views.is_some_and(|v| v != 2) {
            return Err(CliError::Usage(
                "--interaction data always has 2 views".into(),
            ));
        }
        let dims = match args.dims.as_deref() {
            None => InteractionSpec::default().dims,
            Some([d]) => [*d, *d],
            Some([a, b]) => [*a, *b],
            Some(_) => {
                return Err(CliError::Usage(
                    "--interaction takes one or two --dims".into(),
                ))
            }
        };
        generate_interaction(&InteractionSpec {
            n: args.n,
            dims,
            seed: args.seed,
            ..InteractionSpec::default()
        })?
    } else {
        let dims = args.dims.unwrap_or_else(|| vec![10]);
        let dims = match (args.views, dims.as_slice()) {
            (Some(v), [d]) => vec![*d; v],
            (Some(v), ds) if ds.len() != v => {
                return Err(CliError::Usage(format!(
                    "--views {v} but --dims lists {} values",
                    ds.len()
                )))
            }
            (_, ds) => ds.to_vec(),
        };
        generate(&SynthSpec {
            n: args.n,
            k: args.k,
            dims,
            separation: args.sep,
            noise_views: args.noise_views,
            seed: args.seed,
        })?
    };
    let manifest = save_dataset(&args.out, &d)?;
    println!("{}", manifest.display());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let d = load_dataset(&args.manifest)?;
    let report = fit(&d, args.k, &args.solver.config(args.rank))?;
    write_report(&args.out, &report)?;
    summarize(&report, &d)
}

#[derive(Serialize)]
struct SweepEntry {
    rank: usize,
    acc: f64,
    nmi: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    if args.ranks.is_empty() || args.ranks.contains(&0) {
        return Err(CliError::Usage(
            "--ranks must list positive integers".into(),
        ));
    }
    let d = load_dataset(&args.manifest)?;
    let truth = d
        .labels()
        .ok_or_else(|| CliError::Usage("sweep needs a manifest with labels".into()))?;

    // Fits are independent and seeded, so running them side by side does not
    // change any result.
    let reports: Vec<mmc::Result<FitReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = args
            .ranks
            .iter()
            .map(|&r| {
                let cfg = args.solver.config(r);
                let d = &d;
                s.spawn(move || fit(d, args.k, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fit thread panicked"))
            .collect()
    });

    let mut entries = Vec::new();
    let mut best: Option<(f64, FitReport)> = None;
    for (&rank, report) in args.ranks.iter().zip(reports) {
        let report = report?;
        let (acc, nmi) = scores(truth, &report.labels)?;
        println!("rank {rank:>4}  ACC {acc:.4}  NMI {nmi:.4}");
        entries.push(SweepEntry {
            rank,
            acc,
            nmi,
            objective: report
                .objectives()
                .last()
                .copied()
                .unwrap_or(report.initial_objective),
            iterations: report.iterations.len(),
            converged: report.converged,
        });
        if best.as_ref().is_none_or(|(b, _)| nmi > *b) {
            best = Some((nmi, report));
        }
    }
    let (best_nmi, report) = best.expect("at least one rank");
    println!("best rank {} NMI {best_nmi:.4}", report.config.rank);
    write_report(&args.out, &report)?;
    if let Some(path) = &args.summary {
        let json = serde_json::to_string_pretty(&entries).map_err(mmc::Error::from)?;
        fs::write(path, json).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let report = read_report(&args.report)?;
    let truth = match (&args.labels, &args.manifest) {
        (Some(path), _) => read_labels(path)?,
        (None, Some(path)) => load_dataset(path)?
            .labels()
            .ok_or_else(|| CliError::Usage(format!("{} has no labels", path.display())))?
            .to_vec(),
        (None, None) => return Err(CliError::Usage("eval needs --labels or --manifest".into())),
    };
    let (a, n) = scores(&truth, &report.labels)?;
    println!("ACC {a:.4}");
    println!("NMI {n:.4}");
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> Result<()> {
    let d = load_dataset(&args.manifest)?;
    let report = baseline_regression_cluster(&d, args.k, &args.solver.config(args.k))?;
    write_report(&args.out, &report)?;
    summarize(&report, &d)
}

fn cmd_oracle_check(args: OracleArgs) -> Result<()> {
    let results = mmc::checks::run_all(args.seed)?;
    let mut failed = 0;
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {:<24} cases {:>6}  max error {:.3e}  tolerance {:.0e}",
            r.name, r.cases, r.max_error, r.tolerance
        );
        if !r.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::OracleCheck(a) => cmd_oracle_check(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
        Err(e) => {
            print!("{}", e.render());
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
