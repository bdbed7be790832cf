use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lobcalib::eligibility::{grid_scan, EvalContext};
use lobcalib::harness::{
    generate_real_data, run_comparison, spec_echo, write_report_dir, ExperimentSpec,
};
use lobcalib::optimize::strategy_names;
use lobcalib::simulator::write_samples_csv;
use lobcalib::specfile::{load_grid, load_spec};
use lobcalib::Error;

/// Market simulator calibration toolkit: generate reference data, scan grids,
/// calibrate parameters and compare search strategies.
#[derive(Parser)]
#[command(name = "lobcalib", version)]
struct Cli {
    /// Experiment spec file (flat key=value).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Parallel jobs; defaults to available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Overwrite a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,

    /// Override the spec's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the reference sample set at the ground-truth configuration.
    GenReal,
    /// Evaluate every theta in a grid file and export the K-S heatmap.
    Grid {
        /// CSV with one theta per row, free-parameter columns.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Calibrate with a single strategy.
    Calibrate {
        #[arg(long)]
        strategy: String,
    },
    /// Compare all strategies listed in the spec.
    Compare,
    /// Pretty-print a finished output directory.
    Report,
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_REFUSE: u8 = 3;

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::Input(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Refuse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_REFUSE)
        }
        Err(CmdError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

enum CmdError {
    Lib(Error),
    Refuse(String),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Lib(e)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Lib(Error::Io(e))
    }
}

fn run(cli: Cli) -> Result<(), CmdError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CmdError::Lib(Error::Config(e.to_string())))?;
    }

    if matches!(cli.command, Command::Report) {
        let dir = require_out(&cli)?;
        return print_report(&dir);
    }

    let spec_path = cli
        .spec
        .clone()
        .ok_or_else(|| CmdError::Lib(Error::Config("--spec is required".into())))?;
    let mut spec = load_spec(&spec_path).map_err(|e| match e {
        // An unreadable spec file is a configuration problem.
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", spec_path.display())),
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        spec.master_seed = seed;
        spec.base.seed = seed;
    }

    let out = require_out(&cli)?;
    prepare_out_dir(&out, cli.force)?;

    match &cli.command {
        Command::GenReal => {
            let real = generate_real_data(&spec)?;
            write_samples_csv(&out.join("real.csv"), &real)?;
            write_manifest(&out, "gen-real", &spec_path, &spec)?;
            println!(
                "wrote {} reference samples to {}",
                real.len(),
                out.join("real.csv").display()
            );
        }
        Command::Grid { grid } => {
            let thetas = load_grid(grid, &spec.space)?;
            let real = generate_real_data(&spec)?;
            let ctx = EvalContext {
                space: &spec.space,
                base: &spec.base,
                real: &real,
                n_sim: spec.n_sim,
                alpha: spec.alpha,
                extractor: spec.extractor,
            };
            let (eligible, all) = grid_scan(&ctx, &thetas, spec.master_seed)?;
            let names: Vec<String> = spec.space.names().iter().map(|s| s.to_string()).collect();
            lobcalib::eligibility::write_records_csv(&out.join("heatmap.csv"), &names, &all)?;
            lobcalib::eligibility::write_records_csv(
                &out.join("eligible.csv"),
                &names,
                &eligible.records,
            )?;
            write_manifest(&out, "grid", &spec_path, &spec)?;
            println!(
                "evaluated {} grid points, {} eligible",
                all.len(),
                eligible.records.len()
            );
        }
        Command::Calibrate { strategy } => {
            if lobcalib::optimize::strategy_by_name(strategy).is_none() {
                return Err(CmdError::Lib(Error::Config(format!(
                    "unknown strategy {strategy}; valid names: {}",
                    strategy_names().join(", ")
                ))));
            }
            let mut one = spec.clone();
            one.strategies = vec![strategy.clone()];
            let real = generate_real_data(&one)?;
            let report = run_comparison(&one, &real)?;
            write_report_dir(&out, &one, &report)?;
            write_manifest(&out, "calibrate", &spec_path, &one)?;
            print_best(&report, &one);
        }
        Command::Compare => {
            let real = generate_real_data(&spec)?;
            let report = run_comparison(&spec, &real)?;
            write_report_dir(&out, &spec, &report)?;
            write_manifest(&out, "compare", &spec_path, &spec)?;
            for r in report.success_rates() {
                println!(
                    "{}: success rate {:.0}% ({}/{} cells, {} excluded)",
                    r.strategy,
                    100.0 * r.rate(),
                    r.successes,
                    r.cells,
                    r.excluded
                );
            }
            print_best(&report, &spec);
        }
        Command::Report => unreachable!("handled above"),
    }
    Ok(())
}

fn print_best(report: &lobcalib::harness::Report, spec: &ExperimentSpec) {
    let best = report
        .traces
        .iter()
        .filter_map(|t| t.best_evaluation())
        .min_by(|a, b| a.statistic.partial_cmp(&b.statistic).unwrap());
    let Some(best) = best else {
        println!("no successful runs");
        return;
    };
    let theta: Vec<String> = spec
        .space
        .names()
        .iter()
        .zip(&best.theta)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    println!(
        "best theta: {} | ks_stat = {:.6} | q = {:.6} | {}",
        theta.join(", "),
        best.statistic,
        best.critical_value,
        if best.eligible { "ELIGIBLE" } else { "NOT_ELIGIBLE" }
    );
}

fn require_out(cli: &Cli) -> Result<PathBuf, CmdError> {
    cli.out
        .clone()
        .ok_or_else(|| CmdError::Lib(Error::Config("--out is required".into())))
}

fn prepare_out_dir(out: &Path, force: bool) -> Result<(), CmdError> {
    if out.exists() {
        let non_empty = fs::read_dir(out)?.next().is_some();
        if non_empty && !force {
            return Err(CmdError::Refuse(format!(
                "output directory {} is not empty; pass --force to overwrite",
                out.display()
            )));
        }
    }
    fs::create_dir_all(out)?;
    Ok(())
}

fn write_manifest(
    out: &Path,
    command: &str,
    spec_path: &Path,
    spec: &ExperimentSpec,
) -> Result<(), CmdError> {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut manifest = String::new();
    manifest.push_str(&format!("command = {command}\n"));
    manifest.push_str(&format!("spec_file = {}\n", spec_path.display()));
    manifest.push_str(&format!("tool_version = {}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str(&format!("timestamp_unix = {timestamp}\n"));
    manifest.push_str(&format!(
        "seed_blocks = real:[0,{}) cells:{}\n",
        spec.n_real,
        spec.seeds.len()
    ));
    manifest.push_str("# resolved spec\n");
    manifest.push_str(&spec_echo(spec));
    fs::write(out.join("manifest"), manifest)?;
    Ok(())
}

fn print_report(dir: &Path) -> Result<(), CmdError> {
    for name in ["success_rate.csv", "final_best.csv"] {
        let path = dir.join(name);
        if path.exists() {
            println!("== {name}");
            print!("{}", fs::read_to_string(&path)?);
            println!();
        }
    }
    let manifest = dir.join("manifest");
    if manifest.exists() {
        println!("== manifest (head)");
        for line in fs::read_to_string(&manifest)?.lines().take(8) {
            println!("{line}");
        }
    } else {
        return Err(CmdError::Lib(Error::Input(format!(
            "{} does not look like an output directory (no manifest)",
            dir.display()
        ))));
    }
    Ok(())
}
