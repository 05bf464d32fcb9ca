use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lerw_cli::calibrate::calibrate_beta;
use lerw_cli::pathdump::{decode_to_text, dump_path, PathKind};
use lerw_cli::report::{report_dir, write_report, AnalysisSpec};
use lerw_cli::runner::CALIBRATION_FILE;
use lerw_cli::{run, CliError, CliResult, Manifest, RunOptions};
use lerw_core::calibration::Calibration;

#[derive(Parser)]
#[command(name = "lerw", version, about = "Loop-erased random walk Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; defaults to the manifest's `out`, then `results/<name>`.
    #[arg(long, env = "LERW_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the manifest's `workers`, then all cores.
    #[arg(long, env = "LERW_WORKERS")]
    workers: Option<usize>,
    /// Replace the manifest seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Suppress per-cell progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute or resume every cell of a manifest.
    Run(RunArgs),
    /// Fit power laws and ratio tests over stored records.
    Report {
        /// Results directory holding records.jsonl.
        #[arg(long, env = "LERW_OUT")]
        out: PathBuf,
        /// Analysis specification (TOML).
        #[arg(long)]
        analysis: PathBuf,
        /// Where to write report.json and CSVs; defaults to the results directory.
        #[arg(long)]
        report_dir: Option<PathBuf>,
    },
    /// Run a length-scaling manifest and write calibration.json.
    CalibrateBeta(RunArgs),
    /// Write one sampled path in the binary path format, or decode one.
    DumpPath {
        #[arg(long, default_value_t = 32.0)]
        m: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, value_enum, default_value_t = PathKind::Lerw)]
        kind: PathKind,
        #[arg(long, default_value_t = lerw_core::loop_erasure::ILERW_TRUNCATION_DEFAULT)]
        truncation: f64,
        /// Output file.
        #[arg(long, required_unless_present = "decode")]
        output: Option<PathBuf>,
        /// Decode this file to CSV on stdout instead of sampling.
        #[arg(long, conflicts_with = "output")]
        decode: Option<PathBuf>,
    },
}

fn load(args: &RunArgs) -> CliResult<(Manifest, RunOptions)> {
    let mut manifest = Manifest::from_path(&args.manifest)?;
    if let Some(seed) = args.seed_override {
        manifest.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| manifest.out.clone())
        .unwrap_or_else(|| Path::new("results").join(&manifest.name));
    let workers = args
        .workers
        .or(manifest.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Manifest("workers must be at least 1".into()));
    }
    Ok((manifest, RunOptions { out, workers, verbose: !args.quiet }))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let (manifest, opts) = load(&args)?;
            let s = run(&manifest, &opts)?;
            println!(
                "{}: {} cells run, {} already complete, records in {}",
                manifest.name,
                s.executed,
                s.skipped,
                opts.out.display()
            );
        }
        Command::Report { out, analysis, report_dir: dir } => {
            let spec = AnalysisSpec::from_path(&analysis)?;
            let cal = out.join(CALIBRATION_FILE);
            let beta = if cal.exists() { Calibration::load(&cal).ok().map(|c| c.beta) } else { None };
            let report = report_dir(&out, &spec, beta)?;
            let dir = dir.unwrap_or(out);
            std::fs::create_dir_all(&dir)?;
            for p in write_report(&dir, &report)? {
                println!("wrote {}", p.display());
            }
            for pl in &report.power_law {
                println!(
                    "{}: exponent {:.4} (95% CI {:.4}..{:.4}), amplitude {:.4}",
                    pl.name, pl.fit.exponent, pl.fit.exponent_ci.0, pl.fit.exponent_ci.1, pl.fit.amplitude
                );
            }
            for fe in &report.funceq {
                println!("{}: {}", fe.name, if fe.report.pass { "all ratios cover 1" } else { "some ratio excludes 1" });
            }
        }
        Command::CalibrateBeta(args) => {
            let (manifest, opts) = load(&args)?;
            let outcome = calibrate_beta(&manifest, &opts)?;
            if let Some(w) = &outcome.warning {
                eprintln!("warning: {w}");
            }
            let c = &outcome.calibration;
            println!(
                "beta = {:.4} (95% CI {:.4}..{:.4}); wrote {}",
                c.beta,
                c.ci.0,
                c.ci.1,
                opts.out.join(CALIBRATION_FILE).display()
            );
        }
        Command::DumpPath { m, seed, trial, kind, truncation, output, decode } => {
            if let Some(input) = decode {
                print!("{}", decode_to_text(&input)?);
            } else {
                let output = output.expect("clap enforces --output");
                let n = dump_path(kind, m, seed, trial, truncation, &output)?;
                println!("wrote {n} points to {}", output.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
