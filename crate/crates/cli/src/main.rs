use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pettykit::harness::{list_suites, run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "pettykit", version, about = "Run projection-body verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite described by a TOML config and write a JSON report.
    Run {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; CSV profiles are written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Multiplies every Monte-Carlo budget.
        #[arg(long)]
        samples_scale: Option<f64>,
        /// Caps the worker count.
        #[arg(long, env = "PETTYKIT_THREADS")]
        threads: Option<usize>,
    },
    /// List the suites, the property each checks and its default tolerances.
    List,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::List => {
            print!("{}", list_suites());
            ExitCode::SUCCESS
        }
        Command::Run { config, seed, out, samples_scale, threads } => {
            if let Some(t) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            }
            let mut cfg = match ExperimentConfig::from_path(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = samples_scale {
                cfg.mc.samples_scale = s;
            }
            let report = match run(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            let path = out
                .or_else(|| cfg.output.as_ref().map(|p| cfg.base_dir.join(p)))
                .unwrap_or_else(|| PathBuf::from(format!("{}-report.json", cfg.suite.name())));
            match report.write(&path) {
                Ok(csv) => {
                    eprintln!("report: {}", path.display());
                    for c in csv {
                        eprintln!("profile: {}", c.display());
                    }
                }
                Err(e) => {
                    eprintln!("error: writing {}: {e}", path.display());
                    return ExitCode::from(EXIT_USAGE);
                }
            }
            let failed: Vec<_> = report.failures().collect();
            println!(
                "{} {}: {} cases, {} failed, {:.2}s",
                cfg.suite.name(),
                if report.pass { "PASS" } else { "FAIL" },
                report.cases.len(),
                failed.len(),
                report.wall_time_s
            );
            for c in failed.iter().take(10) {
                println!("  failed: {}", c.name);
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
    }
}
