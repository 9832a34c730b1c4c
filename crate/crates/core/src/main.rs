//! Command-line front end: run or validate scenario files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lembas::scenario::{
    config_errors_to_error, emit_csv, parse_config, run_scenario, summary_json,
    write_summary_json, Verdict,
};

#[derive(Parser)]
#[command(
    name = "lembas",
    version,
    about = "Work/heat flux and entropy-production bookkeeping for bipartite quantum systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file: CSV time series, verdicts, optional JSON summary.
    Run {
        scenario: PathBuf,
        /// CSV output path (default: scenario stem + ".csv").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the run summary as JSON to this path.
        #[arg(long)]
        summary_json: Option<PathBuf>,
        /// Print the summary JSON to stdout instead of the human-readable form.
        #[arg(long)]
        json: bool,
    },
    /// Parse and validate a scenario file, reporting every problem.
    Validate { scenario: PathBuf },
}

fn load_config(path: &Path) -> Result<lembas::scenario::ScenarioConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    match parse_config(&text) {
        Ok(mut cfg) => {
            cfg.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            Ok(cfg)
        }
        Err(errors) => Err(config_errors_to_error(&errors).to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { scenario } => match load_config(&scenario) {
            Ok(cfg) => {
                println!("{}: valid ({} bath(s))", cfg.name, cfg.baths.len());
                ExitCode::SUCCESS
            }
            Err(msg) => {
                eprintln!("{msg}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            scenario,
            out,
            summary_json: summary_path,
            json,
        } => {
            let cfg = match load_config(&scenario) {
                Ok(cfg) => cfg,
                Err(msg) => {
                    eprintln!("{msg}");
                    return ExitCode::from(2);
                }
            };
            let run = match run_scenario(&cfg) {
                Ok(run) => run,
                Err(e) => {
                    eprintln!("run failed: {e}");
                    return ExitCode::from(2);
                }
            };
            let csv_path = out
                .or_else(|| cfg.outputs.path.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| scenario.with_extension("csv"));
            if let Err(e) = emit_csv(
                &run.trajectory,
                run.entropy.as_deref(),
                &cfg.outputs.columns,
                &csv_path,
            ) {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
            if let Some(path) = &summary_path {
                if let Err(e) = write_summary_json(&run.summary, path) {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            }

            if json {
                print!("{}", summary_json(&run.summary));
            } else {
                let s = &run.summary;
                println!("scenario        {}", s.scenario);
                println!("class           {}", s.commutation_class);
                println!("integrator      {}", s.integrator);
                println!("samples         {}", s.samples);
                println!("csv             {}", csv_path.display());
                for w in &s.warnings {
                    println!("warning         {w}");
                }
                for c in &s.checks {
                    let verdict = match c.verdict {
                        Verdict::Pass => "pass",
                        Verdict::Fail => "FAIL",
                        Verdict::NotApplicable => "n/a ",
                    };
                    if c.verdict == Verdict::NotApplicable {
                        println!("check  [{verdict}] {}", c.name);
                    } else {
                        println!(
                            "check  [{verdict}] {} (observed {:.3e}, threshold {:.3e})",
                            c.name, c.observed, c.threshold
                        );
                    }
                }
                println!("wall time       {:.2}s", s.duration_seconds);
            }
            if run.summary.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
