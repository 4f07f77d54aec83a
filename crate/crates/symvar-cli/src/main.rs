//! `symvar run <config.json>`: one experiment per invocation. Exit code 0 when
//! every certificate passes, 2 when one fails, 1 on a config or runtime error.

mod config;
mod ops;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ExperimentConfig, SCHEMA};

#[derive(Parser)]
#[command(name = "symvar", version, about = "Runs symmetrization experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write result.json, table.csv and certificates.
    Run {
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; falls back to the config's `out`, then ./symvar-out.
        #[arg(long, env = "SYMVAR_OUT")]
        out: Option<PathBuf>,
        /// Overrides the config sample count.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Validate a config and print its canonical form.
    Check { config: PathBuf },
    /// List the registered strategy names.
    List,
}

fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &ops::Outcome) -> Result<(), String> {
    let io = |e: std::io::Error| format!("{}: {e}", dir.display());
    fs::create_dir_all(dir).map_err(io)?;
    let mut files = Vec::new();
    for (k, c) in outcome.certificates.iter().enumerate() {
        let name = format!("certificate-{k:02}.json");
        fs::write(dir.join(&name), c.to_json() + "\n").map_err(io)?;
        files.push(name);
    }
    let result = json!({
        "schema": SCHEMA,
        "op": cfg.operation.name(),
        "status": if outcome.passed { "PASS" } else { "FAILED" },
        "config": cfg,
        "result": outcome.result,
        "certificates": files,
    });
    fs::write(dir.join("result.json"), serde_json::to_string_pretty(&result).unwrap() + "\n").map_err(io)?;
    let mut w = csv::Writer::from_path(dir.join("table.csv")).map_err(|e| e.to_string())?;
    w.write_record(&outcome.table.header).map_err(|e| e.to_string())?;
    for row in &outcome.table.rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(io)
}

fn run(path: &Path, seed: Option<u64>, out: Option<PathBuf>, samples: Option<usize>) -> Result<bool, String> {
    let mut cfg = load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if samples.is_some() {
        cfg.samples = samples;
    }
    let dir = out.or_else(|| cfg.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("symvar-out"));
    let base = path.parent().unwrap_or(Path::new("."));
    let outcome = ops::execute(&cfg, base).map_err(|e| format!("{}: {e}", path.display()))?;
    write_outputs(&dir, &cfg, &outcome)?;
    for m in &outcome.messages {
        println!("{m}");
    }
    println!("{}: {} ({})", cfg.operation.name(), if outcome.passed { "PASS" } else { "FAILED" }, dir.display());
    Ok(outcome.passed)
}

fn list() {
    use symvar::registry::*;
    let rows: [(&str, Vec<&str>); 8] = [
        ("engine", engines().names()),
        ("functional", functionals().names()),
        ("weight", weights().names()),
        ("integrand", integrands().names()),
        ("nonlinearity", nonlinearities().names()),
        ("sequence", sequences().names()),
        ("map", maps().names()),
        ("domain", domains().names()),
    ];
    for (kind, names) in rows {
        println!("{kind}: {}", names.join(", "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out, samples } => run(&config, seed, out, samples),
        Command::Check { config } => load(&config).map(|c| {
            print!("{}", c.to_canonical());
            true
        }),
        Command::List => {
            list();
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
