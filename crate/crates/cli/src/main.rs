mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use xyfisher::exec::Executor;
use xyfisher::scan::{self, Metadata, ScanSpec, PRESETS};

use config::{Format, ScanArgs};

/// Fisher-information scans of the anisotropic XY chain with DM interaction.
#[derive(Debug, Parser)]
#[command(name = "xyfisher", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a parameter scan and write CSV or JSON records.
    Scan(Box<ScanArgs>),
    /// List the named presets with their mode and grid.
    Presets,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scan(args) => scan_command(&args),
        Command::Presets => {
            for name in PRESETS {
                let spec = ScanSpec::preset(name)?;
                println!(
                    "{name:<8} {:<16} J={} gamma={:?} D={}",
                    spec.mode.name(),
                    spec.j,
                    spec.gamma,
                    spec.d
                );
            }
            Ok(())
        }
    }
}

fn scan_command(args: &ScanArgs) -> Result<()> {
    let resolved = config::resolve(args)?;
    let output = scan::run(&resolved.spec, &Executor::with_threads(resolved.threads))?;
    let s = &output.summary;
    eprintln!(
        "{} points, {} rows; excluded {} near-critical and {} zero-coupling points; {} rows with errors, {} oracle failures",
        s.points, s.rows, s.excluded_critical, s.excluded_zero_coupling, s.failed_rows, s.oracle_failures
    );

    let sink: Box<dyn Write> = match &resolved.out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match resolved.format {
        Format::Csv => scan::write_csv(&output.records, &mut sink)?,
        Format::Json => {
            let timestamp = resolved.timestamp.then(|| {
                let secs = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                format!("{secs}")
            });
            scan::write_json(&output, &Metadata::new(&resolved.spec, timestamp), &mut sink)?;
        }
    }
    sink.flush().context("flushing output")?;
    Ok(())
}
