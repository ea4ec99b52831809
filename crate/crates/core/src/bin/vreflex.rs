use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use vreflex::session::{self, ServeOptions, DEFAULT_TICK_MS};
use vreflex::{compare_csv, parse_scenario, run, Scenario};

#[derive(Parser)]
#[command(name = "vreflex", version, about = "Virtual reflex behavior engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace as CSV.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Output file; the trace goes to stdout when omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare a trace against an expected CSV.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        expected: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Serve live sessions over newline-delimited JSON on TCP.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long = "tick-ms", default_value_t = DEFAULT_TICK_MS)]
        tick_ms: u64,
        /// Append every consumed input to this file.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

const EXIT_INPUT: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn load(path: &Path) -> Result<Scenario, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read scenario {}: {e}", path.display());
        ExitCode::from(EXIT_INPUT)
    })?;
    parse_scenario(&text).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(EXIT_INPUT)
    })
}

fn cmd_run(scenario: &Path, trace: Option<&Path>) -> ExitCode {
    let s = match load(scenario) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let csv = match run(&s) {
        Ok(t) => t.to_csv(),
        Err(e) => {
            eprintln!("error: {}: {e}", scenario.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match trace {
        Some(path) => {
            if let Err(e) = std::fs::write(path, csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}

fn cmd_verify(trace: &Path, expected: &Path, tol: f64) -> ExitCode {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| {
            eprintln!("error: cannot read {}: {e}", p.display());
            ExitCode::from(EXIT_RUNTIME)
        })
    };
    let (got, want) = match (read(trace), read(expected)) {
        (Ok(g), Ok(w)) => (g, w),
        (Err(c), _) | (_, Err(c)) => return c,
    };
    match compare_csv(&got, &want, tol) {
        Ok(mismatches) if mismatches.is_empty() => {
            println!("ok: {} matches {}", trace.display(), expected.display());
            ExitCode::SUCCESS
        }
        Ok(mismatches) => {
            for m in &mismatches {
                println!("{m}");
            }
            println!("{} mismatching cell(s)", mismatches.len());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn cmd_serve(scenario: &Path, port: u16, tick_ms: u64, record: Option<PathBuf>) -> ExitCode {
    let s = match load(scenario) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Err(e) = session::Session::new(&s) {
        eprintln!("error: {}: {e}", scenario.display());
        return ExitCode::from(EXIT_INPUT);
    }
    let runtime = match tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
    {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let opts = ServeOptions {
        tick: Duration::from_millis(tick_ms.max(1)),
        record,
    };
    eprintln!("serving {} on 127.0.0.1:{port}", s.name);
    match runtime.block_on(session::serve(s, port, opts)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, trace } => cmd_run(&scenario, trace.as_deref()),
        Command::Verify {
            trace,
            expected,
            tol,
        } => cmd_verify(&trace, &expected, tol),
        Command::Serve {
            scenario,
            port,
            tick_ms,
            record,
        } => cmd_serve(&scenario, port, tick_ms, record),
    }
}
