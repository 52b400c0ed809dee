use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use syk_sre_cli::{parse_config, run, Mode, RunConfig, THREADS_ENV};

/// Stabilizer Renyi entropy of coupled SYK clusters.
///
/// Exit codes: 0 all points converged, 1 partial or failed run, 2 config error.
#[derive(Debug, Parser)]
#[command(name = "syk-sre", version)]
struct Args {
    /// ed | thermal | sre | sweep | check
    mode: String,
    /// key = value run configuration (optional for `check`)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Linear-algebra threads; falls back to $SYK_SRE_THREADS, then 1
    #[arg(long)]
    threads: Option<usize>,
}

fn thread_count(flag: Option<usize>) -> Result<usize, String> {
    if let Some(n) = flag {
        return Ok(n.max(1));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(|n| n.max(1)).map_err(|_| format!("{THREADS_ENV}='{v}' is not a count")),
        Err(_) => Ok(1),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mode: Mode = match args.mode.parse() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let threads = match thread_count(args.threads) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    faer::set_global_parallelism(if threads == 1 { faer::Par::Seq } else { faer::Par::rayon(threads) });

    let cfg: RunConfig = match (&args.config, mode) {
        (None, Mode::Check) => RunConfig::check_default(),
        (None, _) => {
            eprintln!("mode {} needs --config", mode.as_str());
            return ExitCode::from(2);
        }
        (Some(path), _) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            match parse_config(&text) {
                Ok(c) if c.mode == mode => c,
                Ok(c) => {
                    eprintln!("config says mode = {} but the command line says {}", c.mode.as_str(), mode.as_str());
                    return ExitCode::from(2);
                }
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            }
        }
    };
    let out = args.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let outcome = run(&cfg, &out);
    print!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
