//! `privacycube`: validate profile directories, run scenarios into notice
//! logs, and serve the live cube.
//!
//! Exit codes: 0 success, 1 configuration or validation failure, 2 runtime
//! or scenario failure. Diagnostics go to stderr; reports and logs go to
//! stdout or `--out`.

use std::fs;
use std::io::{self, IsTerminal, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use privacycube_core::registry::profile_files;
use privacycube_core::{
    load_profile_dir, parse_profile, parse_scenario, run_scenario, write_notice_log, Clock, Registry,
};
use privacycube_service::{ServiceConfig, ServiceError, DEFAULT_PORT};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "privacycube", version, about = "Privacy notices for the smart home, rendered as a cube")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every *.pcp.json profile in a directory.
    Validate {
        dir: PathBuf,
    },
    /// Replay a scenario and write its notice log (JSON lines).
    Run {
        scenario: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        /// `instant`, or `scaled:<factor>` to sleep virtual gaps divided by factor.
        #[arg(long, default_value = "instant")]
        clock: Clock,
        /// Write the log here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long, env = "PRIVACYCUBE_PORT", default_value_t = DEFAULT_PORT,
              value_parser = clap::value_parser!(u16).range(1..))]
        port: u16,
        #[arg(long, default_value = "privacycube-events.jsonl")]
        event_log: PathBuf,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        /// Seconds between keep-alive comments on /api/stream.
        #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u64).range(1..))]
        keep_alive: u64,
    },
}

const CONFIG_FAILURE: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(CONFIG_FAILURE),
            };
        }
    };
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_ansi(io::stderr().is_terminal())
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default_level)))
        .init();

    let result = match cli.command {
        Command::Validate { dir } => validate(&dir),
        Command::Run {
            scenario,
            profiles,
            clock,
            out,
        } => run(&scenario, &profiles, clock, out.as_deref()),
        Command::Serve {
            profiles,
            port,
            event_log,
            host,
            keep_alive,
        } => {
            let mut config = ServiceConfig::new(port, profiles, event_log);
            config.listen = SocketAddr::new(host, port);
            config.keep_alive = Duration::from_secs(keep_alive);
            serve(config)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn config_failure(message: impl ToString) -> Failure {
    Failure {
        code: CONFIG_FAILURE,
        message: message.to_string(),
    }
}

fn runtime_failure(message: impl ToString) -> Failure {
    Failure {
        code: RUNTIME_FAILURE,
        message: message.to_string(),
    }
}

fn validate(dir: &Path) -> Result<(), Failure> {
    let files = profile_files(dir).map_err(config_failure)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut registry = Registry::new();
    for file in &files {
        let bytes = fs::read(file).map_err(|e| config_failure(format!("{}: {e}", file.display())))?;
        let profile = parse_profile(&bytes).map_err(|e| config_failure(format!("{}: {e}", file.display())))?;
        let id = profile.device_id().clone();
        registry
            .register(profile)
            .map_err(|e| config_failure(format!("{}: {e}", file.display())))?;
        let _ = writeln!(out, "OK {} ({id})", file.display());
    }
    let noun = if files.len() == 1 { "profile" } else { "profiles" };
    let _ = writeln!(out, "{} {noun}", files.len());
    Ok(())
}

fn run(scenario_path: &Path, profiles: &Path, clock: Clock, out: Option<&Path>) -> Result<(), Failure> {
    let registry = load_profile_dir(profiles).map_err(config_failure)?;
    let bytes = fs::read(scenario_path).map_err(|e| config_failure(format!("{}: {e}", scenario_path.display())))?;
    let scenario =
        parse_scenario(&bytes).map_err(|e| runtime_failure(format!("{}: {e}", scenario_path.display())))?;
    let log = run_scenario(&scenario, &registry, clock)
        .map_err(|e| runtime_failure(format!("{}: {e}", scenario_path.display())))?;
    let text = write_notice_log(&log);
    match out {
        Some(path) => fs::write(path, &text).map_err(|e| config_failure(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .lock()
            .write_all(&text)
            .map_err(|e| runtime_failure(format!("writing notice log: {e}"))),
    }
}

fn serve(config: ServiceConfig) -> Result<(), Failure> {
    config.validate().map_err(config_failure)?;
    let registry = load_profile_dir(&config.profile_dir).map_err(config_failure)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(runtime_failure)?;
    runtime
        .block_on(privacycube_service::serve(config, registry))
        .map_err(|e| match e {
            ServiceError::Serve(_) => runtime_failure(e),
            startup => config_failure(startup),
        })
}
