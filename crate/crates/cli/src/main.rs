use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heun_spectra::Error;
use serde_json::json;

mod commands;
mod config;
mod output;
mod svg;

use commands::Status;

type Runner = fn(&JobConfig, &mut OutDir) -> Result<Status, CliError>;
use config::JobConfig;
use output::OutDir;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::RepeatedRoots | Error::DegreeTooLarge { .. } | Error::Unsupported(_) => {
                CliError::Usage(e.to_string())
            }
            e => CliError::Numerical(e),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Numerical(_) => "numerical",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Numerical(e) => e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "heun-spectra", version, about = "Heine-Stieltjes spectra, root loci and quadratic differentials of the Heun equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Van Vleck and Stieltjes roots for each degree.
    Spectrum(Common),
    /// The limiting root locus with the spectra overlaid.
    Locus(Common),
    /// Singular graph of the quadratic differential and its measures.
    Trajectories(Common),
    /// Discretized measures and their Cauchy-transform gaps.
    Measures(Common),
    /// The acceptance suite.
    Verify(Common),
}

fn load(common: &Common) -> Result<JobConfig, CliError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Usage(format!("{}: {e}", common.config.display())))?;
    let mut cfg = JobConfig::parse(&text)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if common.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, Runner) = match &cli.command {
        Command::Spectrum(c) => (c, commands::spectrum),
        Command::Locus(c) => (c, commands::locus),
        Command::Trajectories(c) => (c, commands::trajectories),
        Command::Measures(c) => (c, commands::measures),
        Command::Verify(c) => (c, commands::verify),
    };
    let mut out_dir = None;
    let result = (|| -> Result<Status, CliError> {
        let cfg = load(common)?;
        if let Some(k) = common.threads {
            rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        let mut out = OutDir::create(&cfg.output_dir)?;
        out.json("effective-config.json", &cfg)?;
        println!("{}", serde_json::to_string(&cfg).expect("config serializes"));
        out_dir = Some(cfg.output_dir.clone());
        let status = run(&cfg, &mut out)?;
        for p in &out.written {
            println!("wrote {}", p.display());
        }
        Ok(status)
    })();
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Warning(w)) => {
            eprintln!("warning: {w}");
            ExitCode::SUCCESS
        }
        Ok(Status::Failed(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(1)
        }
        Err(e) => {
            let report = json!({ "error": e.kind(), "message": e.message(), "exit_code": e.code() });
            eprintln!("{report}");
            if let Some(dir) = out_dir {
                if let Ok(mut out) = OutDir::create(&dir) {
                    let _ = out.json("error.json", &report);
                }
            }
            ExitCode::from(e.code())
        }
    }
}
