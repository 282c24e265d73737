//! `carleson-lab`: runs the verification harnesses and writes JSON/CSV artifacts.
//!
//! Exit status: 0 on success, 1 when a checked metric fails, 2 on a configuration
//! or runtime error.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::Overrides;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "carleson-lab", version, about = "Numerical laboratory for the restricted quadratic Carleson operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Major-arc exponent, in (0, 1/7).
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    qmax: Option<u64>,
    #[arg(long, global = true)]
    jmin: Option<i32>,
    #[arg(long, global = true)]
    jmax: Option<i32>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    radius: Option<usize>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Directory for the artifacts; the JSON report goes to stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// JSON file with any of the settings above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldArg {
    M,
    L,
    E,
}

/// Where the modulation set comes from.
#[derive(Args, Debug, Clone, Serialize)]
pub struct SetArgs {
    /// Cantor set with base D and depth.
    #[arg(long, num_args = 2, value_names = ["D", "DEPTH"], conflicts_with = "lambda_file")]
    pub cantor: Option<Vec<u32>>,
    /// JSON array of decimal strings.
    #[arg(long)]
    pub lambda_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Complete Gauss sums for Q <= qmax: CSV of S(A,B,Q), exact law and decay checks.
    Gauss,
    /// Reduced triples of one dyadic shell.
    Shell {
        #[arg(long)]
        s: i32,
    },
    /// M_j, L_j or E_j on a grid x grid sample of the torus.
    MultiplierSample {
        #[arg(long)]
        j: i32,
        #[arg(long, value_enum, default_value = "m")]
        field: FieldArg,
    },
    /// Decay of the approximation error E_j = M_j - L_j over jmin..jmax.
    ApproxError,
    /// Cantor set points and covering dimension estimate.
    Cantor {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        depth: u32,
    },
    /// Covering certificate for a modulation set at scale t.
    Cover {
        #[command(flatten)]
        set: SetArgs,
        /// t = 2^{-E}.
        #[arg(long, conflicts_with = "t")]
        t_exp: Option<i32>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Truncated maximal operator C_Λ^R applied to one signal.
    Maximal {
        #[command(flatten)]
        set: SetArgs,
        /// Signal JSON {origin, samples: [[re, im], ...]}.
        #[arg(long, conflicts_with = "length")]
        signal: Option<PathBuf>,
        /// Length of a seeded Gaussian signal, used when no file is given.
        #[arg(long)]
        length: Option<usize>,
    },
    /// Empirical lower bounds on the norm of C_Λ over growing lengths.
    NormProbe {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<usize>>,
        /// R = factor * length.
        #[arg(long, default_value_t = 4)]
        radius_factor: usize,
    },
    /// Growth of Bourgain's multi-frequency maximal function in N.
    BourgainGrowth {
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, default_value_t = 8)]
        per_octave: u32,
    },
    /// Growth of the oscillatory maximal operator for N in {4,16,64}.
    OscillatoryGrowth {
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, default_value_t = 6)]
        octaves: u32,
        #[arg(long, default_value_t = 8)]
        per_octave: u32,
    },
    /// Decay in l of sup over λ of the single-scale pieces.
    SingleL {
        #[arg(long, value_delimiter = ',')]
        ls: Option<Vec<i32>>,
        #[arg(long, default_value_t = 8)]
        per_octave: u32,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gauss => "gauss",
            Command::Shell { .. } => "shell",
            Command::MultiplierSample { .. } => "multiplier-sample",
            Command::ApproxError => "approx-error",
            Command::Cantor { .. } => "cantor",
            Command::Cover { .. } => "cover",
            Command::Maximal { .. } => "maximal",
            Command::NormProbe { .. } => "norm-probe",
            Command::BourgainGrowth { .. } => "bourgain-growth",
            Command::OscillatoryGrowth { .. } => "oscillatory-growth",
            Command::SingleL { .. } => "single-l",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let c = cli.common;
    let flags = Overrides {
        epsilon: c.epsilon,
        seed: c.seed,
        tol: c.tol,
        qmax: c.qmax,
        jmin: c.jmin,
        jmax: c.jmax,
        grid: c.grid,
        radius: c.radius,
        trials: c.trials,
        output: c.output,
    };
    let prepared = (|| {
        config::threads_from_env()?;
        let file = c.config.as_deref().map(config::load_file).transpose()?;
        let cfg = config::resolve(cli.command.name(), file, flags)?;
        if let Some(dir) = &cfg.output {
            std::fs::create_dir_all(dir).map_err(|e| format!("output {}: {e}", dir.display()))?;
        }
        Ok::<_, String>(cfg)
    })();
    let cfg = match prepared {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli.command, &cfg) {
        Ok(outcome) => {
            let failed: Vec<_> = outcome.checks.iter().filter(|c| !c.pass).collect();
            for f in &failed {
                eprintln!("FAIL {}: {} (threshold {})", f.metric, f.value, f.threshold);
            }
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
