use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meanfield_cli::{execute, CliError, Command, ExperimentConfig};

const OUTPUT_HELP: &str = "\
Outputs (under --out):
  report.json          config echo, per-repetition metrics, mean/stderr, diagnostics,
                       wall-clock, version and input hash
  metrics.csv          repetition,seed,metric,value  (repetition 'all' = shared values)
  profile_rep<r>.csv   parisi: level,t_start,t_end,gamma
  pde_rep<r>.csv       parisi --dump-pde: t,x,phi,dphi,d2phi
  iamp_rep<r>.csv      iamp: t,norm,orthogonality,energy
  thresholds.csv       spiked: prior,lambda,gamma_alg,rho_alg,gamma_bayes,rho_bayes
  overlaps_rep<r>.csv  spiked --n: lambda,step,overlap,predicted
  compare_rep<r>.csv   amp-se: step,quantity,empirical,predicted,stderr
  beliefs_rep<r>.csv   bp: vertex,state,belief

Environment: MEANFIELD_THREADS sets the worker count (default: all cores).
Exit codes: 0 ok, 1 i/o or failed diagnostics, 2 usage, 3 resource limit, 4 numeric failure.";

#[derive(Parser)]
#[command(name = "meanfield", version, about = "Mean-field spin glass experiments", after_help = OUTPUT_HELP)]
struct Cli {
    /// Output directory; nothing is written when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Master seed; repetition r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of repetitions.
    #[arg(long = "seeds", alias = "repetitions", default_value_t = 1)]
    seeds: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimize the Parisi functional over K-level step profiles.
    Parisi {
        #[command(flatten)]
        common: Common,
        /// Mixing polynomial as coeff:degree pairs, e.g. "0.5:2,1:4".
        #[arg(long)]
        xi: Option<String>,
        /// ising | spherical
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long)]
        rsb: Option<usize>,
        /// Space intervals of the PDE grid.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        max_evals: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        dump_pde: bool,
    },
    /// Incremental AMP on random instances.
    Iamp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        xi: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        /// spherical | parisi
        #[arg(long)]
        control: Option<String>,
        #[arg(long)]
        rsb: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        max_evals: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Also report the spectral baseline on the same matrix (SK only).
        #[arg(long)]
        baseline: bool,
    },
    /// Spiked-matrix thresholds and Bayes AMP.
    Spiked {
        #[command(flatten)]
        common: Common,
        /// rademacher | gaussian | sparse:eps | twopoint:a:b:p | mean:m
        #[arg(long)]
        prior: Option<String>,
        /// Comma-separated signal strengths.
        #[arg(long, value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        /// Dimension for Bayes AMP runs; scalar thresholds only when absent.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// AMP against its state evolution.
    AmpSe {
        #[command(flatten)]
        common: Common,
        /// tanh | identity | table
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        gain: Option<f64>,
        /// Piecewise-linear knots "x:y,x:y,...".
        #[arg(long)]
        table: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        mc_samples: Option<usize>,
        /// Drop the Onsager correction (negative control).
        #[arg(long)]
        no_onsager: bool,
        /// quadrature | monte-carlo
        #[arg(long)]
        se_method: Option<String>,
    },
    /// Belief propagation on a model file or a random tree.
    Bp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        alphabet: Option<usize>,
        #[arg(long)]
        max_degree: Option<usize>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        damping: Option<f64>,
    },
    /// Exact ground state and free energies by enumeration.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        beta: Option<Vec<f64>>,
        /// Dense symmetric coupling matrix, one row per line.
        #[arg(long)]
        matrix: Option<String>,
    },
    /// Run a JSON experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn base(command: Command, common: &Common) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(command);
    c.seed = common.seed;
    c.repetitions = common.seeds;
    c
}

fn some(b: bool) -> Option<bool> {
    b.then_some(true)
}

fn to_config(cmd: Cmd) -> Result<ExperimentConfig, CliError> {
    Ok(match cmd {
        Cmd::Parisi { common, xi, boundary, rsb, grid, max_evals, restarts, dump_pde } => ExperimentConfig {
            xi,
            boundary,
            rsb,
            grid,
            max_evals,
            restarts,
            dump_pde: some(dump_pde),
            ..base(Command::Parisi, &common)
        },
        Cmd::Iamp { common, xi, n, delta, control, rsb, grid, max_evals, restarts, baseline } => ExperimentConfig {
            xi,
            n,
            delta,
            control,
            rsb,
            grid,
            max_evals,
            restarts,
            baseline: some(baseline),
            ..base(Command::Iamp, &common)
        },
        Cmd::Spiked { common, prior, lambda_grid, n, steps } => {
            ExperimentConfig { prior, lambda_grid, n, steps, ..base(Command::Spiked, &common) }
        }
        Cmd::AmpSe { common, schedule, gain, table, n, steps, mc_samples, no_onsager, se_method } => ExperimentConfig {
            schedule,
            gain,
            table,
            n,
            steps,
            mc_samples,
            onsager: no_onsager.then_some(false),
            se_method,
            ..base(Command::AmpSe, &common)
        },
        Cmd::Bp { common, model, n, alphabet, max_degree, scale, max_iters, tol, damping } => ExperimentConfig {
            model,
            n,
            alphabet,
            max_degree,
            scale,
            max_iters,
            tol,
            damping,
            ..base(Command::Bp, &common)
        },
        Cmd::Oracle { common, n, beta, matrix } => {
            ExperimentConfig { n, beta, matrix, ..base(Command::Oracle, &common) }
        }
        Cmd::Run { config } => std::fs::read_to_string(&config)?.parse()?,
    })
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Ok(t) = std::env::var("MEANFIELD_THREADS") {
        let t: usize = t.parse().map_err(|_| CliError::Usage(format!("MEANFIELD_THREADS='{t}' is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let mut config = to_config(cli.cmd)?;
    if let Some(out) = &cli.out {
        config.out = Some(out.to_string_lossy().into_owned());
    }
    let outcome = execute(&config)?;
    if let Some(dir) = &config.out {
        outcome.write_to(dir.as_ref())?;
    }
    println!("{}", outcome.summary);
    for d in outcome.report.diagnostics.iter().filter(|d| !d.passed) {
        eprintln!("diagnostic failed: {} ({})", d.name, d.detail);
    }
    Ok(outcome.report.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
