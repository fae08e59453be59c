use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coinflip_cli::{
    cmd_bounds, cmd_fair_region, cmd_montecarlo, cmd_pdf_theta, cmd_prob, cmd_prob_aggregate,
    cmd_simulate, open_output, CliError, Law, Overrides, RunConfig,
};

/// Coin-toss dynamics with nutation: simulation, envelopes and heads probabilities.
#[derive(Parser, Debug)]
#[command(name = "coinflip", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Read angle flags in degrees. Config file angles stay in radians.
    #[arg(long, global = true)]
    degrees: bool,
    #[arg(long, global = true)]
    ix: Option<f64>,
    #[arg(long, global = true)]
    iy: Option<f64>,
    #[arg(long, global = true)]
    iz: Option<f64>,
    /// Angular momentum magnitude.
    #[arg(long, global = true)]
    l_mag: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Polar angle of L from vertical; defaults to theta0.
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi0: Option<f64>,
    #[arg(long, global = true)]
    theta0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    psi0: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Largest accepted quadrature error estimate.
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one toss and write the trajectory as CSV.
    Simulate,
    /// Nutation envelope and fair-region flag as JSON.
    Bounds,
    /// Limiting heads probability as JSON.
    Prob {
        /// Use the time-averaged orbit law instead of the arcsine law.
        #[arg(long)]
        time_average: bool,
    },
    /// Heads probability averaged over uniform phi0 and a theta0 sample file.
    ProbAggregate {
        /// CSV with header `theta0_radians[,weight]`.
        #[arg(long)]
        theta0_file: PathBuf,
        /// Number of phi0 grid points.
        #[arg(long)]
        phi0_grid: Option<usize>,
    },
    /// Monte Carlo estimate and equidistribution statistics as JSON.
    Montecarlo {
        #[arg(long)]
        n: Option<usize>,
        /// Evaluation time.
        #[arg(long)]
        t_eval: Option<f64>,
        /// Mean of the truncated Gaussian for |L|.
        #[arg(long)]
        mean: Option<f64>,
        #[arg(long)]
        stddev: Option<f64>,
        /// Integrate each draw separately with this step.
        #[arg(long)]
        per_draw_dt: Option<f64>,
    },
    /// Fair-region indicator over a (phi0, theta0) grid as CSV.
    FairRegion {
        #[arg(long)]
        grid_phi: Option<usize>,
        #[arg(long)]
        grid_theta: Option<usize>,
    },
    /// Density of theta on its envelope as CSV.
    PdfTheta {
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = cli.common;
    let mut ov = Overrides {
        degrees: c.degrees,
        ix: c.ix,
        iy: c.iy,
        iz: c.iz,
        l_mag: c.l_mag,
        alpha: c.alpha,
        beta: c.beta,
        phi0: c.phi0,
        theta0: c.theta0,
        psi0: c.psi0,
        dt: c.dt,
        t_end: c.t_end,
        quad_tol: c.quad_tol,
        seed: c.seed,
        out: c.out,
        ..Default::default()
    };
    let mut per_draw_dt = None;
    let mut theta0_file = None;
    let mut law = Law::Arcsine;
    match &cli.command {
        Command::Prob { time_average } => {
            if *time_average {
                law = Law::TimeAverage;
            }
        }
        Command::ProbAggregate { theta0_file: f, phi0_grid } => {
            theta0_file = Some(f.clone());
            ov.phi0_grid = *phi0_grid;
        }
        Command::Montecarlo {
            n,
            t_eval,
            mean,
            stddev,
            per_draw_dt: d,
        } => {
            ov.n = *n;
            ov.t_eval = *t_eval;
            ov.mean = *mean;
            ov.stddev = *stddev;
            per_draw_dt = *d;
        }
        Command::FairRegion { grid_phi, grid_theta } => {
            ov.grid_phi = *grid_phi;
            ov.grid_theta = *grid_theta;
        }
        Command::PdfTheta { samples } => ov.samples = *samples,
        Command::Simulate | Command::Bounds => {}
    }

    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    ov.apply(&mut cfg);

    let mut out = open_output(&cfg)?;
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg, &mut out),
        Command::Bounds => cmd_bounds(&cfg, &mut out),
        Command::Prob { .. } => cmd_prob(&cfg, law, &mut out),
        Command::ProbAggregate { .. } => {
            cmd_prob_aggregate(&cfg, theta0_file.as_deref().expect("set above"), &mut out)
        }
        Command::Montecarlo { .. } => cmd_montecarlo(&cfg, per_draw_dt, &mut out),
        Command::FairRegion { .. } => cmd_fair_region(&cfg, &mut out),
        Command::PdfTheta { .. } => cmd_pdf_theta(&cfg, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coinflip: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
