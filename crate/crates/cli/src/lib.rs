//! Configuration and command bodies for the `coinflip` binary.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use coinflip_core::analysis::{self, nutation_bounds, theta_pdf};
use coinflip_core::dynamics::{self, InertiaTensor, InitialConditions};
use coinflip_core::montecarlo::{self, MagnitudeDensity, McSetup, Sampler};
use coinflip_core::probability::{self, HeadsProbability};
use coinflip_core::{MomentumDirection, ThetaDensity};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<coinflip_core::Error> for CliError {
    fn from(e: coinflip_core::Error) -> Self {
        match e {
            coinflip_core::Error::Integration { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Principal moments, g cm^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InertiaConfig {
    pub ix: f64,
    pub iy: f64,
    pub iz: f64,
}

impl Default for InertiaConfig {
    fn default() -> Self {
        Self {
            ix: 6.68,
            iy: 7.35,
            iz: 13.24,
        }
    }
}

/// Release state. Angles in radians; `beta` defaults to `theta0`
/// (heads straight up).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub l_mag: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub phi0: f64,
    pub theta0: f64,
    pub psi0: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            l_mag: 1000.0,
            alpha: 0.0,
            beta: None,
            phi0: FRAC_PI_4,
            theta0: FRAC_PI_3,
            psi0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Largest accepted quadrature error estimate.
    pub quad_tol: f64,
    pub mc_n: usize,
    pub mc_seed: u64,
    pub mc_t_eval: f64,
    pub density_mean: f64,
    pub density_stddev: f64,
    pub phi0_grid: usize,
    pub grid_phi: usize,
    pub grid_theta: usize,
    pub pdf_samples: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt: 1e-5,
            t_end: 1.0,
            quad_tol: 1e-8,
            mc_n: 100_000,
            mc_seed: 1,
            mc_t_eval: 10.0,
            density_mean: 1000.0,
            density_stddev: 100.0,
            phi0_grid: 64,
            grid_phi: 256,
            grid_theta: 256,
            pdf_samples: 4096,
        }
    }
}

/// Everything a command needs; the JSON config file has this shape.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub inertia: InertiaConfig,
    pub initial: InitialConfig,
    pub numerics: NumericsConfig,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    pub fn inertia(&self) -> Result<InertiaTensor> {
        let c = &self.inertia;
        Ok(InertiaTensor::new(c.ix, c.iy, c.iz)?)
    }

    pub fn beta(&self) -> f64 {
        self.initial.beta.unwrap_or(self.initial.theta0)
    }

    pub fn direction(&self) -> MomentumDirection {
        MomentumDirection::new(self.initial.alpha, self.beta())
    }

    fn check_beta(&self) -> Result<()> {
        let beta = self.beta();
        if !(0.0..=std::f64::consts::PI).contains(&beta) {
            return Err(CliError::Invalid(format!("beta must lie in [0, pi], got {beta}")));
        }
        Ok(())
    }

    pub fn initial_conditions(&self) -> Result<InitialConditions> {
        self.check_beta()?;
        let i = &self.initial;
        Ok(InitialConditions::new(i.l_mag, self.direction(), i.phi0, i.theta0, i.psi0)?)
    }

    fn angles(&self) -> Result<(f64, f64)> {
        let (phi0, theta0) = (self.initial.phi0, self.initial.theta0);
        if !phi0.is_finite() || !(0.0..=std::f64::consts::PI).contains(&theta0) {
            return Err(CliError::Invalid(format!(
                "need finite phi0 and theta0 in [0, pi], got ({phi0}, {theta0})"
            )));
        }
        Ok((phi0, theta0))
    }

    pub fn density(&self) -> Result<MagnitudeDensity> {
        Ok(MagnitudeDensity::new(
            self.numerics.density_mean,
            self.numerics.density_stddev,
        )?)
    }

    pub fn mc_setup(&self) -> Result<McSetup> {
        let (phi0, theta0) = self.angles()?;
        let n = &self.numerics;
        Ok(McSetup::new(
            self.inertia()?,
            phi0,
            theta0,
            self.initial.psi0,
            self.density()?,
            n.mc_n,
            n.mc_t_eval,
            n.mc_seed,
        ))
    }
}

/// Command-line values that replace config fields. Angles are in the unit
/// selected by `degrees`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub degrees: bool,
    pub ix: Option<f64>,
    pub iy: Option<f64>,
    pub iz: Option<f64>,
    pub l_mag: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub phi0: Option<f64>,
    pub theta0: Option<f64>,
    pub psi0: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub quad_tol: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub t_eval: Option<f64>,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub phi0_grid: Option<usize>,
    pub grid_phi: Option<usize>,
    pub grid_theta: Option<usize>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let angle = |v: f64| if self.degrees { v.to_radians() } else { v };
        macro_rules! set {
            ($src:ident => $dst:expr) => {
                if let Some(v) = self.$src.clone() {
                    $dst = v;
                }
            };
            ($src:ident => angle $dst:expr) => {
                if let Some(v) = self.$src {
                    $dst = angle(v);
                }
            };
        }
        set!(ix => cfg.inertia.ix);
        set!(iy => cfg.inertia.iy);
        set!(iz => cfg.inertia.iz);
        set!(l_mag => cfg.initial.l_mag);
        set!(alpha => angle cfg.initial.alpha);
        if let Some(b) = self.beta {
            cfg.initial.beta = Some(angle(b));
        }
        set!(phi0 => angle cfg.initial.phi0);
        set!(theta0 => angle cfg.initial.theta0);
        set!(psi0 => angle cfg.initial.psi0);
        set!(dt => cfg.numerics.dt);
        set!(t_end => cfg.numerics.t_end);
        set!(quad_tol => cfg.numerics.quad_tol);
        set!(n => cfg.numerics.mc_n);
        set!(seed => cfg.numerics.mc_seed);
        set!(t_eval => cfg.numerics.mc_t_eval);
        set!(mean => cfg.numerics.density_mean);
        set!(stddev => cfg.numerics.density_stddev);
        set!(phi0_grid => cfg.numerics.phi0_grid);
        set!(grid_phi => cfg.numerics.grid_phi);
        set!(grid_theta => cfg.numerics.grid_theta);
        set!(samples => cfg.numerics.pdf_samples);
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
    }
}

/// Opens the configured output file, or stdout.
pub fn open_output(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(io_err(format!("creating {}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<W: Write + ?Sized>(out: &mut W, value: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io {
        context: "writing JSON".into(),
        source: e.into(),
    })?;
    writeln!(out).map_err(io_err("writing output"))?;
    out.flush().map_err(io_err("writing output"))
}

pub fn cmd_simulate<W: Write + ?Sized>(cfg: &RunConfig, out: &mut W) -> Result<()> {
    let inertia = cfg.inertia()?;
    let init = cfg.initial_conditions()?;
    let traj = dynamics::integrate(&inertia, &init, cfg.numerics.t_end, cfg.numerics.dt)?;
    traj.write_csv(&mut *out).map_err(io_err("writing trajectory"))?;
    out.flush().map_err(io_err("writing trajectory"))
}

pub fn cmd_bounds<W: Write + ?Sized>(cfg: &RunConfig, out: &mut W) -> Result<()> {
    let inertia = cfg.inertia()?;
    let (phi0, theta0) = cfg.angles()?;
    let b = nutation_bounds(&inertia, phi0, theta0);
    let fair = analysis::in_fair_region(&inertia, phi0, theta0);
    write_json(
        out,
        &json!({
            "c1": b.c1,
            "c2": b.c2,
            "theta_m": b.theta_m,
            "theta_M": b.theta_max,
            "case_tag": b.case.as_str(),
            "fair": fair,
        }),
    )
}

/// Which limiting law of `theta` the probability integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    /// Arcsine law of `csc^2 theta` (uniform `phi`).
    Arcsine,
    /// Orbit sampled uniformly in time.
    TimeAverage,
}

impl Law {
    fn as_str(self) -> &'static str {
        match self {
            Law::Arcsine => "arcsine",
            Law::TimeAverage => "time-average",
        }
    }
}

fn check_quadrature(hp: &HeadsProbability, tol: f64) -> Result<()> {
    if hp.abs_error_estimate > tol {
        return Err(CliError::Numerical(format!(
            "quadrature error estimate {:.3e} exceeds target {tol:.3e}",
            hp.abs_error_estimate
        )));
    }
    Ok(())
}

pub fn cmd_prob<W: Write + ?Sized>(cfg: &RunConfig, law: Law, out: &mut W) -> Result<()> {
    let inertia = cfg.inertia()?;
    let (phi0, theta0) = cfg.angles()?;
    cfg.check_beta()?;
    let beta = cfg.beta();
    let hp = match law {
        Law::Arcsine => probability::heads_probability(&inertia, beta, phi0, theta0),
        Law::TimeAverage => probability::heads_probability_time_average(&inertia, beta, phi0, theta0),
    };
    check_quadrature(&hp, cfg.numerics.quad_tol)?;
    write_json(
        out,
        &json!({
            "p": hp.p,
            "abs_error_estimate": hp.abs_error_estimate,
            "method_tag": hp.method.as_str(),
            "parameters": {
                "ix": cfg.inertia.ix, "iy": cfg.inertia.iy, "iz": cfg.inertia.iz,
                "beta": beta, "phi0": phi0, "theta0": theta0,
                "law": law.as_str(),
            },
        }),
    )
}

pub fn cmd_prob_aggregate<W: Write + ?Sized>(cfg: &RunConfig, theta0_file: &Path, out: &mut W) -> Result<()> {
    let inertia = cfg.inertia()?;
    let file = File::open(theta0_file).map_err(io_err(format!("opening {}", theta0_file.display())))?;
    let samples = probability::read_theta0_csv(BufReader::new(file))?;
    let hp = probability::aggregate_probability(&inertia, &samples, cfg.numerics.phi0_grid)?;
    check_quadrature(&hp, cfg.numerics.quad_tol)?;
    write_json(
        out,
        &json!({
            "p": hp.p,
            "abs_error_estimate": hp.abs_error_estimate,
            "method_tag": hp.method.as_str(),
            "parameters": {
                "ix": cfg.inertia.ix, "iy": cfg.inertia.iy, "iz": cfg.inertia.iz,
                "theta0_samples": samples.len(),
                "phi0_grid": cfg.numerics.phi0_grid,
                "theta0_file": theta0_file.display().to_string(),
            },
        }),
    )
}

pub fn cmd_montecarlo<W: Write + ?Sized>(cfg: &RunConfig, per_draw_dt: Option<f64>, out: &mut W) -> Result<()> {
    cfg.check_beta()?;
    let mut setup = cfg.mc_setup()?;
    if let Some(dt) = per_draw_dt {
        setup.sampler = Sampler::PerDraw { dt };
    }
    let report = montecarlo::run_report(&setup, &cfg.direction())?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["parameters"] = json!({
        "ix": cfg.inertia.ix, "iy": cfg.inertia.iy, "iz": cfg.inertia.iz,
        "beta": cfg.beta(), "phi0": setup.phi0, "theta0": setup.theta0, "psi0": setup.psi0,
        "density": setup.density.kind(),
        "density_mean": setup.density.mean(),
        "density_stddev": setup.density.stddev(),
        "sampler": match setup.sampler {
            Sampler::SharedScaled => "shared-scaled".to_string(),
            Sampler::PerDraw { dt } => format!("per-draw dt={dt:e}"),
        },
    });
    write_json(out, &value)
}

pub fn cmd_fair_region<W: Write + ?Sized>(cfg: &RunConfig, out: &mut W) -> Result<()> {
    let inertia = cfg.inertia()?;
    let (n_phi, n_theta) = (cfg.numerics.grid_phi, cfg.numerics.grid_theta);
    if n_phi == 0 || n_theta < 2 {
        return Err(CliError::Invalid(format!(
            "grid needs at least 1 phi0 and 2 theta0 values, got {n_phi}x{n_theta}"
        )));
    }
    let w = io_err("writing grid");
    let mut run = || -> io::Result<()> {
        writeln!(out, "phi0,theta0,fair")?;
        for c in analysis::fair_region_grid(&inertia, n_phi, n_theta) {
            writeln!(out, "{:.16e},{:.16e},{}", c.phi0, c.theta0, u8::from(c.fair))?;
        }
        out.flush()
    };
    run().map_err(w)
}

pub fn cmd_pdf_theta<W: Write + ?Sized>(cfg: &RunConfig, out: &mut W) -> Result<()> {
    let inertia = cfg.inertia()?;
    let (phi0, theta0) = cfg.angles()?;
    let n = cfg.numerics.pdf_samples;
    if n < 2 {
        return Err(CliError::Invalid(format!("need at least 2 pdf samples, got {n}")));
    }
    let bounds = nutation_bounds(&inertia, phi0, theta0);
    let density = theta_pdf(&bounds);
    let w = io_err("writing density");
    let mut run = || -> io::Result<()> {
        writeln!(out, "y,f_theta")?;
        match density {
            // all mass at one angle
            ThetaDensity::PointMass { theta } => writeln!(out, "{theta:.16e},inf")?,
            ThetaDensity::Continuous { theta_m, theta_max } => {
                // Chebyshev nodes crowd the integrable endpoint poles
                let mid = 0.5 * (theta_m + theta_max);
                let half = 0.5 * (theta_max - theta_m);
                for k in 0..n {
                    let u = (k as f64 + 0.5) * std::f64::consts::PI / n as f64;
                    let y = mid - half * u.cos();
                    writeln!(out, "{y:.16e},{:.16e}", density.pdf(y))?;
                }
            }
        }
        out.flush()
    };
    run().map_err(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_the_half_dollar() {
        let c = RunConfig::default();
        assert_eq!((c.inertia.ix, c.inertia.iy, c.inertia.iz), (6.68, 7.35, 13.24));
        assert_eq!(c.beta(), c.initial.theta0);
        assert!(c.inertia().is_ok());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = RunConfig::from_json(r#"{"initial": {"theta0": 1.0}}"#).unwrap();
        assert_eq!(c.initial.theta0, 1.0);
        assert_eq!(c.initial.l_mag, 1000.0);
        assert_eq!(c.numerics, NumericsConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = RunConfig::from_json(r#"{"initial": {"theta": 1.0}}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("theta"), "{e}");
        assert!(e.to_string().contains("line"), "{e}");
    }

    #[test]
    fn degrees_convert_angles_only() {
        let mut c = RunConfig::default();
        let o = Overrides {
            degrees: true,
            theta0: Some(90.0),
            beta: Some(45.0),
            l_mag: Some(90.0),
            ..Default::default()
        };
        o.apply(&mut c);
        assert!((c.initial.theta0 - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((c.beta() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(c.initial.l_mag, 90.0);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(coinflip_core::Error::InvalidInput("x".into())).exit_code(), 2);
        let e = coinflip_core::Error::Integration {
            t: 1.0,
            reason: "nan".into(),
        };
        assert_eq!(CliError::from(e).exit_code(), 3);
    }

    fn finite() -> impl Strategy<Value = f64> {
        -1e6..1e6f64
    }

    prop_compose! {
        fn config()(
            ix in finite(), iy in finite(), iz in finite(),
            l_mag in finite(), alpha in finite(), beta in proptest::option::of(finite()),
            phi0 in finite(), theta0 in finite(), psi0 in finite(),
            dt in finite(), t_end in finite(), quad_tol in finite(),
            mc_n in any::<usize>(), mc_seed in any::<u64>(), mc_t_eval in finite(),
            density_mean in finite(), density_stddev in finite(),
            grids in (any::<usize>(), any::<usize>(), any::<usize>(), any::<usize>()),
            output in proptest::option::of("[a-z]{1,8}\\.(csv|json)"),
        ) -> RunConfig {
            RunConfig {
                inertia: InertiaConfig { ix, iy, iz },
                initial: InitialConfig { l_mag, alpha, beta, phi0, theta0, psi0 },
                numerics: NumericsConfig {
                    dt, t_end, quad_tol, mc_n, mc_seed, mc_t_eval, density_mean, density_stddev,
                    phi0_grid: grids.0, grid_phi: grids.1, grid_theta: grids.2, pdf_samples: grids.3,
                },
                output: output.map(PathBuf::from),
            }
        }
    }

    proptest! {
        #[test]
        fn config_round_trips(c in config()) {
            let back = RunConfig::from_json(&c.to_json()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
