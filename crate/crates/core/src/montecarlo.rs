//! Monte Carlo estimate of the heads probability over random `|L|`.
//!
//! Every right-hand side of the angle equations scales with `|L|`, so the
//! state of draw `i` at `t_eval` equals the unit-momentum state at
//! `tau_i = |L_i| t_eval`. The default sampler integrates one unit-momentum
//! trajectory through the sorted `tau_i`, landing on each exactly.
//! [`Sampler::PerDraw`] integrates every draw separately in physical time.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analysis::{self, OrbitLaw};
use crate::dynamics::{self, Angles, InertiaTensor, STEP_GUARD};
use crate::error::{Error, Result};
use crate::geometry::{self, MomentumDirection};

/// Name recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), stream = draw index";

/// Step in scaled time, as a fraction of `Ix`.
const SCALED_STEP: f64 = 0.02;

/// Gaussian `|L|` truncated to positive values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeDensity {
    mean: f64,
    stddev: f64,
}

impl MagnitudeDensity {
    /// Requires `stddev > 0` and `mean > 4 stddev`.
    pub fn new(mean: f64, stddev: f64) -> Result<Self> {
        if !(stddev.is_finite() && stddev > 0.0) {
            return Err(Error::invalid(format!("stddev must be positive, got {stddev}")));
        }
        if !(mean.is_finite() && mean > 4.0 * stddev) {
            return Err(Error::invalid(format!(
                "mean must exceed 4 stddev, got mean {mean}, stddev {stddev}"
            )));
        }
        Ok(Self { mean, stddev })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stddev(&self) -> f64 {
        self.stddev
    }

    pub fn kind(&self) -> &'static str {
        "gaussian-truncated"
    }
}

fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` positive draws; draw `i` depends only on `(seed, i)`.
pub fn sample_magnitude(density: &MagnitudeDensity, seed: u64, n: usize) -> Vec<f64> {
    let normal = Normal::new(density.mean, density.stddev).expect("validated parameters");
    (0..n)
        .map(|i| {
            let mut rng = draw_rng(seed, i as u64);
            loop {
                let x = normal.sample(&mut rng);
                if x > 0.0 {
                    return x;
                }
            }
        })
        .collect()
}

/// How terminal states are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    /// One unit-momentum trajectory through all scaled times.
    SharedScaled,
    /// Separate RK4 run per draw with physical step `dt`.
    PerDraw { dt: f64 },
}

/// Release state and sampling controls shared by all draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSetup {
    pub inertia: InertiaTensor,
    pub phi0: f64,
    pub theta0: f64,
    pub psi0: f64,
    pub density: MagnitudeDensity,
    pub n: usize,
    pub t_eval: f64,
    pub seed: u64,
    pub sampler: Sampler,
}

impl McSetup {
    pub fn new(
        inertia: InertiaTensor,
        phi0: f64,
        theta0: f64,
        psi0: f64,
        density: MagnitudeDensity,
        n: usize,
        t_eval: f64,
        seed: u64,
    ) -> Self {
        Self {
            inertia,
            phi0,
            theta0,
            psi0,
            density,
            n,
            t_eval,
            seed,
            sampler: Sampler::SharedScaled,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1000 {
            return Err(Error::invalid(format!("n must be at least 1000, got {}", self.n)));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.theta0) {
            return Err(Error::invalid(format!("theta0 must lie in [0, pi], got {}", self.theta0)));
        }
        if !(self.phi0.is_finite() && self.psi0.is_finite()) {
            return Err(Error::invalid("phi0 and psi0 must be finite"));
        }
        let turns = self.density.mean * self.t_eval / self.inertia.iy();
        if !(turns > 1e3) {
            return Err(Error::invalid(format!(
                "t_eval too short: mean |L| t_eval / Iy = {turns:.1} rad, need > 1000"
            )));
        }
        if let Sampler::PerDraw { dt } = self.sampler {
            if !(dt > 0.0) {
                return Err(Error::invalid("per-draw dt must be positive"));
            }
        }
        Ok(())
    }

    fn start(&self) -> Angles {
        Angles {
            phi: self.phi0,
            theta: self.theta0,
            psi: self.psi0,
        }
    }
}

/// Terminal `(phi, theta, psi)` at `t_eval` for each draw, in draw order,
/// together with the magnitudes.
pub fn terminal_states(setup: &McSetup) -> Result<(Vec<f64>, Vec<Angles>)> {
    setup.validate()?;
    let mags = sample_magnitude(&setup.density, setup.seed, setup.n);
    let states = match setup.sampler {
        Sampler::SharedScaled => shared_scaled(setup, &mags)?,
        Sampler::PerDraw { dt } => per_draw(setup, &mags, dt)?,
    };
    Ok((mags, states))
}

fn shared_scaled(setup: &McSetup, mags: &[f64]) -> Result<Vec<Angles>> {
    let inertia = &setup.inertia;
    let h_max = SCALED_STEP * inertia.ix();
    let mut order: Vec<usize> = (0..mags.len()).collect();
    order.sort_by(|&a, &b| mags[a].total_cmp(&mags[b]));

    let mut out = vec![setup.start(); mags.len()];
    let mut state = setup.start();
    let mut tau = 0.0;
    for &i in &order {
        let target = mags[i] * setup.t_eval;
        while tau < target {
            let h = (target - tau).min(h_max);
            state = dynamics::rk4_step(inertia, 1.0, state, h);
            tau = if h == target - tau { target } else { tau + h };
        }
        if !(state.phi.is_finite() && state.theta.is_finite() && state.psi.is_finite()) {
            return Err(Error::Integration {
                t: setup.t_eval,
                reason: format!("non-finite state at draw {i} (|L| = {})", mags[i]),
            });
        }
        out[i] = state;
    }
    Ok(out)
}

fn per_draw(setup: &McSetup, mags: &[f64], dt: f64) -> Result<Vec<Angles>> {
    let inertia = &setup.inertia;
    mags.iter()
        .enumerate()
        .map(|(i, &l)| {
            if l * dt / inertia.ix() >= STEP_GUARD {
                return Err(Error::invalid(format!(
                    "step guard violated at draw {i} (|L| = {l}); reduce dt"
                )));
            }
            let steps = (setup.t_eval / dt).ceil() as usize;
            let mut state = setup.start();
            let mut t = 0.0;
            for k in 1..=steps {
                let t_next = if k == steps { setup.t_eval } else { k as f64 * dt };
                state = dynamics::rk4_step(inertia, l, state, t_next - t);
                t = t_next;
            }
            if state.phi.is_finite() && state.theta.is_finite() && state.psi.is_finite() {
                Ok(state)
            } else {
                Err(Error::Integration {
                    t: setup.t_eval,
                    reason: format!("non-finite state at draw {i} (|L| = {l})"),
                })
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub std_error: f64,
    pub n: usize,
    pub t_eval: f64,
    pub seed: u64,
}

impl McEstimate {
    fn from_count(heads: usize, setup: &McSetup) -> Self {
        let n = setup.n;
        let p_hat = heads as f64 / n as f64;
        Self {
            p_hat,
            std_error: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
            n,
            t_eval: setup.t_eval,
            seed: setup.seed,
        }
    }
}

fn count_heads(beta: f64, states: &[Angles]) -> usize {
    states
        .iter()
        .filter(|s| geometry::normal_dot_k(beta, s.theta, s.psi) > geometry::TIE_TOLERANCE)
        .count()
}

/// Fraction of draws showing heads at `t_eval`.
pub fn estimate_heads(setup: &McSetup, dir: &MomentumDirection) -> Result<McEstimate> {
    let (_, states) = terminal_states(setup)?;
    Ok(McEstimate::from_count(count_heads(dir.beta(), &states), setup))
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

fn uniform_angle_cdf(x: f64) -> f64 {
    (x / TAU).clamp(0.0, 1.0)
}

/// Pearson statistic of `(a, b)` pairs on `[0, 2pi)^2` against independent
/// marginals with the given CDFs, and its p-value.
pub fn chi_square_2d<A, B>(pairs: &[(f64, f64)], bins: usize, cdf_a: A, cdf_b: B) -> (f64, f64)
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let mut counts = vec![0usize; bins * bins];
    let bin = |x: f64| ((x / TAU * bins as f64) as usize).min(bins - 1);
    for &(a, b) in pairs {
        counts[bin(a) * bins + bin(b)] += 1;
    }
    let edge = |k: usize| TAU * k as f64 / bins as f64;
    let mass = |cdf: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (0..bins).map(|k| cdf(edge(k + 1)) - cdf(edge(k))).collect()
    };
    let (pa, pb) = (mass(&cdf_a), mass(&cdf_b));
    let n = pairs.len() as f64;
    let mut stat = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let expected = n * pa[i] * pb[j];
            stat += (counts[i * bins + j] as f64 - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new((bins * bins - 1) as f64).expect("positive degrees of freedom");
    (stat, dist.sf(stat))
}

/// [`chi_square_2d`] against the uniform law on both coordinates.
pub fn chi_square_uniform_2d(pairs: &[(f64, f64)], bins: usize) -> (f64, f64) {
    chi_square_2d(pairs, bins, uniform_angle_cdf, uniform_angle_cdf)
}

/// Limiting-distribution statistics of the terminal states.
///
/// `ks_phi`, `chi2` and `ks_arcsine` test uniform `phi` and the arcsine law
/// of `csc^2 theta`. The `*_time_average` fields test the same samples
/// against [`OrbitLaw`], the law of an orbit sampled uniformly in time.
/// Statistics that do not apply are `None`, with the reason in `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionReport {
    pub ks_psi: Option<f64>,
    pub ks_phi: Option<f64>,
    pub chi2: Option<f64>,
    pub chi2_pvalue: Option<f64>,
    pub ks_arcsine: Option<f64>,
    pub ks_phi_time_average: Option<f64>,
    pub chi2_time_average: Option<f64>,
    pub chi2_pvalue_time_average: Option<f64>,
    pub ks_csc2_time_average: Option<f64>,
    pub skipped: Vec<String>,
}

pub const CHI2_BINS: usize = 16;

fn equidistribution_from(setup: &McSetup, states: &[Angles]) -> EquidistributionReport {
    let psi: Vec<f64> = states.iter().map(|s| s.psi.rem_euclid(TAU)).collect();
    let phi: Vec<f64> = states.iter().map(|s| s.phi.rem_euclid(TAU)).collect();
    let mut report = EquidistributionReport {
        ks_psi: Some(ks_distance(&psi, uniform_angle_cdf)),
        ks_phi: None,
        chi2: None,
        chi2_pvalue: None,
        ks_arcsine: None,
        ks_phi_time_average: None,
        chi2_time_average: None,
        chi2_pvalue_time_average: None,
        ks_csc2_time_average: None,
        skipped: Vec::new(),
    };
    let inertia = &setup.inertia;
    if inertia.is_uniform() {
        report
            .skipped
            .push("uniform coin: phi and psi advance in lockstep, theta is constant".into());
        return report;
    }
    if analysis::in_fair_region(inertia, setup.phi0, setup.theta0) {
        report
            .skipped
            .push("fair region: phi librates instead of circulating".into());
        return report;
    }
    match OrbitLaw::new(inertia, setup.phi0, setup.theta0) {
        Ok(law) => {
            let params = *law.params();
            let pairs: Vec<(f64, f64)> = psi.iter().copied().zip(phi.iter().copied()).collect();
            let csc2: Vec<f64> = states.iter().map(|s| 1.0 / s.theta.sin().powi(2)).collect();

            report.ks_phi = Some(ks_distance(&phi, uniform_angle_cdf));
            let (stat, p) = chi_square_uniform_2d(&pairs, CHI2_BINS);
            report.chi2 = Some(stat);
            report.chi2_pvalue = Some(p);
            report.ks_arcsine = Some(ks_distance(&csc2, |x| params.cdf(x)));

            report.ks_phi_time_average = Some(ks_distance(&phi, |x| law.phi_cdf(x)));
            let (stat, p) = chi_square_2d(&pairs, CHI2_BINS, uniform_angle_cdf, |x| law.phi_cdf(x));
            report.chi2_time_average = Some(stat);
            report.chi2_pvalue_time_average = Some(p);
            report.ks_csc2_time_average = Some(ks_distance(&csc2, |x| law.csc2_cdf(x)));
        }
        Err(e) => report.skipped.push(e.to_string()),
    }
    report
}

/// Equidistribution of terminal `(psi, phi) mod 2pi` and the arcsine law of `csc^2 theta`.
pub fn equidistribution_test(setup: &McSetup) -> Result<EquidistributionReport> {
    let (_, states) = terminal_states(setup)?;
    Ok(equidistribution_from(setup, &states))
}

/// Heads estimate and equidistribution statistics from one set of draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub p_hat: f64,
    pub std_error: f64,
    pub n: usize,
    pub t_eval: f64,
    pub seed: u64,
    pub rng: String,
    pub ks_psi: Option<f64>,
    pub ks_phi: Option<f64>,
    pub chi2: Option<f64>,
    pub chi2_pvalue: Option<f64>,
    pub ks_arcsine: Option<f64>,
    pub ks_phi_time_average: Option<f64>,
    pub chi2_time_average: Option<f64>,
    pub chi2_pvalue_time_average: Option<f64>,
    pub ks_csc2_time_average: Option<f64>,
    pub skipped: Vec<String>,
}

pub fn run_report(setup: &McSetup, dir: &MomentumDirection) -> Result<McReport> {
    let (_, states) = terminal_states(setup)?;
    let est = McEstimate::from_count(count_heads(dir.beta(), &states), setup);
    let eq = equidistribution_from(setup, &states);
    Ok(McReport {
        p_hat: est.p_hat,
        std_error: est.std_error,
        n: est.n,
        t_eval: est.t_eval,
        seed: est.seed,
        rng: RNG_ALGORITHM.to_string(),
        ks_psi: eq.ks_psi,
        ks_phi: eq.ks_phi,
        chi2: eq.chi2,
        chi2_pvalue: eq.chi2_pvalue,
        ks_arcsine: eq.ks_arcsine,
        ks_phi_time_average: eq.ks_phi_time_average,
        chi2_time_average: eq.chi2_time_average,
        chi2_pvalue_time_average: eq.chi2_pvalue_time_average,
        ks_csc2_time_average: eq.ks_csc2_time_average,
        skipped: eq.skipped,
    })
}
