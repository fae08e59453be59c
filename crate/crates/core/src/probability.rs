//! Limiting probability of heads.
//!
//! With `psi` uniform on the circle and `theta` distributed by its limiting
//! density, heads has probability
//!
//! ```text
//! p = 1/2 + (1/pi) * integral arcsin(min{1, cot(beta) cot(y)}) f_theta(y) dy
//! ```
//!
//! over the nutation envelope. Substituting `x = csc^2 y` turns `f_theta dy`
//! into the arcsine law on `(lo, hi)`, and `x = mid + half cos u` removes its
//! endpoint singularities, leaving `(1/pi^2) * integral_0^pi G(u) du` with a
//! bounded integrand.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::analysis::{self, EnvelopeCase, NutationBounds, ThetaDensity, QUAD_TOL};
use crate::dynamics::InertiaTensor;
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityMethod {
    Quadrature,
    /// Zero-width envelope: uniform coin or momentum on a principal axis.
    ClosedFormUniform,
    FairSymmetry,
}

impl ProbabilityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbabilityMethod::Quadrature => "quadrature",
            ProbabilityMethod::ClosedFormUniform => "closed-form-uniform",
            ProbabilityMethod::FairSymmetry => "fair-symmetry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadsProbability {
    pub p: f64,
    pub abs_error_estimate: f64,
    #[serde(rename = "method_tag")]
    pub method: ProbabilityMethod,
}

impl HeadsProbability {
    fn fair() -> Self {
        Self {
            p: 0.5,
            abs_error_estimate: 0.0,
            method: ProbabilityMethod::FairSymmetry,
        }
    }
}

/// `cot(beta) cot(theta)` written so that `sin = 0` gives a signed infinity.
fn cot_product(beta: f64, theta: f64) -> f64 {
    let num = beta.cos() * theta.cos();
    let den = beta.sin() * theta.sin();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            num.signum() * f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `arcsin(min{1, a})`, with the argument also held above -1.
#[inline]
fn clamped_arcsin(a: f64) -> f64 {
    a.clamp(-1.0, 1.0).asin()
}

/// Heads probability when `theta` stays at a single value.
pub fn point_mass_probability(beta: f64, theta: f64) -> f64 {
    0.5 + clamped_arcsin(cot_product(beta, theta)) / PI
}

/// General quadrature path over an acute or obtuse envelope.
///
/// Supplementary envelopes are fair and return 1/2; zero-width ones reduce to
/// [`point_mass_probability`].
pub fn probability_over_envelope(beta: f64, bounds: &NutationBounds) -> HeadsProbability {
    let side = match bounds.case {
        EnvelopeCase::Supplementary => return HeadsProbability::fair(),
        _ if !(bounds.width() > 0.0) => {
            return HeadsProbability {
                p: point_mass_probability(beta, bounds.theta_m),
                abs_error_estimate: 0.0,
                method: ProbabilityMethod::ClosedFormUniform,
            }
        }
        EnvelopeCase::BothObtuse => -1.0,
        _ => 1.0,
    };
    let q = arcsine_average(beta, bounds, side);
    HeadsProbability {
        p: (0.5 + q.value / (PI * PI)).clamp(0.0, 1.0),
        abs_error_estimate: q.abs_error / (PI * PI),
        method: ProbabilityMethod::Quadrature,
    }
}

/// `integral_0^pi arcsin(clamp(k sqrt(x(u) - 1))) du` with `x(u) = mid + half cos u`.
///
/// `cot y = side * sqrt(csc^2 y - 1)` on a one-sided envelope, so the
/// integrand is `arcsin` of `k sqrt(x - 1)` with `k = side * cot(beta)`. It
/// saturates at `+-pi/2` for `x >= 1 + 1/k^2`, and has a square-root corner
/// where it enters saturation; the corner is split off and smoothed with
/// `u = u* + w^2`.
fn arcsine_average(beta: f64, bounds: &NutationBounds, side: f64) -> QuadResult {
    let csc2 = |t: f64| 1.0 / t.sin().powi(2);
    let (a, b) = (csc2(bounds.theta_m), csc2(bounds.theta_max));
    let (lo, hi) = (a.min(b), a.max(b));
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let k = side * cot_beta(beta);
    if k == 0.0 {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        };
    }
    let g = |u: f64| {
        let x = mid + half * u.cos();
        clamped_arcsin(k * (x - 1.0).max(0.0).sqrt())
    };
    let saturated = k.signum() * FRAC_PI_2;
    let x_star = 1.0 + 1.0 / (k * k);

    if x_star <= lo {
        return QuadResult {
            value: saturated * PI,
            abs_error: 0.0,
            evaluations: 0,
        };
    }
    if x_star >= hi {
        return quadrature::simpson_richardson(g, 0.0, PI, QUAD_TOL);
    }
    let u_star = ((x_star - mid) / half).clamp(-1.0, 1.0).acos();
    let tail = quadrature::simpson_richardson(
        |w| 2.0 * w * g(u_star + w * w),
        0.0,
        (PI - u_star).sqrt(),
        QUAD_TOL,
    );
    QuadResult {
        value: saturated * u_star + tail.value,
        abs_error: tail.abs_error,
        evaluations: tail.evaluations,
    }
}

fn cot_beta(beta: f64) -> f64 {
    let (s, c) = beta.sin_cos();
    if s == 0.0 {
        c.signum() * f64::INFINITY
    } else {
        c / s
    }
}

/// Limiting probability of heads for momentum polar angle `beta` and initial
/// body-frame angles `(phi0, theta0)`.
pub fn heads_probability(inertia: &InertiaTensor, beta: f64, phi0: f64, theta0: f64) -> HeadsProbability {
    if analysis::in_fair_region(inertia, phi0, theta0) {
        return HeadsProbability::fair();
    }
    let bounds = analysis::nutation_bounds(inertia, phi0, theta0);
    if bounds.case == EnvelopeCase::UniformDegenerate {
        return HeadsProbability {
            p: point_mass_probability(beta, theta0),
            abs_error_estimate: 0.0,
            method: ProbabilityMethod::ClosedFormUniform,
        };
    }
    probability_over_envelope(beta, &bounds)
}

/// Heads facing straight up at release, `beta = theta0`.
pub fn heads_probability_straight(inertia: &InertiaTensor, phi0: f64, theta0: f64) -> HeadsProbability {
    heads_probability(inertia, theta0, phi0, theta0)
}

/// Limiting probability of heads with `theta` weighted by time along the orbit.
///
/// For a smooth density of `|L|` the state at large `t` samples the
/// unit-momentum orbit uniformly in time, with `psi` uniform and
/// independent of the orbit phase. `theta` then has density proportional to
/// `1/|dtheta/dt|`, which is not the arcsine law behind
/// [`heads_probability`]: `phi` does not advance at a constant rate. In `z =
/// cos theta`:
///
/// ```text
/// p = 1/2 + (1/pi) * integral G(z) dz / sqrt(Q(z)) / integral dz / sqrt(Q(z))
/// ```
///
/// with `G(z) = arcsin(clamp(cot(beta) cot(theta)))` and `Q` the quartic.
/// Fair-region and zero-width cases are shared with [`heads_probability`].
pub fn heads_probability_time_average(
    inertia: &InertiaTensor,
    beta: f64,
    phi0: f64,
    theta0: f64,
) -> HeadsProbability {
    if analysis::in_fair_region(inertia, phi0, theta0) {
        return HeadsProbability::fair();
    }
    let bounds = analysis::nutation_bounds(inertia, phi0, theta0);
    if bounds.case == EnvelopeCase::UniformDegenerate || !(bounds.width() > 0.0) {
        return HeadsProbability {
            p: point_mass_probability(beta, bounds.theta_m),
            abs_error_estimate: 0.0,
            method: ProbabilityMethod::ClosedFormUniform,
        };
    }
    let g = |z: f64| clamped_arcsin(cot_product(beta, z.clamp(-1.0, 1.0).acos()));
    let corner = beta.sin();
    let breaks = [-corner, corner];
    let num = analysis::envelope_integral_with_breaks(inertia, phi0, theta0, g, &breaks, QUAD_TOL);
    let den = analysis::envelope_integral(inertia, phi0, theta0, |_| 1.0, QUAD_TOL);
    match (num, den) {
        (Ok(n), Ok(d)) => {
            let ratio = n.value / d.value;
            HeadsProbability {
                p: (0.5 + ratio / PI).clamp(0.0, 1.0),
                abs_error_estimate: (n.abs_error + ratio.abs() * d.abs_error) / (d.value * PI),
                method: ProbabilityMethod::Quadrature,
            }
        }
        // width > 0 and non-uniform, so the envelope integrals exist
        _ => unreachable!("envelope integral failed on a non-degenerate envelope"),
    }
}

/// `integral arcsin(min{1, cot(beta) cot(y)}) f_theta(y) dy` over the envelope.
///
/// On one-sided envelopes this is the quadrature behind
/// [`probability_over_envelope`]. On supplementary envelopes the density is
/// evaluated as written on open Chebyshev nodes mirrored about `pi/2`, where
/// the odd integrand cancels pairwise. (It is not absolutely integrable
/// there: the density has `1/|y - theta_m|` poles at both ends.)
pub fn envelope_arcsine_integral(beta: f64, bounds: &NutationBounds) -> QuadResult {
    match (bounds.case, analysis::theta_pdf(bounds)) {
        (_, ThetaDensity::PointMass { theta }) => QuadResult {
            value: clamped_arcsin(cot_product(beta, theta)),
            abs_error: 0.0,
            evaluations: 1,
        },
        (EnvelopeCase::Supplementary, density) => {
            let half = 0.5 * bounds.width();
            let paired = |n: usize| {
                let step = PI / n as f64;
                let mut sum = 0.0;
                for k in 0..n / 2 {
                    let u = (k as f64 + 0.5) * step;
                    let d = half * u.cos();
                    let (up, down) = (FRAC_PI_2 + d, FRAC_PI_2 - d);
                    // one density value per pair: the formula is symmetric
                    // and the poles amplify rounding in y
                    let w = half * u.sin() * density.pdf(up);
                    sum += w * (clamped_arcsin(cot_product(beta, up)) + clamped_arcsin(cot_product(beta, down)));
                }
                sum * step
            };
            let n = 2 * 729;
            let fine = paired(n);
            let coarse = paired(n / 3 + 1);
            QuadResult {
                value: fine,
                abs_error: (fine - coarse).abs(),
                evaluations: n + n / 3 + 1,
            }
        }
        (case, _) => {
            let side = if case == EnvelopeCase::BothObtuse { -1.0 } else { 1.0 };
            let q = arcsine_average(beta, bounds, side);
            QuadResult {
                value: q.value / PI,
                abs_error: q.abs_error / PI,
                evaluations: q.evaluations,
            }
        }
    }
}

/// One point of an empirical `theta0` distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta0Sample {
    pub theta0: f64,
    pub weight: f64,
}

#[derive(Debug, Deserialize)]
struct Theta0Row {
    theta0_radians: f64,
    #[serde(default)]
    weight: Option<f64>,
}

/// Reads `theta0_radians,weight` rows; a missing weight counts as 1.
pub fn read_theta0_csv<R: Read>(reader: R) -> Result<Vec<Theta0Sample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::invalid(format!("theta0 file: {e}")))?
        .clone();
    if headers.get(0) != Some("theta0_radians") {
        return Err(Error::invalid(
            "theta0 file: header must start with `theta0_radians`",
        ));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Theta0Row>().enumerate() {
        let row = row.map_err(|e| Error::invalid(format!("theta0 file, record {}: {e}", i + 1)))?;
        let weight = row.weight.unwrap_or(1.0);
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::invalid(format!(
                "theta0 file, record {}: weight must be positive",
                i + 1
            )));
        }
        if !(0.0..=PI).contains(&row.theta0_radians) {
            return Err(Error::invalid(format!(
                "theta0 file, record {}: theta0 must lie in [0, pi]",
                i + 1
            )));
        }
        out.push(Theta0Sample {
            theta0: row.theta0_radians,
            weight,
        });
    }
    Ok(out)
}

/// Average of [`heads_probability_straight`] over weighted `theta0` samples
/// and a midpoint grid of `phi0` on `[0, 2pi)`.
pub fn aggregate_probability(
    inertia: &InertiaTensor,
    samples: &[Theta0Sample],
    phi0_grid_size: usize,
) -> Result<HeadsProbability> {
    if samples.is_empty() {
        return Err(Error::invalid("theta0 sample list is empty"));
    }
    if phi0_grid_size < 8 {
        return Err(Error::invalid(format!(
            "phi0 grid needs at least 8 points, got {phi0_grid_size}"
        )));
    }
    if samples.iter().any(|s| !(s.weight.is_finite() && s.weight > 0.0)) {
        return Err(Error::invalid("theta0 weights must be positive"));
    }
    let total_weight: f64 = samples.iter().map(|s| s.weight).sum();
    let step = std::f64::consts::TAU / phi0_grid_size as f64;

    let mut p = 0.0;
    let mut err = 0.0;
    let mut method = ProbabilityMethod::FairSymmetry;
    for s in samples {
        let w = s.weight / total_weight / phi0_grid_size as f64;
        for j in 0..phi0_grid_size {
            let phi0 = (j as f64 + 0.5) * step;
            let hp = heads_probability_straight(inertia, phi0, s.theta0);
            p += w * hp.p;
            err += w * hp.abs_error_estimate;
            method = match (method, hp.method) {
                (_, ProbabilityMethod::Quadrature) | (ProbabilityMethod::Quadrature, _) => {
                    ProbabilityMethod::Quadrature
                }
                (_, ProbabilityMethod::ClosedFormUniform) => ProbabilityMethod::ClosedFormUniform,
                (m, ProbabilityMethod::FairSymmetry) => m,
            };
        }
    }
    Ok(HeadsProbability {
        p,
        abs_error_estimate: err,
        method,
    })
}
