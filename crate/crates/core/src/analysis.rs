//! Nutation envelope, fair region, limiting laws and winding integrals.
//!
//! Everything here is closed form in `(Ix, Iy, Iz, phi0, theta0)` and
//! independent of `|L|`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::InertiaTensor;
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadResult};

/// Default absolute target for the envelope quadratures.
pub const QUAD_TOL: f64 = 1e-10;

/// A uniform coin is fair only for `theta0 = pi/2`; this is how close
/// `cos theta0` has to be to zero.
pub const UNIFORM_FAIR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeCase {
    /// `theta` swings across the equator, `theta_m + theta_M = pi`.
    Supplementary,
    BothAcute,
    BothObtuse,
    UniformDegenerate,
}

impl EnvelopeCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnvelopeCase::Supplementary => "supplementary",
            EnvelopeCase::BothAcute => "both-acute",
            EnvelopeCase::BothObtuse => "both-obtuse",
            EnvelopeCase::UniformDegenerate => "uniform-degenerate",
        }
    }
}

/// Range `[theta_m, theta_M]` swept by the nutation angle.
///
/// `c1` and `c2` are the squared-cosine extremes of `lz = cos theta` reached
/// where the momentum curve crosses `lx = 0` and `ly = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NutationBounds {
    pub c1: f64,
    pub c2: f64,
    pub theta_m: f64,
    #[serde(rename = "theta_M")]
    pub theta_max: f64,
    pub case: EnvelopeCase,
}

impl NutationBounds {
    /// `cos theta_M`, the lowest value of `lz`.
    pub fn z_min(&self) -> f64 {
        self.theta_max.cos()
    }

    /// `cos theta_m`, the highest value of `lz`.
    pub fn z_max(&self) -> f64 {
        self.theta_m.cos()
    }

    pub fn width(&self) -> f64 {
        self.theta_max - self.theta_m
    }
}

/// Ratio `(1/Ix - 1/Iy) / (1/Iy - 1/Iz)` bounding the fair region.
fn fair_ratio(inertia: &InertiaTensor) -> f64 {
    let [ix, iy, iz] = inertia.inverse();
    (ix - iy) / (iy - iz)
}

pub fn nutation_bounds(inertia: &InertiaTensor, phi0: f64, theta0: f64) -> NutationBounds {
    let [ix, iy, iz] = inertia.inverse();
    let (sf, cf) = phi0.sin_cos();
    let (st, ct) = theta0.sin_cos();
    let c1 = ct * ct - (ix - iy) / (iy - iz) * cf * cf * st * st;
    let c2 = ct * ct + (ix - iy) / (ix - iz) * sf * sf * st * st;
    let acos_sqrt = |c: f64| c.clamp(0.0, 1.0).sqrt().acos();

    if inertia.is_uniform() {
        return NutationBounds {
            c1,
            c2,
            theta_m: theta0,
            theta_max: theta0,
            case: EnvelopeCase::UniformDegenerate,
        };
    }
    if c1 < 0.0 {
        let theta_m = acos_sqrt(c2);
        NutationBounds {
            c1,
            c2,
            theta_m,
            theta_max: PI - theta_m,
            case: EnvelopeCase::Supplementary,
        }
    } else if theta0 <= FRAC_PI_2 {
        NutationBounds {
            c1,
            c2,
            theta_m: acos_sqrt(c2),
            theta_max: acos_sqrt(c1),
            case: EnvelopeCase::BothAcute,
        }
    } else {
        NutationBounds {
            c1,
            c2,
            theta_m: PI - acos_sqrt(c1),
            theta_max: PI - acos_sqrt(c2),
            case: EnvelopeCase::BothObtuse,
        }
    }
}

/// Initial conditions whose envelope is symmetric about the equator.
///
/// Non-uniform coins: `cot^2 theta0 < (1/Ix - 1/Iy)/(1/Iy - 1/Iz) cos^2 phi0`.
/// Uniform coins: only the line `theta0 = pi/2`.
pub fn in_fair_region(inertia: &InertiaTensor, phi0: f64, theta0: f64) -> bool {
    if inertia.is_uniform() {
        return theta0.cos().abs() <= UNIFORM_FAIR_TOL;
    }
    let (st, ct) = theta0.sin_cos();
    if st == 0.0 {
        return false;
    }
    let cot = ct / st;
    let cf = phi0.cos();
    cot * cot < fair_ratio(inertia) * cf * cf
}

/// One row of the fair-region grid export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairCell {
    pub phi0: f64,
    pub theta0: f64,
    pub fair: bool,
}

/// `phi0` on `n_phi` points over `[0, 2pi)`, `theta0` on `n_theta` points over `[0, pi]`.
pub fn fair_region_grid(inertia: &InertiaTensor, n_phi: usize, n_theta: usize) -> Vec<FairCell> {
    let mut out = Vec::with_capacity(n_phi * n_theta);
    for i in 0..n_theta {
        let theta0 = if n_theta > 1 {
            PI * i as f64 / (n_theta - 1) as f64
        } else {
            FRAC_PI_2
        };
        for j in 0..n_phi {
            let phi0 = TAU * j as f64 / n_phi as f64;
            out.push(FairCell {
                phi0,
                theta0,
                fair: in_fair_region(inertia, phi0, theta0),
            });
        }
    }
    out
}

/// Coefficients of `(dlz/dt)^2 = |L|^2 (A lz^4 + B lz^2 + C)`.
///
/// `a0 = 2E/|L|^2 - 1/Iz`; `B` and `C` are written in terms of the full
/// energy constant `a0 + 1/Iz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoefficients {
    pub a0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuarticCoefficients {
    pub fn eval(&self, z: f64) -> f64 {
        let w = z * z;
        (self.a * w + self.b) * w + self.c
    }
}

pub fn quartic_coefficients(inertia: &InertiaTensor, phi0: f64, theta0: f64) -> QuarticCoefficients {
    let [ix, iy, iz] = inertia.inverse();
    let s2f = phi0.sin().powi(2);
    let s2t = theta0.sin().powi(2);
    let a0 = s2t * (ix - iz - (ix - iy) * s2f);
    let e = a0 + iz;
    QuarticCoefficients {
        a0,
        a: -(ix - iz) * (iy - iz),
        b: 2.0 * ix * iy - iy * iz - ix * iz - e * (ix + iy - 2.0 * iz),
        c: -(e - ix) * (e - iy),
    }
}

/// `csc^2 theta_t = k1 cos(2 phi_t) + k2`; in the limit `csc^2 theta` is
/// arcsine-distributed on `(lo, hi) = (k2 - k1, k2 + k1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcsineParams {
    pub k1: f64,
    pub k2: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ArcsineParams {
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            2.0 / PI * ((x - self.lo) / (self.hi - self.lo)).sqrt().asin()
        }
    }
}

pub fn arcsine_params(inertia: &InertiaTensor, phi0: f64, theta0: f64) -> Result<ArcsineParams> {
    if inertia.is_uniform() {
        return Err(Error::Degenerate("uniform coin: csc^2 theta is constant".into()));
    }
    if in_fair_region(inertia, phi0, theta0) {
        return Err(Error::UnsupportedCase(
            "fair region: phi does not circulate, csc^2 theta is not arcsine".into(),
        ));
    }
    let [ix, iy, iz] = inertia.inverse();
    let a0 = quartic_coefficients(inertia, phi0, theta0).a0;
    if a0 <= 0.0 {
        return Err(Error::Degenerate(
            "momentum along the normal: theta is fixed at 0 or pi".into(),
        ));
    }
    let k1 = 0.5 * (ix - iy) / a0;
    let k2 = (0.5 * (ix + iy) - iz) / a0;
    Ok(ArcsineParams {
        k1,
        k2,
        lo: k2 - k1,
        hi: k2 + k1,
    })
}

/// Distribution of `phi mod 2pi` and `csc^2 theta` when the orbit is sampled
/// uniformly in time.
///
/// `phi` advances at rate proportional to `a0 z / (1 - z^2)` with `z = cos
/// theta` tied to `phi` by `csc^2 theta = k1 cos(2 phi) + k2`, so its time
/// density is proportional to `(1 - z^2) / |z|`. Only defined when `phi`
/// circulates, i.e. outside the fair region.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitLaw {
    params: ArcsineParams,
    /// Cumulative time weight on a uniform `phi` grid over `[0, 2pi]`.
    cumulative: Vec<f64>,
}

const ORBIT_TABLE: usize = 1 << 14;

impl OrbitLaw {
    pub fn new(inertia: &InertiaTensor, phi0: f64, theta0: f64) -> Result<Self> {
        let params = arcsine_params(inertia, phi0, theta0)?;
        let weight = |phi: f64| {
            let x = params.k1 * (2.0 * phi).cos() + params.k2;
            let z2 = (1.0 - 1.0 / x).max(0.0);
            (1.0 / x) / z2.sqrt()
        };
        let h = TAU / ORBIT_TABLE as f64;
        let mut cumulative = Vec::with_capacity(ORBIT_TABLE + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..ORBIT_TABLE {
            let a = i as f64 * h;
            // Simpson on each cell
            acc += h / 6.0 * (weight(a) + 4.0 * weight(a + 0.5 * h) + weight(a + h));
            cumulative.push(acc);
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Ok(Self { params, cumulative })
    }

    pub fn params(&self) -> &ArcsineParams {
        &self.params
    }

    /// CDF of `phi mod 2pi` on `[0, 2pi]`.
    pub fn phi_cdf(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return 0.0;
        }
        if phi >= TAU {
            return 1.0;
        }
        let pos = phi / TAU * ORBIT_TABLE as f64;
        let i = (pos as usize).min(ORBIT_TABLE - 1);
        let frac = pos - i as f64;
        self.cumulative[i] + frac * (self.cumulative[i + 1] - self.cumulative[i])
    }

    /// CDF of `csc^2 theta` on `[lo, hi]`.
    pub fn csc2_cdf(&self, x: f64) -> f64 {
        let p = &self.params;
        if x <= p.lo {
            return 0.0;
        }
        if x >= p.hi {
            return 1.0;
        }
        // {phi : k1 cos 2phi + k2 <= x} = [pc, pi - pc] u [pi + pc, 2pi - pc]
        let pc = 0.5 * ((x - p.k2) / p.k1).clamp(-1.0, 1.0).acos();
        let f = |a: f64| self.phi_cdf(a);
        (f(PI - pc) - f(pc)) + (f(TAU - pc) - f(PI + pc))
    }
}

/// Limiting law of the nutation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaDensity {
    Continuous { theta_m: f64, theta_max: f64 },
    /// Zero-width envelope: all mass at `theta`.
    PointMass { theta: f64 },
}

impl ThetaDensity {
    /// Density at `y`; zero outside the open envelope, `NaN` for a point mass.
    pub fn pdf(&self, y: f64) -> f64 {
        match *self {
            ThetaDensity::PointMass { .. } => f64::NAN,
            ThetaDensity::Continuous { theta_m, theta_max } => {
                if !(y > theta_m && y < theta_max) {
                    return 0.0;
                }
                let csc2_m = 1.0 / theta_m.sin().powi(2);
                let csc2_max = 1.0 / theta_max.sin().powi(2);
                let s2 = y.sin().powi(2);
                let prod = (1.0 - csc2_max * s2) * (csc2_m * s2 - 1.0);
                2.0 * (y.cos() / y.sin()).abs() / (PI * prod.abs().sqrt())
            }
        }
    }

    /// `integral f_theta dy` over the envelope, on open Chebyshev nodes.
    pub fn total_mass(&self) -> QuadResult {
        match *self {
            ThetaDensity::PointMass { .. } => QuadResult {
                value: 1.0,
                abs_error: 0.0,
                evaluations: 0,
            },
            ThetaDensity::Continuous { theta_m, theta_max } => {
                let mid = 0.5 * (theta_m + theta_max);
                let half = 0.5 * (theta_max - theta_m);
                quadrature::gauss_chebyshev_adaptive(
                    |u| self.pdf(mid + half * u.cos()) * half * u.sin(),
                    1e-12,
                )
            }
        }
    }
}

/// Density of the limiting nutation angle for the given envelope.
///
/// A zero-width envelope (uniform coin, or a body-axis fixed point) yields
/// [`ThetaDensity::PointMass`].
pub fn theta_pdf(bounds: &NutationBounds) -> ThetaDensity {
    if bounds.case == EnvelopeCase::UniformDegenerate || !(bounds.width() > 0.0) {
        ThetaDensity::PointMass {
            theta: bounds.theta_m,
        }
    } else {
        ThetaDensity::Continuous {
            theta_m: bounds.theta_m,
            theta_max: bounds.theta_max,
        }
    }
}

/// `integral_{z_min}^{z_max} f(z) / sqrt(A z^4 + B z^2 + C) dz` over one sweep of `lz`.
///
/// The quartic is factored as `-A (z - z_min)(z_max - z) R(z)` with `R > 0`
/// on the closed interval, so the endpoint singularities are absorbed by the
/// cosine substitution exactly.
pub fn envelope_integral<F: Fn(f64) -> f64>(
    inertia: &InertiaTensor,
    phi0: f64,
    theta0: f64,
    f: F,
    tol: f64,
) -> Result<QuadResult> {
    envelope_integral_with_breaks(inertia, phi0, theta0, f, &[], tol)
}

/// [`envelope_integral`] for an `f` with corners at the `z` values in `breaks`.
pub fn envelope_integral_with_breaks<F: Fn(f64) -> f64>(
    inertia: &InertiaTensor,
    phi0: f64,
    theta0: f64,
    f: F,
    breaks: &[f64],
    tol: f64,
) -> Result<QuadResult> {
    if inertia.is_uniform() {
        return Err(Error::Degenerate("uniform coin: lz is constant".into()));
    }
    let bounds = nutation_bounds(inertia, phi0, theta0);
    if !(bounds.width() > 0.0) {
        return Err(Error::Degenerate(
            "initial momentum on a principal axis: lz is constant".into(),
        ));
    }
    let quartic = quartic_coefficients(inertia, phi0, theta0);
    let neg_a = -quartic.a;
    let (c1, c2) = (bounds.c1, bounds.c2.max(0.0));
    let remainder = |z: f64| match bounds.case {
        EnvelopeCase::Supplementary => z * z - c1,
        _ => {
            let az = z.abs();
            (az + c1.max(0.0).sqrt()) * (az + c2.sqrt())
        }
    };
    let (lo, hi) = (bounds.z_min(), bounds.z_max());
    let g = |z: f64| f(z) / (neg_a * remainder(z)).sqrt();
    if breaks.iter().all(|&b| !(b > lo && b < hi)) {
        return Ok(quadrature::arcsine_weighted(g, lo, hi, tol));
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let knots: Vec<f64> = breaks
        .iter()
        .filter(|&&b| b > lo && b < hi)
        .map(|&b| ((b - mid) / half).clamp(-1.0, 1.0).acos())
        .collect();
    Ok(quadrature::simpson_piecewise(
        |u| g(mid + half * u.cos()),
        0.0,
        PI,
        &knots,
        tol,
    ))
}

/// `integral [a0 (m1 z + m2)/(1 - z^2) + m2/Iz] / sqrt(A z^4 + B z^2 + C) dz`.
///
/// Over one period of `lz`, `phi` advances by twice the `(1, 0)` value and
/// `psi` by twice the `(0, 1)` value.
pub fn winding_integral(
    inertia: &InertiaTensor,
    phi0: f64,
    theta0: f64,
    m1: i64,
    m2: i64,
) -> Result<f64> {
    if m1 == 0 && m2 == 0 {
        return Err(Error::invalid("(m1, m2) must not both be zero"));
    }
    let a0 = quartic_coefficients(inertia, phi0, theta0).a0;
    let iz = 1.0 / inertia.iz();
    let (m1, m2) = (m1 as f64, m2 as f64);
    let q = envelope_integral(
        inertia,
        phi0,
        theta0,
        |z| a0 * (m1 * z + m2) / (1.0 - z * z) + m2 * iz,
        QUAD_TOL,
    )?;
    Ok(q.value)
}
