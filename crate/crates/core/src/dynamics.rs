//! Torque-free rotation of the coin.
//!
//! The body-frame unit momentum `l = (cos phi sin theta, sin phi sin theta,
//! cos theta)` moves on the intersection of the unit sphere with the energy
//! ellipsoid, while the precession angle `psi` of the normal about `l`
//! advances monotonically. Every right-hand side is proportional to `|L|`, so
//! a trajectory with momentum `|L|` at time `t` is the unit-momentum
//! trajectory at scaled time `|L| t`.

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::error::{Error, Result};
use crate::geometry::{self, MomentumDirection, UnitVector3};

/// `|L| dt / Ix` must stay below this.
pub const STEP_GUARD: f64 = 0.1;

/// Principal moments of inertia in g cm^2, about `e1`, `e2` and `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaTensor {
    ix: f64,
    iy: f64,
    iz: f64,
}

impl InertiaTensor {
    /// Requires `0 < ix <= iy < iz`.
    pub fn new(ix: f64, iy: f64, iz: f64) -> Result<Self> {
        if !(ix.is_finite() && iy.is_finite() && iz.is_finite()) {
            return Err(Error::invalid("moments of inertia must be finite"));
        }
        if !(0.0 < ix && ix <= iy && iy < iz) {
            return Err(Error::invalid(format!(
                "moments of inertia must satisfy 0 < ix <= iy < iz, got ({ix}, {iy}, {iz})"
            )));
        }
        Ok(Self { ix, iy, iz })
    }

    /// American half dollar with the intermediate moment spread off `ix`.
    pub fn half_dollar() -> Self {
        Self {
            ix: 6.68,
            iy: 7.35,
            iz: 13.24,
        }
    }

    /// The axisymmetric half dollar, `ix = iy = 6.68`.
    pub fn half_dollar_uniform() -> Self {
        Self {
            ix: 6.68,
            iy: 6.68,
            iz: 13.24,
        }
    }

    pub fn ix(&self) -> f64 {
        self.ix
    }

    pub fn iy(&self) -> f64 {
        self.iy
    }

    pub fn iz(&self) -> f64 {
        self.iz
    }

    pub fn inverse(&self) -> [f64; 3] {
        [1.0 / self.ix, 1.0 / self.iy, 1.0 / self.iz]
    }

    /// `ix == iy`.
    pub fn is_uniform(&self) -> bool {
        self.ix == self.iy
    }
}

/// Momentum magnitude, its reference direction and the initial angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub l_mag: f64,
    pub dir: MomentumDirection,
    pub phi0: f64,
    pub theta0: f64,
    pub psi0: f64,
}

impl InitialConditions {
    pub fn new(l_mag: f64, dir: MomentumDirection, phi0: f64, theta0: f64, psi0: f64) -> Result<Self> {
        let ic = Self {
            l_mag,
            dir,
            phi0,
            theta0,
            psi0,
        };
        ic.validate()?;
        Ok(ic)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_mag.is_finite() && self.l_mag > 0.0) {
            return Err(Error::invalid(format!("l_mag must be positive, got {}", self.l_mag)));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.theta0) {
            return Err(Error::invalid(format!(
                "theta0 must lie in [0, pi], got {}",
                self.theta0
            )));
        }
        if !(self.phi0.is_finite() && self.psi0.is_finite()) {
            return Err(Error::invalid("phi0 and psi0 must be finite"));
        }
        Ok(())
    }

    /// Heads facing straight up at release: `beta = theta0`, `psi0 = 0`.
    pub fn straight_up(l_mag: f64, alpha: f64, phi0: f64, theta0: f64) -> Result<Self> {
        Self::new(l_mag, MomentumDirection::new(alpha, theta0), phi0, theta0, 0.0)
    }

    fn angles(&self) -> Angles {
        Angles {
            phi: self.phi0,
            theta: self.theta0,
            psi: self.psi0,
        }
    }
}

/// The three integrated angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

/// Time derivatives of the angles, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRates {
    pub psi_dot: f64,
    pub phi_dot: f64,
    pub theta_dot: f64,
}

/// A sampled state along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TossState {
    pub t: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub l_body: UnitVector3,
}

impl TossState {
    fn from_angles(t: f64, a: Angles) -> Self {
        Self {
            t,
            phi: a.phi,
            theta: a.theta,
            psi: a.psi,
            l_body: UnitVector3::from_spherical(a.phi, a.theta),
        }
    }

    pub fn normal(&self, dir: &MomentumDirection) -> UnitVector3 {
        geometry::normal_in_reference(dir, self.phi, self.theta, self.psi)
    }

    pub fn heads(&self, dir: &MomentumDirection) -> bool {
        geometry::heads_indicator(dir, self.theta, self.psi)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub inertia: InertiaTensor,
    pub init: InitialConditions,
    pub dt: f64,
    pub samples: Vec<TossState>,
}

impl Trajectory {
    pub fn last(&self) -> &TossState {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    /// Writes `t,phi,theta,psi,lx,ly,lz,nz,heads`, floats at 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,phi,theta,psi,lx,ly,lz,nz,heads")?;
        let dir = &self.init.dir;
        for s in &self.samples {
            let nz = geometry::normal_dot_k(dir.beta(), s.theta, s.psi);
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                s.t,
                s.phi,
                s.theta,
                s.psi,
                s.l_body.x,
                s.l_body.y,
                s.l_body.z,
                nz,
                u8::from(s.heads(dir))
            )?;
        }
        Ok(())
    }
}

/// Body-frame rates of the unit momentum, i.e. `dL/dt / |L|` for `L = |L| l`.
///
/// Always orthogonal to `l`.
pub fn euler_rhs_momentum(inertia: &InertiaTensor, l_body: [f64; 3], l_mag: f64) -> [f64; 3] {
    let [ix, iy, iz] = inertia.inverse();
    let [x, y, z] = l_body;
    [
        l_mag * (iz - iy) * y * z,
        l_mag * (ix - iz) * z * x,
        l_mag * (iy - ix) * x * y,
    ]
}

pub fn euler_rhs_angles(inertia: &InertiaTensor, phi: f64, theta: f64, l_mag: f64) -> AngleRates {
    let [ix, iy, iz] = inertia.inverse();
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let spin = cf * cf * ix + sf * sf * iy;
    AngleRates {
        psi_dot: l_mag * spin,
        phi_dot: l_mag * ct * (spin - iz),
        // sin(2 phi) = 2 sf cf
        theta_dot: l_mag * (ix - iy) * st * sf * cf,
    }
}

/// Rotational kinetic energy in erg.
pub fn energy(inertia: &InertiaTensor, l_body: [f64; 3], l_mag: f64) -> f64 {
    let [ix, iy, iz] = inertia.inverse();
    let [x, y, z] = l_body;
    0.5 * l_mag * l_mag * (x * x * ix + y * y * iy + z * z * iz)
}

fn rates(inertia: &InertiaTensor, a: &Angles, l_mag: f64) -> [f64; 3] {
    let r = euler_rhs_angles(inertia, a.phi, a.theta, l_mag);
    [r.phi_dot, r.theta_dot, r.psi_dot]
}

/// One classical RK4 step of the angle system.
pub fn rk4_step(inertia: &InertiaTensor, l_mag: f64, a: Angles, h: f64) -> Angles {
    let shift = |a: &Angles, k: &[f64; 3], s: f64| Angles {
        phi: a.phi + s * k[0],
        theta: a.theta + s * k[1],
        psi: a.psi + s * k[2],
    };
    let k1 = rates(inertia, &a, l_mag);
    let k2 = rates(inertia, &shift(&a, &k1, 0.5 * h), l_mag);
    let k3 = rates(inertia, &shift(&a, &k2, 0.5 * h), l_mag);
    let k4 = rates(inertia, &shift(&a, &k3, h), l_mag);
    let w = h / 6.0;
    Angles {
        phi: a.phi + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        theta: a.theta + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        psi: a.psi + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    }
}

fn check_finite(a: &Angles, t: f64) -> Result<()> {
    if a.phi.is_finite() && a.theta.is_finite() && a.psi.is_finite() {
        Ok(())
    } else {
        Err(Error::Integration {
            t,
            reason: "non-finite state".into(),
        })
    }
}

fn check_step(inertia: &InertiaTensor, l_mag: f64, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let ratio = l_mag * dt / inertia.ix();
    if ratio >= STEP_GUARD {
        return Err(Error::invalid(format!(
            "step guard violated: |L| dt / Ix = {ratio:.4} must be below {STEP_GUARD}"
        )));
    }
    Ok(())
}

/// Splits `[0, t_end]` into steps of `dt`, the last one possibly shorter.
fn step_count(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Fixed-step RK4 integration of the angle system, one sample per step.
pub fn integrate(
    inertia: &InertiaTensor,
    init: &InitialConditions,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    init.validate()?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::invalid(format!("t_end must be non-negative, got {t_end}")));
    }
    check_step(inertia, init.l_mag, dt)?;

    let n = step_count(t_end, dt);
    let mut samples = Vec::with_capacity(n + 1);
    let mut state = init.angles();
    samples.push(TossState::from_angles(0.0, state));
    let mut t = 0.0;
    for k in 1..=n {
        let t_next = if k == n { t_end } else { k as f64 * dt };
        state = rk4_step(inertia, init.l_mag, state, t_next - t);
        check_finite(&state, t_next)?;
        t = t_next;
        samples.push(TossState::from_angles(t, state));
    }
    Ok(Trajectory {
        inertia: *inertia,
        init: *init,
        dt,
        samples,
    })
}

/// State at `t_end` without storing the path.
pub fn propagate(
    inertia: &InertiaTensor,
    init: &InitialConditions,
    t_end: f64,
    dt: f64,
) -> Result<TossState> {
    init.validate()?;
    check_step(inertia, init.l_mag, dt)?;
    let n = step_count(t_end, dt);
    let mut state = init.angles();
    let mut t = 0.0;
    for k in 1..=n {
        let t_next = if k == n { t_end } else { k as f64 * dt };
        state = rk4_step(inertia, init.l_mag, state, t_next - t);
        t = t_next;
    }
    check_finite(&state, t)?;
    Ok(TossState::from_angles(t, state))
}

/// RK4 on the body-frame momentum equations, unit-momentum form.
///
/// Returns `l` at every step (no renormalization).
pub fn integrate_momentum(
    inertia: &InertiaTensor,
    l0: [f64; 3],
    l_mag: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<[f64; 3]>> {
    check_step(inertia, l_mag, dt)?;
    let n = step_count(t_end, dt);
    let axpy = |a: &[f64; 3], k: &[f64; 3], s: f64| [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]];
    let mut out = Vec::with_capacity(n + 1);
    let mut l = l0;
    out.push(l);
    let mut t = 0.0;
    for k in 1..=n {
        let t_next = if k == n { t_end } else { k as f64 * dt };
        let h = t_next - t;
        let k1 = euler_rhs_momentum(inertia, l, l_mag);
        let k2 = euler_rhs_momentum(inertia, axpy(&l, &k1, 0.5 * h), l_mag);
        let k3 = euler_rhs_momentum(inertia, axpy(&l, &k2, 0.5 * h), l_mag);
        let k4 = euler_rhs_momentum(inertia, axpy(&l, &k3, h), l_mag);
        for i in 0..3 {
            l[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !l.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration {
                t: t_next,
                reason: "non-finite momentum".into(),
            });
        }
        t = t_next;
        out.push(l);
    }
    Ok(out)
}

/// Period of the body-frame momentum curve (and of `theta`, `phi mod 2pi` rates).
///
/// `T = (2/|L|) * integral of dz / sqrt(A z^4 + B z^2 + C)` between the
/// extremes of `lz`.
pub fn period_lz(inertia: &InertiaTensor, init: &InitialConditions) -> Result<f64> {
    init.validate()?;
    if inertia.is_uniform() {
        return Err(Error::Degenerate(
            "uniform coin: theta is constant and has no nutation period".into(),
        ));
    }
    let q = analysis::envelope_integral(inertia, init.phi0, init.theta0, |_| 1.0, analysis::QUAD_TOL)?;
    Ok(2.0 * q.value / init.l_mag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, SQRT_2};

    fn hd() -> InertiaTensor {
        InertiaTensor::half_dollar()
    }

    #[test]
    fn inertia_validation() {
        assert!(InertiaTensor::new(1.0, 1.0, 2.0).is_ok());
        assert!(InertiaTensor::new(1.0, 2.0, 2.0).is_err());
        assert!(InertiaTensor::new(2.0, 1.0, 3.0).is_err());
        assert!(InertiaTensor::new(0.0, 1.0, 3.0).is_err());
        assert!(InertiaTensor::new(f64::NAN, 1.0, 3.0).is_err());
        assert!(InertiaTensor::half_dollar_uniform().is_uniform());
        assert!(!hd().is_uniform());
    }

    #[test]
    fn momentum_fixed_points() {
        assert_eq!(euler_rhs_momentum(&hd(), [1.0, 0.0, 0.0], 1000.0), [0.0, 0.0, 0.0]);
        assert_eq!(euler_rhs_momentum(&hd(), [0.0, 0.0, 1.0], 1000.0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn momentum_rates_by_hand() {
        // l = (1/sqrt2, 0, 1/sqrt2): only the y-rate survives, (1/Ix - 1/Iz) |L| / 2.
        let l = [1.0 / SQRT_2, 0.0, 1.0 / SQRT_2];
        let r = euler_rhs_momentum(&hd(), l, 2.0);
        assert_eq!(r[0], 0.0);
        assert!((r[1] - (1.0 / 6.68 - 1.0 / 13.24)).abs() < 1e-15);
        assert_eq!(r[2], 0.0);
    }

    #[test]
    fn momentum_rates_orthogonal() {
        for &(f, t) in &[(0.3, 0.4), (1.7, 2.2), (-0.9, 1.1)] {
            let l = UnitVector3::from_spherical(f, t).as_array();
            let r = euler_rhs_momentum(&hd(), l, 1000.0);
            let dot: f64 = l.iter().zip(&r).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-12, "{dot}");
        }
    }

    #[test]
    fn angle_rates_uniform_psi_constant() {
        let u = InertiaTensor::half_dollar_uniform();
        for &phi in &[0.0, 0.4, 1.3, 2.9] {
            let r = euler_rhs_angles(&u, phi, 1.0, 500.0);
            assert!((r.psi_dot - 500.0 / 6.68).abs() < 1e-12);
            assert_eq!(r.theta_dot, 0.0);
        }
    }

    #[test]
    fn angle_rates_equator_equilibrium() {
        let r = euler_rhs_angles(&hd(), 0.0, FRAC_PI_2, 1000.0);
        assert!(r.phi_dot.abs() < 1e-12);
        assert_eq!(r.theta_dot, 0.0);
    }

    #[test]
    fn angle_rates_by_hand() {
        // phi = pi/4, theta = pi/3, |L| = 1: cos^2 = sin^2 = 1/2, sin 2phi = 1.
        let (ix, iy, iz) = (1.0 / 6.68, 1.0 / 7.35, 1.0 / 13.24);
        let r = euler_rhs_angles(&hd(), FRAC_PI_4, FRAC_PI_3, 1.0);
        let spin = 0.5 * (ix + iy);
        assert!((r.psi_dot - spin).abs() < 1e-15);
        assert!((r.phi_dot - 0.5 * (spin - iz)).abs() < 1e-15);
        assert!((r.theta_dot - 0.5 * (ix - iy) * (3.0f64).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn psi_rate_bounds_hold() {
        for i in 0..100 {
            let phi = i as f64 * 0.0731;
            let r = euler_rhs_angles(&hd(), phi, 0.9, 1000.0);
            assert!(r.psi_dot >= 1000.0 / 7.35 - 1e-9 && r.psi_dot <= 1000.0 / 6.68 + 1e-9);
        }
    }

    #[test]
    fn energy_examples() {
        assert!((energy(&hd(), [0.0, 0.0, 1.0], 10.0) - 100.0 / (2.0 * 13.24)).abs() < 1e-12);
        assert!((energy(&hd(), [1.0, 0.0, 0.0], 10.0) - 100.0 / (2.0 * 6.68)).abs() < 1e-12);
        let u = InertiaTensor::half_dollar_uniform();
        let (phi, theta) = (0.8, 1.1);
        let l = UnitVector3::from_spherical(phi, theta).as_array();
        let expected = 50.0 * (theta.sin().powi(2) / 6.68 + theta.cos().powi(2) / 13.24);
        assert!((energy(&u, l, 10.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn step_guard_rejects_large_steps() {
        let init = InitialConditions::straight_up(1000.0, 0.0, 0.0, 1.0).unwrap();
        let err = integrate(&hd(), &init, 1.0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(ref m) if m.contains("step guard")));
        assert!(integrate(&hd(), &init, 1.0, -1.0).is_err());
    }

    #[test]
    fn sample_count_and_times() {
        let init = InitialConditions::straight_up(1000.0, 0.0, 0.2, 1.0).unwrap();
        let tr = integrate(&hd(), &init, 0.01, 1e-5).unwrap();
        assert_eq!(tr.samples.len(), 1001);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(tr.last().t, 0.01);
        let odd = integrate(&hd(), &init, 0.01, 3e-5).unwrap();
        assert_eq!(odd.samples.len(), 335);
        assert_eq!(odd.last().t, 0.01);
        let zero = integrate(&hd(), &init, 0.0, 1e-5).unwrap();
        assert_eq!(zero.samples.len(), 1);
    }

    #[test]
    fn uniform_theta_constant() {
        let u = InertiaTensor::half_dollar_uniform();
        let init = InitialConditions::straight_up(1000.0, 0.0, 0.3, 0.7).unwrap();
        let tr = integrate(&u, &init, 0.2, 1e-5).unwrap();
        assert!(tr.samples.iter().all(|s| (s.theta - 0.7).abs() < 1e-9));
    }

    #[test]
    fn equator_fixed_point_spins_at_max_rate() {
        let init = InitialConditions::new(1000.0, MomentumDirection::new(0.0, 1.0), 0.0, FRAC_PI_2, 0.0)
            .unwrap();
        let tr = integrate(&hd(), &init, 0.1, 1e-5).unwrap();
        let last = tr.last();
        assert!(last.phi.abs() < 1e-12);
        assert!((last.theta - FRAC_PI_2).abs() < 1e-12);
        assert!((last.psi - 100.0 / 6.68).abs() < 1e-9);
    }

    #[test]
    fn propagate_matches_integrate() {
        let init = InitialConditions::straight_up(900.0, 0.2, 0.4, 1.0).unwrap();
        let tr = integrate(&hd(), &init, 0.05, 2e-5).unwrap();
        let end = propagate(&hd(), &init, 0.05, 2e-5).unwrap();
        assert_eq!(*tr.last(), end);
    }

    #[test]
    fn period_scales_inversely_with_momentum() {
        let a = InitialConditions::straight_up(1000.0, 0.0, FRAC_PI_4, FRAC_PI_3).unwrap();
        let b = InitialConditions { l_mag: 2000.0, ..a };
        let ta = period_lz(&hd(), &a).unwrap();
        let tb = period_lz(&hd(), &b).unwrap();
        assert!((ta - 2.0 * tb).abs() < 1e-12 * ta);
        assert!(ta > 0.0 && ta.is_finite());
    }

    #[test]
    fn period_in_fair_region_is_finite() {
        let init = InitialConditions::straight_up(1000.0, 0.0, 0.2, 1.5).unwrap();
        let t = period_lz(&hd(), &init).unwrap();
        assert!(t.is_finite() && t > 0.0);
    }

    #[test]
    fn period_rejects_uniform_and_fixed_points() {
        let init = InitialConditions::straight_up(1000.0, 0.0, 0.2, 1.0).unwrap();
        assert!(matches!(
            period_lz(&InertiaTensor::half_dollar_uniform(), &init),
            Err(Error::Degenerate(_))
        ));
        let pole = InitialConditions::straight_up(1000.0, 0.0, 0.2, 0.0).unwrap();
        assert!(period_lz(&hd(), &pole).is_err());
    }

    #[test]
    fn csv_layout() {
        let init = InitialConditions::straight_up(1000.0, 0.0, 0.2, 1.0).unwrap();
        let tr = integrate(&hd(), &init, 1e-4, 1e-5).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,phi,theta,psi,lx,ly,lz,nz,heads");
        assert_eq!(lines.len(), 12);
        let first: Vec<_> = lines[1].split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[8], "1");
        let theta: f64 = first[2].parse().unwrap();
        assert_eq!(theta, 1.0);
    }
}
