//! Frames, Euler-angle rotation matrices and the reference-frame normal.
//!
//! Three frames share the coin's centroid: the reference frame `{i, j, k}`
//! with `k` pointing up, the intermediate frame `{E1, E2, l}` whose third axis
//! is the (conserved) angular-momentum direction, and the body frame
//! `{e1, e2, n}` with `n` the normal of the heads face. The reference-frame
//! orientation of the body is `A1 * A2`, where `A1` depends only on the
//! momentum direction and `A2` on the body-frame spherical angles of `l` and
//! the precession angle.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// A vector of unit Euclidean length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVector3 {
    pub const K: UnitVector3 = UnitVector3 {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    /// Normalizes `v`. Returns `None` for the zero vector or non-finite input.
    pub fn normalize(v: [f64; 3]) -> Option<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        Some(UnitVector3 {
            x: v[0] / norm,
            y: v[1] / norm,
            z: v[2] / norm,
        })
    }

    /// `(cos az sin pol, sin az sin pol, cos pol)`.
    pub fn from_spherical(azimuth: f64, polar: f64) -> Self {
        let (sa, ca) = azimuth.sin_cos();
        let (sp, cp) = polar.sin_cos();
        UnitVector3 {
            x: ca * sp,
            y: sa * sp,
            z: cp,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// 3x3 rotation matrix, row-major, acting on column vectors from the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix {
    m: [[f64; 3]; 3],
}

impl RotationMatrix {
    pub const IDENTITY: Self = Self {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Wraps raw row-major entries. No orthogonality check is made.
    pub const fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Third column, i.e. the image of `(0, 0, 1)`.
    pub fn third_column(&self) -> [f64; 3] {
        [self.m[0][2], self.m[1][2], self.m[2][2]]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `|R^T R - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = self.transpose() * *self;
        let mut worst = 0.0_f64;
        for (i, row) in p.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        RotationMatrix { m: out }
    }
}

/// Precession / nutation / rotation angles of a z-x-z Euler sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub pr: f64,
    pub nu: f64,
    pub rt: f64,
}

impl EulerAngles {
    pub fn new(pr: f64, nu: f64, rt: f64) -> Self {
        Self { pr, nu, rt }
    }
}

/// Reference-frame direction of the angular momentum, in spherical angles.
///
/// `beta` is the polar angle from `k` and lies in `[0, pi]`; `alpha` is the
/// azimuth, reduced to `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumDirection {
    alpha: f64,
    beta: f64,
}

impl MomentumDirection {
    /// Builds a normalized direction. A polar angle outside `[0, pi]` is
    /// folded back onto the sphere (shifting the azimuth by `pi`).
    pub fn new(alpha: f64, beta: f64) -> Self {
        let mut alpha = alpha;
        let mut beta = beta.rem_euclid(TAU);
        if beta > PI {
            beta = TAU - beta;
            alpha += PI;
        }
        let mut alpha = alpha.rem_euclid(TAU);
        if alpha >= TAU {
            alpha = 0.0;
        }
        Self { alpha, beta }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `l` in reference coordinates.
    pub fn unit_vector(&self) -> UnitVector3 {
        UnitVector3::from_spherical(self.alpha, self.beta)
    }
}

/// Rotation matrix of the z-x-z Euler sequence `(pr, nu, rt)`.
pub fn euler_to_matrix(angles: EulerAngles) -> RotationMatrix {
    let (sp, cp) = angles.pr.sin_cos();
    let (sn, cn) = angles.nu.sin_cos();
    let (sr, cr) = angles.rt.sin_cos();
    RotationMatrix::from_rows([
        [cp * cr - sp * cn * sr, -cp * sr - sp * cn * cr, sp * sn],
        [sp * cr + cp * cn * sr, -sp * sr + cp * cn * cr, -cp * sn],
        [sn * sr, sn * cr, cn],
    ])
}

/// Reference-to-intermediate rotation `A1`, Euler angles `(alpha + pi/2, beta, pi/2)`.
///
/// Evaluated through [`euler_to_matrix`]; the closed form has rows
/// `(-ca cb, sa, ca sb)`, `(-sa cb, -ca, sa sb)`, `(sb, 0, cb)`.
pub fn matrix_a1(dir: &MomentumDirection) -> RotationMatrix {
    euler_to_matrix(EulerAngles::new(
        dir.alpha() + FRAC_PI_2,
        dir.beta(),
        FRAC_PI_2,
    ))
}

/// Intermediate-to-body rotation `A2`, Euler angles `(psi + pi/2, theta, pi/2 - phi)`.
pub fn matrix_a2(phi: f64, theta: f64, psi: f64) -> RotationMatrix {
    euler_to_matrix(EulerAngles::new(psi + FRAC_PI_2, theta, FRAC_PI_2 - phi))
}

/// Reference-frame coordinates of the heads normal `n`.
///
/// Closed form of `A1 A2 (0,0,1)^T`. It does not depend on `phi`, which only
/// fixes the body's spin about `n`; the parameter is kept so call sites read
/// like the full state.
pub fn normal_in_reference(dir: &MomentumDirection, _phi: f64, theta: f64, psi: f64) -> UnitVector3 {
    let (sa, ca) = dir.alpha().sin_cos();
    let (sb, cb) = dir.beta().sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    UnitVector3 {
        x: -ca * cb * cp * st + sa * sp * st + ca * sb * ct,
        y: -sa * cb * cp * st - ca * sp * st + sa * sb * ct,
        z: sb * cp * st + cb * ct,
    }
}

/// `n . k`, the vertical component of the heads normal.
#[inline]
pub fn normal_dot_k(beta: f64, theta: f64, psi: f64) -> f64 {
    beta.cos() * theta.cos() + beta.sin() * theta.sin() * psi.cos()
}

/// Values of `n . k` at or below this are ties and count as tails.
///
/// Angles such as `pi/2` are not representable, so a geometric zero shows up
/// as a residue of a few ulps.
pub const TIE_TOLERANCE: f64 = 4.0 * f64::EPSILON;

/// Heads is up iff `n . k > 0`; ties count as tails.
#[inline]
pub fn heads_indicator(dir: &MomentumDirection, theta: f64, psi: f64) -> bool {
    normal_dot_k(dir.beta(), theta, psi) > TIE_TOLERANCE
}
