//! The two extremal fields, the slope loci X₀/X₁/X∞, and stationary points on the boundary.

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPair, Side, StripPoint};
use crate::error::{Error, Result};

pub const IMPROPER_NODE_TOL: f64 = 1e-9;
const DEN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    /// f₊ at x₁+x₂, f₋ at x₁−x₂.
    LeftSpine,
    /// f₊ at x₁−x₂, f₋ at x₁+x₂.
    RightSpine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Saddle,
    Spiral,
    Node,
    ImproperNode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Eigenvalues {
    Real(f64, f64),
    Complex { re: f64, im: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryPointInfo {
    pub kind: FieldKind,
    pub side: Side,
    pub u: f64,
    pub eps: f64,
    pub kappa: f64,
    pub s: f64,
    /// J = prefactor · M(s) where M is the normal form for this (kind, side).
    pub prefactor: f64,
    pub classification: Classification,
    /// Eigenvalues of the normal form, larger first when real.
    pub eigenvalues: Eigenvalues,
    /// Slopes in strip coordinates of the eigenvectors for the two real eigenvalues.
    pub eigvec_slopes: Option<(f64, f64)>,
}

impl StationaryPointInfo {
    pub fn point(&self) -> StripPoint {
        StripPoint::new(self.u, self.side.sign() * self.eps)
    }

    /// Slope of the eigenvector for λ = (s − √(s²+8s))/2, the one ℓ leaves along.
    pub fn stable_slope(&self) -> Option<f64> {
        self.eigvec_slopes.map(|(_, m)| m)
    }
}

/// Whether the normal form at (kind, side) is [[1,1−3s],[−1,s−1]] or its conjugate by x₂ ↦ −x₂.
fn conjugated(kind: FieldKind, side: Side) -> bool {
    matches!((kind, side), (FieldKind::LeftSpine, Side::Lower) | (FieldKind::RightSpine, Side::Upper))
}

pub fn normal_form(kind: FieldKind, side: Side, s: f64) -> [[f64; 2]; 2] {
    if conjugated(kind, side) {
        [[1.0, 3.0 * s - 1.0], [1.0, s - 1.0]]
    } else {
        [[1.0, 1.0 - 3.0 * s], [-1.0, s - 1.0]]
    }
}

fn left_velocity(pair: &BoundaryPair, x: StripPoint, eps: f64) -> (f64, f64) {
    let (y, z, x2) = (x.x1 + x.x2, x.x1 - x.x2, x.x2);
    let (p1, p2) = (pair.fp(1, y), pair.fp(2, y));
    let (m1, m2) = (pair.fm(1, z), pair.fm(2, z));
    let d1 = eps * (p1 - m1) - x2 * (eps - x2) * m2 - x2 * (eps + x2) * p2;
    let d2 = x2 * (m1 - p1) - x2 * (eps - x2) * m2 + x2 * (eps + x2) * p2;
    (d1, d2)
}

fn left_jacobian(pair: &BoundaryPair, x: StripPoint, eps: f64) -> [[f64; 2]; 2] {
    let (y, z, x2) = (x.x1 + x.x2, x.x1 - x.x2, x.x2);
    let (p1, p2, p3) = (pair.fp(1, y), pair.fp(2, y), pair.fp(3, y));
    let (m1, m2, m3) = (pair.fm(1, z), pair.fm(2, z), pair.fm(3, z));
    let a = x2 * (eps - x2);
    let b = x2 * (eps + x2);
    [
        [
            eps * (p2 - m2) - a * m3 - b * p3,
            2.0 * x2 * (m2 - p2) + a * m3 - b * p3,
        ],
        [
            x2 * (m2 - p2) - a * m3 + b * p3,
            m1 - p1 + (x2 - eps) * m2 + (eps + x2) * p2 + a * m3 + b * p3,
        ],
    ]
}

pub fn velocity(pair: &BoundaryPair, kind: FieldKind, x: StripPoint, eps: f64) -> (f64, f64) {
    match kind {
        FieldKind::LeftSpine => left_velocity(pair, x, eps),
        FieldKind::RightSpine => {
            let (z, y, x2) = (x.x1 - x.x2, x.x1 + x.x2, x.x2);
            let (p1, p2) = (pair.fp(1, z), pair.fp(2, z));
            let (m1, m2) = (pair.fm(1, y), pair.fm(2, y));
            let d1 = eps * (m1 - p1) - x2 * (eps + x2) * p2 - x2 * (eps - x2) * m2;
            let d2 = x2 * (m1 - p1) - x2 * (eps + x2) * p2 + x2 * (eps - x2) * m2;
            (d1, d2)
        }
    }
}

pub fn jacobian(pair: &BoundaryPair, kind: FieldKind, x: StripPoint, eps: f64) -> [[f64; 2]; 2] {
    match kind {
        FieldKind::LeftSpine => left_jacobian(pair, x, eps),
        FieldKind::RightSpine => {
            // R(x₁,x₂) = (L₁(−x₁,x₂), −L₂(−x₁,x₂)) for the reflected pair.
            let j = left_jacobian(&pair.reflected(), StripPoint::new(-x.x1, x.x2), eps);
            [[-j[0][0], j[0][1]], [j[1][0], -j[1][1]]]
        }
    }
}

/// (X₀, X₁, X∞): the loci where LeftSpine integral curves have slope 0, 1 and ∞.
pub fn curve_values(pair: &BoundaryPair, x: StripPoint, eps: f64) -> (f64, f64, f64) {
    let (y, z, x2) = (x.x1 + x.x2, x.x1 - x.x2, x.x2);
    let (p1, p2) = (pair.fp(1, y), pair.fp(2, y));
    let (m1, m2) = (pair.fm(1, z), pair.fm(2, z));
    let x0 = m1 - p1 - (eps - x2) * m2 + (eps + x2) * p2;
    let x1 = p1 - m1 - 2.0 * x2 * p2;
    let xi = eps * (p1 - m1) - x2 * (eps - x2) * m2 - x2 * (eps + x2) * p2;
    (x0, x1, xi)
}

/// Height of the first zero of X₀, X₁ or X∞ (index 0, 1, 2) below the upper line at x₁,
/// or None if the curve value keeps its boundary sign down to the lower line.
pub fn zero_level_height(pair: &BoundaryPair, which: usize, x1: f64, eps: f64) -> Option<f64> {
    let g = |x2: f64| {
        let v = curve_values(pair, StripPoint::new(x1, x2), eps);
        [v.0, v.1, v.2][which]
    };
    let s0 = g(eps).signum();
    if s0 == 0.0 {
        return Some(eps);
    }
    let mut d_prev = 0.0;
    let mut d = 1e-13 * eps;
    while d <= 2.0 * eps {
        if g(eps - d).signum() != s0 {
            let (mut a, mut b) = (d_prev, d);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if g(eps - m).signum() == s0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(eps - 0.5 * (a + b));
        }
        d_prev = d;
        d = (d * 1.05).max(d + 1e-13 * eps);
    }
    None
}

/// The D whose zero makes (u, ±ε) stationary for the given field, in boundary form.
pub fn stationary_d(pair: &BoundaryPair, kind: FieldKind, side: Side, u: f64, eps: f64) -> f64 {
    match (kind, side) {
        (FieldKind::LeftSpine, Side::Upper) => pair.d_plus_boundary(u, eps),
        (FieldKind::RightSpine, Side::Lower) => pair.d_minus_boundary(u, eps),
        (FieldKind::LeftSpine, Side::Lower) => {
            pair.d_minus_numerator(StripPoint::new(u, -eps)) / (-2.0 * eps)
        }
        (FieldKind::RightSpine, Side::Upper) => {
            pair.d_plus_numerator(StripPoint::new(u, -eps)) / (-2.0 * eps)
        }
    }
}

fn kappa_parts(pair: &BoundaryPair, kind: FieldKind, side: Side, u: f64, e: f64) -> (f64, f64) {
    match (kind, side) {
        (FieldKind::LeftSpine, Side::Upper) => {
            let p3 = pair.fp(3, u + e);
            (2.0 * p3, pair.fp(2, u + e) - pair.fm(2, u - e) - 2.0 * e * p3)
        }
        (FieldKind::LeftSpine, Side::Lower) => {
            let m3 = pair.fm(3, u + e);
            (2.0 * m3, pair.fm(2, u + e) - pair.fp(2, u - e) - 2.0 * e * m3)
        }
        (FieldKind::RightSpine, Side::Lower) => {
            let m3 = pair.fm(3, u - e);
            (2.0 * m3, pair.fp(2, u + e) - pair.fm(2, u - e) - 2.0 * e * m3)
        }
        (FieldKind::RightSpine, Side::Upper) => {
            let p3 = pair.fp(3, u - e);
            (2.0 * p3, pair.fm(2, u + e) - pair.fp(2, u - e) - 2.0 * e * p3)
        }
    }
}

pub fn kappa(pair: &BoundaryPair, kind: FieldKind, side: Side, u: f64, eps: f64) -> Result<f64> {
    let (num, den) = kappa_parts(pair, kind, side, u, eps);
    if den.abs() <= DEN_TOL {
        return Err(Error::DegenerateRoot { u, den });
    }
    Ok(num / den)
}

pub fn classify_s(s: f64) -> Result<Classification> {
    if (s + 8.0).abs() <= IMPROPER_NODE_TOL {
        Ok(Classification::ImproperNode)
    } else if s > 0.0 {
        Ok(Classification::Saddle)
    } else if s < -8.0 {
        Ok(Classification::Node)
    } else if s < 0.0 {
        Ok(Classification::Spiral)
    } else {
        Err(Error::Unclassified("s = 0: nilpotent normal form".into()))
    }
}

/// Roots of λ² − sλ − 2s = 0, larger first when real.
pub fn eigenvalues(s: f64) -> Eigenvalues {
    let disc = s * s + 8.0 * s;
    if (s + 8.0).abs() <= IMPROPER_NODE_TOL {
        return Eigenvalues::Real(s / 2.0, s / 2.0);
    }
    if disc >= 0.0 {
        let r = disc.sqrt();
        Eigenvalues::Real((s + r) / 2.0, (s - r) / 2.0)
    } else {
        Eigenvalues::Complex { re: s / 2.0, im: (-disc).sqrt() / 2.0 }
    }
}

pub fn classify_stationary(
    pair: &BoundaryPair,
    u: f64,
    side: Side,
    kind: FieldKind,
    eps: f64,
) -> Result<StationaryPointInfo> {
    let (num, den) = kappa_parts(pair, kind, side, u, eps);
    if den.abs() <= DEN_TOL {
        return Err(Error::DegenerateRoot { u, den });
    }
    // The boundary D is a function of u whose derivative is ±den/(2ε); a root offset
    // of 1e-9 (relative) is accepted.
    let residual = stationary_d(pair, kind, side, u, eps);
    let scale = den.abs() / (2.0 * eps) * (1.0 + u.abs() + eps);
    if residual.abs() > 1e-9 * scale.max(1e-300) {
        return Err(Error::NotStationary { u, residual });
    }
    let kappa = num / den;
    let s = 1.0 + eps * kappa;
    let x = StripPoint::new(u, side.sign() * eps);
    let j = jacobian(pair, kind, x, eps);
    let prefactor = j[0][0];
    let jnorm = j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if jnorm == 0.0 || prefactor.abs() <= 1e-14 * jnorm.max(1.0) {
        return Err(Error::DegeneratePrefactor { u });
    }
    let classification = classify_s(s)?;
    let ev = eigenvalues(s);
    let flip = if conjugated(kind, side) { -1.0 } else { 1.0 };
    let eigvec_slopes = match ev {
        Eigenvalues::Real(l1, l2) => Some((flip / (s - 1.0 - l1), flip / (s - 1.0 - l2))),
        Eigenvalues::Complex { .. } => None,
    };
    Ok(StationaryPointInfo {
        kind,
        side,
        u,
        eps,
        kappa,
        s,
        prefactor,
        classification,
        eigenvalues: ev,
        eigvec_slopes,
    })
}
