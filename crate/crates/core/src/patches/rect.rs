//! The quadratic patch on the rectangle spanned by the crossing point C of the two spines.

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPair, StripPoint};
use crate::error::{Error, Result};
use crate::patches::herringbone::{spine_value, spine_value_right};

/// B = a(x₁² − x₂²) + b·x₁ + c·x₂ + d on the rectangle with vertices C ± (ε, 0) and the two
/// boundary points of slope ±1 through them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectPatch {
    pub c: StripPoint,
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub cc: f64,
    pub d: f64,
}

pub fn rect_patch(pair: &BoundaryPair, c: StripPoint, eps: f64) -> RectPatch {
    let (c1, c2) = (c.x1, c.x2);
    let (a, b, cc, d);
    if c2.abs() < 1e-6 * eps {
        let (f, g) = (pair.fp(0, c1), pair.fm(0, c1));
        let (f1, g1) = (pair.fp(1, c1), pair.fm(1, c1));
        let (f2, g2) = (pair.fp(2, c1), pair.fm(2, c1));
        a = (f2 + g2) / 4.0;
        b = (f1 + g1 - c1 * (f2 + g2)) / 2.0;
        cc = (f - g) / (2.0 * eps);
        d = (f + g) / 2.0 + (-2.0 * c1 * (f1 + g1) + (c1 * c1 + eps * eps) * (f2 + g2)) / 4.0;
    } else {
        let (f, f1) = (pair.fp(0, c1 + c2), pair.fp(1, c1 + c2));
        let (g, g1) = (pair.fm(0, c1 - c2), pair.fm(1, c1 - c2));
        a = (f1 - g1) / (4.0 * c2);
        b = ((c1 + c2) * g1 - (c1 - c2) * f1) / (2.0 * c2);
        cc = (f - g - c2 * (f1 + g1)) / (2.0 * eps);
        let k = c1 * c1 + eps * eps - c2 * c2;
        d = (f + g) / 2.0 + ((k - 2.0 * c1 * c2) * f1 - (k + 2.0 * c1 * c2) * g1) / (4.0 * c2);
    }
    RectPatch { c, eps, a, b, cc, d }
}

/// Patch through the four vertex values when C lies on the midline:
/// f₊(C₁) at (C₁, ε), f₋(C₁) at (C₁, −ε), A^l at (C₁+ε, 0), A^r at (C₁−ε, 0).
pub fn rect_patch_on_midline(pair: &BoundaryPair, c1: f64, eps: f64, a_l: f64, a_r: f64) -> RectPatch {
    let (f, g) = (pair.fp(0, c1), pair.fm(0, c1));
    let a = (a_l + a_r - f - g) / (4.0 * eps * eps);
    let b = (a_l - a_r) / (2.0 * eps) - 2.0 * a * c1;
    let cc = (f - g) / (2.0 * eps);
    let d = (f + g) / 2.0 - a * (c1 * c1 - eps * eps) - b * c1;
    RectPatch { c: StripPoint::new(c1, 0.0), eps, a, b, cc, d }
}

/// Patch through f₊ at (C₁+C₂, ε), f₋ at (C₁−C₂, −ε), A^l at C + (ε, 0) and A^r at
/// (C₁−ε, −C₂), from the vertex system solved as it stands.
pub fn rect_from_vertex_values(c: StripPoint, eps: f64, f: f64, g: f64, a_l: f64, a_r: f64) -> RectPatch {
    let (c1, c2, e) = (c.x1, c.x2, eps);
    let den = e * e - c2 * c2;
    let a = (a_r + a_l - f - g) / (4.0 * den);
    let b = ((c1 - c2) * f + (c1 + c2) * g - (c1 - e) * a_l - (c1 + e) * a_r) / (2.0 * den);
    let cc = (e * (f - g) + c2 * (a_r - a_l)) / (2.0 * den);
    let d = ((e * e - (c1 - c2).powi(2)) * f
        + (e * e - (c1 + c2).powi(2)) * g
        + ((c1 - e).powi(2) - c2 * c2) * a_l
        + ((c1 + e).powi(2) - c2 * c2) * a_r)
        / (4.0 * den);
    RectPatch { c, eps, a, b, cc, d }
}

impl RectPatch {
    pub fn contains(&self, x: StripPoint) -> bool {
        let (c1, c2, e) = (self.c.x1, self.c.x2, self.eps);
        let tol = 1e-12 * (1.0 + c1.abs() + e);
        let (s, w) = (x.x1 - x.x2, x.x1 + x.x2);
        x.x2.abs() <= e + tol
            && s >= c1 - e + c2 - tol
            && s <= c1 + e - c2 + tol
            && w >= c1 - c2 - e - tol
            && w <= c1 + c2 + e + tol
    }

    pub fn eval_unchecked(&self, x: StripPoint) -> f64 {
        self.a * (x.x1 * x.x1 - x.x2 * x.x2) + self.b * x.x1 + self.cc * x.x2 + self.d
    }

    pub fn value(&self, x: StripPoint) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::OutsideLeaf { x1: x.x1, x2: x.x2 });
        }
        Ok(self.eval_unchecked(x))
    }

    pub fn gradient_unchecked(&self, x: StripPoint) -> (f64, f64) {
        (2.0 * self.a * x.x1 + self.b, -2.0 * self.a * x.x2 + self.cc)
    }

    pub fn gradient(&self, x: StripPoint) -> Result<(f64, f64)> {
        if !self.contains(x) {
            return Err(Error::OutsideLeaf { x1: x.x1, x2: x.x2 });
        }
        Ok(self.gradient_unchecked(x))
    }

    /// Corners: right spine end, lower boundary point, left spine end, upper boundary point.
    pub fn vertices(&self) -> [StripPoint; 4] {
        let (c1, c2, e) = (self.c.x1, self.c.x2, self.eps);
        [
            StripPoint::new(c1 - e, -c2),
            StripPoint::new(c1 - c2, -e),
            StripPoint::new(c1 + e, c2),
            StripPoint::new(c1 + c2, e),
        ]
    }

    /// Values the two herringbones assign to the spine ends.
    pub fn spine_vertex_values(&self, pair: &BoundaryPair) -> (f64, f64) {
        let (c1, c2, e) = (self.c.x1, self.c.x2, self.eps);
        (spine_value(pair, c1 + e, c2, e), spine_value_right(pair, c1 - e, -c2, e))
    }
}
