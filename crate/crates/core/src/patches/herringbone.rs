//! Herringbones: slope ±1 chords hung on a spine, the candidate linear along each chord.
//!
//! Everything is computed for a left herringbone (spine = ℓ shifted right by ε, chords
//! running to the left). A right herringbone is the mirror x₁ ↦ −x₁ of a left one built
//! for the reflected pair t ↦ f±(−t).

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPair, StripPoint};
use crate::error::{Error, Result};
use crate::field::FieldKind;
use crate::spine::{SpineCurve, SpineGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

/// Quantities attached to the spine point (p, T) of a left herringbone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordFrame {
    pub p: f64,
    pub t: f64,
    /// f₊ and f₊′ at the upper chord end p − ε + T.
    pub f: f64,
    pub fd: f64,
    /// f₋ and f₋′ at the lower chord end p − ε − T.
    pub g: f64,
    pub gd: f64,
    pub a: f64,
    pub r: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub n: f64,
    pub upper_end: StripPoint,
    pub lower_end: StripPoint,
}

/// (f₊′(c+T) − f₋′(c−T)) / (2T), without cancellation for small T.
fn n_coefficient(pair: &BoundaryPair, c: f64, t: f64, eps: f64) -> f64 {
    if t.abs() >= 1e-3 * eps {
        return (pair.fp(1, c + t) - pair.fm(1, c - t)) / (2.0 * t);
    }
    let even = 0.5 * (pair.fp(2, c) + pair.fm(2, c)) + 0.25 * (pair.fp(3, c) - pair.fm(3, c)) * t;
    if t == 0.0 || (pair.da3() == 0.0 && t.abs() < 1e-12 * eps) {
        return even;
    }
    let diff = if pair.da3() != 0.0 {
        let z = c - pair.inflection();
        3.0 * pair.da3() * z * z + pair.q_min()
    } else {
        pair.fp(1, c) - pair.fm(1, c)
    };
    diff / (2.0 * t) + even
}

pub fn chord_frame(pair: &BoundaryPair, p: f64, t: f64, eps: f64) -> ChordFrame {
    chord_frame_with_n(pair, p, t, eps, n_coefficient(pair, p - eps, t, eps))
}

/// Chord frame with N supplied by the caller (used where the spine meets the midline tangentially).
pub fn chord_frame_with_n(pair: &BoundaryPair, p: f64, t: f64, eps: f64, n: f64) -> ChordFrame {
    let c = p - eps;
    let (up, lo) = (c + t, c - t);
    let (f, fd) = (pair.fp(0, up), pair.fp(1, up));
    let (g, gd) = (pair.fm(0, lo), pair.fm(1, lo));
    let r = 2.0 * eps * n + fd + gd;
    let r_plus = (eps + t) / (2.0 * eps) * r + (g - f) / (2.0 * eps);
    let r_minus = (eps - t) / (2.0 * eps) * r + (f - g) / (2.0 * eps);
    let a = (eps * eps - t * t) / (2.0 * eps) * r + ((eps + t) * f + (eps - t) * g) / (2.0 * eps);
    ChordFrame {
        p,
        t,
        f,
        fd,
        g,
        gd,
        a,
        r,
        r_plus,
        r_minus,
        n,
        upper_end: StripPoint::new(up, eps),
        lower_end: StripPoint::new(lo, -eps),
    }
}

impl ChordFrame {
    pub fn value(&self, x: StripPoint, branch: Branch) -> f64 {
        match branch {
            Branch::Upper => self.a - (x.x2 - self.t) * self.r_plus,
            Branch::Lower => self.a - (self.t - x.x2) * self.r_minus,
        }
    }

    pub fn gradient(&self, x: StripPoint, branch: Branch, eps: f64) -> (f64, f64) {
        match branch {
            Branch::Upper => {
                let gx = (eps - x.x2) * self.n + self.fd;
                (gx, gx - self.r_plus)
            }
            Branch::Lower => {
                let gx = (eps + x.x2) * self.n + self.gd;
                (gx, self.r_minus - gx)
            }
        }
    }
}

/// Value at the spine point (p, T) of a left herringbone.
pub fn spine_value(pair: &BoundaryPair, p: f64, t: f64, eps: f64) -> f64 {
    chord_frame(pair, p, t, eps).a
}

/// Value at the spine point (q, S) of a right herringbone.
pub fn spine_value_right(pair: &BoundaryPair, q: f64, s: f64, eps: f64) -> f64 {
    chord_frame(&pair.reflected(), -q, s, eps).a
}

/// A spine end lying on the midline, where the spine is tangent to it and
/// N = (f₊′ − f₋′)/(2T) is a 0/0 limit. Within `cut` of the end N is extrapolated linearly
/// from its values at distances `cut` and `2·cut`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentEnd {
    pub p_end: f64,
    /// +1 when the end is the left end of the frame graph.
    pub dir: f64,
    pub cut: f64,
}

const TANGENT_CUT: f64 = 1e-6;

fn tangent_end(g: &SpineGraph, eps: f64) -> Option<TangentEnd> {
    let n = g.p.len();
    let cut = TANGENT_CUT * eps;
    if g.t[0] == 0.0 {
        Some(TangentEnd { p_end: g.p[0], dir: 1.0, cut })
    } else if g.t[n - 1] == 0.0 {
        Some(TangentEnd { p_end: g.p[n - 1], dir: -1.0, cut })
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct Herringbone {
    pub orientation: Orientation,
    /// The traced ℓ in strip coordinates, before the ±ε shift.
    pub spine: SpineCurve,
    pub shift: f64,
    pub eps: f64,
    pub tangent_end: Option<TangentEnd>,
    frame_pair: BoundaryPair,
    graph: SpineGraph,
}

impl Herringbone {
    /// Left herringbones hang on ℓ⁺ + ε, right ones on ℓ⁻ − ε.
    pub fn new(pair: &BoundaryPair, spine: SpineCurve) -> Result<Self> {
        let eps = spine.eps;
        let (orientation, shift, frame_pair, sign, offset) = match spine.kind {
            FieldKind::LeftSpine => (Orientation::Left, eps, *pair, 1.0, eps),
            FieldKind::RightSpine => (Orientation::Right, -eps, pair.reflected(), -1.0, eps),
        };
        // frame abscissa = sign·x₁ + offset
        let pts = spine
            .samples
            .iter()
            .zip(&spine.slopes)
            .map(|(q, m)| (sign * q.x1 + offset, q.x2, sign * m))
            .collect();
        let graph = SpineGraph::new(pts)?;
        let tangent_end = tangent_end(&graph, eps);
        Ok(Herringbone { orientation, spine, shift, eps, tangent_end, frame_pair, graph })
    }

    fn mirror(&self) -> f64 {
        match self.orientation {
            Orientation::Left => 1.0,
            Orientation::Right => -1.0,
        }
    }

    fn to_frame(&self, x: StripPoint) -> StripPoint {
        StripPoint::new(self.mirror() * x.x1, x.x2)
    }

    /// Spine in strip coordinates (ℓ shifted by ±ε), ordered by abscissa.
    pub fn spine_points(&self) -> Vec<StripPoint> {
        let m = self.mirror();
        let mut v: Vec<StripPoint> =
            self.graph.p.iter().zip(&self.graph.t).map(|(p, t)| StripPoint::new(m * p, *t)).collect();
        if m < 0.0 {
            v.reverse();
        }
        v
    }

    /// Spine end points in strip coordinates, leftmost first.
    pub fn spine_ends(&self) -> (StripPoint, StripPoint) {
        let v = self.spine_points();
        (v[0], v[v.len() - 1])
    }

    /// Range of x₁ − x₂ swept by the chords meeting the lower line (left) or the upper line (right).
    pub fn s_range(&self) -> (f64, f64) {
        let (lo, hi) = self.graph.range();
        let (tl, th) = (self.graph.t_at(lo), self.graph.t_at(hi));
        match self.orientation {
            Orientation::Left => (lo - tl, hi - th),
            Orientation::Right => (-hi - th, -lo - tl),
        }
    }

    pub fn frame_pair(&self) -> &BoundaryPair {
        &self.frame_pair
    }

    pub fn graph(&self) -> &SpineGraph {
        &self.graph
    }

    /// Chord frame at the frame abscissa p of the spine.
    pub fn frame_at(&self, p: f64) -> ChordFrame {
        let t = self.graph.t_at(p);
        match self.tangent_end {
            Some(e) if (p - e.p_end).abs() < e.cut => {
                let n_at = |k: f64| {
                    let q = e.p_end + e.dir * k * e.cut;
                    n_coefficient(&self.frame_pair, q - self.eps, self.graph.t_at(q), self.eps)
                };
                let (n1, n2) = (n_at(1.0), n_at(2.0));
                let d = (p - e.p_end).abs() / e.cut;
                chord_frame_with_n(&self.frame_pair, p, t, self.eps, n1 + (n1 - n2) * (1.0 - d))
            }
            _ => chord_frame(&self.frame_pair, p, t, self.eps),
        }
    }

    /// Candidate value at the spine ends, leftmost first in strip coordinates.
    pub fn spine_end_values(&self) -> (f64, f64) {
        let (lo, hi) = self.graph.range();
        let (a, b) = (self.frame_at(lo).a, self.frame_at(hi).a);
        match self.orientation {
            Orientation::Left => (a, b),
            Orientation::Right => (b, a),
        }
    }

    /// Chord through x (in the left frame) and the side of the spine it lies on.
    fn locate_frame(&self, y: StripPoint) -> Option<(ChordFrame, Branch)> {
        let eps = self.eps;
        let tol = 1e-12 * (1.0 + y.x1.abs() + eps);
        if y.x2.abs() > eps + tol {
            return None;
        }
        if let Some(p) = self.graph.solve(1.0, y.x1 + y.x2, tol) {
            let t = self.graph.t_at(p);
            if y.x2 >= t - 1e-10 * eps {
                return Some((self.frame_at(p), Branch::Upper));
            }
        }
        if let Some(p) = self.graph.solve(-1.0, y.x1 - y.x2, tol) {
            let t = self.graph.t_at(p);
            if y.x2 <= t + 1e-10 * eps {
                return Some((self.frame_at(p), Branch::Lower));
            }
        }
        None
    }

    pub fn contains(&self, x: StripPoint) -> bool {
        self.locate_frame(self.to_frame(x)).is_some()
    }

    /// Chord frame (in the left frame) for the chord through x.
    pub fn locate(&self, x: StripPoint) -> Option<(ChordFrame, Branch)> {
        self.locate_frame(self.to_frame(x))
    }

    pub fn value(&self, x: StripPoint) -> Result<f64> {
        let y = self.to_frame(x);
        let (cf, br) = self.locate_frame(y).ok_or(Error::OutsideLeaf { x1: x.x1, x2: x.x2 })?;
        Ok(cf.value(y, br))
    }

    pub fn gradient(&self, x: StripPoint) -> Result<(f64, f64)> {
        let y = self.to_frame(x);
        let (cf, br) = self.locate_frame(y).ok_or(Error::OutsideLeaf { x1: x.x1, x2: x.x2 })?;
        let (gx, gy) = cf.gradient(y, br, self.eps);
        Ok((self.mirror() * gx, gy))
    }

    /// Value and gradient from one chord family, continued across the spine if needed.
    pub fn on_branch(&self, x: StripPoint, branch: Branch) -> Option<(f64, (f64, f64))> {
        let y = self.to_frame(x);
        let tol = 1e-9 * (1.0 + y.x1.abs() + self.eps);
        let p = match branch {
            Branch::Upper => self.graph.solve(1.0, y.x1 + y.x2, tol)?,
            Branch::Lower => self.graph.solve(-1.0, y.x1 - y.x2, tol)?,
        };
        let cf = self.frame_at(p);
        let (gx, gy) = cf.gradient(y, branch, self.eps);
        Some((cf.value(y, branch), (self.mirror() * gx, gy)))
    }

    /// The same leaf with its spine pushed vertically by up to `dx2` (a bump vanishing at
    /// both ends); used to check that the verification suite notices a wrong spine.
    pub fn perturbed(&self, dx2: f64) -> Self {
        let mut h = self.clone();
        let (lo, hi) = h.graph.range();
        for i in 0..h.graph.p.len() {
            let l = (h.graph.p[i] - lo) / (hi - lo);
            h.graph.t[i] += dx2 * 4.0 * l * (1.0 - l);
            h.graph.m[i] += dx2 * 4.0 * (1.0 - 2.0 * l) / (hi - lo);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spine_value_collapses_to_boundary() {
        let p = BoundaryPair::new([1.0, 0.0, 1.0, 0.0], [-1.0, 0.5, 0.0, 0.0]);
        let eps = 0.3;
        let a = spine_value(&p, 0.7, eps * (1.0 - 1e-6), eps);
        assert!((a - p.fp(0, 0.7)).abs() < 1e-4);
        let b = spine_value(&p, 0.7, eps, eps);
        assert!((b - p.fp(0, 0.7)).abs() < 1e-13);
    }

    #[test]
    fn small_t_branch_is_continuous() {
        let p = BoundaryPair::new([1.0, 0.2, 0.7, 0.0], [-0.6, 0.5, 0.1, 0.3]);
        let eps = 0.5;
        for &t in &[1e-3, 4e-4, 1e-5] {
            let cf = chord_frame(&p, 0.4, t, eps);
            let direct = (p.fp(1, 0.4 - eps + t) - p.fm(1, 0.4 - eps - t)) / (2.0 * t);
            assert!((cf.n - direct).abs() < 1e-8 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn zero_discriminant_limit_at_centre() {
        let p = BoundaryPair::new([1.0, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]);
        let eps = 0.5;
        let a0 = spine_value(&p, eps, 0.0, eps);
        assert_eq!(a0, 0.0);
        // A ≈ 3ε²T near the centre
        for &t in &[1e-6, -1e-6, 1e-5] {
            let a = spine_value(&p, eps, t, eps);
            assert!((a - 3.0 * eps * eps * t).abs() < 1e-9, "{a}");
        }
    }
}
