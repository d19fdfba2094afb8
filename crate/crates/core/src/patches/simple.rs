use crate::boundary::{BoundaryPair, StripPoint};

/// Candidate on a right simple domain: linear along the chords x₁ − x₂ = const.
pub fn simple_value(pair: &BoundaryPair, x: StripPoint, eps: f64) -> f64 {
    let s = x.x1 - x.x2;
    ((eps + x.x2) * pair.fp(0, s + eps) + (eps - x.x2) * pair.fm(0, s - eps)) / (2.0 * eps)
}

pub fn simple_gradient(pair: &BoundaryPair, x: StripPoint, eps: f64) -> (f64, f64) {
    let s = x.x1 - x.x2;
    let gx = ((eps + x.x2) * pair.fp(1, s + eps) + (eps - x.x2) * pair.fm(1, s - eps)) / (2.0 * eps);
    let gy = (pair.fp(0, s + eps) - pair.fm(0, s - eps)) / (2.0 * eps) - gx;
    (gx, gy)
}

/// Left simple domain: linear along x₁ + x₂ = const.
pub fn simple_left_value(pair: &BoundaryPair, x: StripPoint, eps: f64) -> f64 {
    let w = x.x1 + x.x2;
    ((eps + x.x2) * pair.fp(0, w - eps) + (eps - x.x2) * pair.fm(0, w + eps)) / (2.0 * eps)
}

pub fn simple_left_gradient(pair: &BoundaryPair, x: StripPoint, eps: f64) -> (f64, f64) {
    let w = x.x1 + x.x2;
    let gx = ((eps + x.x2) * pair.fp(1, w - eps) + (eps - x.x2) * pair.fm(1, w + eps)) / (2.0 * eps);
    let gy = gx + (pair.fp(0, w - eps) - pair.fm(0, w + eps)) / (2.0 * eps);
    (gx, gy)
}
