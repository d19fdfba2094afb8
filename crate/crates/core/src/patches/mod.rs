//! Evaluators for each leaf type and dispatch over a foliation.

pub mod herringbone;
pub mod rect;
pub mod simple;

use crate::boundary::StripPoint;
use crate::error::Result;
use crate::regimes::Foliation;

pub use herringbone::{chord_frame, spine_value, spine_value_right, ChordFrame, Herringbone, Orientation};
pub use rect::{rect_patch, RectPatch};
pub use simple::{simple_gradient, simple_value};

pub fn bellman_eval(x: StripPoint, fol: &Foliation) -> Result<f64> {
    fol.value(x)
}

pub fn bellman_gradient(x: StripPoint, fol: &Foliation) -> Result<(f64, f64)> {
    fol.gradient(x)
}
