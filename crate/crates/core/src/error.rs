use thiserror::Error;

use crate::spine::SpineCurve;

#[derive(Debug, Error)]
pub enum Error {
    #[error("derivative order {0} exceeds 4")]
    OrderTooHigh(u32),
    #[error("midline-degenerate: |x2| = {x2:e} is below the midline tolerance")]
    MidlineDegenerate { x2: f64 },
    #[error("degenerate root: denominator {den:e} vanishes at u = {u}")]
    DegenerateRoot { u: f64, den: f64 },
    #[error("degenerate prefactor at u = {u}")]
    DegeneratePrefactor { u: f64 },
    #[error("u = {u} is not a stationary point (residual {residual:e})")]
    NotStationary { u: f64, residual: f64 },
    #[error("stationary point at u = {u} is not a saddle")]
    NotSaddle { u: f64 },
    #[error("non-terminating trace after {steps} steps")]
    NonTerminating { steps: usize, partial: Box<SpineCurve> },
    #[error("spines cross {0} times; expected at most one crossing")]
    MultipleCrossings(usize),
    #[error("foliation tiling gap {gap:e} between leaves {left} and {right}")]
    TilingGap { left: usize, right: usize, gap: f64 },
    #[error("point ({x1}, {x2}) lies outside the strip |x2| <= {eps}")]
    OutsideStrip { x1: f64, x2: f64, eps: f64 },
    #[error("point ({x1}, {x2}) is not covered by the leaf")]
    OutsideLeaf { x1: f64, x2: f64 },
    #[error("not evaluable: {0} is out of scope")]
    NotEvaluable(String),
    #[error("unclassified: {0}")]
    Unclassified(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
