//! Cubic boundary data on the two lines x₂ = ±ε.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size of |x₂| (in units of ε) below which the interior form of D± is refused.
pub const MIDLINE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripPoint {
    pub x1: f64,
    pub x2: f64,
}

impl StripPoint {
    pub const fn new(x1: f64, x2: f64) -> Self {
        StripPoint { x1, x2 }
    }

    pub fn dist(self, other: StripPoint) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Plus,
    Minus,
}

/// a₃t³ + a₂t² + a₁t + a₀, coefficients stored highest first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    pub fn a3(&self) -> f64 {
        self.0[0]
    }
    pub fn a2(&self) -> f64 {
        self.0[1]
    }
    pub fn a1(&self) -> f64 {
        self.0[2]
    }
    pub fn a0(&self) -> f64 {
        self.0[3]
    }

    pub fn eval(&self, t: f64) -> f64 {
        let [a3, a2, a1, a0] = self.0;
        ((a3 * t + a2) * t + a1) * t + a0
    }

    /// Derivatives of order 0..=3; anything higher is zero.
    pub fn d(&self, order: u32, t: f64) -> f64 {
        let [a3, a2, a1, _] = self.0;
        match order {
            0 => self.eval(t),
            1 => (3.0 * a3 * t + 2.0 * a2) * t + a1,
            2 => 6.0 * a3 * t + 2.0 * a2,
            3 => 6.0 * a3,
            _ => 0.0,
        }
    }

    /// t ↦ f(−t)
    pub fn reflected(&self) -> Cubic {
        let [a3, a2, a1, a0] = self.0;
        Cubic([-a3, a2, -a1, a0])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscriminantClass {
    Negative,
    Zero,
    Positive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryRecord {
    pub swapped_pm: bool,
    pub reflected_t: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub f_plus: Cubic,
    pub f_minus: Cubic,
}

impl BoundaryPair {
    pub fn new(f_plus: [f64; 4], f_minus: [f64; 4]) -> Self {
        BoundaryPair { f_plus: Cubic(f_plus), f_minus: Cubic(f_minus) }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let pair: BoundaryPair =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if pair.f_plus.0.iter().chain(pair.f_minus.0.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(pair)
    }

    pub fn cubic(&self, which: Which) -> &Cubic {
        match which {
            Which::Plus => &self.f_plus,
            Which::Minus => &self.f_minus,
        }
    }

    pub fn deriv(&self, which: Which, order: u32, t: f64) -> Result<f64> {
        if order > 4 {
            return Err(Error::OrderTooHigh(order));
        }
        Ok(self.cubic(which).d(order, t))
    }

    #[inline]
    pub fn fp(&self, order: u32, t: f64) -> f64 {
        self.f_plus.d(order, t)
    }

    #[inline]
    pub fn fm(&self, order: u32, t: f64) -> f64 {
        self.f_minus.d(order, t)
    }

    pub fn swapped(&self) -> BoundaryPair {
        BoundaryPair { f_plus: self.f_minus, f_minus: self.f_plus }
    }

    pub fn reflected(&self) -> BoundaryPair {
        BoundaryPair { f_plus: self.f_plus.reflected(), f_minus: self.f_minus.reflected() }
    }

    pub fn apply(&self, rec: SymmetryRecord) -> BoundaryPair {
        let mut p = *self;
        if rec.reflected_t {
            p = p.reflected();
        }
        if rec.swapped_pm {
            p = p.swapped();
        }
        p
    }

    pub fn is_canonical(&self) -> bool {
        self.f_plus.a3() > 0.0 && self.f_plus.a3().abs() >= self.f_minus.a3().abs()
    }

    pub fn da3(&self) -> f64 {
        self.f_plus.a3() - self.f_minus.a3()
    }
    pub fn da2(&self) -> f64 {
        self.f_plus.a2() - self.f_minus.a2()
    }
    pub fn da1(&self) -> f64 {
        self.f_plus.a1() - self.f_minus.a1()
    }

    pub fn equal_leading(&self) -> bool {
        self.f_plus.a3() == self.f_minus.a3()
    }

    pub fn discriminant_class(&self) -> DiscriminantClass {
        let lhs = 3.0 * self.da3() * self.da1();
        let rhs = self.da2() * self.da2();
        if lhs > rhs {
            DiscriminantClass::Negative
        } else if lhs == rhs {
            DiscriminantClass::Zero
        } else {
            DiscriminantClass::Positive
        }
    }

    /// Abscissa p where f₊′ − f₋′ attains its extremum.
    pub fn inflection(&self) -> f64 {
        -self.da2() / (3.0 * self.da3())
    }

    /// Minimum value Δa₁ − Δa₂²/(3Δa₃) of f₊′ − f₋′.
    pub fn q_min(&self) -> f64 {
        self.da1() - self.da2() * self.da2() / (3.0 * self.da3())
    }

    /// 2x₂·D₊(x), i.e. the quantity X₁.
    pub fn d_plus_numerator(&self, x: StripPoint) -> f64 {
        let (y, z) = (x.x1 + x.x2, x.x1 - x.x2);
        self.fp(1, y) - self.fm(1, z) - 2.0 * x.x2 * self.fp(2, y)
    }

    /// 2x₂·D₋(x).
    pub fn d_minus_numerator(&self, x: StripPoint) -> f64 {
        let (y, z) = (x.x1 + x.x2, x.x1 - x.x2);
        self.fp(1, y) - self.fm(1, z) - 2.0 * x.x2 * self.fm(2, z)
    }

    /// Closed cubic form of 2x₂·D₊(x).
    pub fn d_plus_quadratic(&self, x: StripPoint) -> f64 {
        let z = x.x1 - x.x2;
        3.0 * self.da3() * z * z + 2.0 * self.da2() * z + self.da1()
            - 12.0 * self.f_plus.a3() * x.x2 * x.x2
    }

    /// Closed cubic form of 2x₂·D₋(x).
    pub fn d_minus_quadratic(&self, x: StripPoint) -> f64 {
        let y = x.x1 + x.x2;
        3.0 * self.da3() * y * y + 2.0 * self.da2() * y + self.da1()
            + 12.0 * self.f_minus.a3() * x.x2 * x.x2
    }

    pub fn d_plus(&self, x: StripPoint, eps: f64) -> Result<f64> {
        if x.x2.abs() < MIDLINE_TOL * eps {
            return Err(Error::MidlineDegenerate { x2: x.x2 });
        }
        Ok(self.d_plus_numerator(x) / (2.0 * x.x2))
    }

    pub fn d_minus(&self, x: StripPoint, eps: f64) -> Result<f64> {
        if x.x2.abs() < MIDLINE_TOL * eps {
            return Err(Error::MidlineDegenerate { x2: x.x2 });
        }
        Ok(self.d_minus_numerator(x) / (2.0 * x.x2))
    }

    /// D₊(u, ε) on the upper boundary, written with the 2ε divisor.
    pub fn d_plus_boundary(&self, u: f64, eps: f64) -> f64 {
        (self.fp(1, u + eps) - self.fm(1, u - eps) - 2.0 * eps * self.fp(2, u + eps)) / (2.0 * eps)
    }

    /// D₋(u, ε) on the upper boundary.
    pub fn d_minus_boundary(&self, u: f64, eps: f64) -> f64 {
        (self.fp(1, u + eps) - self.fm(1, u - eps) - 2.0 * eps * self.fm(2, u - eps)) / (2.0 * eps)
    }

    /// D₊ with the midline routed to the sign-carrying numerator.
    pub fn d_plus_sign(&self, x: StripPoint, eps: f64) -> f64 {
        self.d_plus(x, eps).unwrap_or_else(|_| self.d_plus_numerator(x))
    }

    pub fn d_minus_sign(&self, x: StripPoint, eps: f64) -> f64 {
        self.d_minus(x, eps).unwrap_or_else(|_| self.d_minus_numerator(x))
    }
}

/// Bring the pair to a₃⁺ > 0, |a₃⁺| ≥ |a₃⁻| by exchanging f± and/or substituting t → −t.
pub fn canonicalize(raw: BoundaryPair) -> (BoundaryPair, SymmetryRecord) {
    let mut rec = SymmetryRecord::default();
    let mut p = raw;
    if p.f_plus.a3().abs() < p.f_minus.a3().abs() {
        p = p.swapped();
        rec.swapped_pm = true;
    }
    if p.f_plus.a3() < 0.0 {
        p = p.reflected();
        rec.reflected_t = true;
    }
    (p, rec)
}
