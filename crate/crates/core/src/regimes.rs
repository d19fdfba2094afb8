//! Critical widths, the regime at a given ε, and assembly of the foliation.

use serde::{Deserialize, Serialize};

use crate::boundary::{canonicalize, BoundaryPair, DiscriminantClass, StripPoint, SymmetryRecord};
use crate::error::{Error, Result};
use crate::patches::herringbone::Herringbone;
use crate::patches::rect::{rect_patch, rect_patch_on_midline, RectPatch};
use crate::patches::simple::{simple_gradient, simple_left_gradient, simple_left_value, simple_value};
use crate::spine::{epsilon2, spine_pair, trace_upper, Eps2, ExitKind, SpineCurve, TraceControls};

pub const TILING_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEps {
    pub eps0_plus: Option<f64>,
    pub eps0_minus: Option<f64>,
    pub eps1_plus: Option<f64>,
    pub eps1_minus: Option<f64>,
    pub eps2: Option<Eps2>,
    pub u0_plus: Option<f64>,
    pub u0_minus: Option<f64>,
}

/// Closed-form part of the critical widths; ε₂ is left unset.
pub fn critical_epsilons_closed(pair: &BoundaryPair) -> CriticalEps {
    let mut c = CriticalEps {
        eps0_plus: None,
        eps0_minus: None,
        eps1_plus: None,
        eps1_minus: None,
        eps2: None,
        u0_plus: None,
        u0_minus: None,
    };
    if pair.equal_leading() || pair.discriminant_class() == DiscriminantClass::Positive {
        return c;
    }
    let (ap, am, da3) = (pair.f_plus.a3(), pair.f_minus.a3(), pair.da3());
    let p = pair.inflection();
    let e0p = (pair.q_min().max(0.0) / (12.0 * ap)).sqrt();
    c.eps0_plus = Some(e0p);
    c.u0_plus = Some(e0p + p);
    if 80.0 * ap > 81.0 * am {
        c.eps1_plus = Some(9.0 * e0p * (da3 / (80.0 * ap - 81.0 * am)).sqrt());
    }
    if am < 0.0 {
        let e0m = (ap / am.abs()).sqrt() * e0p;
        c.eps0_minus = Some(e0m);
        c.u0_minus = Some(-e0m + p);
        c.eps1_minus = Some(9.0 * e0m * (da3 / (81.0 * ap - 80.0 * am)).sqrt());
    }
    c
}

pub fn critical_epsilons(pair: &BoundaryPair, ctl: &TraceControls) -> Result<CriticalEps> {
    let mut c = critical_epsilons_closed(pair);
    if !pair.equal_leading() {
        c.eps2 = Some(epsilon2(pair, None, ctl)?);
    }
    Ok(c)
}

/// Zeros u₊^l ≤ u₊^r of D₊(·, ε) and u₋^l ≤ u₋^r of D₋(·, ε), from the closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedRoots {
    pub upper: Option<(f64, f64)>,
    pub lower: Option<(f64, f64)>,
}

pub fn closed_roots(pair: &BoundaryPair, eps: f64) -> ClosedRoots {
    let mut out = ClosedRoots { upper: None, lower: None };
    let (ap, am, da3) = (pair.f_plus.a3(), pair.f_minus.a3(), pair.da3());
    if pair.equal_leading() || da3 <= 0.0 {
        return out;
    }
    let p = pair.inflection();
    let q = pair.q_min();
    // 2εD₊ = 3Δa₃(u − ε − p)² + q − 12a₃⁺ε², 2εD₋ = 3Δa₃(u + ε − p)² + q + 12a₃⁻ε²
    let up = (12.0 * ap * eps * eps - q) / (3.0 * da3);
    if up > 0.0 {
        let r = up.sqrt();
        out.upper = Some((p + eps - r, p + eps + r));
    }
    let lo = (-12.0 * am * eps * eps - q) / (3.0 * da3);
    if lo > 0.0 {
        let r = lo.sqrt();
        out.lower = Some((p - eps - r, p - eps + r));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Simple,
    OnePocket,
    TwoPockets,
    RectangleWithHerringbones,
    ZeroDiscriminantRectangle,
    FissureOpaque,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Simple => "simple",
            Regime::OnePocket => "one-pocket",
            Regime::TwoPockets => "two-pockets",
            Regime::RectangleWithHerringbones => "rectangle",
            Regime::ZeroDiscriminantRectangle => "zero-discriminant-rectangle",
            Regime::FissureOpaque => "fissure",
        }
    }
}

fn equal_leading_simple(pair: &BoundaryPair, eps: f64) -> bool {
    let (ap, am) = (pair.f_plus.a3(), pair.f_minus.a3());
    pair.da2() == 0.0 && pair.da1() - 12.0 * ap * eps * eps >= 0.0 && pair.da1() + 12.0 * am * eps * eps >= 0.0
}

/// Regime of a canonical pair at width ε.
pub fn regime_at(pair: &BoundaryPair, eps: f64, ctl: &TraceControls) -> Result<Regime> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("width must be positive, got {eps}")));
    }
    if !pair.is_canonical() {
        return Err(Error::InvalidInput("pair is not canonical".into()));
    }
    if pair.equal_leading() {
        return if equal_leading_simple(pair, eps) {
            Ok(Regime::Simple)
        } else {
            Err(Error::Unclassified("equal leading coefficients with sign-changing D".into()))
        };
    }
    let am = pair.f_minus.a3();
    match pair.discriminant_class() {
        DiscriminantClass::Zero => {
            if am < 0.0 {
                Ok(Regime::ZeroDiscriminantRectangle)
            } else {
                Err(Error::Unclassified("zero discriminant with a3- >= 0".into()))
            }
        }
        DiscriminantClass::Positive => {
            if am >= 0.0 {
                return Err(Error::Unclassified("positive discriminant with a3- >= 0".into()));
            }
            match spine_pair(pair, eps, ctl)? {
                Some(sp) if sp.c.is_some() => Ok(Regime::RectangleWithHerringbones),
                _ => Ok(Regime::FissureOpaque),
            }
        }
        DiscriminantClass::Negative => {
            let c = critical_epsilons_closed(pair);
            if eps <= c.eps0_plus.unwrap() {
                return Ok(Regime::Simple);
            }
            match c.eps0_minus {
                Some(e0m) if eps > e0m => {}
                _ => return Ok(Regime::OnePocket),
            }
            let sp = spine_pair(pair, eps, ctl)?
                .ok_or_else(|| Error::Unclassified("spines missing past both birth widths".into()))?;
            if sp.c.is_some() {
                return Ok(Regime::RectangleWithHerringbones);
            }
            let v_plus = sp.upper.exit_abscissa().unwrap_or(f64::NAN);
            if sp.lower.start.x1 < v_plus {
                Ok(Regime::TwoPockets)
            } else {
                Ok(Regime::OnePocket)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Leaf {
    /// Chords x₁ − x₂ = u for u in [from, to].
    SimpleRight { from: f64, to: f64 },
    /// Chords x₁ + x₂ = u for u in [from, to].
    SimpleLeft { from: f64, to: f64 },
    Herringbone(Box<Herringbone>),
    Rect(RectPatch),
    FissureOpaque { label: String },
}

impl Leaf {
    pub fn type_name(&self) -> &'static str {
        match self {
            Leaf::SimpleRight { .. } => "simple-right",
            Leaf::SimpleLeft { .. } => "simple-left",
            Leaf::Herringbone(h) => match h.orientation {
                crate::patches::herringbone::Orientation::Left => "herringbone-left",
                crate::patches::herringbone::Orientation::Right => "herringbone-right",
            },
            Leaf::Rect(_) => "rect",
            Leaf::FissureOpaque { .. } => "fissure",
        }
    }

    /// Interval of x₁ − x₂ the leaf occupies, when it is a union of whole chords of that family.
    pub fn s_interval(&self) -> Option<(f64, f64)> {
        match self {
            Leaf::SimpleRight { from, to } => Some((*from, *to)),
            Leaf::Herringbone(h) => Some(h.s_range()),
            Leaf::Rect(r) => Some((r.c.x1 - r.eps + r.c.x2, r.c.x1 + r.eps - r.c.x2)),
            _ => None,
        }
    }

    pub fn contains(&self, x: StripPoint, eps: f64) -> bool {
        let tol = 1e-12 * (1.0 + x.x1.abs() + eps);
        if x.x2.abs() > eps + tol {
            return false;
        }
        match self {
            Leaf::SimpleRight { from, to } => {
                let s = x.x1 - x.x2;
                s >= from - tol && s <= to + tol
            }
            Leaf::SimpleLeft { from, to } => {
                let w = x.x1 + x.x2;
                w >= from - tol && w <= to + tol
            }
            Leaf::Herringbone(h) => h.contains(x),
            Leaf::Rect(r) => r.contains(x),
            Leaf::FissureOpaque { .. } => true,
        }
    }

    pub fn value(&self, pair: &BoundaryPair, x: StripPoint, eps: f64) -> Result<f64> {
        match self {
            Leaf::SimpleRight { .. } => Ok(simple_value(pair, x, eps)),
            Leaf::SimpleLeft { .. } => Ok(simple_left_value(pair, x, eps)),
            Leaf::Herringbone(h) => h.value(x),
            Leaf::Rect(r) => r.value(x),
            Leaf::FissureOpaque { label } => Err(Error::NotEvaluable(label.clone())),
        }
    }

    pub fn gradient(&self, pair: &BoundaryPair, x: StripPoint, eps: f64) -> Result<(f64, f64)> {
        match self {
            Leaf::SimpleRight { .. } => Ok(simple_gradient(pair, x, eps)),
            Leaf::SimpleLeft { .. } => Ok(simple_left_gradient(pair, x, eps)),
            Leaf::Herringbone(h) => h.gradient(x),
            Leaf::Rect(r) => r.gradient(x),
            Leaf::FissureOpaque { label } => Err(Error::NotEvaluable(label.clone())),
        }
    }
}

/// Leaves of a canonical pair at width ε, ordered left to right.
#[derive(Clone, Debug)]
pub struct Foliation {
    pub eps: f64,
    pub regime: Regime,
    pub pair: BoundaryPair,
    pub leaves: Vec<Leaf>,
}

impl Foliation {
    /// Index of the first leaf containing x (ties go to the left leaf).
    pub fn locate(&self, x: StripPoint) -> Result<usize> {
        let tol = 1e-12 * (1.0 + x.x1.abs() + self.eps);
        if !x.x1.is_finite() || !x.x2.is_finite() || x.x2.abs() > self.eps + tol {
            return Err(Error::OutsideStrip { x1: x.x1, x2: x.x2, eps: self.eps });
        }
        self.leaves
            .iter()
            .position(|l| l.contains(x, self.eps))
            .ok_or(Error::OutsideLeaf { x1: x.x1, x2: x.x2 })
    }

    pub fn value(&self, x: StripPoint) -> Result<f64> {
        let i = self.locate(x)?;
        self.leaves[i].value(&self.pair, x, self.eps)
    }

    pub fn gradient(&self, x: StripPoint) -> Result<(f64, f64)> {
        let i = self.locate(x)?;
        self.leaves[i].gradient(&self.pair, x, self.eps)
    }

    /// Largest mismatch between consecutive leaves' x₁ − x₂ intervals.
    pub fn tiling_gap(&self) -> Option<(usize, f64)> {
        let iv: Vec<(f64, f64)> = self.leaves.iter().filter_map(|l| l.s_interval()).collect();
        if iv.len() != self.leaves.len() {
            return None;
        }
        (0..iv.len().saturating_sub(1))
            .map(|i| (i, (iv[i].1 - iv[i + 1].0).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn check_tiling(&self) -> Result<()> {
        if let Some((i, gap)) = self.tiling_gap() {
            if gap > TILING_TOL {
                return Err(Error::TilingGap { left: i, right: i + 1, gap });
            }
        }
        Ok(())
    }

    pub fn herringbones(&self) -> impl Iterator<Item = &Herringbone> {
        self.leaves.iter().filter_map(|l| match l {
            Leaf::Herringbone(h) => Some(h.as_ref()),
            _ => None,
        })
    }

    pub fn rect(&self) -> Option<&RectPatch> {
        self.leaves.iter().find_map(|l| match l {
            Leaf::Rect(r) => Some(r),
            _ => None,
        })
    }

    /// The same foliation with every spine bumped vertically by up to `dx2`.
    pub fn with_perturbed_spines(&self, dx2: f64) -> Foliation {
        let mut f = self.clone();
        for l in f.leaves.iter_mut() {
            if let Leaf::Herringbone(h) = l {
                **h = h.perturbed(dx2);
            }
        }
        f
    }

    pub fn is_evaluable(&self) -> bool {
        !self.leaves.iter().any(|l| matches!(l, Leaf::FissureOpaque { .. }))
    }
}

fn pocket_spine(spine: &SpineCurve) -> Result<()> {
    match spine.exit_kind {
        Some(ExitKind::Boundary) | Some(ExitKind::NodeSnap) => Ok(()),
        _ => Err(Error::Unclassified("spine does not return to its boundary line".into())),
    }
}

/// Assemble the leaves for a canonical pair at width ε.
pub fn build_foliation(pair: &BoundaryPair, eps: f64, ctl: &TraceControls) -> Result<Foliation> {
    let regime = regime_at(pair, eps, ctl)?;
    let inf = f64::INFINITY;
    let leaves = match regime {
        Regime::Simple => vec![Leaf::SimpleRight { from: -inf, to: inf }],
        Regime::FissureOpaque => vec![Leaf::FissureOpaque { label: "fissure regime: not evaluable".into() }],
        Regime::OnePocket => {
            let upper = trace_upper(pair, eps, ctl)?.ok_or_else(|| Error::Unclassified("no upper spine".into()))?;
            pocket_spine(&upper)?;
            let hb = Herringbone::new(pair, upper)?;
            let (v_plus, u_r) = hb.s_range();
            vec![
                Leaf::SimpleRight { from: -inf, to: v_plus },
                Leaf::Herringbone(Box::new(hb)),
                Leaf::SimpleRight { from: u_r, to: inf },
            ]
        }
        Regime::TwoPockets => {
            let sp = spine_pair(pair, eps, ctl)?.ok_or_else(|| Error::Unclassified("spines missing".into()))?;
            pocket_spine(&sp.upper)?;
            pocket_spine(&sp.lower)?;
            let right = Herringbone::new(pair, sp.lower)?;
            let left = Herringbone::new(pair, sp.upper)?;
            let (ul, vm) = right.s_range();
            let (vp, ur) = left.s_range();
            vec![
                Leaf::SimpleRight { from: -inf, to: ul },
                Leaf::Herringbone(Box::new(right)),
                Leaf::SimpleRight { from: vm, to: vp },
                Leaf::Herringbone(Box::new(left)),
                Leaf::SimpleRight { from: ur, to: inf },
            ]
        }
        Regime::RectangleWithHerringbones | Regime::ZeroDiscriminantRectangle => {
            let sp = spine_pair(pair, eps, ctl)?.ok_or_else(|| Error::Unclassified("spines missing".into()))?;
            let c = sp.c.ok_or_else(|| Error::Unclassified("spines do not cross".into()))?;
            let upper = sp.upper.truncated_at(pair, c);
            let lower = sp.lower.truncated_at(pair, StripPoint::new(c.x1, -c.x2));
            let right = Herringbone::new(pair, lower)?;
            let left = Herringbone::new(pair, upper)?;
            let (ul, _) = right.s_range();
            let (_, ur) = left.s_range();
            // On the midline both spines arrive tangentially and the vertex values are limits
            // along them; the patch is then fixed by those values.
            let rect = if c.x2.abs() < 1e-6 * eps {
                rect_patch_on_midline(pair, c.x1, eps, left.spine_end_values().0, right.spine_end_values().1)
            } else {
                rect_patch(pair, c, eps)
            };
            vec![
                Leaf::SimpleRight { from: -inf, to: ul },
                Leaf::Herringbone(Box::new(right)),
                Leaf::Rect(rect),
                Leaf::Herringbone(Box::new(left)),
                Leaf::SimpleRight { from: ur, to: inf },
            ]
        }
    };
    let f = Foliation { eps, regime, pair: *pair, leaves };
    f.check_tiling()?;
    Ok(f)
}

/// A raw boundary pair together with the symmetry taking it to canonical form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Problem {
    pub raw: BoundaryPair,
    pub pair: BoundaryPair,
    pub rec: SymmetryRecord,
}

impl Problem {
    pub fn new(raw: BoundaryPair) -> Self {
        let (pair, rec) = canonicalize(raw);
        Problem { raw, pair, rec }
    }

    fn flips(&self) -> (f64, f64) {
        (if self.rec.reflected_t { -1.0 } else { 1.0 }, if self.rec.swapped_pm { -1.0 } else { 1.0 })
    }

    /// Canonical-frame point for a point of the raw problem.
    pub fn to_canonical(&self, x: StripPoint) -> StripPoint {
        let (a, b) = self.flips();
        StripPoint::new(a * x.x1, b * x.x2)
    }

    /// Raw-frame gradient from a canonical-frame gradient.
    pub fn gradient_from_canonical(&self, g: (f64, f64)) -> (f64, f64) {
        let (a, b) = self.flips();
        (a * g.0, b * g.1)
    }

    pub fn regime(&self, eps: f64, ctl: &TraceControls) -> Result<Regime> {
        regime_at(&self.pair, eps, ctl)
    }

    pub fn foliation(&self, eps: f64, ctl: &TraceControls) -> Result<Foliation> {
        build_foliation(&self.pair, eps, ctl)
    }

    pub fn value(&self, fol: &Foliation, x: StripPoint) -> Result<f64> {
        fol.value(self.to_canonical(x))
    }

    pub fn gradient(&self, fol: &Foliation, x: StripPoint) -> Result<(f64, f64)> {
        fol.gradient(self.to_canonical(x)).map(|g| self.gradient_from_canonical(g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pocket_pair_criticals() {
        let p = BoundaryPair::new([1.0, 0.0, 1.0, 0.0], [0.0; 4]);
        let c = critical_epsilons_closed(&p);
        let e0 = (1.0f64 / 12.0).sqrt();
        assert!((c.eps0_plus.unwrap() - e0).abs() < 1e-15);
        assert!((c.eps1_plus.unwrap() - 9.0 * e0 / 80f64.sqrt()).abs() < 1e-15);
        assert!(c.eps0_minus.is_none() && c.eps1_minus.is_none());
        assert!((c.u0_plus.unwrap() - e0).abs() < 1e-15);
    }

    #[test]
    fn closed_roots_are_zeros() {
        let p = BoundaryPair::new([1.0, 0.4, 1.0, 0.0], [-0.5, 0.1, 0.2, 0.0]);
        for &e in &[0.4, 0.8, 2.0] {
            let r = closed_roots(&p, e);
            let (l, rr) = r.upper.unwrap();
            assert!(p.d_plus_boundary(l, e).abs() < 1e-10 && p.d_plus_boundary(rr, e).abs() < 1e-10);
            let (l, rr) = r.lower.unwrap();
            assert!(p.d_minus_boundary(l, e).abs() < 1e-10 && p.d_minus_boundary(rr, e).abs() < 1e-10);
        }
    }

    #[test]
    fn simple_below_birth() {
        let p = BoundaryPair::new([1.0, 0.0, 1.0, 0.0], [0.0; 4]);
        let ctl = TraceControls::default();
        assert_eq!(regime_at(&p, 0.2, &ctl).unwrap(), Regime::Simple);
        let f = build_foliation(&p, 0.2, &ctl).unwrap();
        assert_eq!(f.leaves.len(), 1);
    }

    #[test]
    fn problem_maps_frames() {
        let raw = BoundaryPair::new([0.5, 0.0, 0.0, 0.0], [-1.0, 0.0, -1.0, 0.0]);
        let pr = Problem::new(raw);
        assert!(pr.rec.swapped_pm && pr.rec.reflected_t);
        let x = StripPoint::new(0.3, 0.1);
        let y = pr.to_canonical(x);
        assert_eq!((y.x1, y.x2), (-0.3, -0.1));
    }
}
