//! Integral curves ℓ leaving boundary saddles, their exits, crossings, and the merging width ε₂.

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPair, DiscriminantClass, Side, StripPoint};
use crate::error::{Error, Result};
use crate::field::{classify_stationary, stationary_d, velocity, Classification, FieldKind, StationaryPointInfo};
use crate::ode::{adaptive_step, rk4_step, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceControls {
    /// Seed displacement from the saddle, in units of ε.
    pub seed_offset: f64,
    pub tol: f64,
    /// Largest step, in units of ε.
    pub max_step: f64,
    pub max_steps: usize,
    /// Absolute radius within which the curve is snapped onto an attracting node.
    pub snap_radius: f64,
    /// Distance to the midline, in units of ε, treated as reaching it.
    pub midline_tol: f64,
}

impl Default for TraceControls {
    fn default() -> Self {
        TraceControls {
            seed_offset: 1e-7,
            tol: 1e-10,
            max_step: 2e-3,
            max_steps: 400_000,
            snap_radius: 1e-6,
            midline_tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitKind {
    Boundary,
    NodeSnap,
    Midline,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpineCurve {
    pub kind: FieldKind,
    pub eps: f64,
    pub start: StripPoint,
    /// Starts with `start`; ends with `exit` when there is one.
    pub samples: Vec<StripPoint>,
    /// dx₂/dx₁ of the curve at each sample.
    pub slopes: Vec<f64>,
    pub exit: Option<StripPoint>,
    pub exit_kind: Option<ExitKind>,
    /// First sample where D₊D₋ > 0 fails.
    pub invalid_from: Option<usize>,
    pub stationary: StationaryPointInfo,
}

impl SpineCurve {
    /// Point at which D± are read for this curve: the curve itself for the left field,
    /// its reflection x₂ ↦ −x₂ for the right one.
    pub fn d_point(&self, x: StripPoint) -> StripPoint {
        match self.kind {
            FieldKind::LeftSpine => x,
            FieldKind::RightSpine => StripPoint::new(x.x1, -x.x2),
        }
    }

    pub fn d_values(&self, pair: &BoundaryPair, x: StripPoint) -> (f64, f64) {
        let y = self.d_point(x);
        (pair.d_plus_sign(y, self.eps), pair.d_minus_sign(y, self.eps))
    }

    pub fn exit_abscissa(&self) -> Option<f64> {
        self.exit.map(|p| p.x1)
    }

    /// Keep the part of the curve before `c` and end it exactly there.
    pub fn truncated_at(&self, pair: &BoundaryPair, c: StripPoint) -> SpineCurve {
        let dir = (self.samples[1].x1 - self.samples[0].x1).signum();
        let mut out = self.clone();
        out.samples.clear();
        out.slopes.clear();
        for (p, m) in self.samples.iter().zip(&self.slopes) {
            if (c.x1 - p.x1) * dir <= 0.0 {
                break;
            }
            out.samples.push(*p);
            out.slopes.push(*m);
        }
        let last = *out.samples.last().unwrap();
        let v = velocity(pair, self.kind, c, self.eps);
        let slope = if v.0.hypot(v.1) > 1e-12 && v.0 != 0.0 {
            v.1 / v.0
        } else {
            (c.x2 - last.x2) / (c.x1 - last.x1)
        };
        out.samples.push(c);
        out.slopes.push(slope);
        out.exit = Some(c);
        out.exit_kind = None;
        if let Some(i) = out.invalid_from {
            if i >= out.samples.len() {
                out.invalid_from = None;
            }
        }
        out
    }

    /// x₁-graph of the curve, optionally reflected across the x₁-axis and shifted by `shift`.
    pub fn graph(&self, reflect: bool, shift: f64) -> Result<SpineGraph> {
        let sg = if reflect { -1.0 } else { 1.0 };
        let pts: Vec<(f64, f64, f64)> = self
            .samples
            .iter()
            .zip(&self.slopes)
            .map(|(p, m)| (p.x1 + shift, sg * p.x2, sg * m))
            .collect();
        SpineGraph::new(pts)
    }
}

/// Roots of a stationary condition on one boundary line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<f64>,
    /// The two roots merged (vanishing discriminant).
    pub tangent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRoots {
    pub eps: f64,
    /// Zeros of D₊(·, ε): stationary points (u, ε) of the left field.
    pub upper_plus: RootSet,
    /// Zeros of D₋(·, ε): stationary points (u, −ε) of the right field.
    pub lower_minus: RootSet,
}

impl BoundaryRoots {
    pub fn upper_lr(&self) -> Option<(f64, f64)> {
        match self.upper_plus.roots.as_slice() {
            [l, r] => Some((*l, *r)),
            _ => None,
        }
    }
    pub fn lower_lr(&self) -> Option<(f64, f64)> {
        match self.lower_minus.roots.as_slice() {
            [l, r] => Some((*l, *r)),
            _ => None,
        }
    }
}

/// Zeros in u of the boundary condition for (kind, side); the condition is quadratic in u for cubics.
pub fn stationary_roots(pair: &BoundaryPair, kind: FieldKind, side: Side, eps: f64) -> RootSet {
    let g = |u: f64| 2.0 * eps * stationary_d(pair, kind, side, u, eps);
    let c = if pair.da3() != 0.0 { pair.inflection() } else { 0.0 };
    let h = eps.max(1.0);
    let (g0, gp, gm) = (g(c), g(c + h), g(c - h));
    let a = ((gp + gm) / 2.0 - g0) / (h * h);
    let b = (gp - gm) / (2.0 * h);
    let cc = g0;
    let scale = a.abs().max(b.abs()).max(cc.abs());
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return RootSet::default();
        }
        return RootSet { roots: vec![c - cc / b], tangent: false };
    }
    let disc = b * b - 4.0 * a * cc;
    if disc.abs() <= 1e-14 * (b * b).max((4.0 * a * cc).abs()) {
        return RootSet { roots: vec![], tangent: true };
    }
    if disc < 0.0 {
        return RootSet::default();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (mut r1, mut r2) = if q != 0.0 { (q / a, cc / q) } else { (0.0, 0.0) };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let polish = |mut u: f64| {
        for _ in 0..3 {
            let t = u - c;
            let d = 2.0 * a * t + b;
            if d == 0.0 {
                break;
            }
            let step = g(u) / d;
            if !step.is_finite() {
                break;
            }
            u -= step;
        }
        u
    };
    RootSet { roots: vec![polish(c + r1), polish(c + r2)], tangent: false }
}

pub fn boundary_roots(pair: &BoundaryPair, eps: f64) -> BoundaryRoots {
    BoundaryRoots {
        eps,
        upper_plus: stationary_roots(pair, FieldKind::LeftSpine, Side::Upper, eps),
        lower_minus: stationary_roots(pair, FieldKind::RightSpine, Side::Lower, eps),
    }
}

fn unit(v: (f64, f64), sigma: f64) -> Vec2 {
    let n = v.0.hypot(v.1);
    if n == 0.0 {
        [0.0, 0.0]
    } else {
        [sigma * v.0 / n, sigma * v.1 / n]
    }
}

fn slope_of(v: (f64, f64)) -> f64 {
    v.1 / v.0
}

/// Trace ℓ from a boundary saddle into the strip along the eigenvector for λ = (s − √(s²+8s))/2.
pub fn trace_spine(pair: &BoundaryPair, info: &StationaryPointInfo, ctl: &TraceControls) -> Result<SpineCurve> {
    if info.classification != Classification::Saddle {
        return Err(Error::NotSaddle { u: info.u });
    }
    let eps = info.eps;
    let kind = info.kind;
    let sd = info.side.sign();
    let start = info.point();
    let m = info.stable_slope().ok_or(Error::NotSaddle { u: info.u })?;
    let n = 1.0f64.hypot(m);
    let mut d = [1.0 / n, m / n];
    if d[1] * sd > 0.0 {
        d = [-d[0], -d[1]];
    }
    let delta = ctl.seed_offset * eps;
    let x0 = [start.x1 + delta * d[0], start.x2 + delta * d[1]];
    let f = |x: Vec2| velocity(pair, kind, StripPoint::new(x[0], x[1]), eps);
    let v0 = f(x0);
    let dot = v0.0 * d[0] + v0.1 * d[1];
    if dot == 0.0 {
        return Err(Error::NotSaddle { u: info.u });
    }
    let sigma = dot.signum();
    let g = |x: Vec2| unit(f(x), sigma);

    // An attracting node on the same line absorbs the curve.
    let attractor: Option<StripPoint> = stationary_roots(pair, kind, info.side, eps)
        .roots
        .iter()
        .filter(|&&u| (u - info.u).abs() > 1e-12 * (1.0 + u.abs()))
        .filter_map(|&u| classify_stationary(pair, u, info.side, kind, eps).ok())
        .find(|i| matches!(i.classification, Classification::Node | Classification::ImproperNode))
        .map(|i| i.point());

    let mid_points = midline_stationary(pair);

    let mut samples = vec![start, StripPoint::new(x0[0], x0[1])];
    let mut slopes = vec![m, slope_of(v0)];
    let mut x = x0;
    let h_max = ctl.max_step * eps;
    let h_min = 1e-15 * eps.max(1.0);
    let mut h = (delta * 10.0).min(h_max);
    let exit;
    let exit_kind;
    let mut steps = 0usize;

    let refine = |x: Vec2, h: f64, target: f64| -> Vec2 {
        // bisection on the step fraction for sd·x₂ = target
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let z = rk4_step(&g, x, mid * h);
            if sd * z[1] >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        rk4_step(&g, x, hi * h)
    };
    let refine_down = |x: Vec2, h: f64, target: f64| -> Vec2 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let z = rk4_step(&g, x, mid * h);
            if sd * z[1] <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        rk4_step(&g, x, hi * h)
    };

    loop {
        steps += 1;
        if steps > ctl.max_steps {
            let partial = SpineCurve {
                kind,
                eps,
                start,
                samples,
                slopes,
                exit: None,
                exit_kind: None,
                invalid_from: None,
                stationary: *info,
            };
            return Err(Error::NonTerminating { steps, partial: Box::new(partial) });
        }
        if let Some(&u0) = mid_points.iter().find(|&&u| (x[0] - u).hypot(x[1]) < CHART_IN * eps) {
            match approach_chart(&f, sigma, x, u0, eps, ctl, &mut samples, &mut slopes, &mut steps) {
                ChartExit::Reached => {
                    let last = *samples.last().unwrap();
                    let p = StripPoint::new(u0, 0.0);
                    samples.push(p);
                    slopes.push((p.x2 - last.x2) / (p.x1 - last.x1));
                    exit = Some(p);
                    exit_kind = Some(ExitKind::Midline);
                    break;
                }
                ChartExit::Crossed(z) => {
                    let along = sigma * velocity(pair, kind, StripPoint::new(z[0], 0.0), eps).0;
                    let x1 = midline_stop(pair, z[0], along, eps).unwrap_or(z[0]);
                    let p = StripPoint::new(x1, 0.0);
                    let last = *samples.last().unwrap();
                    samples.push(p);
                    slopes.push((p.x2 - last.x2) / (p.x1 - last.x1));
                    exit = Some(p);
                    exit_kind = Some(ExitKind::Midline);
                    break;
                }
                ChartExit::Left(z) => {
                    x = z;
                    h = (1e-3 * eps).min(h_max);
                    continue;
                }
                ChartExit::Failed => {
                    return Err(Error::InvalidInput("integration near a midline stationary point failed".into()));
                }
            }
        }
        // tighter near the midline, where herringbone coefficients divide by x₂
        let tol = ctl.tol * (x[1].abs() / eps).clamp(1e-3, 1.0);
        let acc = adaptive_step(&g, x, h, tol, h_max, h_min)
            .ok_or(Error::InvalidInput("integration produced a non-finite state".into()))?;
        let y = acc.x;
        if sd * y[1] >= eps {
            let z = refine(x, acc.h, eps);
            let p = StripPoint::new(z[0], sd * eps);
            samples.push(p);
            slopes.push(slope_of(f([p.x1, p.x2])));
            exit = Some(p);
            exit_kind = Some(ExitKind::Boundary);
            break;
        }
        if sd * y[1] <= ctl.midline_tol * eps {
            let z = if sd * y[1] < 0.0 { refine_down(x, acc.h, 0.0) } else { y };
            // The midline is invariant: the curve continues along it to the next zero of f₊′ − f₋′.
            let along = sigma * velocity(pair, kind, StripPoint::new(z[0], 0.0), eps).0;
            let x1 = midline_stop(pair, z[0], along, eps).unwrap_or(z[0]);
            let p = StripPoint::new(x1, 0.0);
            let last = *samples.last().unwrap();
            samples.push(p);
            slopes.push((p.x2 - last.x2) / (p.x1 - last.x1));
            exit = Some(p);
            exit_kind = Some(ExitKind::Midline);
            break;
        }
        let yp = StripPoint::new(y[0], y[1]);
        if let Some(a) = attractor {
            if yp.dist(a) <= ctl.snap_radius {
                let last = *samples.last().unwrap();
                samples.push(a);
                slopes.push((a.x2 - last.x2) / (a.x1 - last.x1));
                exit = Some(a);
                exit_kind = Some(ExitKind::NodeSnap);
                break;
            }
        }
        samples.push(yp);
        slopes.push(slope_of(f(y)));
        x = y;
        h = acc.next_h;
    }

    let mut curve = SpineCurve {
        kind,
        eps,
        start,
        samples,
        slopes,
        exit,
        exit_kind,
        invalid_from: None,
        stationary: *info,
    };
    let last = curve.samples.len() - 1;
    curve.invalid_from = (1..last).find(|&i| {
        let (dp, dm) = curve.d_values(pair, curve.samples[i]);
        dp * dm <= 0.0
    });
    Ok(curve)
}

/// Zeros of f₊′ − f₋′, the stationary points of both fields on the midline.
pub fn midline_stationary(pair: &BoundaryPair) -> Vec<f64> {
    let (a, b, c) = (3.0 * pair.da3(), 2.0 * pair.da2(), pair.da1());
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { vec![] };
    }
    match pair.discriminant_class() {
        DiscriminantClass::Negative => vec![],
        DiscriminantClass::Zero => vec![pair.inflection()],
        DiscriminantClass::Positive => {
            let disc = (b * b - 4.0 * a * c).sqrt();
            let q = -0.5 * (b + b.signum() * disc);
            let mut r = vec![q / a, c / q];
            r.sort_by(|x, y| x.total_cmp(y));
            r
        }
    }
}

/// Where a curve arriving on the midline at x₁ and moving in direction `along` comes to rest.
fn midline_stop(pair: &BoundaryPair, x1: f64, along: f64, eps: f64) -> Option<f64> {
    let reach = 1e-2 * eps;
    midline_stationary(pair)
        .into_iter()
        .filter(|&r| (r - x1).abs() <= reach && (along == 0.0 || (r - x1) * along >= 0.0))
        .min_by(|a, b| (a - x1).abs().total_cmp(&(b - x1).abs()))
}

const CHART_IN: f64 = 0.05;
const CHART_OUT: f64 = 0.06;
/// |z − u₀| in units of ε at which a curve is taken to have reached the midline point.
const CHART_END: f64 = 1e-9;

enum ChartExit {
    Reached,
    /// Crossed the midline; carries the last point before the crossing.
    Crossed(Vec2),
    Left(Vec2),
    Failed,
}

/// Follow the curve near a midline stationary point u₀ in the chart w = 1/(z − u₀), z = x₁ + ix₂.
/// There the field is nearly quadratic in z − u₀, so in w it is close to constant and x₂ keeps
/// its relative accuracy down to the point itself.
#[allow(clippy::too_many_arguments)]
fn approach_chart<F: Fn(Vec2) -> (f64, f64)>(
    f: &F,
    sigma: f64,
    x: Vec2,
    u0: f64,
    eps: f64,
    ctl: &TraceControls,
    samples: &mut Vec<StripPoint>,
    slopes: &mut Vec<f64>,
    steps: &mut usize,
) -> ChartExit {
    let to_z = |w: Vec2| {
        let r2 = w[0] * w[0] + w[1] * w[1];
        [u0 + w[0] / r2, -w[1] / r2]
    };
    let gw = |w: Vec2| {
        let v = f(to_z(w));
        let (a, b) = (w[0] * w[0] - w[1] * w[1], 2.0 * w[0] * w[1]);
        unit((-(a * v.0 - b * v.1), -(a * v.1 + b * v.0)), sigma)
    };
    let (dz0, dz1) = (x[0] - u0, x[1]);
    let r2 = dz0 * dz0 + dz1 * dz1;
    let mut w = [dz0 / r2, -dz1 / r2];
    let sd = x[1].signum();
    let mut h = 1e-3 * w[0].hypot(w[1]);
    while *steps < ctl.max_steps {
        *steps += 1;
        let rw = w[0].hypot(w[1]);
        let Some(acc) = adaptive_step(&gw, w, h, 1e-2 * ctl.tol * rw, 0.05 * rw, 1e-12 * rw) else {
            return ChartExit::Failed;
        };
        let z = to_z(acc.x);
        if sd * z[1] <= 0.0 {
            return ChartExit::Crossed(to_z(w));
        }
        let dist = (z[0] - u0).hypot(z[1]);
        samples.push(StripPoint::new(z[0], z[1]));
        slopes.push(slope_of(f(z)));
        w = acc.x;
        h = acc.next_h;
        if dist <= CHART_END * eps {
            return ChartExit::Reached;
        }
        if dist > CHART_OUT * eps {
            return ChartExit::Left(z);
        }
    }
    ChartExit::Failed
}

/// ℓ⁺: left field from the right zero of D₊ on the upper line.
pub fn trace_upper(pair: &BoundaryPair, eps: f64, ctl: &TraceControls) -> Result<Option<SpineCurve>> {
    let roots = stationary_roots(pair, FieldKind::LeftSpine, Side::Upper, eps);
    let Some(&u) = roots.roots.iter().max_by(|a, b| a.total_cmp(b)) else {
        return Ok(None);
    };
    if roots.roots.len() < 2 {
        return Ok(None);
    }
    let info = classify_stationary(pair, u, Side::Upper, FieldKind::LeftSpine, eps)?;
    trace_spine(pair, &info, ctl).map(Some)
}

/// ℓ⁻: right field from the left zero of D₋(·, ε), a stationary point on the lower line.
pub fn trace_lower(pair: &BoundaryPair, eps: f64, ctl: &TraceControls) -> Result<Option<SpineCurve>> {
    let roots = stationary_roots(pair, FieldKind::RightSpine, Side::Lower, eps);
    if roots.roots.len() < 2 {
        return Ok(None);
    }
    let u = roots.roots.iter().cloned().fold(f64::INFINITY, f64::min);
    let info = classify_stationary(pair, u, Side::Lower, FieldKind::RightSpine, eps)?;
    trace_spine(pair, &info, ctl).map(Some)
}

/// Cubic Hermite interpolant of a curve given as a graph over its first coordinate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpineGraph {
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    pub m: Vec<f64>,
}

impl SpineGraph {
    /// Points (p, T, dT/dp) in traversal order; the abscissae must be strictly monotone.
    pub fn new(mut pts: Vec<(f64, f64, f64)>) -> Result<Self> {
        if pts.len() < 2 {
            return Err(Error::InvalidInput("spine needs at least two samples".into()));
        }
        if pts[0].0 > pts[pts.len() - 1].0 {
            pts.reverse();
        }
        let mut g = SpineGraph { p: vec![], t: vec![], m: vec![] };
        for (p, t, m) in pts {
            if let Some(&last) = g.p.last() {
                if p < last - 1e-7 * (1.0 + last.abs()) {
                    return Err(Error::InvalidInput("spine is not a graph over x1".into()));
                }
                // a slowly winding spiral near its centre steps back by a hair; skip those samples
                if p < last - 1e-12 * (1.0 + last.abs()) {
                    continue;
                }
                if p <= last + 1e-13 * (1.0 + last.abs()) {
                    // keep the later sample (an exact end point) in place of a near duplicate
                    let k = g.p.len() - 1;
                    if k > 0 {
                        g.p[k] = p;
                        g.t[k] = t;
                        g.m[k] = if m.is_finite() { m } else { g.m[k] };
                        continue;
                    }
                    continue;
                }
            }
            g.p.push(p);
            g.t.push(t);
            g.m.push(m);
        }
        if g.p.len() < 2 {
            return Err(Error::InvalidInput("spine collapses to a point".into()));
        }
        let n = g.p.len();
        for i in 0..n {
            if !g.m[i].is_finite() {
                let j = if i + 1 < n { i + 1 } else { i - 1 };
                g.m[i] = (g.t[j] - g.t[i]) / (g.p[j] - g.p[i]);
            }
        }
        Ok(g)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.p[0], self.p[self.p.len() - 1])
    }

    fn segment(&self, p: f64) -> usize {
        let n = self.p.len();
        match self.p.binary_search_by(|q| q.total_cmp(&p)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn eval_seg(&self, i: usize, p: f64) -> (f64, f64) {
        let (p0, p1) = (self.p[i], self.p[i + 1]);
        let h = p1 - p0;
        let s = (p - p0) / h;
        let (y0, y1, m0, m1) = (self.t[i], self.t[i + 1], self.m[i] * h, self.m[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        let d = ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1) / h;
        (v, d)
    }

    pub fn t_at(&self, p: f64) -> f64 {
        self.eval_seg(self.segment(p), p).0
    }

    pub fn slope_at(&self, p: f64) -> f64 {
        self.eval_seg(self.segment(p), p).1
    }

    /// Solve p + σ·T(p) = target on the graph's range (σ = ±1); the left side is increasing.
    pub fn solve(&self, sigma: f64, target: f64, tol: f64) -> Option<f64> {
        let n = self.p.len();
        let g = |i: usize| self.p[i] + sigma * self.t[i];
        let (g0, gn) = (g(0), g(n - 1));
        if target < g0 - tol || target > gn + tol {
            return None;
        }
        if target <= g0 {
            return Some(self.p[0]);
        }
        if target >= gn {
            return Some(self.p[n - 1]);
        }
        let (mut lo, mut hi) = (0usize, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if g(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let f = |p: f64| p + sigma * self.eval_seg(lo, p).0 - target;
        let (mut a, mut b) = (self.p[lo], self.p[hi]);
        let (mut fa, fb) = (f(a), f(b));
        if fa > 0.0 || fb < 0.0 {
            // the interpolant bends outside the bracket; fall back to the nearer node
            return Some(if fa.abs() < fb.abs() { a } else { b });
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = f(mid);
            if fm <= 0.0 {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        let _ = fa;
        Some(0.5 * (a + b))
    }
}

fn first_crossing_refine(a: &SpineGraph, b: &SpineGraph, mut lo: f64, mut hi: f64) -> f64 {
    let d = |x: f64| a.t_at(x) - b.t_at(x);
    let dlo = d(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (d(mid) > 0.0) == (dlo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Crossing of ℓ⁺ with the reflection of ℓ⁻ across the x₁-axis.
pub fn intersection_c(ell_plus: &SpineCurve, ell_minus: &SpineCurve) -> Result<Option<StripPoint>> {
    // Curves ending together on the midline meet at their common end.
    if let (Some(ExitKind::Midline), Some(ExitKind::Midline)) = (ell_plus.exit_kind, ell_minus.exit_kind) {
        let (a, b) = (ell_plus.exit.unwrap(), ell_minus.exit.unwrap());
        if a.dist(b) <= 1e-6 {
            return Ok(Some(StripPoint::new(0.5 * (a.x1 + b.x1), 0.0)));
        }
    }
    let ga = ell_plus.graph(false, 0.0)?;
    let gb = ell_minus.graph(true, 0.0)?;
    let lo = ga.range().0.max(gb.range().0);
    let hi = ga.range().1.min(gb.range().1);
    if lo >= hi {
        return Ok(None);
    }
    let mut xs: Vec<f64> = ga.p.iter().chain(gb.p.iter()).cloned().filter(|&x| x > lo && x < hi).collect();
    xs.push(lo);
    xs.push(hi);
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    let d: Vec<f64> = xs.iter().map(|&x| ga.t_at(x) - gb.t_at(x)).collect();
    let mut crossings = Vec::new();
    for i in 0..xs.len() - 1 {
        if (d[i] > 0.0 && d[i + 1] < 0.0) || (d[i] < 0.0 && d[i + 1] > 0.0) {
            crossings.push(i);
        }
    }
    match crossings.len() {
        0 => Ok(None),
        1 => {
            let i = crossings[0];
            let x = first_crossing_refine(&ga, &gb, xs[i], xs[i + 1]);
            Ok(Some(StripPoint::new(x, ga.t_at(x))))
        }
        k => Err(Error::MultipleCrossings(k)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Eps2 {
    Found(f64),
    /// The spines meet for every width; carries the lower end of the searched bracket.
    AlwaysIntersecting(f64),
    NotFound,
}

impl Eps2 {
    pub fn value(self) -> Option<f64> {
        match self {
            Eps2::Found(e) => Some(e),
            _ => None,
        }
    }
}

/// Both spines at width ε and their crossing, if any.
pub struct SpinePair {
    pub upper: SpineCurve,
    pub lower: SpineCurve,
    pub c: Option<StripPoint>,
}

pub fn spine_pair(pair: &BoundaryPair, eps: f64, ctl: &TraceControls) -> Result<Option<SpinePair>> {
    let (Some(upper), Some(lower)) = (trace_upper(pair, eps, ctl)?, trace_lower(pair, eps, ctl)?) else {
        return Ok(None);
    };
    let c = intersection_c(&upper, &lower)?;
    Ok(Some(SpinePair { upper, lower, c }))
}

/// Negative once the spines cross (depth of C below the upper line), positive while they are apart.
pub fn signed_gap(pair: &BoundaryPair, eps: f64, ctl: &TraceControls) -> Result<Option<f64>> {
    let Some(sp) = spine_pair(pair, eps, ctl)? else {
        return Ok(None);
    };
    if let Some(c) = sp.c {
        return Ok(Some(-(eps - c.x2)));
    }
    let (Some(ExitKind::Boundary), Some(ExitKind::Boundary)) = (sp.upper.exit_kind, sp.lower.exit_kind) else {
        if sp.upper.exit_kind == Some(ExitKind::NodeSnap) || sp.lower.exit_kind == Some(ExitKind::NodeSnap) {
            let (vp, vm) = (sp.upper.exit.unwrap().x1, sp.lower.exit.unwrap().x1);
            let ul = sp.lower.start.x1;
            return Ok(Some(if ul < vp { vp - vm } else { ul - vp }));
        }
        return Ok(None);
    };
    let (vp, vm) = (sp.upper.exit.unwrap().x1, sp.lower.exit.unwrap().x1);
    let ul = sp.lower.start.x1;
    Ok(Some(if ul < vp { vp - vm } else { ul - vp }))
}

/// Smallest width at which ℓ⁺ and the reflected ℓ⁻ meet, by bisection on the signed gap.
pub fn epsilon2(pair: &BoundaryPair, bracket: Option<(f64, f64)>, ctl: &TraceControls) -> Result<Eps2> {
    let a3p = pair.f_plus.a3();
    let a3m = pair.f_minus.a3();
    if a3m >= 0.0 || pair.equal_leading() {
        return Ok(Eps2::NotFound);
    }
    let class = pair.discriminant_class();
    let lo_default = match class {
        DiscriminantClass::Negative => {
            let e0p = (pair.q_min() / (12.0 * a3p)).sqrt();
            (a3p / a3m.abs()).sqrt() * e0p * (1.0 + 1e-6)
        }
        _ => 1e-3,
    };
    if class == DiscriminantClass::Zero {
        return Ok(Eps2::AlwaysIntersecting(bracket.map_or(lo_default, |b| b.0)));
    }
    let (mut lo, hi_max) = bracket.unwrap_or((lo_default, 64.0 * lo_default.max(0.05)));
    let gap = |e: f64| -> Result<Option<f64>> { signed_gap(pair, e, ctl) };
    let g_lo = gap(lo)?;
    match g_lo {
        Some(g) if g <= 0.0 => return Ok(Eps2::AlwaysIntersecting(lo)),
        _ => {}
    }
    // expand until the gap closes
    let mut hi = lo * 1.05;
    loop {
        if hi > hi_max {
            return Ok(Eps2::NotFound);
        }
        match gap(hi)? {
            Some(g) if g <= 0.0 => break,
            _ => {
                lo = hi;
                hi *= 1.05;
            }
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        match gap(mid)? {
            Some(g) if g <= 0.0 => hi = mid,
            _ => lo = mid,
        }
    }
    Ok(Eps2::Found(hi))
}
