//! Numerical checks of a constructed foliation: boundary data, the simple-leaf conditions,
//! diagonal concavity, C¹ gluing, chord linearity, the rectangle identities and analytic
//! gradients. Failures are report entries, never errors.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPair, StripPoint};
use crate::error::Result;
use crate::field::{velocity, FieldKind};
use crate::patches::herringbone::Branch;
use crate::patches::rect::rect_from_vertex_values;
use crate::regimes::{build_foliation, Foliation, Leaf, TILING_TOL};
use crate::spine::TraceControls;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    /// Worst residual seen; the check passes when it is at most `tolerance`.
    pub worst: f64,
    pub location: Option<StripPoint>,
    pub tolerance: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub epsilon: f64,
    pub regime: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "eps = {}  regime = {}  seed = {}", self.epsilon, self.regime, self.seed);
        for c in &self.checks {
            let st = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "skip",
            };
            let at = c.location.map_or(String::from("-"), |p| format!("({:.6}, {:.6})", p.x1, p.x2));
            let _ = writeln!(
                s,
                "{st}  {:<26} worst {:>11.3e}  tol {:>8.1e}  n {:>6}  at {at}",
                c.name, c.worst, c.tolerance, c.samples
            );
        }
        let _ = writeln!(s, "{}", if self.passed() { "all checks passed" } else { "verification FAILED" });
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Value continuity across interfaces and boundary restriction, relative to max(1, |B|).
    pub tol_value: f64,
    /// Gradient jumps across interfaces, relative to max(1, |∇B|).
    pub tol_gradient: f64,
    /// Largest admissible diagonal second difference.
    pub tol_concavity: f64,
    /// Slack for sign conditions (D± ≥ 0).
    pub tol_margin: f64,
    /// Analytic versus central-difference gradient, relative.
    pub tol_fd: f64,
    pub tol_chord: f64,
    /// Relative tolerance for the rectangle identities.
    pub tol_identity: f64,
    pub interface_points: usize,
    pub fd_points: usize,
    pub boundary_points: usize,
    pub concavity_cols: usize,
    pub concavity_rows: usize,
    pub concavity_random: usize,
    /// Sampling half-window around the non-simple part, in units of max(1, ε).
    pub window: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            tol_value: 1e-9,
            tol_gradient: 1e-6,
            tol_concavity: 1e-8,
            tol_margin: 1e-9,
            tol_fd: 1e-5,
            tol_chord: 1e-10,
            tol_identity: 1e-9,
            interface_points: 200,
            fd_points: 500,
            boundary_points: 1000,
            concavity_cols: 400,
            concavity_rows: 41,
            concavity_random: 2000,
            window: 10.0,
        }
    }
}

/// Running maximum of a residual with its location.
#[derive(Clone, Copy, Debug)]
struct Worst {
    v: f64,
    at: Option<StripPoint>,
    n: usize,
}

impl Worst {
    fn new() -> Self {
        Worst { v: f64::NEG_INFINITY, at: None, n: 0 }
    }

    fn push(&mut self, v: f64, x: StripPoint) {
        self.n += 1;
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > self.v {
            self.v = v;
            self.at = Some(x);
        }
    }

    fn merge(mut self, o: Worst) -> Worst {
        self.n += o.n;
        if o.v > self.v {
            self.v = o.v;
            self.at = o.at;
        }
        self
    }

    fn finish(self, name: &str, tol: f64) -> CheckResult {
        let status = if self.n == 0 {
            Status::Skipped
        } else if self.v <= tol {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckResult {
            name: name.to_string(),
            status,
            worst: if self.n == 0 { 0.0 } else { self.v },
            location: self.at,
            tolerance: tol,
            samples: self.n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Piece {
    leaf: usize,
    branch: Option<Branch>,
}

fn piece_at(fol: &Foliation, x: StripPoint) -> Option<Piece> {
    let leaf = fol.locate(x).ok()?;
    let branch = match &fol.leaves[leaf] {
        Leaf::Herringbone(h) => Some(h.locate(x)?.1),
        _ => None,
    };
    Some(Piece { leaf, branch })
}

/// Value and gradient of the formula owning `pc`, evaluated at x even slightly outside it.
fn eval_piece(fol: &Foliation, pc: Piece, x: StripPoint) -> Option<(f64, (f64, f64))> {
    match (&fol.leaves[pc.leaf], pc.branch) {
        (Leaf::Herringbone(h), Some(b)) => h.on_branch(x, b),
        (Leaf::Rect(r), _) => Some((r.eval_unchecked(x), r.gradient_unchecked(x))),
        (l, _) => Some((l.value(&fol.pair, x, fol.eps).ok()?, l.gradient(&fol.pair, x, fol.eps).ok()?)),
    }
}

fn val(fol: &Foliation, x1: f64, x2: f64) -> f64 {
    fol.value(StripPoint::new(x1, x2)).unwrap_or(f64::NAN)
}

fn scale(v: f64) -> f64 {
    v.abs().max(1.0)
}

/// x₁-window for sampling: centred on the non-simple leaves, half-width window·max(1, ε).
fn window(fol: &Foliation, cfg: &VerifyConfig) -> (f64, f64) {
    let spans: Vec<(f64, f64)> = fol
        .leaves
        .iter()
        .filter(|l| !matches!(l, Leaf::SimpleRight { .. } | Leaf::SimpleLeft { .. }))
        .filter_map(|l| l.s_interval())
        .collect();
    let centre = if spans.is_empty() {
        if fol.pair.da3() != 0.0 {
            fol.pair.inflection()
        } else {
            0.0
        }
    } else {
        let lo = spans.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = spans.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    };
    let half = cfg.window * fol.eps.max(1.0);
    (centre - half, centre + half)
}

fn check_tiling(fol: &Foliation) -> CheckResult {
    let mut w = Worst::new();
    if let Some((i, gap)) = fol.tiling_gap() {
        let s = fol.leaves[i].s_interval().map_or(0.0, |s| s.1);
        w.push(gap, StripPoint::new(s, 0.0));
    }
    w.finish("tiling", TILING_TOL)
}

fn check_boundary(fol: &Foliation, cfg: &VerifyConfig, win: (f64, f64)) -> CheckResult {
    let mut w = Worst::new();
    let n = cfg.boundary_points.max(2);
    for i in 0..n {
        let x1 = win.0 + (win.1 - win.0) * i as f64 / (n - 1) as f64;
        for (x2, f) in [(fol.eps, fol.pair.fp(0, x1)), (-fol.eps, fol.pair.fm(0, x1))] {
            let b = val(fol, x1, x2);
            w.push((b - f).abs() / scale(f), StripPoint::new(x1, x2));
        }
    }
    w.finish("boundary-restriction", cfg.tol_value)
}

/// D± ≥ 0 on the upper boundary for every chord of a simple leaf.
fn check_simple_conditions(fol: &Foliation, cfg: &VerifyConfig, win: (f64, f64)) -> CheckResult {
    let mut w = Worst::new();
    let e = fol.eps;
    for l in &fol.leaves {
        let Leaf::SimpleRight { from, to } = l else { continue };
        // chord x₁ − x₂ = u meets the window when u ± ε does
        let (a, b) = (from.max(win.0 - e), to.min(win.1 + e));
        if a >= b {
            continue;
        }
        let n = cfg.boundary_points.max(2);
        for i in 0..n {
            let u = a + (b - a) * i as f64 / (n - 1) as f64;
            let d = fol.pair.d_plus_boundary(u, e).min(fol.pair.d_minus_boundary(u, e));
            w.push(-d, StripPoint::new(u + e, e));
        }
    }
    w.finish("simple-conditions", cfg.tol_margin)
}

fn check_spines(fol: &Foliation, cfg: &VerifyConfig) -> (CheckResult, CheckResult) {
    let mut wd = Worst::new();
    let mut ws = Worst::new();
    for h in fol.herringbones() {
        let sp = &h.spine;
        let n = sp.samples.len();
        let end = sp.invalid_from.unwrap_or(n).min(n);
        for i in 1..end.saturating_sub(1) {
            let x = sp.samples[i];
            let (dp, dm) = sp.d_values(&fol.pair, x);
            wd.push(-dp.min(dm), x);
            ws.push(sp.slopes[i].abs(), x);
        }
    }
    (wd.finish("spine-d-positive", cfg.tol_margin), ws.finish("spine-slope-bound", 1.0 - 1e-9))
}

fn check_concavity(fol: &Foliation, cfg: &VerifyConfig, win: (f64, f64)) -> CheckResult {
    let e = fol.eps;
    let h = 1e-3 * e;
    let lim = e - h;
    let mut pts: Vec<StripPoint> = Vec::new();
    let (nc, nr) = (cfg.concavity_cols.max(2), cfg.concavity_rows.max(2));
    for i in 0..nc {
        let x1 = win.0 + (win.1 - win.0) * i as f64 / (nc - 1) as f64;
        for j in 0..nr {
            pts.push(StripPoint::new(x1, -lim + 2.0 * lim * j as f64 / (nr - 1) as f64));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.concavity_random {
        pts.push(StripPoint::new(rng.gen_range(win.0..=win.1), rng.gen_range(-lim..=lim)));
    }
    let w = pts
        .par_iter()
        .map(|x| {
            let mut w = Worst::new();
            let b0 = val(fol, x.x1, x.x2);
            for sg in [1.0, -1.0] {
                let d2 = val(fol, x.x1 + h, x.x2 + sg * h) + val(fol, x.x1 - h, x.x2 - sg * h) - 2.0 * b0;
                w.push(d2, *x);
            }
            w
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Worst::new(), Worst::merge);
    w.finish("diagonal-concavity", cfg.tol_concavity)
}

/// Crossings of horizontal lines with piece boundaries (leaf interfaces and spines); at each,
/// the value jump and the gradient jump (analytic and one-sided differences).
fn check_interfaces(fol: &Foliation, cfg: &VerifyConfig, win: (f64, f64)) -> (CheckResult, CheckResult) {
    let e = fol.eps;
    let n = cfg.interface_points.max(1);
    let steps = 4000usize;
    let dx = (win.1 - win.0) / steps as f64;
    let hd = 1e-5 * e.min(1.0);
    let per_line: Vec<(Worst, Worst)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x2 = -e + 2.0 * e * (j as f64 + 0.5) / n as f64;
            let mut wv = Worst::new();
            let mut wg = Worst::new();
            let mut prev = piece_at(fol, StripPoint::new(win.0, x2));
            for i in 1..=steps {
                let x1 = win.0 + dx * i as f64;
                let cur = piece_at(fol, StripPoint::new(x1, x2));
                if let (Some(mut pa), Some(pb)) = (prev, cur) {
                    // walk every crossing inside the step, several interfaces may share it
                    let mut lo = x1 - dx;
                    for _ in 0..16 {
                        if pa == pb {
                            break;
                        }
                        let (mut a, mut b) = (lo, x1);
                        for _ in 0..80 {
                            let m = 0.5 * (a + b);
                            if m <= a || m >= b {
                                break;
                            }
                            if piece_at(fol, StripPoint::new(m, x2)) == Some(pa) {
                                a = m;
                            } else {
                                b = m;
                            }
                        }
                        let xs = StripPoint::new(0.5 * (a + b), x2);
                        let Some(next) = piece_at(fol, StripPoint::new(b, x2)) else {
                            break;
                        };
                        let (rv, rg) = interface_residual(fol, pa, next, xs, hd);
                        wv.push(rv, xs);
                        wg.push(rg, xs);
                        pa = next;
                        lo = b;
                    }
                }
                prev = cur;
            }
            (wv, wg)
        })
        .collect();
    let (wv, wg) = per_line
        .into_iter()
        .fold((Worst::new(), Worst::new()), |(a, b), (c, d)| (a.merge(c), b.merge(d)));
    (wv.finish("value-continuity", cfg.tol_value), wg.finish("c1-gluing", cfg.tol_gradient))
}

/// Value and gradient mismatch between the pieces meeting at `xs`, left piece `pa`.
fn interface_residual(fol: &Foliation, pa: Piece, pb: Piece, xs: StripPoint, hd: f64) -> (f64, f64) {
    let (Some((va, ga)), Some((vb, gb))) = (eval_piece(fol, pa, xs), eval_piece(fol, pb, xs)) else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let g = scale(ga.0.abs().max(ga.1.abs()));
    let jump = (ga.0 - gb.0).abs().max((ga.1 - gb.1).abs()) / g;
    // one-sided limits of the assembled B along x₁; only differences beyond what the
    // stencils resolve count
    let (l, r) = (one_sided(fol, xs, pa, -hd), one_sided(fol, xs, pb, hd));
    match (l, r) {
        (Some([la, da, ela, eda]), Some([lb, db, elb, edb])) => (
            ((la - lb).abs() - ela - elb).max(0.0) / scale(la),
            jump.max(((da - db).abs() - eda - edb).max(0.0) / g),
        ),
        _ => ((va - vb).abs() / scale(va), jump),
    }
}

/// One-sided limit of B and of ∂B/∂x₁ at `xs` from the side `h` points to, with error
/// estimates from repeating the three-point stencil at h/2. The step is halved until all
/// stencil points lie in `piece`.
fn one_sided(fol: &Foliation, xs: StripPoint, piece: Piece, h: f64) -> Option<[f64; 4]> {
    let stencil = |h: f64| {
        let [f1, f2, f3] = [1.0, 2.0, 3.0].map(|k| val(fol, xs.x1 + k * h, xs.x2));
        (3.0 * f1 - 3.0 * f2 + f3, -(2.5 * f1 - 4.0 * f2 + 1.5 * f3) / h)
    };
    let mut h = h;
    for _ in 0..12 {
        if (1..=6).all(|k| piece_at(fol, StripPoint::new(xs.x1 + k as f64 * 0.5 * h, xs.x2)) == Some(piece)) {
            let (v1, d1) = stencil(h);
            let (v2, d2) = stencil(0.5 * h);
            return Some([v2, d2, (v1 - v2).abs(), (d1 - d2).abs()]);
        }
        h *= 0.5;
    }
    None
}

fn check_chords(fol: &Foliation, cfg: &VerifyConfig) -> CheckResult {
    let mut w = Worst::new();
    let mirror = |h: &crate::patches::Herringbone| match h.orientation {
        crate::patches::Orientation::Left => 1.0,
        crate::patches::Orientation::Right => -1.0,
    };
    for h in fol.herringbones() {
        let m = mirror(h);
        let (lo, hi) = h.graph().range();
        let k = 64;
        for i in 1..k {
            let p = lo + (hi - lo) * i as f64 / k as f64;
            let cf = h.frame_at(p);
            let spine = StripPoint::new(m * p, cf.t);
            for end in [cf.upper_end, cf.lower_end] {
                let end = StripPoint::new(m * end.x1, end.x2);
                // stay a hair inside the chord so the owning leaf answers
                let a = StripPoint::new(spine.x1 + 1e-9 * (end.x1 - spine.x1), spine.x2 + 1e-9 * (end.x2 - spine.x2));
                let mid = StripPoint::new(0.5 * (a.x1 + end.x1), 0.5 * (a.x2 + end.x2));
                let (ba, bb, bm) = (val(fol, a.x1, a.x2), val(fol, end.x1, end.x2), val(fol, mid.x1, mid.x2));
                w.push((bm - 0.5 * (ba + bb)).abs() / scale(bm), mid);
            }
        }
    }
    w.finish("chord-linearity", cfg.tol_chord)
}

/// Inside the rectangle B = a·(x₁−x₂)(x₁+x₂) + linear, so it is linear along both diagonals.
fn check_rect(fol: &Foliation, cfg: &VerifyConfig) -> (CheckResult, CheckResult) {
    let mut wl = Worst::new();
    let mut wi = Worst::new();
    let Some(r) = fol.rect() else {
        return (wl.finish("rect-diagonal-linearity", cfg.tol_concavity), wi.finish("rect-identities", cfg.tol_identity));
    };
    let e = fol.eps;
    let v = r.vertices();
    let h = 1e-3 * e;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    for _ in 0..200 {
        // bilinear combination of the corners, kept away from the edges
        let (s, t) = (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
        let x1 = (1.0 - s) * (1.0 - t) * v[0].x1 + s * (1.0 - t) * v[1].x1 + s * t * v[2].x1 + (1.0 - s) * t * v[3].x1;
        let x2 = (1.0 - s) * (1.0 - t) * v[0].x2 + s * (1.0 - t) * v[1].x2 + s * t * v[2].x2 + (1.0 - s) * t * v[3].x2;
        let b0 = val(fol, x1, x2);
        for sg in [1.0, -1.0] {
            let d2 = val(fol, x1 + h, x2 + sg * h) + val(fol, x1 - h, x2 - sg * h) - 2.0 * b0;
            wl.push(d2.abs(), StripPoint::new(x1, x2));
        }
    }
    let p = &fol.pair;
    let (c1, c2) = (r.c.x1, r.c.x2);
    let (up, lo) = (c1 + c2, c1 - c2);
    // slopes of the boundary data at the two boundary corners
    let g1 = 2.0 * r.a * up + r.b - p.fp(1, up);
    let g2 = 2.0 * r.a * lo + r.b - p.fm(1, lo);
    wi.push(g1.abs() / scale(p.fp(1, up)), StripPoint::new(up, e));
    wi.push(g2.abs() / scale(p.fm(1, lo)), StripPoint::new(lo, -e));
    // R = R₊ + R₋ = 4a(C₁+ε) + 2b at the left spine vertex
    let al = r.eval_unchecked(StripPoint::new(c1 + e, c2));
    let ar = r.eval_unchecked(StripPoint::new(c1 - e, -c2));
    let (fp, fm) = (p.fp(0, up), p.fm(0, lo));
    let rm = (al - fm) / (e + c2);
    let rp = (al - fp) / (e - c2);
    let rr = 4.0 * r.a * (c1 + e) + 2.0 * r.b;
    let at_l = StripPoint::new(c1 + e, c2);
    wi.push((rp + rm - rr).abs() / scale(rr), at_l);
    wi.push((rm - (2.0 * r.a * (c1 + e - c2) + r.b + r.cc)).abs() / scale(rm), at_l);
    wi.push((rp - (2.0 * r.a * (c1 + e + c2) + r.b - r.cc)).abs() / scale(rp), at_l);
    // the same patch from the herringbones' spine-end values and the vertex system
    let hbs: Vec<_> = fol.herringbones().collect();
    if hbs.len() == 2 {
        let (mut a_l, mut a_r) = (al, ar);
        for h in &hbs {
            let (left_end, right_end) = h.spine_end_values();
            match h.orientation {
                crate::patches::Orientation::Left => a_l = left_end,
                crate::patches::Orientation::Right => a_r = right_end,
            }
        }
        let s = rect_from_vertex_values(r.c, e, fp, fm, a_l, a_r);
        let rel = |x: f64, y: f64| (x - y).abs() / scale(x.abs().max(y.abs()));
        let worst = rel(r.a, s.a).max(rel(r.b, s.b)).max(rel(r.cc, s.cc)).max(rel(r.d, s.d));
        wi.push(worst, r.c);
    }
    (wl.finish("rect-diagonal-linearity", cfg.tol_concavity), wi.finish("rect-identities", cfg.tol_identity))
}

fn check_fd(fol: &Foliation, cfg: &VerifyConfig, win: (f64, f64)) -> CheckResult {
    let e = fol.eps;
    let h = 1e-5;
    let lim = e - 2.0 * h;
    let mut w = Worst::new();
    if lim <= 0.0 {
        return w.finish("gradient-fd", cfg.tol_fd);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut tries = 0;
    while w.n < cfg.fd_points && tries < 20 * cfg.fd_points.max(1) {
        tries += 1;
        let x = StripPoint::new(rng.gen_range(win.0..=win.1), rng.gen_range(-lim..=lim));
        let Some(pc) = piece_at(fol, x) else { continue };
        let stencil = [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)].map(|(a, b)| StripPoint::new(x.x1 + a, x.x2 + b));
        // a stencil straddling an interface measures the kink, not the gradient
        if stencil.iter().any(|&y| piece_at(fol, y) != Some(pc)) {
            continue;
        }
        let Ok(g) = fol.gradient(x) else { continue };
        let b: Vec<f64> = stencil.iter().map(|y| val(fol, y.x1, y.x2)).collect();
        let fx = (b[0] - b[1]) / (2.0 * h);
        let fy = (b[2] - b[3]) / (2.0 * h);
        let err = (g.0 - fx).abs().max((g.1 - fy).abs()) / scale(g.0.abs().max(g.1.abs()));
        w.push(err, x);
    }
    w.finish("gradient-fd", cfg.tol_fd)
}

fn slope(pair: &BoundaryPair, x: StripPoint, eps: f64) -> Option<f64> {
    let v = velocity(pair, FieldKind::LeftSpine, x, eps);
    (v.0.abs() > 1e-12 * (1.0 + v.1.abs())).then(|| v.1 / v.0)
}

/// Slope monotonicity in ε of the extremal field's integral curves: at each sample x with
/// x₂D₊D₋ ≠ 0, slope(ε′) − slope(ε) has the sign of x₂D₊D₋. The residual is the largest
/// value of −sign·Δslope, so the check passes when it is negative.
pub fn verify_slope_monotone(pair: &BoundaryPair, eps: f64, eps_prime: f64, points: &[StripPoint]) -> CheckResult {
    let mut w = Worst::new();
    let refl = pair.reflected();
    for &x in points {
        if x.x2 == 0.0 {
            continue;
        }
        let sign = x.x2 * pair.d_plus_sign(x, eps) * pair.d_minus_sign(x, eps);
        if sign.abs() < 1e-12 {
            continue;
        }
        if let (Some(a), Some(b)) = (slope(pair, x, eps), slope(pair, x, eps_prime)) {
            let same_side = velocity(pair, FieldKind::LeftSpine, x, eps).0 * velocity(pair, FieldKind::LeftSpine, x, eps_prime).0 > 0.0;
            if same_side {
                w.push(-sign.signum() * (b - a), x);
            }
        }
        // the mirrored field at x is the field of the reflected pair at (−x₁, x₂) with the slope negated
        let y = StripPoint::new(-x.x1, x.x2);
        let sign_r = y.x2 * refl.d_plus_sign(y, eps) * refl.d_minus_sign(y, eps);
        if sign_r.abs() < 1e-12 {
            continue;
        }
        let vr = |e: f64| velocity(pair, FieldKind::RightSpine, x, e);
        let (va, vb) = (vr(eps), vr(eps_prime));
        if va.0 * vb.0 > 0.0 && va.0.abs() > 1e-12 && vb.0.abs() > 1e-12 {
            let (a, b) = (va.1 / va.0, vb.1 / vb.0);
            // slope of the mirrored field moves opposite to the reflected pair's
            w.push(sign_r.signum() * (b - a), x);
        }
    }
    w.finish("slope-monotone-in-eps", 0.0)
}

fn check_slope_monotone(fol: &Foliation, cfg: &VerifyConfig, win: (f64, f64)) -> CheckResult {
    let e = fol.eps;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let pts: Vec<StripPoint> = (0..500)
        .map(|_| {
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            StripPoint::new(rng.gen_range(win.0..=win.1), s * rng.gen_range(0.05 * e..=0.95 * e))
        })
        .collect();
    let mut r = verify_slope_monotone(&fol.pair, e, e * 1.01, &pts);
    // strictness is what is asserted: a zero difference counts as a failure
    if r.status == Status::Pass && r.worst >= 0.0 {
        r.status = Status::Fail;
    }
    r
}

/// Run every check on an already built foliation (possibly a deliberately corrupted one).
pub fn verify_built(fol: &Foliation, cfg: &VerifyConfig) -> VerificationReport {
    let mut checks = Vec::new();
    if !fol.is_evaluable() {
        // nothing to sample, and an unconstructed region is not a pass
        let mut c = Worst::new().finish("evaluable", 0.0);
        c.status = Status::Fail;
        checks.push(c);
        return VerificationReport { epsilon: fol.eps, regime: fol.regime.name().into(), seed: cfg.seed, checks };
    }
    let win = window(fol, cfg);
    checks.push(check_tiling(fol));
    checks.push(check_boundary(fol, cfg, win));
    checks.push(check_simple_conditions(fol, cfg, win));
    let (d, s) = check_spines(fol, cfg);
    checks.push(d);
    checks.push(s);
    checks.push(check_concavity(fol, cfg, win));
    let (v, g) = check_interfaces(fol, cfg, win);
    checks.push(v);
    checks.push(g);
    checks.push(check_chords(fol, cfg));
    let (rl, ri) = check_rect(fol, cfg);
    checks.push(rl);
    checks.push(ri);
    checks.push(check_fd(fol, cfg, win));
    checks.push(check_slope_monotone(fol, cfg, win));
    VerificationReport { epsilon: fol.eps, regime: fol.regime.name().into(), seed: cfg.seed, checks }
}

/// Build the foliation of a canonical pair at width ε and verify it.
pub fn verify_foliation(pair: &BoundaryPair, eps: f64, cfg: &VerifyConfig, ctl: &TraceControls) -> Result<VerificationReport> {
    let fol = build_foliation(pair, eps, ctl)?;
    Ok(verify_built(&fol, cfg))
}
