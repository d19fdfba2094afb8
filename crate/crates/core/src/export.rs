//! Text outputs: foliation JSON, spine and grid CSV, SVG drawings of the leaves.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::boundary::StripPoint;
use crate::field::{zero_level_height, FieldKind};
use crate::patches::herringbone::Orientation;
use crate::regimes::{Foliation, Leaf, Problem};
use crate::spine::{ExitKind, SpineCurve};

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn pt(p: StripPoint) -> Value {
    json!([num(p.x1), num(p.x2)])
}

fn exit_name(k: Option<ExitKind>) -> &'static str {
    match k {
        Some(ExitKind::Boundary) => "boundary",
        Some(ExitKind::NodeSnap) => "node",
        Some(ExitKind::Midline) => "midline",
        None => "none",
    }
}

fn kind_name(k: FieldKind) -> &'static str {
    match k {
        FieldKind::LeftSpine => "left",
        FieldKind::RightSpine => "right",
    }
}

pub fn leaf_params(leaf: &Leaf) -> Value {
    match leaf {
        Leaf::SimpleRight { from, to } | Leaf::SimpleLeft { from, to } => json!({ "from": num(*from), "to": num(*to) }),
        Leaf::Herringbone(h) => {
            let (s0, s1) = h.s_range();
            let (a, b) = h.spine_ends();
            json!({
                "orientation": match h.orientation { Orientation::Left => "left", Orientation::Right => "right" },
                "s_range": [num(s0), num(s1)],
                "spine": [pt(a), pt(b)],
                "spine_samples": h.spine.samples.len(),
                "spine_exit": exit_name(h.spine.exit_kind),
                "tangent_end": h.tangent_end.is_some(),
            })
        }
        Leaf::Rect(r) => json!({
            "c": pt(r.c),
            "coefficients": { "a": num(r.a), "b": num(r.b), "c": num(r.cc), "d": num(r.d) },
            "vertices": r.vertices().iter().map(|v| pt(*v)).collect::<Vec<_>>(),
        }),
        Leaf::FissureOpaque { label } => json!({ "label": label }),
    }
}

pub fn foliation_value(fol: &Foliation) -> Value {
    json!({
        "epsilon": fol.eps,
        "regime": fol.regime.name(),
        "leaves": fol.leaves.iter().map(|l| json!({ "type": l.type_name(), "params": leaf_params(l) })).collect::<Vec<_>>(),
    })
}

pub fn foliation_json(fol: &Foliation) -> String {
    serde_json::to_string_pretty(&foliation_value(fol)).expect("foliation serializes") + "\n"
}

/// Traced samples as `x1,x2` rows after a `#` header line.
pub fn spine_csv(spine: &SpineCurve) -> String {
    let mut s = String::new();
    let exit = spine.exit.map_or(String::from("none"), |p| format!("({},{})", p.x1, p.x2));
    let _ = writeln!(
        s,
        "# eps={} kind={} start=({},{}) exit={} exit_kind={}",
        spine.eps,
        kind_name(spine.kind),
        spine.start.x1,
        spine.start.x2,
        exit,
        exit_name(spine.exit_kind)
    );
    s.push_str("x1,x2\n");
    for p in &spine.samples {
        let _ = writeln!(s, "{},{}", p.x1, p.x2);
    }
    s
}

/// B (and optionally its gradient) at raw-frame points. Points that cannot be evaluated
/// get empty value columns and the reason in the last column.
pub fn grid_csv(problem: &Problem, fol: &Foliation, points: &[StripPoint], gradient: bool) -> String {
    let rows: Vec<String> = points
        .par_iter()
        .map(|&x| {
            let v = problem.value(fol, x);
            let g = if gradient { Some(problem.gradient(fol, x)) } else { None };
            match (v, g) {
                (Ok(v), None) => format!("{},{},{},", x.x1, x.x2, v),
                (Ok(v), Some(Ok(g))) => format!("{},{},{},{},{},", x.x1, x.x2, v, g.0, g.1),
                (Err(e), _) | (_, Some(Err(e))) => {
                    let blanks = if gradient { ",,," } else { "," };
                    format!("{},{}{}{}", x.x1, x.x2, blanks, e.to_string().replace(',', ";"))
                }
            }
        })
        .collect();
    let mut s = String::from(if gradient { "x1,x2,B,dB_dx1,dB_dx2,error\n" } else { "x1,x2,B,error\n" });
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

#[derive(Clone, Copy, Debug)]
pub struct SvgOptions {
    /// Chords drawn per leaf.
    pub chords: usize,
    pub width_px: f64,
    /// x₁ range shown; picked around the non-simple leaves when absent.
    pub x_range: Option<(f64, f64)>,
    /// Overlay the zero-level curves of X₀, X₁, X∞.
    pub curves: bool,
    /// Draw in the raw frame of a canonicalized problem.
    pub flip_x1: bool,
    pub flip_x2: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { chords: 40, width_px: 900.0, x_range: None, curves: false, flip_x1: false, flip_x2: false }
    }
}

fn leaf_colour(l: &Leaf) -> &'static str {
    match l {
        Leaf::SimpleRight { .. } | Leaf::SimpleLeft { .. } => "#4a7ab5",
        Leaf::Herringbone(h) => match h.orientation {
            Orientation::Left => "#c0504d",
            Orientation::Right => "#d08a2e",
        },
        Leaf::Rect(_) => "#5b9a52",
        Leaf::FissureOpaque { .. } => "#888888",
    }
}

/// x₁ range in the canonical frame.
fn view_range(fol: &Foliation) -> (f64, f64) {
    let e = fol.eps;
    let spans: Vec<(f64, f64)> = fol
        .leaves
        .iter()
        .filter(|l| !matches!(l, Leaf::SimpleRight { .. } | Leaf::SimpleLeft { .. }))
        .filter_map(|l| l.s_interval())
        .collect();
    if spans.is_empty() {
        let c = if fol.pair.da3() != 0.0 { fol.pair.inflection() } else { 0.0 };
        return (c - 4.0 * e, c + 4.0 * e);
    }
    let lo = spans.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = spans.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    (lo - 2.0 * e, hi + 2.0 * e)
}

struct Canvas {
    x0: f64,
    eps: f64,
    k: f64,
    margin: f64,
    fx: f64,
    fy: f64,
}

impl Canvas {
    /// Pixel coordinates of a canonical-frame point; x₂ points up.
    fn map(&self, p: StripPoint) -> (f64, f64) {
        let (x1, x2) = (self.fx * p.x1, self.fy * p.x2);
        (self.margin + (x1 - self.x0) * self.k, self.margin + (self.eps - x2) * self.k)
    }

    fn line(&self, s: &mut String, a: StripPoint, b: StripPoint) {
        let (ax, ay) = self.map(a);
        let (bx, by) = self.map(b);
        let _ = writeln!(s, r#"    <line x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{by:.3}"/>"#);
    }

    fn polyline(&self, pts: &[StripPoint]) -> String {
        pts.iter()
            .map(|p| {
                let (x, y) = self.map(*p);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn spaced(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
}

/// One `<g class="leaf">` per leaf, in leaf order, followed by the spines.
pub fn foliation_svg(fol: &Foliation, opts: &SvgOptions) -> String {
    let e = fol.eps;
    let (fx, fy) = (if opts.flip_x1 { -1.0 } else { 1.0 }, if opts.flip_x2 { -1.0 } else { 1.0 });
    // the view is given in the drawn frame; leaves live in the canonical one
    let (v0, v1) = match opts.x_range {
        Some(r) => r,
        None => {
            let (a, b) = view_range(fol);
            if fx < 0.0 {
                (-b, -a)
            } else {
                (a, b)
            }
        }
    };
    let (c0, c1) = if fx < 0.0 { (-v1, -v0) } else { (v0, v1) };
    let margin = 20.0;
    let k = opts.width_px / (v1 - v0);
    let cv = Canvas { x0: v0, eps: e, k, margin, fx, fy };
    let (w, h) = (opts.width_px + 2.0 * margin, 2.0 * e * k + 2.0 * margin);
    let n = opts.chords.max(1);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(s, r#"  <desc>eps={} regime={}</desc>"#, e, fol.regime.name());
    let _ = writeln!(s, r##"  <rect x="0" y="0" width="{w:.1}" height="{h:.1}" fill="#ffffff"/>"##);
    for (i, leaf) in fol.leaves.iter().enumerate() {
        let colour = leaf_colour(leaf);
        let _ = writeln!(
            s,
            r#"  <g class="leaf" data-type="{}" data-index="{i}" stroke="{colour}" stroke-width="1" fill="none">"#,
            leaf.type_name()
        );
        match leaf {
            Leaf::SimpleRight { from, to } => {
                let (a, b) = (from.max(c0 - e), to.min(c1 + e));
                if a < b {
                    for u in spaced(a, b, n) {
                        cv.line(&mut s, StripPoint::new(u - e, -e), StripPoint::new(u + e, e));
                    }
                }
            }
            Leaf::SimpleLeft { from, to } => {
                let (a, b) = (from.max(c0 - e), to.min(c1 + e));
                if a < b {
                    for u in spaced(a, b, n) {
                        cv.line(&mut s, StripPoint::new(u + e, -e), StripPoint::new(u - e, e));
                    }
                }
            }
            Leaf::Herringbone(hb) => {
                let m = match hb.orientation {
                    Orientation::Left => 1.0,
                    Orientation::Right => -1.0,
                };
                let (lo, hi) = hb.graph().range();
                for p in spaced(lo, hi, n) {
                    let f = hb.frame_at(p);
                    let sp = StripPoint::new(m * p, f.t);
                    cv.line(&mut s, sp, StripPoint::new(m * f.upper_end.x1, f.upper_end.x2));
                    cv.line(&mut s, sp, StripPoint::new(m * f.lower_end.x1, f.lower_end.x2));
                }
            }
            Leaf::Rect(r) => {
                let _ = writeln!(
                    s,
                    r#"    <polygon points="{}" fill="{colour}" fill-opacity="0.25"/>"#,
                    cv.polyline(&r.vertices())
                );
            }
            Leaf::FissureOpaque { label } => {
                let (x, y) = cv.map(StripPoint::new(0.5 * (c0 + c1), 0.0));
                let _ = writeln!(s, r#"    <text x="{x:.3}" y="{y:.3}" fill="{colour}" stroke="none">{label}</text>"#);
            }
        }
        s.push_str("  </g>\n");
    }
    for hb in fol.herringbones() {
        let _ = writeln!(
            s,
            r##"  <polyline class="spine" points="{}" stroke="#111111" stroke-width="2.5" fill="none"/>"##,
            cv.polyline(&hb.spine_points())
        );
    }
    if opts.curves {
        let names = ["x0", "x1", "xinf"];
        let colours = ["#7b3fa0", "#2a9d8f", "#e76f51"];
        for which in 0..3 {
            let mut runs: Vec<Vec<StripPoint>> = vec![Vec::new()];
            for x1 in spaced(c0, c1, 400) {
                match zero_level_height(&fol.pair, which, x1, e) {
                    Some(x2) => runs.last_mut().unwrap().push(StripPoint::new(x1, x2)),
                    None => {
                        if !runs.last().unwrap().is_empty() {
                            runs.push(Vec::new());
                        }
                    }
                }
            }
            for r in runs.iter().filter(|r| r.len() > 1) {
                let _ = writeln!(
                    s,
                    r#"  <polyline class="x-curve" data-curve="{}" points="{}" stroke="{}" stroke-dasharray="4 3" fill="none"/>"#,
                    names[which],
                    cv.polyline(r),
                    colours[which]
                );
            }
        }
    }
    let (lx0, _) = cv.map(StripPoint::new(fx * v0, 0.0));
    let (lx1, _) = cv.map(StripPoint::new(fx * v1, 0.0));
    for y in [margin, h - margin] {
        let _ = writeln!(
            s,
            r##"  <line class="boundary" x1="{lx0:.3}" y1="{y:.3}" x2="{lx1:.3}" y2="{y:.3}" stroke="#000000" stroke-width="1.5"/>"##
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryPair;
    use crate::regimes::build_foliation;
    use crate::spine::TraceControls;

    #[test]
    fn json_marks_infinite_ends_as_null() {
        let p = BoundaryPair::new([1.0, 0.0, 1.0, 0.0], [0.0; 4]);
        let f = build_foliation(&p, 0.2, &TraceControls::default()).unwrap();
        let v = foliation_value(&f);
        assert_eq!(v["regime"], "simple");
        assert!(v["leaves"][0]["params"]["from"].is_null());
        assert!(v["leaves"][0]["params"]["to"].is_null());
    }

    #[test]
    fn one_group_per_leaf() {
        let p = BoundaryPair::new([1.0, 0.0, 1.0, 0.0], [-1.0, 0.0, 0.0, 0.0]);
        let f = build_foliation(&p, 0.5, &TraceControls::default()).unwrap();
        let svg = foliation_svg(&f, &SvgOptions { curves: true, ..Default::default() });
        assert_eq!(svg.matches(r#"class="leaf""#).count(), f.leaves.len());
        assert_eq!(svg.matches(r#"class="spine""#).count(), 2);
    }
}
