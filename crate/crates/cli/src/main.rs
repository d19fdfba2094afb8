use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellman_strip::export::{foliation_json, foliation_svg, grid_csv, spine_csv, SvgOptions};
use bellman_strip::regimes::{critical_epsilons, CriticalEps};
use bellman_strip::spine::Eps2;
use bellman_strip::{
    verify_built, BoundaryPair, DiscriminantClass, Error, Foliation, Leaf, Problem, StripPoint, TraceControls,
    VerificationReport, VerifyConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "bellman-strip", version, about = "Foliations and Bellman candidates on the strip |x2| <= eps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Critical widths and the regime on each interval between them.
    Regimes(Common),
    /// Build the foliation and write its JSON dump and spine CSVs.
    Foliate(Common),
    /// Evaluate B (and optionally its gradient) at points.
    Eval(EvalArgs),
    /// Run the verification suite; exit status 2 when a check fails.
    Verify(VerifyArgs),
    /// Draw the foliation as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
    Text,
}

#[derive(Args, Clone)]
struct Common {
    /// Boundary data: a JSON file, inline JSON {"f_plus":[a3,a2,a1,a0],"f_minus":[...]},
    /// or inline coefficients "a3,a2,a1,a0;a3,a2,a1,a0" (f+ first).
    #[arg(long, allow_hyphen_values = true)]
    boundary: String,
    #[arg(long, conflicts_with = "eps_range")]
    eps: Option<f64>,
    /// start:end:step
    #[arg(long, value_parser = parse_range)]
    eps_range: Option<EpsRange>,
    /// Output directory (or file, for single outputs); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Points "x1,x2;x1,x2;..."
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    /// CSV file with x1,x2 per line (a header line is skipped).
    #[arg(long)]
    points_file: Option<PathBuf>,
    #[arg(long)]
    gradient: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    tol_value: Option<f64>,
    #[arg(long)]
    tol_gradient: Option<f64>,
    #[arg(long)]
    tol_concavity: Option<f64>,
    #[arg(long)]
    tol_margin: Option<f64>,
    #[arg(long)]
    tol_fd: Option<f64>,
    #[arg(long)]
    tol_chord: Option<f64>,
    #[arg(long)]
    tol_identity: Option<f64>,
    /// Push every spine by a bump of this height before verifying.
    #[arg(long)]
    perturb_spine: Option<f64>,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 40)]
    chords: usize,
    /// x1 range "a:b" of the drawing.
    #[arg(long, value_parser = parse_pair)]
    x_range: Option<(f64, f64)>,
    /// Overlay the zero-level curves of X0, X1, Xinf.
    #[arg(long)]
    curves: bool,
    #[arg(long, default_value_t = 900.0)]
    width: f64,
}

#[derive(Clone, Copy, Debug)]
struct EpsRange {
    start: f64,
    end: f64,
    step: f64,
}

impl EpsRange {
    fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + self.step * i as f64).collect()
    }
}

fn parse_range(s: &str) -> Result<EpsRange, String> {
    let v: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [start, end, step] = v[..] else {
        return Err("expected start:end:step".into());
    };
    if !(start > 0.0 && start < end && step > 0.0 && end.is_finite()) {
        return Err("need 0 < start < end and step > 0".into());
    }
    Ok(EpsRange { start, end, step })
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if !(a < b) {
        return Err("need a < b".into());
    }
    Ok((a, b))
}

enum Fail {
    Usage(String),
    Verify,
    OutOfScope(String),
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Usage(e.to_string())
    }
}

type Res<T> = Result<T, Fail>;

fn parse_coeffs(s: &str) -> Option<[f64; 4]> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
    v.try_into().ok()
}

fn load_boundary(arg: &str) -> Res<BoundaryPair> {
    let t = arg.trim();
    if t.starts_with('{') {
        return BoundaryPair::from_json(t).map_err(|e| Fail::Usage(format!("boundary: {e}")));
    }
    if let Some((a, b)) = t.split_once(';') {
        if let (Some(fp), Some(fm)) = (parse_coeffs(a), parse_coeffs(b)) {
            if fp.iter().chain(&fm).all(|c| c.is_finite()) {
                return Ok(BoundaryPair::new(fp, fm));
            }
        }
        return Err(Fail::Usage(format!("boundary: cannot read coefficients from {t:?}")));
    }
    let text = fs::read_to_string(t).map_err(|e| Fail::Usage(format!("boundary file {t}: {e}")))?;
    BoundaryPair::from_json(&text).map_err(|e| Fail::Usage(format!("boundary: {e}")))
}

fn widths(c: &Common) -> Res<Vec<f64>> {
    match (c.eps, c.eps_range) {
        (Some(e), _) if e > 0.0 && e.is_finite() => Ok(vec![e]),
        (Some(e), _) => Err(Fail::Usage(format!("eps must be positive, got {e}"))),
        (None, Some(r)) => Ok(r.values()),
        (None, None) => Err(Fail::Usage("one of --eps or --eps-range is required".into())),
    }
}

fn single_width(c: &Common) -> Res<f64> {
    let w = widths(c)?;
    match w[..] {
        [e] => Ok(e),
        _ => Err(Fail::Usage("this command takes a single --eps".into())),
    }
}

fn build(problem: &Problem, eps: f64, ctl: &TraceControls) -> Res<Foliation> {
    problem.foliation(eps, ctl).map_err(|e| match e {
        Error::Unclassified(_) | Error::NotEvaluable(_) => Fail::OutOfScope(format!("eps = {eps}: {e}")),
        e => Fail::Usage(format!("eps = {eps}: {e}")),
    })
}

/// Writes to `<out>/<name>` when `out` is a directory (or has no extension), to `out`
/// itself otherwise, and to stdout when there is no `out`.
fn emit(out: Option<&Path>, name: &str, text: &str, single: bool) -> Res<()> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => {
            let path = if single && p.extension().is_some() && !p.is_dir() {
                p.to_path_buf()
            } else {
                fs::create_dir_all(p)?;
                p.join(name)
            };
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(&path, text)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn criticals_rows(c: &CriticalEps) -> Vec<(&'static str, f64, &'static str)> {
    let mut rows = Vec::new();
    let mut add = |n, v: Option<f64>, what| {
        if let Some(v) = v.filter(|v| *v > 0.0) {
            rows.push((n, v, what));
        }
    };
    add("eps0+", c.eps0_plus, "pocket birth on the upper line");
    add("eps1+", c.eps1_plus, "upper stationary point: node to spiral");
    add("eps0-", c.eps0_minus, "pocket birth on the lower line");
    add("eps1-", c.eps1_minus, "lower stationary point: node to spiral");
    if let Some(Eps2::Found(e)) = c.eps2 {
        add("eps2", Some(e), "spines start to cross");
    }
    rows
}

fn regime_label(problem: &Problem, eps: f64, ctl: &TraceControls) -> String {
    match problem.regime(eps, ctl) {
        Ok(r) => r.name().to_string(),
        Err(e @ Error::Unclassified(_)) => e.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

fn cmd_regimes(c: &Common, ctl: &TraceControls) -> Res<()> {
    let problem = Problem::new(load_boundary(&c.boundary)?);
    let format = c.format.unwrap_or(Format::Text);
    if let Some(r) = c.eps_range {
        let rows: Vec<(f64, String)> =
            r.values().par_iter().map(|&e| (e, regime_label(&problem, e, ctl))).collect();
        let text = match format {
            Format::Csv => {
                let mut s = String::from("eps,regime\n");
                rows.iter().for_each(|(e, r)| s.push_str(&format!("{e},{r}\n")));
                s
            }
            Format::Json => {
                let v: Vec<_> = rows.iter().map(|(e, r)| serde_json::json!({"eps": e, "regime": r})).collect();
                serde_json::to_string_pretty(&v).expect("serializes") + "\n"
            }
            _ => rows.iter().map(|(e, r)| format!("{e:<12} {r}\n")).collect(),
        };
        return emit(c.out.as_deref(), "regimes.csv", &text, true);
    }

    let pair = problem.pair;
    let crit = critical_epsilons(&pair, ctl).map_err(|e| Fail::Usage(e.to_string()))?;
    let rows = criticals_rows(&crit);
    // regime changes only at the pocket births and at eps2
    let mut cuts: Vec<f64> =
        rows.iter().filter(|r| !r.0.starts_with("eps1")).map(|r| r.1).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut intervals: Vec<(f64, f64, String)> = Vec::new();
    let mut lo = 0.0;
    for hi in cuts.iter().copied().chain([f64::INFINITY]) {
        let probe = if hi.is_finite() { 0.5 * (lo + hi) } else if lo > 0.0 { 2.0 * lo } else { 1.0 };
        let label = regime_label(&problem, probe, ctl);
        match intervals.last_mut() {
            Some(last) if last.2 == label => last.1 = hi,
            _ => intervals.push((lo, hi, label)),
        }
        lo = hi;
    }
    let note = match (pair.equal_leading(), pair.discriminant_class()) {
        (true, _) => Some("equal leading coefficients: no critical widths"),
        (false, DiscriminantClass::Zero) => Some("zero discriminant: rectangle regime for all eps"),
        _ => None,
    };
    let text = match format {
        Format::Csv => {
            let mut s = String::from("kind,name,value,meaning\n");
            for (n, v, what) in &rows {
                s.push_str(&format!("critical,{n},{v},{what}\n"));
            }
            for (a, b, r) in &intervals {
                let b = if b.is_finite() { b.to_string() } else { "inf".into() };
                s.push_str(&format!("interval,{r},{a}:{b},\n"));
            }
            s
        }
        Format::Json => {
            let v = serde_json::json!({
                "criticals": rows.iter().map(|(n, v, w)| serde_json::json!({"name": n, "value": v, "meaning": w})).collect::<Vec<_>>(),
                "intervals": intervals.iter().map(|(a, b, r)| serde_json::json!({"from": a, "to": if b.is_finite() { serde_json::json!(b) } else { serde_json::Value::Null }, "regime": r})).collect::<Vec<_>>(),
                "note": note,
            });
            serde_json::to_string_pretty(&v).expect("serializes") + "\n"
        }
        _ => {
            let mut s = String::new();
            if let Some(n) = note {
                s.push_str(n);
                s.push('\n');
            }
            if rows.is_empty() {
                s.push_str("no critical widths\n");
            }
            for (n, v, what) in &rows {
                s.push_str(&format!("{n:<6} {v:<22} {what}\n"));
            }
            for (a, b, r) in &intervals {
                let b = if b.is_finite() { format!("{b}]") } else { "inf)".into() };
                s.push_str(&format!("({a}, {b}  {r}\n"));
            }
            s
        }
    };
    emit(c.out.as_deref(), "regimes.csv", &text, true)
}

fn cmd_foliate(c: &Common, ctl: &TraceControls) -> Res<()> {
    let problem = Problem::new(load_boundary(&c.boundary)?);
    let ws = widths(c)?;
    let built: Vec<Res<Foliation>> = ws.par_iter().map(|&e| build(&problem, e, ctl)).collect();
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    for (e, f) in ws.iter().zip(built) {
        let f = f?;
        match c.format.unwrap_or(Format::Json) {
            Format::Svg => {
                emit(Some(&out), &format!("foliation_eps{e}.svg"), &foliation_svg(&f, &svg_options(&problem)), false)?
            }
            _ => emit(Some(&out), &format!("foliation_eps{e}.json"), &foliation_json(&f), false)?,
        }
        for h in f.herringbones() {
            let side = match h.orientation {
                bellman_strip::patches::Orientation::Left => "upper",
                bellman_strip::patches::Orientation::Right => "lower",
            };
            emit(Some(&out), &format!("spine_{side}_eps{e}.csv"), &spine_csv(&h.spine), false)?;
        }
    }
    Ok(())
}

fn read_points(a: &EvalArgs) -> Res<Vec<StripPoint>> {
    let mut pts = Vec::new();
    let mut push = |line: &str, strict: bool| -> Res<()> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(());
        }
        let parsed = line
            .split_once(',')
            .and_then(|(x, y)| Some(StripPoint::new(x.trim().parse().ok()?, y.trim().parse().ok()?)));
        match parsed {
            Some(p) => pts.push(p),
            None if !strict => {}
            None => return Err(Fail::Usage(format!("cannot read point {line:?}"))),
        }
        Ok(())
    };
    if let Some(s) = &a.points {
        for item in s.split(';') {
            push(item, true)?;
        }
    }
    if let Some(path) = &a.points_file {
        let text = fs::read_to_string(path)?;
        for (i, line) in text.lines().enumerate() {
            // a header line is allowed
            push(line, i > 0)?;
        }
    }
    if pts.is_empty() {
        return Err(Fail::Usage("no points given (--points or --points-file)".into()));
    }
    Ok(pts)
}

fn cmd_eval(a: &EvalArgs, ctl: &TraceControls) -> Res<()> {
    let problem = Problem::new(load_boundary(&a.common.boundary)?);
    let eps = single_width(&a.common)?;
    let pts = read_points(a)?;
    let f = build(&problem, eps, ctl)?;
    if !f.is_evaluable() {
        return Err(Fail::OutOfScope(format!("eps = {eps}: regime {} is not evaluable", f.regime.name())));
    }
    emit(a.common.out.as_deref(), "eval.csv", &grid_csv(&problem, &f, &pts, a.gradient), true)
}

fn cmd_verify(a: &VerifyArgs, ctl: &TraceControls) -> Res<()> {
    let problem = Problem::new(load_boundary(&a.common.boundary)?);
    let ws = widths(&a.common)?;
    let d = VerifyConfig::default();
    let cfg = VerifyConfig {
        seed: a.common.seed,
        tol_value: a.tol_value.unwrap_or(d.tol_value),
        tol_gradient: a.tol_gradient.unwrap_or(d.tol_gradient),
        tol_concavity: a.tol_concavity.unwrap_or(d.tol_concavity),
        tol_margin: a.tol_margin.unwrap_or(d.tol_margin),
        tol_fd: a.tol_fd.unwrap_or(d.tol_fd),
        tol_chord: a.tol_chord.unwrap_or(d.tol_chord),
        tol_identity: a.tol_identity.unwrap_or(d.tol_identity),
        ..d
    };
    let reports: Vec<Res<VerificationReport>> = ws
        .par_iter()
        .map(|&e| {
            let mut f = build(&problem, e, ctl)?;
            if !f.is_evaluable() {
                return Err(Fail::OutOfScope(format!("eps = {e}: regime {} is not evaluable", f.regime.name())));
            }
            if let Some(dx) = a.perturb_spine {
                f = f.with_perturbed_spines(dx);
            }
            Ok(verify_built(&f, &cfg))
        })
        .collect();
    let reports: Vec<VerificationReport> = reports.into_iter().collect::<Res<_>>()?;
    let text = match a.common.format.unwrap_or(Format::Text) {
        Format::Json if reports.len() == 1 => reports[0].to_json() + "\n",
        Format::Json => serde_json::to_string_pretty(&reports).expect("serializes") + "\n",
        _ => reports.iter().map(|r| r.to_text()).collect::<Vec<_>>().join("\n"),
    };
    emit(a.common.out.as_deref(), "verify.json", &text, true)?;
    if reports.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(Fail::Verify)
    }
}

fn svg_options(problem: &Problem) -> SvgOptions {
    SvgOptions { flip_x1: problem.rec.reflected_t, flip_x2: problem.rec.swapped_pm, ..Default::default() }
}

fn cmd_plot(a: &PlotArgs, ctl: &TraceControls) -> Res<()> {
    let problem = Problem::new(load_boundary(&a.common.boundary)?);
    let eps = single_width(&a.common)?;
    let f = build(&problem, eps, ctl)?;
    let opts = SvgOptions {
        chords: a.chords,
        width_px: a.width,
        x_range: a.x_range,
        curves: a.curves,
        ..svg_options(&problem)
    };
    let leaves = f.leaves.iter().filter(|l| !matches!(l, Leaf::FissureOpaque { .. })).count();
    eprintln!("eps = {eps}: regime {}, {leaves} drawable leaves", f.regime.name());
    emit(a.common.out.as_deref(), &format!("foliation_eps{eps}.svg"), &foliation_svg(&f, &opts), true)
}

fn run(cli: Cli) -> Res<()> {
    let ctl = TraceControls::default();
    match &cli.cmd {
        Cmd::Regimes(c) => cmd_regimes(c, &ctl),
        Cmd::Foliate(c) => cmd_foliate(c, &ctl),
        Cmd::Eval(a) => cmd_eval(a, &ctl),
        Cmd::Verify(a) => cmd_verify(a, &ctl),
        Cmd::Plot(a) => cmd_plot(a, &ctl),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("BELLMAN_STRIP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Verify) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(Fail::OutOfScope(m)) => {
            eprintln!("out of scope: {m}");
            ExitCode::from(3)
        }
    }
}
