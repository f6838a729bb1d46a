//! Command-line surface.
//!
//! Exit codes follow the verdict where there is one: 0 unsteerable,
//! 1 steerable, 2 inconclusive, 3 model construction blocked by the
//! positivity precondition. 64 flags usage errors, 65 malformed data,
//! 70 numerical failures, 74 I/O.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bloch::{BlochOp, TAU};
use crate::criterion::{verdict_with, Quadrature, Verdict, VerdictKind, TOL_PSD};
use crate::lhs::{
    construct_case1, transform_model, two_step_decompose, verify_model, DiscreteMeasure,
    KeyringModel, DEFAULT_GRID_N,
};
use crate::search::{
    boundary_csv, boundary_curve, default_alpha_grid, depolarizing_region, search_steerable,
    search_unsteerable, SearchConfig,
};
use crate::states::{EllipseFamily, TwoQubitRealState};
use crate::Error;

#[derive(Parser)]
#[command(
    name = "rp-steer",
    version,
    about = "Steerability of real two-qubit states under planar projective measurements"
)]
struct Cli {
    /// TOML file with default tuning knobs (flags win over it)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide steerability of one family member
    Verdict(VerdictArgs),
    /// Sweep certified noise thresholds for the pure-state mixtures
    Boundary(BoundaryArgs),
    /// Sweep the two-sided depolarizing noise region
    Depolarize(DepolarizeArgs),
    /// Build or check hidden-state models
    Lhs {
        #[command(subcommand)]
        action: LhsAction,
    },
    /// Box membership and two-step decomposition for a finite measure
    Box(BoxArgs),
    /// Render a sweep CSV as an SVG chart
    Plot(PlotArgs),
}

#[derive(Args)]
struct FamilyArgs {
    /// werner, pure-mixed, depolarized, or state
    #[arg(long)]
    family: String,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta_a: Option<f64>,
    #[arg(long)]
    eta_b: Option<f64>,
    /// File holding 16 whitespace-separated density matrix entries
    #[arg(long, value_name = "FILE")]
    state: Option<PathBuf>,
}

#[derive(Args)]
struct VerdictArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Evaluate at a fixed operator "n,r1,r3" instead of searching
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Write the certificate JSON here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundaryArgs {
    /// Number of alpha samples on [0, pi/4]
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    quad_tol: Option<f64>,
    #[arg(long)]
    bisect_iters: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DepolarizeArgs {
    /// Visibility of the channel on the steering side
    #[arg(long)]
    eta_a: f64,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    quad_tol: Option<f64>,
    #[arg(long)]
    bisect_iters: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LhsAction {
    /// Construct a keyring model for an unsteerable family member
    Build(LhsBuildArgs),
    /// Replay a stored model against a family and report the worst error
    Verify(LhsVerifyArgs),
}

#[derive(Args)]
struct LhsBuildArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Model JSON destination
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct LhsVerifyArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Model JSON to check
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Number of measurement angles sampled on [0, 2pi)
    #[arg(long)]
    thetas: Option<usize>,
}

#[derive(Args)]
struct BoxArgs {
    /// CSV file of atoms, header "phi,weight"
    #[arg(long, value_name = "FILE")]
    measure: PathBuf,
    /// Target operator "n,r1,r3"
    #[arg(long)]
    z: String,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV produced by boundary or depolarize
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// SVG destination
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

/// Tuning knobs accepted from a config file; every one has a flag that
/// overrides it.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    quad_tol: Option<f64>,
    bisect_iters: Option<usize>,
    samples: Option<usize>,
    grid_n: Option<usize>,
    thetas: Option<usize>,
}

#[derive(Debug)]
enum Fail {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type CmdResult = std::result::Result<i32, Fail>;

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 74,
        Error::ModelFormat(_) | Error::InvalidState(_) => 65,
        _ => 70,
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { 64 } else { 0 };
        }
    };
    let conf = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(Fail::Lib(e)) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            return 64;
        }
    };
    match dispatch(cli.command, &conf) {
        Ok(code) => code,
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            64
        }
        Err(Fail::Lib(e)) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn load_config(path: Option<&Path>) -> std::result::Result<FileConfig, Fail> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    toml::from_str(&text).map_err(|e| Fail::Lib(Error::ModelFormat(format!("{path:?}: {e}"))))
}

fn dispatch(cmd: Command, conf: &FileConfig) -> CmdResult {
    match cmd {
        Command::Verdict(a) => cmd_verdict(a, conf),
        Command::Boundary(a) => cmd_boundary(a, conf),
        Command::Depolarize(a) => cmd_depolarize(a, conf),
        Command::Lhs { action: LhsAction::Build(a) } => cmd_lhs_build(a, conf),
        Command::Lhs { action: LhsAction::Verify(a) } => cmd_lhs_verify(a, conf),
        Command::Box(a) => cmd_box(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn pick<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

impl FamilyArgs {
    fn build(&self) -> std::result::Result<EllipseFamily, Fail> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Fail::Usage(format!("--family {} requires --{name}", self.family)))
        };
        match self.family.as_str() {
            "werner" => Ok(EllipseFamily::werner(need(self.eta, "eta")?)?),
            "pure-mixed" => Ok(EllipseFamily::pure_mixed(
                need(self.alpha, "alpha")?,
                need(self.eta, "eta")?,
            )?),
            "depolarized" => Ok(EllipseFamily::depolarized(
                need(self.alpha, "alpha")?,
                need(self.eta_a, "eta_a")?,
                need(self.eta_b, "eta_b")?,
            )?),
            "state" => {
                let path = self.state.as_ref().ok_or_else(|| {
                    Fail::Usage("--family state requires --state FILE".into())
                })?;
                let text = std::fs::read_to_string(path).map_err(Error::from)?;
                let state = TwoQubitRealState::parse_text(&text)?;
                Ok(EllipseFamily::from_state(state))
            }
            other => Err(Fail::Usage(format!(
                "unknown family {other:?}; expected werner, pure-mixed, depolarized, or state"
            ))),
        }
    }
}

fn parse_triple(s: &str, what: &str) -> std::result::Result<BlochOp, Fail> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Fail::Usage(format!("{what} must be three numbers \"n,r1,r3\", got {s:?}")))?;
    if parts.len() != 3 {
        return Err(Fail::Usage(format!(
            "{what} must be three numbers \"n,r1,r3\", got {s:?}"
        )));
    }
    Ok(BlochOp::new(parts[0], parts[1], parts[2]))
}

fn write_out(path: Option<&Path>, content: &str) -> std::result::Result<(), Fail> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| Fail::Lib(e.into())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct QuadOut {
    panels: usize,
    tol: f64,
}

#[derive(Serialize)]
struct CertificateOut {
    family: String,
    params: BTreeMap<String, f64>,
    #[serde(rename = "Y")]
    y: [f64; 3],
    kind: String,
    min_eig: f64,
    max_eig: f64,
    quadrature: QuadOut,
}

fn certificate_json(
    fam: &EllipseFamily,
    y: BlochOp,
    kind: &str,
    v: Option<&Verdict>,
    tol: f64,
) -> String {
    let cert = CertificateOut {
        family: fam.name().to_string(),
        params: fam.params().iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        y: [y.n, y.r1, y.r3],
        kind: kind.to_string(),
        min_eig: v.map_or(0.0, |v| v.min_eig),
        max_eig: v.map_or(0.0, |v| v.max_eig),
        quadrature: QuadOut { panels: v.map_or(0, |v| v.panels), tol },
    };
    let mut out = serde_json::to_string_pretty(&cert).expect("plain data serializes");
    out.push('\n');
    out
}

/// Product-state members sit outside the criterion's tilt precondition but
/// are separable outright.
fn trivially_separable(fam: &EllipseFamily) -> bool {
    if fam.name() != "pure-mixed" && fam.name() != "depolarized" {
        return false;
    }
    fam.params()
        .iter()
        .find(|(k, _)| *k == "alpha")
        .is_some_and(|&(_, a)| a < 1e-9 || a > std::f64::consts::FRAC_PI_2 - 1e-9)
}

fn cmd_verdict(a: VerdictArgs, conf: &FileConfig) -> CmdResult {
    let fam = a.family.build()?;
    let tol = pick(a.quad_tol, conf.quad_tol, 1e-10);
    let quad = Quadrature::with_tol(tol);

    if a.y.is_none() && trivially_separable(&fam) {
        eprintln!("note: alpha pins a product state; unsteerable without a certificate search");
        let json = certificate_json(&fam, BlochOp::IDENTITY, "unsteerable", None, tol);
        write_out(a.out.as_deref(), &json)?;
        return Ok(0);
    }

    if let Some(spec) = &a.y {
        let y = parse_triple(spec, "--y")?;
        let v = verdict_with(&fam, y, quad)?;
        let json = certificate_json(&fam, y, v.kind.as_str(), Some(&v), tol);
        write_out(a.out.as_deref(), &json)?;
        return Ok(match v.kind {
            VerdictKind::Unsteerable => 0,
            VerdictKind::Steerable => 1,
            VerdictKind::Inconclusive => 2,
        });
    }

    let cfg = SearchConfig::default();
    let (floor, y_floor) = search_unsteerable(&fam, &cfg, quad);
    if floor > TOL_PSD {
        let v = verdict_with(&fam, y_floor, quad)?;
        let json = certificate_json(&fam, y_floor, v.kind.as_str(), Some(&v), tol);
        write_out(a.out.as_deref(), &json)?;
        return Ok(0);
    }
    let (ceil, y_ceil) = search_steerable(&fam, &cfg, quad);
    if ceil > TOL_PSD {
        let v = verdict_with(&fam, y_ceil, quad)?;
        let json = certificate_json(&fam, y_ceil, v.kind.as_str(), Some(&v), tol);
        write_out(a.out.as_deref(), &json)?;
        return Ok(1);
    }
    // Nothing certified; report the identity evaluation when it runs.
    let v = verdict_with(&fam, BlochOp::IDENTITY, quad).ok();
    if v.is_none() {
        eprintln!("note: criterion preconditions fail for this member; no verdict");
    }
    let json = certificate_json(&fam, BlochOp::IDENTITY, "inconclusive", v.as_ref(), tol);
    write_out(a.out.as_deref(), &json)?;
    Ok(2)
}

fn cmd_boundary(a: BoundaryArgs, conf: &FileConfig) -> CmdResult {
    let samples = pick(a.samples, conf.samples, 33);
    let quad = Quadrature::with_tol(pick(a.quad_tol, conf.quad_tol, 1e-10));
    let cfg = SearchConfig {
        bisect_iters: pick(a.bisect_iters, conf.bisect_iters, 40),
        ..SearchConfig::default()
    };
    let alphas = default_alpha_grid(samples);
    let rows = boundary_curve(&alphas, &cfg, quad)?;
    write_out(a.out.as_deref(), &boundary_csv(&rows))?;
    Ok(0)
}

fn cmd_depolarize(a: DepolarizeArgs, conf: &FileConfig) -> CmdResult {
    if !(0.0..=1.0).contains(&a.eta_a) {
        return Err(Fail::Usage(format!("--eta-a {} is outside [0, 1]", a.eta_a)));
    }
    let samples = pick(a.samples, conf.samples, 33);
    let quad = Quadrature::with_tol(pick(a.quad_tol, conf.quad_tol, 1e-10));
    let cfg = SearchConfig {
        bisect_iters: pick(a.bisect_iters, conf.bisect_iters, 40),
        ..SearchConfig::default()
    };
    let alphas = default_alpha_grid(samples);
    let rows = depolarizing_region(&alphas, a.eta_a, &cfg, quad)?;
    write_out(a.out.as_deref(), &boundary_csv(&rows))?;
    Ok(0)
}

fn cmd_lhs_build(a: LhsBuildArgs, conf: &FileConfig) -> CmdResult {
    let fam = a.family.build()?;
    let grid_n = pick(a.grid_n, conf.grid_n, DEFAULT_GRID_N);
    let tol = pick(a.quad_tol, conf.quad_tol, 1e-10);
    let quad = Quadrature::with_tol(tol);

    let model = match construct_case1(&fam, quad, grid_n) {
        Ok(m) => m,
        Err(Error::PreconditionFailed(_)) => {
            // The flat construction needs positivity at the identity; hunt
            // for a conjugation that certifies it, build there, map back.
            let cfg = SearchConfig::default();
            let (floor, y) = search_unsteerable(&fam, &cfg, quad);
            if floor <= TOL_PSD {
                eprintln!(
                    "error: no conjugation certifies this member unsteerable; \
                     cannot build a model"
                );
                return Ok(3);
            }
            let conj = EllipseFamily::from_state(fam.to_state()?.conjugate_b(y)?);
            match construct_case1(&conj, quad, grid_n) {
                Ok(m) => transform_model(&m, y)?,
                Err(Error::PreconditionFailed(msg)) => {
                    eprintln!("error: {msg}");
                    return Ok(3);
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(e) => return Err(e.into()),
    };

    let thetas: Vec<f64> = (0..256).map(|k| TAU * k as f64 / 256.0).collect();
    let err = verify_model(&model, &fam, &thetas);
    std::fs::write(&a.out, model.to_json()).map_err(Error::from)?;
    println!(
        "wrote {}: grid_n = {}, max reconstruction error = {:.6e}",
        a.out.display(),
        model.grid_n(),
        err
    );
    Ok(0)
}

fn cmd_lhs_verify(a: LhsVerifyArgs, conf: &FileConfig) -> CmdResult {
    let fam = a.family.build()?;
    let n = pick(a.thetas, conf.thetas, 256).max(1);
    let text = std::fs::read_to_string(&a.model).map_err(Error::from)?;
    let model = KeyringModel::from_json(&text)?;
    let thetas: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let err = verify_model(&model, &fam, &thetas);
    println!("max reconstruction error = {err:.6e} over {n} angles (grid_n = {})",
        model.grid_n());
    Ok(0)
}

#[derive(Serialize)]
struct TwoStepOut {
    x: f64,
    y: f64,
    q: f64,
    fx: f64,
    fy: f64,
}

#[derive(Serialize)]
struct BoxOut {
    contains: bool,
    two_step: Option<TwoStepOut>,
}

fn cmd_box(a: BoxArgs) -> CmdResult {
    let z = parse_triple(&a.z, "--z")?;
    let text = std::fs::read_to_string(&a.measure).map_err(Error::from)?;
    let mu = DiscreteMeasure::from_csv(&text)?;
    let contains = mu.box_contains(z);
    let two_step = if contains {
        match two_step_decompose(&mu, z) {
            Ok(g) => Some(TwoStepOut {
                x: g.x.phi(),
                y: g.y.phi(),
                q: g.q,
                fx: g.fx,
                fy: g.fy,
            }),
            Err(Error::NotInBox) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let out = BoxOut { contains, two_step };
    let mut json = serde_json::to_string_pretty(&out).expect("plain data serializes");
    json.push('\n');
    print!("{json}");
    Ok(if contains { 0 } else { 1 })
}

struct SweepRow {
    alpha: f64,
    eta_lower: f64,
    eta_upper: f64,
    valid: bool,
}

fn parse_sweep_csv(text: &str) -> std::result::Result<Vec<SweepRow>, Fail> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "alpha,eta_lower,eta_upper,valid,Y_n,Y_r1,Y_r3" => {}
        other => {
            return Err(Fail::Lib(Error::ModelFormat(format!(
                "unexpected sweep header {:?}",
                other.unwrap_or_default()
            ))))
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.trim().split(',').collect();
        let parsed = (|| {
            if cells.len() != 7 {
                return None;
            }
            Some(SweepRow {
                alpha: cells[0].parse().ok()?,
                eta_lower: cells[1].parse().ok()?,
                eta_upper: cells[2].parse().ok()?,
                valid: match cells[3] {
                    "true" => true,
                    "false" => false,
                    _ => return None,
                },
            })
        })();
        match parsed {
            Some(r) => rows.push(r),
            None => {
                return Err(Fail::Lib(Error::ModelFormat(format!("bad sweep row {line:?}"))))
            }
        }
    }
    if rows.is_empty() {
        return Err(Fail::Lib(Error::ModelFormat("sweep has no rows".into())));
    }
    Ok(rows)
}

fn cmd_plot(a: PlotArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.input).map_err(Error::from)?;
    let rows = parse_sweep_csv(&text)?;
    std::fs::write(&a.out, render_svg(&rows)).map_err(Error::from)?;
    Ok(0)
}

/// Hand-rolled 800x600 chart: certified bounds as polylines, plus the tilt
/// validity line when any row came back uncertified.
fn render_svg(rows: &[SweepRow]) -> String {
    let (x0, y0, x1, y1) = (70.0f64, 20.0f64, 780.0f64, 550.0f64);
    let amax = rows.iter().map(|r| r.alpha).fold(f64::EPSILON, f64::max);
    let px = |alpha: f64| x0 + (alpha / amax) * (x1 - x0);
    let py = |eta: f64| y1 - eta.clamp(0.0, 1.0) * (y1 - y0);
    let polyline = |pts: &[(f64, f64)], style: &str| {
        let coords: Vec<String> =
            pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        format!(
            "  <polyline fill=\"none\" {} points=\"{}\"/>\n",
            style,
            coords.join(" ")
        )
    };

    let mut s = String::new();
    s.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" \
         viewBox=\"0 0 800 600\" font-family=\"sans-serif\" font-size=\"13\">\n",
    );
    s.push_str("  <rect width=\"800\" height=\"600\" fill=\"white\"/>\n");

    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (gx, gy) = (x0 + f * (x1 - x0), y1 - f * (y1 - y0));
        s.push_str(&format!(
            "  <line x1=\"{gx:.2}\" y1=\"{y0:.2}\" x2=\"{gx:.2}\" y2=\"{y1:.2}\" \
             stroke=\"#ddd\"/>\n"
        ));
        s.push_str(&format!(
            "  <line x1=\"{x0:.2}\" y1=\"{gy:.2}\" x2=\"{x1:.2}\" y2=\"{gy:.2}\" \
             stroke=\"#ddd\"/>\n"
        ));
        s.push_str(&format!(
            "  <text x=\"{gx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.3}</text>\n",
            y1 + 20.0,
            f * amax
        ));
        s.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.2}</text>\n",
            x0 - 8.0,
            gy + 4.0,
            f
        ));
    }
    s.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         \x20 <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    s.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"585\" text-anchor=\"middle\">alpha</text>\n",
        (x0 + x1) / 2.0
    ));
    s.push_str("  <text x=\"18\" y=\"285\" transform=\"rotate(-90 18 285)\" \
                text-anchor=\"middle\">eta</text>\n");

    let lower: Vec<(f64, f64)> = rows.iter().map(|r| (r.alpha, r.eta_lower)).collect();
    let upper: Vec<(f64, f64)> = rows.iter().map(|r| (r.alpha, r.eta_upper)).collect();
    s.push_str(&polyline(&lower, "stroke=\"#1f77b4\" stroke-width=\"2\""));
    s.push_str(&polyline(&upper, "stroke=\"#d62728\" stroke-width=\"2\""));

    let any_invalid = rows.iter().any(|r| !r.valid);
    if any_invalid {
        let tilt: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.alpha, (2.0 * r.alpha).cos().clamp(0.0, 1.0)))
            .collect();
        s.push_str(&polyline(
            &tilt,
            "stroke=\"#888\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"",
        ));
    }

    let legend_y = y0 + 12.0;
    s.push_str(&format!(
        "  <line x1=\"600\" y1=\"{legend_y:.2}\" x2=\"630\" y2=\"{legend_y:.2}\" \
         stroke=\"#1f77b4\" stroke-width=\"2\"/>\n\
         \x20 <text x=\"636\" y=\"{:.2}\">certified unsteerable</text>\n",
        legend_y + 4.0
    ));
    s.push_str(&format!(
        "  <line x1=\"600\" y1=\"{:.2}\" x2=\"630\" y2=\"{:.2}\" \
         stroke=\"#d62728\" stroke-width=\"2\"/>\n\
         \x20 <text x=\"636\" y=\"{:.2}\">certified steerable</text>\n",
        legend_y + 20.0,
        legend_y + 20.0,
        legend_y + 24.0
    ));
    if any_invalid {
        s.push_str(&format!(
            "  <line x1=\"600\" y1=\"{:.2}\" x2=\"630\" y2=\"{:.2}\" stroke=\"#888\" \
             stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n\
             \x20 <text x=\"636\" y=\"{:.2}\">tilt validity line</text>\n",
            legend_y + 40.0,
            legend_y + 40.0,
            legend_y + 44.0
        ));
    }
    s.push_str("</svg>\n");
    s
}
