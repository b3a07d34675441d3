//! Command-line front end for `bswitch-core`.
//!
//! Every subcommand writes its data (CSV, polynomial text, certificate) either
//! to `--out`/`--cert` or to stdout. Diagnostics and the non-deterministic
//! timing line go to stderr.
//!
//! Exit codes: 0 success, 1 verification Falsified or Inconclusive, 2 usage or
//! input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use bswitch_core::bernstein::{pulse_interpolant, SignInterpolant};
use bswitch_core::config::{parse_system, render_system};
use bswitch_core::lyapunov::{
    lie_derivative, quadratic_candidate, state_vars, vector_field_bswitched, vector_field_from_linear,
    LyapunovCandidate,
};
use bswitch_core::switched::{compare, presets, simulate, Mode, SimStatus, SwitchedSystem, SwitchingRule, Trajectory};
use bswitch_core::verifier::{verify_ineq, BoxDomain, Status, VerifyConfig};
use bswitch_core::MultiPoly;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNPROVEN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bswitch", version, about = "Bernstein-blended switched linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a switching interpolant as CSV `x,sigma`.
    Interpolate(InterpolateArgs),
    /// Integrate a switched system with RK4 and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Run standard and blended simulations and report their gap.
    Compare(CompareArgs),
    /// Print the Lie derivative of a Lyapunov candidate along a polynomial field.
    Lyapunov(LyapunovArgs),
    /// Certify `f(x) < eps` on a box.
    Verify(VerifyArgs),
    /// Print the built-in systems in config-file format.
    PresetList,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    /// Sign interpolant; `x` is the product x1*x2 and sigma the weight at delta*x.
    Sign,
    /// Time pulse on [0, 1]; `x` is time.
    Pulse,
}

#[derive(Debug, Args)]
struct InterpolateArgs {
    #[arg(long, value_enum, default_value = "sign")]
    kind: Kind,
    #[arg(long, default_value_t = 100)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Number of chained step stages (sign kind).
    #[arg(long, default_value_t = 1)]
    depth: u32,
    /// Sampling range; defaults to [-1, 1] for sign and [0, 1] for pulse.
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long, default_value_t = 0.2)]
    t0: f64,
    #[arg(long, default_value_t = 0.4)]
    t1: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// Built-in system name (see `preset-list`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// System description file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides for the state-sign rule.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    composed: Option<bool>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Initial state, comma separated.
    #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
    x0: String,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Standard,
    Blended,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value = "blended")]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FieldKind {
    /// `f = A x` for one subsystem.
    Linear,
    /// The blended state-sign field, expanded as a polynomial.
    Bswitched,
}

#[derive(Debug, Args)]
struct LyapunovArgs {
    /// System matrix as rows separated by `;`, e.g. "-1 2; -3 -4".
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["preset", "config"])]
    matrix: Option<String>,
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, value_enum, default_value = "linear")]
    field: FieldKind,
    /// Subsystem used by the linear field (1-based).
    #[arg(long, default_value_t = 1)]
    subsystem: usize,
    /// Symmetric matrix P of V = x^T P x; defaults to the identity.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "v")]
    p: Option<String>,
    /// Candidate polynomial in x1..xn.
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Polynomial text.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "poly_file", conflicts_with = "poly_file")]
    poly: Option<String>,
    #[arg(long)]
    poly_file: Option<PathBuf>,
    /// `var:lo:hi`, once per variable.
    #[arg(long = "bound", allow_hyphen_values = true, required = true)]
    bounds: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: f64,
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long)]
    max_boxes: Option<u64>,
    #[arg(long)]
    slack: Option<f64>,
    /// Certificate output file.
    #[arg(long)]
    cert: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{rendered}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Interpolate(a) => interpolate(&a, stdout),
        Command::Simulate(a) => simulate_cmd(&a, stdout, stderr),
        Command::Compare(a) => compare_cmd(&a, stdout, stderr),
        Command::Lyapunov(a) => lyapunov_cmd(&a, stdout),
        Command::Verify(a) => verify_cmd(&a, stdout, stderr),
        Command::PresetList => preset_list(stdout),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}

type CmdResult = Result<i32, String>;

fn emit(out: Option<&Path>, body: &[u8], stdout: &mut dyn Write) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(body).map_err(|e| e.to_string()),
    }
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for row in rows {
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    w.into_inner().map_err(|e| e.to_string())
}

/// Shortest round-trip rendering, switching to exponent form for very small
/// or very large magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn check_finite(name: &str, v: f64) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be finite"))
    }
}

fn interpolate(a: &InterpolateArgs, stdout: &mut dyn Write) -> CmdResult {
    if a.points < 2 {
        return Err("--points must be at least 2".into());
    }
    let (default_lo, default_hi) = match a.kind {
        Kind::Sign => (-1.0, 1.0),
        Kind::Pulse => (0.0, 1.0),
    };
    let lo = check_finite("--lo", a.lo.unwrap_or(default_lo))?;
    let hi = check_finite("--hi", a.hi.unwrap_or(default_hi))?;
    if lo >= hi {
        return Err("--lo must be below --hi".into());
    }
    let signal: Box<dyn Fn(f64) -> f64> = match a.kind {
        Kind::Sign => {
            let s = SignInterpolant::new(a.degree, a.delta, a.depth).map_err(|e| e.to_string())?;
            Box::new(move |x| s.weight_at(s.delta() * x))
        }
        Kind::Pulse => {
            let s = pulse_interpolant(a.degree, a.t0, a.t1).map_err(|e| e.to_string())?;
            Box::new(move |x| s.eval(x))
        }
    };
    let last = a.points - 1;
    let rows = (0..a.points).map(|i| {
        let x = if i == last { hi } else { lo + (i as f64 / last as f64) * (hi - lo) };
        vec![num(x), num(signal(x))]
    });
    let body = csv_bytes(&["x".into(), "sigma".into()], rows)?;
    emit(a.out.as_deref(), &body, stdout)?;
    Ok(EXIT_OK)
}

fn load_system(a: &SystemArgs) -> Result<SwitchedSystem, String> {
    let sys = match (&a.preset, &a.config) {
        (Some(name), _) => presets::preset(name)
            .ok_or_else(|| format!("unknown preset `{name}` (known: {})", presets::NAMES.join(", ")))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_system(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, None) => return Err("one of --preset or --config is required".into()),
    };
    if a.delta.is_none() && a.degree.is_none() && a.composed.is_none() {
        return Ok(sys);
    }
    let rule = match sys.rule() {
        SwitchingRule::StateSign { delta, degree, composed } => SwitchingRule::StateSign {
            delta: a.delta.unwrap_or(*delta),
            degree: a.degree.unwrap_or(*degree),
            composed: a.composed.unwrap_or(*composed),
        },
        SwitchingRule::CrispStateSign { delta } if a.degree.is_none() && a.composed.is_none() => {
            SwitchingRule::CrispStateSign { delta: a.delta.unwrap_or(*delta) }
        }
        _ => return Err("--delta/--degree/--composed only apply to state-sign rules".into()),
    };
    SwitchedSystem::new(sys.subsystems().to_vec(), rule).map_err(|e| e.to_string())
}

fn parse_x0(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| format!("bad --x0 entry `{}`", t.trim()))?;
            check_finite("--x0", v)
        })
        .collect()
}

fn mode_of(m: ModeArg) -> Mode {
    match m {
        ModeArg::Standard => Mode::Standard,
        ModeArg::Blended => Mode::Blended,
    }
}

fn trajectory_header(n: usize, k: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x{i}")));
    h.extend((1..=k).map(|i| format!("sigma{i}")));
    h.push("mode".into());
    h
}

fn trajectory_rows(traj: &Trajectory) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.times.iter().zip(&traj.states).zip(&traj.weights).map(move |((t, x), w)| {
        let mut row = vec![num(*t)];
        row.extend(x.iter().copied().map(num));
        row.extend(w.iter().copied().map(num));
        row.push(traj.mode.as_str().to_string());
        row
    })
}

fn status_line(label: &str, traj: &Trajectory) -> String {
    let norm = bswitch_core::switched::euclidean_norm(traj.final_state());
    match traj.status {
        SimStatus::Completed => {
            format!(
                "{label}_diverged=false\n{label}_final_time={}\n{label}_final_norm={}\n",
                num(traj.final_time()),
                num(norm)
            )
        }
        SimStatus::DivergenceDetected { time } => {
            format!("{label}_diverged=true\n{label}_divergence_time={}\n{label}_final_norm={}\n", num(time), num(norm))
        }
    }
}

fn simulate_cmd(a: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let sys = load_system(&a.system)?;
    let x0 = parse_x0(&a.run.x0)?;
    let traj = simulate(&sys, &x0, a.run.t_end, a.run.dt, mode_of(a.mode)).map_err(|e| e.to_string())?;
    let body = csv_bytes(&trajectory_header(sys.dim(), sys.subsystems().len()), trajectory_rows(&traj))?;
    emit(a.out.as_deref(), &body, stdout)?;
    let _ = write!(stderr, "{}", status_line(traj.mode.as_str(), &traj));
    Ok(EXIT_OK)
}

fn compare_cmd(a: &CompareArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let sys = load_system(&a.system)?;
    let x0 = parse_x0(&a.run.x0)?;
    let cmp = compare(&sys, &x0, a.run.t_end, a.run.dt).map_err(|e| e.to_string())?;
    let rows = trajectory_rows(&cmp.standard).chain(trajectory_rows(&cmp.blended));
    let body = csv_bytes(&trajectory_header(sys.dim(), sys.subsystems().len()), rows)?;
    emit(a.out.as_deref(), &body, stdout)?;
    let summary = format!(
        "sup_norm_gap={}\n{}{}",
        num(cmp.sup_norm_gap),
        status_line("standard", &cmp.standard),
        status_line("blended", &cmp.blended)
    );
    let _ = write!(stderr, "{summary}");
    Ok(EXIT_OK)
}

/// Parses `"a b; c d"` into a square matrix.
fn parse_matrix(text: &str) -> Result<DMatrix<f64>, String> {
    let rows = text
        .split(';')
        .map(|row| {
            row.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| format!("bad matrix entry `{t}`")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix `{text}` is not square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn lyapunov_cmd(a: &LyapunovArgs, stdout: &mut dyn Write) -> CmdResult {
    let field = match (&a.matrix, a.field) {
        (Some(m), FieldKind::Linear) => vector_field_from_linear(&parse_matrix(m)?),
        (Some(_), FieldKind::Bswitched) => return Err("--field bswitched needs --preset or --config".into()),
        (None, FieldKind::Linear) => {
            let sys = load_system(&a.system)?;
            let sub = a
                .subsystem
                .checked_sub(1)
                .and_then(|i| sys.subsystems().get(i))
                .ok_or_else(|| format!("--subsystem must be between 1 and {}", sys.subsystems().len()))?;
            vector_field_from_linear(sub.matrix())
        }
        (None, FieldKind::Bswitched) => vector_field_bswitched(&load_system(&a.system)?),
    }
    .map_err(|e| e.to_string())?;

    let n = field.dim();
    let candidate = match (&a.p, &a.v) {
        (_, Some(v)) => {
            let poly: MultiPoly = v.parse().map_err(|e| format!("--v: {e}"))?;
            LyapunovCandidate::new(poly)
        }
        (Some(p), None) => quadratic_candidate(&parse_matrix(p)?),
        (None, None) => quadratic_candidate(&DMatrix::identity(n, n)),
    }
    .map_err(|e| e.to_string())?;
    let vars = state_vars(n);
    if candidate.poly().vars().iter().any(|v| !vars.contains(v)) {
        return Err(format!("candidate may only use {}", vars.join(", ")));
    }
    let vdot = lie_derivative(&candidate, &field).map_err(|e| e.to_string())?;
    let text = format!("{vdot}\n");
    match &a.out {
        Some(path) => {
            emit(Some(path), text.as_bytes(), stdout)?;
            stdout.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
        }
        None => emit(None, text.as_bytes(), stdout)?,
    }
    Ok(EXIT_OK)
}

fn parse_bound(text: &str) -> Result<(String, f64, f64), String> {
    let mut parts = text.split(':');
    let (Some(name), Some(lo), Some(hi), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err(format!("bound `{text}` is not var:lo:hi"));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound in `{text}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound in `{text}`"))?;
    Ok((name.trim().to_string(), lo, hi))
}

fn verify_cmd(a: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let text = match (&a.poly, &a.poly_file) {
        (Some(p), _) => p.clone(),
        (None, Some(path)) => {
            std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?
        }
        (None, None) => return Err("one of --poly or --poly-file is required".into()),
    };
    let poly: MultiPoly = text.trim().parse().map_err(|e| format!("polynomial: {e}"))?;
    let bounds = a.bounds.iter().map(|b| parse_bound(b)).collect::<Result<Vec<_>, _>>()?;
    let domain = BoxDomain::new(bounds).map_err(|e| e.to_string())?;
    let defaults = VerifyConfig::default();
    let cfg = VerifyConfig {
        epsilon: a.eps,
        max_depth: a.max_depth.unwrap_or(defaults.max_depth),
        max_boxes: a.max_boxes.unwrap_or(defaults.max_boxes),
        slack_factor: a.slack.unwrap_or(defaults.slack_factor),
    };
    let cert = verify_ineq(&poly, &domain, &cfg).map_err(|e| e.to_string())?;

    if let Some(path) = &a.cert {
        emit(Some(path), cert.to_kv().as_bytes(), stdout)?;
    }
    let summary = match &cert.status {
        Status::Verified => format!("Verified: {} < {} on {}", cert.polynomial, cfg.epsilon, cert.domain),
        Status::Falsified { witness, value } => {
            let w: Vec<String> = witness.iter().copied().map(num).collect();
            format!("Falsified: f({}) = {} >= {}", w.join(","), num(*value), cfg.epsilon)
        }
        Status::Inconclusive { reason } => format!("Inconclusive: {reason}"),
    };
    let _ = writeln!(
        stdout,
        "{summary}\nboxes_processed={} max_depth_reached={}",
        cert.boxes_processed, cert.max_depth_reached
    );
    let _ = writeln!(stderr, "stats (non-deterministic): elapsed_seconds={:.6}", cert.elapsed);
    Ok(if cert.status == Status::Verified { EXIT_OK } else { EXIT_UNPROVEN })
}

fn preset_list(stdout: &mut dyn Write) -> CmdResult {
    let mut text = String::new();
    for (i, name) in presets::NAMES.iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        let sys = presets::preset(name).expect("listed preset exists");
        text.push_str(&format!("# preset: {name}\n"));
        text.push_str(&render_system(&sys));
    }
    stdout.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}
