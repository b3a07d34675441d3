//! Switched linear systems `dx/dt = A_σ x`, their Bernstein-blended
//! counterpart `dx/dt = Σ_i w_i A_i x` and fixed-step RK4 simulation of both.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::bernstein::{window_interpolant, BernsteinError, BernsteinSeries, SignInterpolant};

/// Trajectories whose sup norm exceeds this are reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("need at least 2 subsystems, got {0}")]
    TooFewSubsystems(usize),
    #[error("subsystem {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("state has dimension {got}, expected {expected}")]
    StateDimension { expected: usize, got: usize },
    #[error("state-sign rules need exactly 2 subsystems of dimension >= 2")]
    SignRuleShape,
    #[error("time-pulse rule lists windows for {got} subsystems, expected {expected}")]
    WindowCount { expected: usize, got: usize },
    #[error("windows of subsystems {a} and {b} overlap")]
    OverlappingWindows { a: usize, b: usize },
    #[error("no subsystem is active at t = {0}")]
    NoActiveSubsystem(f64),
    #[error("blended simulation needs a Bernstein rule, found a crisp one")]
    CrispRule,
    #[error("time-pulse rules are only defined on [0, 1]; t_end = {0}")]
    HorizonTooLong(f64),
    #[error("invalid simulation parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("state became non-finite after t = {last_valid_time}")]
    NonFiniteState { last_valid_time: f64 },
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
}

/// One linear mode `dx/dt = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSubsystem {
    a: DMatrix<f64>,
}

impl LinearSubsystem {
    pub fn new(a: DMatrix<f64>) -> Result<Self, SystemError> {
        if !a.is_square() {
            return Err(SystemError::NotSquare { rows: a.nrows(), cols: a.ncols() });
        }
        for row in 0..a.nrows() {
            for col in 0..a.ncols() {
                if !a[(row, col)].is_finite() {
                    return Err(SystemError::NonFiniteEntry { row, col });
                }
            }
        }
        Ok(Self { a })
    }

    /// Row-major construction, mainly for tests and presets.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, SystemError> {
        let n = rows.len();
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SystemError::NotSquare { rows: n, cols });
        }
        Self::new(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }
}

/// How the active subsystem is chosen.
///
/// `StateSign`/`CrispStateSign` switch on the sign of `δ·x1·x2` between
/// exactly two subsystems. `TimePulse`/`CrispTimePulse` activate subsystem `i`
/// on the union of `windows[i]`, all inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum SwitchingRule {
    StateSign { delta: f64, degree: u32, composed: bool },
    TimePulse { windows: Vec<Vec<(f64, f64)>>, degree: u32 },
    CrispStateSign { delta: f64 },
    CrispTimePulse { windows: Vec<Vec<(f64, f64)>> },
}

impl SwitchingRule {
    pub fn is_blended(&self) -> bool {
        matches!(self, Self::StateSign { .. } | Self::TimePulse { .. })
    }

    pub fn is_time_based(&self) -> bool {
        matches!(self, Self::TimePulse { .. } | Self::CrispTimePulse { .. })
    }

    /// The crisp rule underlying this one.
    pub fn crisp(&self) -> SwitchingRule {
        match self {
            Self::StateSign { delta, .. } | Self::CrispStateSign { delta } => Self::CrispStateSign { delta: *delta },
            Self::TimePulse { windows, .. } | Self::CrispTimePulse { windows } => {
                Self::CrispTimePulse { windows: windows.clone() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Blender {
    Sign(SignInterpolant),
    Pulse(Vec<BernsteinSeries>),
}

/// A family of linear subsystems of common dimension plus a switching rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    subsystems: Vec<LinearSubsystem>,
    rule: SwitchingRule,
    blender: Option<Blender>,
}

impl SwitchedSystem {
    pub fn new(subsystems: Vec<LinearSubsystem>, rule: SwitchingRule) -> Result<Self, SystemError> {
        if subsystems.len() < 2 {
            return Err(SystemError::TooFewSubsystems(subsystems.len()));
        }
        let n = subsystems[0].dim();
        for (index, s) in subsystems.iter().enumerate() {
            if s.dim() != n {
                return Err(SystemError::DimensionMismatch { index, expected: n, got: s.dim() });
            }
        }
        match &rule {
            SwitchingRule::StateSign { delta, .. } | SwitchingRule::CrispStateSign { delta } => {
                if subsystems.len() != 2 || n < 2 {
                    return Err(SystemError::SignRuleShape);
                }
                if !(delta.is_finite() && *delta > 0.0) {
                    return Err(BernsteinError::InvalidDelta(*delta).into());
                }
            }
            SwitchingRule::TimePulse { windows, .. } | SwitchingRule::CrispTimePulse { windows } => {
                validate_windows(windows, subsystems.len())?;
            }
        }
        let blender = match &rule {
            SwitchingRule::StateSign { delta, degree, composed } => {
                let depth = if *composed { 2 } else { 1 };
                Some(Blender::Sign(SignInterpolant::new(*degree, *delta, depth)?))
            }
            SwitchingRule::TimePulse { windows, degree } => {
                Some(Blender::Pulse(windows.iter().map(|w| window_interpolant(*degree, w)).collect::<Result<_, _>>()?))
            }
            _ => None,
        };
        Ok(Self { subsystems, rule, blender })
    }

    pub fn subsystems(&self) -> &[LinearSubsystem] {
        &self.subsystems
    }

    pub fn rule(&self) -> &SwitchingRule {
        &self.rule
    }

    pub fn dim(&self) -> usize {
        self.subsystems[0].dim()
    }

    /// The state-sign interpolant, if the rule is a blended state-sign rule.
    pub fn sign_interpolant(&self) -> Option<&SignInterpolant> {
        match &self.blender {
            Some(Blender::Sign(s)) => Some(s),
            _ => None,
        }
    }

    fn check_state(&self, x: &DVector<f64>) -> Result<(), SystemError> {
        if x.len() != self.dim() {
            return Err(SystemError::StateDimension { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Index of the subsystem selected by the crisp view of the rule. A sign
    /// tie (`δ·x1·x2 = 0`) selects subsystem 0; overlapping window edges
    /// select the lowest index.
    pub fn active_index(&self, t: f64, x: &DVector<f64>) -> Result<usize, SystemError> {
        self.check_state(x)?;
        match self.rule.crisp() {
            SwitchingRule::CrispStateSign { delta } => Ok(if delta * x[0] * x[1] >= 0.0 { 0 } else { 1 }),
            SwitchingRule::CrispTimePulse { windows } => windows
                .iter()
                .position(|ws| ws.iter().any(|&(a, b)| a <= t && t <= b))
                .ok_or(SystemError::NoActiveSubsystem(t)),
            _ => unreachable!("crisp() returns a crisp rule"),
        }
    }

    /// `A_active · x` under the crisp rule.
    pub fn rhs_standard(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>, SystemError> {
        let i = self.active_index(t, x)?;
        Ok(self.subsystems[i].apply(x))
    }

    /// Convex blend weights; each lies in `[0, 1]` and the last one is
    /// `1 - Σ others`, so they sum to one.
    pub fn blend_weights(&self, t: f64, x: &DVector<f64>) -> Result<Vec<f64>, SystemError> {
        self.check_state(x)?;
        match &self.blender {
            Some(Blender::Sign(s)) => Ok(s.weights(x[0], x[1]).to_vec()),
            Some(Blender::Pulse(pulses)) => {
                let raw: Vec<f64> = pulses.iter().map(|p| p.eval(t)).collect();
                let total: f64 = raw.iter().sum();
                let k = raw.len();
                let mut w: Vec<f64> = if total > 0.0 {
                    raw.iter().map(|v| v / total).collect()
                } else {
                    // No window has a sample near t; fall back to an even split.
                    vec![1.0 / k as f64; k]
                };
                let head: f64 = w[..k - 1].iter().sum();
                w[k - 1] = (1.0 - head).max(0.0);
                Ok(w)
            }
            None => Err(SystemError::CrispRule),
        }
    }

    /// One-hot weights of the crisp rule.
    pub fn crisp_weights(&self, t: f64, x: &DVector<f64>) -> Result<Vec<f64>, SystemError> {
        let i = self.active_index(t, x)?;
        let mut w = vec![0.0; self.subsystems.len()];
        w[i] = 1.0;
        Ok(w)
    }

    /// `Σ_i w_i(t, x) · A_i x`.
    pub fn rhs_bswitched(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>, SystemError> {
        let w = self.blend_weights(t, x)?;
        Ok(self.blend_with(&w, x))
    }

    /// `Σ_i w_i · A_i x` for explicit weights.
    pub fn blend_with(&self, weights: &[f64], x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.len());
        for (s, &w) in self.subsystems.iter().zip(weights) {
            if w != 0.0 {
                out += s.apply(x) * w;
            }
        }
        out
    }

    pub fn rhs(&self, mode: Mode, t: f64, x: &DVector<f64>) -> Result<DVector<f64>, SystemError> {
        match mode {
            Mode::Standard => self.rhs_standard(t, x),
            Mode::Blended => self.rhs_bswitched(t, x),
        }
    }

    fn weights(&self, mode: Mode, t: f64, x: &DVector<f64>) -> Result<Vec<f64>, SystemError> {
        match mode {
            Mode::Standard => self.crisp_weights(t, x),
            Mode::Blended => self.blend_weights(t, x),
        }
    }
}

fn validate_windows(windows: &[Vec<(f64, f64)>], count: usize) -> Result<(), SystemError> {
    if windows.len() != count {
        return Err(SystemError::WindowCount { expected: count, got: windows.len() });
    }
    for ws in windows {
        for &(t0, t1) in ws {
            if !(t0.is_finite() && t1.is_finite() && 0.0 <= t0 && t0 < t1 && t1 <= 1.0) {
                return Err(BernsteinError::InvalidWindow { t0, t1 }.into());
            }
        }
    }
    for a in 0..windows.len() {
        for b in a + 1..windows.len() {
            let clash = windows[a].iter().any(|&(a0, a1)| windows[b].iter().any(|&(b0, b1)| a0 < b1 && b0 < a1));
            if clash {
                return Err(SystemError::OverlappingWindows { a, b });
            }
        }
    }
    Ok(())
}

/// Which right-hand side a simulation integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Crisp switching between subsystems.
    Standard,
    /// Bernstein-blended single polynomial system.
    Blended,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Blended => "blended",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimStatus {
    Completed,
    /// `‖x‖∞` exceeded [`DIVERGENCE_THRESHOLD`] at `time`; integration stopped.
    DivergenceDetected {
        time: f64,
    },
}

impl SimStatus {
    pub fn diverged(&self) -> bool {
        matches!(self, SimStatus::DivergenceDetected { .. })
    }
}

/// Recorded states and weights, one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mode: Mode,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub status: SimStatus,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds the initial time")
    }
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Number of steps and nominal step for `[0, t_end]`. A ratio within 1e-9 of
/// an integer is treated as exact so that `t_end = 10, dt = 1e-3` gives 10 000
/// equal steps; otherwise the last step is shortened to land on `t_end`.
fn step_plan(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Classical fixed-step RK4 from `t = 0` to `t_end`.
///
/// The switching rule is re-evaluated at every stage. Integration halts early
/// with [`SimStatus::DivergenceDetected`] once `‖x‖∞ > 1e6`.
pub fn simulate(sys: &SwitchedSystem, x0: &[f64], t_end: f64, dt: f64, mode: Mode) -> Result<Trajectory, SystemError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SystemError::InvalidParameter("dt must be finite and positive"));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(SystemError::InvalidParameter("t_end must be finite and positive"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SystemError::InvalidParameter("x0 must be finite"));
    }
    if mode == Mode::Blended && !sys.rule().is_blended() {
        return Err(SystemError::CrispRule);
    }
    if sys.rule().is_time_based() && t_end > 1.0 {
        return Err(SystemError::HorizonTooLong(t_end));
    }
    let mut x = DVector::from_column_slice(x0);
    sys.check_state(&x)?;

    let steps = step_plan(t_end, dt);
    let mut traj = Trajectory {
        mode,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        weights: Vec::with_capacity(steps + 1),
        status: SimStatus::Completed,
    };
    traj.times.push(0.0);
    traj.states.push(x.as_slice().to_vec());
    traj.weights.push(sys.weights(mode, 0.0, &x)?);

    let mut t = 0.0;
    for i in 1..=steps {
        let t_next = if i == steps { t_end } else { (i as f64 * dt).min(t_end) };
        let h = t_next - t;
        let k1 = sys.rhs(mode, t, &x)?;
        let k2 = sys.rhs(mode, t + 0.5 * h, &(&x + &k1 * (0.5 * h)))?;
        let k3 = sys.rhs(mode, t + 0.5 * h, &(&x + &k2 * (0.5 * h)))?;
        let k4 = sys.rhs(mode, t_next, &(&x + &k3 * h))?;
        let next = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(SystemError::NonFiniteState { last_valid_time: t });
        }
        x = next;
        t = t_next;
        traj.times.push(t);
        traj.states.push(x.as_slice().to_vec());
        traj.weights.push(sys.weights(mode, t, &x)?);
        if sup_norm(x.as_slice()) > DIVERGENCE_THRESHOLD {
            traj.status = SimStatus::DivergenceDetected { time: t };
            break;
        }
    }
    Ok(traj)
}

/// Standard and blended runs from the same initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub standard: Trajectory,
    pub blended: Trajectory,
    /// Largest `‖x_std(t) − x_blend(t)‖∞` over the times both runs reached.
    pub sup_norm_gap: f64,
}

pub fn compare(sys: &SwitchedSystem, x0: &[f64], t_end: f64, dt: f64) -> Result<Comparison, SystemError> {
    let standard = simulate(sys, x0, t_end, dt, Mode::Standard)?;
    let blended = simulate(sys, x0, t_end, dt, Mode::Blended)?;
    let sup_norm_gap = standard
        .states
        .iter()
        .zip(&blended.states)
        .map(|(a, b)| a.iter().zip(b).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs())))
        .fold(0.0, f64::max);
    Ok(Comparison { standard, blended, sup_norm_gap })
}

/// Built-in systems: the stable and unstable two-mode examples and the
/// single-matrix stable system (duplicated into two identical modes).
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 3] = ["example1", "example2", "basic"];

    /// Default blend parameters for the presets.
    pub const DELTA: f64 = 10.0;
    pub const DEGREE: u32 = 100;

    pub fn example1_matrices() -> [[[f64; 2]; 2]; 2] {
        [[[-1.0, 1.0], [-1.0, -3.0]], [[0.01, 3.0], [-1.0, -4.0]]]
    }

    pub fn example2_matrices() -> [[[f64; 2]; 2]; 2] {
        [[[-1.0, 10.0], [-100.0, -1.0]], [[-1.0, 100.0], [-10.0, -1.0]]]
    }

    pub fn basic_matrix() -> [[f64; 2]; 2] {
        [[-1.0, 2.0], [-3.0, -4.0]]
    }

    pub fn matrices(name: &str) -> Option<Vec<[[f64; 2]; 2]>> {
        match name {
            "example1" => Some(example1_matrices().to_vec()),
            "example2" => Some(example2_matrices().to_vec()),
            "basic" => Some(vec![basic_matrix(), basic_matrix()]),
            _ => None,
        }
    }

    fn subsystem(m: &[[f64; 2]; 2]) -> LinearSubsystem {
        LinearSubsystem::from_rows(&[&m[0], &m[1]]).expect("preset matrices are square and finite")
    }

    /// The named preset with the given state-sign rule.
    pub fn with_rule(name: &str, rule: SwitchingRule) -> Option<Result<SwitchedSystem, SystemError>> {
        let subs = matrices(name)?.iter().map(subsystem).collect();
        Some(SwitchedSystem::new(subs, rule))
    }

    pub fn preset(name: &str) -> Option<SwitchedSystem> {
        let rule = SwitchingRule::StateSign { delta: DELTA, degree: DEGREE, composed: false };
        with_rule(name, rule).map(|r| r.expect("preset rule is valid"))
    }
}
