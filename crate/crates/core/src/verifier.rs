//! Numerical certification of `∀x ∈ D ⇒ f(x) < ε` for a polynomial `f` on a
//! box `D`.
//!
//! Each box is bounded twice, by the natural interval extension of `f` and by
//! the second-order Taylor bound around its centre
//!
//! ```text
//! f(y) + Σ_i |∂f/∂x_i(y)| w_i + ½ Σ_{i,j} max|∂²f/∂x_i∂x_j|(D) w_i w_j
//! ```
//!
//! with `w = max(y − a, b − y)`. Boxes whose bound stays below `ε` pass;
//! otherwise the centre is tested as a counterexample and the box is bisected.
//!
//! Rounding is handled by widening every interval operation outward by
//! `slack_factor · max(|lo|, |hi|)` plus the smallest subnormal. That is sound
//! as long as `slack_factor` exceeds the unit roundoff, but it is not directed
//! rounding and the resulting certificate is not a formal proof.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::poly::MultiPoly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("polynomial variable `{0}` has no bound in the box")]
    MissingBound(String),
    #[error("box names `{0}` twice")]
    DuplicateBound(String),
    #[error("invalid bound for `{name}`: [{lo}, {hi}]")]
    InvalidBound { name: String, lo: f64, hi: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Greater), "interval [{lo}, {hi}] is empty");
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Outward inflation by `slack · mag + MIN_SUBNORMAL`.
    pub fn widen(self, slack: f64) -> Self {
        let pad = slack * self.mag() + f64::from_bits(1);
        Self { lo: self.lo - pad, hi: self.hi + pad }
    }

    /// Integer power; even powers of intervals straddling zero start at zero.
    pub fn powi(self, k: u32) -> Self {
        if k == 0 {
            return Self::point(1.0);
        }
        let a = self.lo.powi(k as i32);
        let b = self.hi.powi(k as i32);
        if k % 2 == 1 || self.lo >= 0.0 {
            Self::new(a, b)
        } else if self.hi <= 0.0 {
            Self::new(b, a)
        } else {
            Self::new(0.0, a.max(b))
        }
    }

    pub fn split(self) -> (Self, Self) {
        let mid = self.midpoint();
        (Self::new(self.lo, mid), Self::new(mid, self.hi))
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::new(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::new(self.lo * c, self.hi * c)
        } else {
            Interval::new(self.hi * c, self.lo * c)
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Axis-aligned box with one named interval per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    names: Vec<String>,
    bounds: Vec<Interval>,
}

impl BoxDomain {
    pub fn new<S: Into<String>>(dims: impl IntoIterator<Item = (S, f64, f64)>) -> Result<Self, VerifyError> {
        let mut names = Vec::new();
        let mut bounds = Vec::new();
        for (name, lo, hi) in dims {
            let name = name.into();
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(VerifyError::InvalidBound { name, lo, hi });
            }
            if names.contains(&name) {
                return Err(VerifyError::DuplicateBound(name));
            }
            names.push(name);
            bounds.push(Interval::new(lo, hi));
        }
        Ok(Self { names, bounds })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(Interval::midpoint).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.bounds.iter().zip(x).all(|(b, &v)| b.contains(v))
    }

    fn with_bounds(&self, bounds: Vec<Interval>) -> Self {
        Self { names: self.names.clone(), bounds }
    }
}

impl fmt::Display for BoxDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, b)) in self.names.iter().zip(&self.bounds).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}:{}:{}", b.lo, b.hi)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub epsilon: f64,
    pub max_depth: u32,
    pub max_boxes: u64,
    pub slack_factor: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { epsilon: 0.0, max_depth: 40, max_boxes: 1_000_000, slack_factor: 1e-12 }
    }
}

impl VerifyConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        if !self.epsilon.is_finite() {
            return Err(VerifyError::InvalidConfig("epsilon must be finite"));
        }
        if self.max_depth == 0 {
            return Err(VerifyError::InvalidConfig("max_depth must be positive"));
        }
        if self.max_boxes == 0 {
            return Err(VerifyError::InvalidConfig("max_boxes must be positive"));
        }
        if !(self.slack_factor.is_finite() && self.slack_factor > 0.0) {
            return Err(VerifyError::InvalidConfig("slack_factor must be finite and positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Verified,
    /// `witness` (box coordinates) has `f(witness) = value ≥ ε`.
    Falsified {
        witness: Vec<f64>,
        value: f64,
    },
    Inconclusive {
        reason: String,
    },
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Verified => "Verified",
            Status::Falsified { .. } => "Falsified",
            Status::Inconclusive { .. } => "Inconclusive",
        }
    }
}

/// Outcome of [`verify_ineq`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub status: Status,
    pub boxes_processed: u64,
    pub max_depth_reached: u32,
    /// Wall-clock seconds; the only non-deterministic field.
    pub elapsed: f64,
    pub config: VerifyConfig,
    pub polynomial: String,
    pub domain: BoxDomain,
}

impl Certificate {
    /// Flat `key=value` rendering of every deterministic field. `elapsed`
    /// is left out so identical runs produce identical files.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("status", self.status.name().to_string());
        match &self.status {
            Status::Verified => {}
            Status::Falsified { witness, value } => {
                let w: Vec<String> = self.domain.names().iter().zip(witness).map(|(n, v)| format!("{n}:{v}")).collect();
                kv("witness", w.join(","));
                kv("value", value.to_string());
            }
            Status::Inconclusive { reason } => kv("reason", reason.clone()),
        }
        kv("boxes_processed", self.boxes_processed.to_string());
        kv("max_depth_reached", self.max_depth_reached.to_string());
        kv("polynomial", self.polynomial.clone());
        kv("box", self.domain.to_string());
        kv("epsilon", self.config.epsilon.to_string());
        kv("max_depth", self.config.max_depth.to_string());
        kv("max_boxes", self.config.max_boxes.to_string());
        kv("slack_factor", self.config.slack_factor.to_string());
        kv("rigor", "numerical interval bounds with outward slack; not a formal proof".to_string());
        out
    }
}

/// `f`, its gradient and Hessian, with the polynomial's variables mapped
/// onto box dimensions.
struct Problem {
    f: MultiPoly,
    /// Box dimension of each polynomial variable.
    slots: Vec<usize>,
    grad: Vec<MultiPoly>,
    hess: Vec<Vec<MultiPoly>>,
    /// Box dimensions the polynomial actually depends on.
    active: Vec<usize>,
    slack: f64,
}

impl Problem {
    fn new(f: &MultiPoly, domain: &BoxDomain, slack: f64) -> Result<Self, VerifyError> {
        let slots = f
            .vars()
            .iter()
            .map(|v| domain.names().iter().position(|n| n == v).ok_or_else(|| VerifyError::MissingBound(v.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let diff = |p: &MultiPoly, v: &str| p.differentiate(v).expect("differentiating by own variable");
        let grad: Vec<MultiPoly> = f.vars().iter().map(|v| diff(f, v)).collect();
        let hess = grad.iter().map(|g| f.vars().iter().map(|v| diff(g, v)).collect()).collect();
        let mut active: Vec<usize> =
            f.vars().iter().zip(&slots).filter(|(v, _)| f.depends_on(v)).map(|(_, &s)| s).collect();
        active.sort_unstable();
        Ok(Self { f: f.clone(), slots, grad, hess, active, slack })
    }

    fn gather(&self, values: &[Interval]) -> Vec<Interval> {
        self.slots.iter().map(|&s| values[s]).collect()
    }

    fn point_value(&self, x: &[f64]) -> f64 {
        let local: Vec<f64> = self.slots.iter().map(|&s| x[s]).collect();
        self.f.eval_unchecked(&local)
    }

    /// Natural interval extension of `p` (whose variables are `self.f`'s).
    fn enclose(&self, p: &MultiPoly, local: &[Interval]) -> Interval {
        let s = self.slack;
        let mut acc = Interval::point(0.0);
        for (exps, c) in p.terms() {
            let mut term = Interval::point(c);
            for (iv, &e) in local.iter().zip(exps) {
                if e > 0 {
                    term = (term * iv.powi(e).widen(s)).widen(s);
                }
            }
            acc = (acc + term).widen(s);
        }
        acc
    }

    fn taylor_bound(&self, bounds: &[Interval]) -> f64 {
        let s = self.slack;
        let local = self.gather(bounds);
        let centre: Vec<Interval> = local.iter().map(|b| Interval::point(b.midpoint())).collect();
        // w_i = max(y_i − a_i, b_i − y_i), rounded outward.
        let half: Vec<f64> = local
            .iter()
            .zip(&centre)
            .map(|(b, y)| {
                let left = (Interval::point(y.lo) - Interval::point(b.lo)).widen(s).hi;
                let right = (Interval::point(b.hi) - Interval::point(y.lo)).widen(s).hi;
                left.max(right).max(0.0)
            })
            .collect();

        let mut total = self.enclose(&self.f, &centre);
        for (g, &w) in self.grad.iter().zip(&half) {
            let slope = self.enclose(g, &centre).mag();
            total = (total + Interval::point(slope) * w).widen(s);
        }
        let mut second = Interval::point(0.0);
        for (row, &wi) in self.hess.iter().zip(&half) {
            for (h, &wj) in row.iter().zip(&half) {
                if h.is_zero() {
                    continue;
                }
                let curv = self.enclose(h, &local).mag();
                second = (second + (Interval::point(curv) * wi).widen(s) * wj).widen(s);
            }
        }
        (total + second * 0.5).widen(s).hi
    }

    fn upper_bound(&self, bounds: &[Interval]) -> f64 {
        let natural = self.enclose(&self.f, &self.gather(bounds)).hi;
        natural.min(self.taylor_bound(bounds))
    }
}

/// Encloses `{p(x) : x ∈ domain}`.
pub fn interval_eval(p: &MultiPoly, domain: &BoxDomain, slack_factor: f64) -> Result<Interval, VerifyError> {
    let problem = Problem::new(p, domain, slack_factor)?;
    Ok(problem.enclose(&problem.f, &problem.gather(domain.bounds())))
}

/// Second-order Taylor upper bound of `p` over `domain`, expanded at the
/// box centre.
pub fn taylor_upper_bound(p: &MultiPoly, domain: &BoxDomain, slack_factor: f64) -> Result<f64, VerifyError> {
    let problem = Problem::new(p, domain, slack_factor)?;
    Ok(problem.taylor_bound(domain.bounds()))
}

/// Number of random probes tried before giving up as inconclusive.
const FALLBACK_SAMPLES: usize = 512;
const FALLBACK_SEED: u64 = 0x5eed_ba5e;

/// Branch and bound over `domain`.
///
/// Boxes are processed depth-first, lower half first. A box passes when
/// `min(taylor bound, interval hi) < ε − margin`, with
/// `margin = slack_factor · max(1, |ε|)`. A box that does not pass has its
/// centre evaluated: a value `≥ ε` ends the search as `Falsified`. Otherwise
/// the box is halved along its widest dimension that `p` depends on, lowest
/// index first on ties. Running out of depth or boxes triggers a seeded
/// random probe for a counterexample before returning `Inconclusive`.
pub fn verify_ineq(p: &MultiPoly, domain: &BoxDomain, cfg: &VerifyConfig) -> Result<Certificate, VerifyError> {
    cfg.validate()?;
    let start = Instant::now();
    let problem = Problem::new(p, domain, cfg.slack_factor)?;
    let threshold = cfg.epsilon - cfg.slack_factor * cfg.epsilon.abs().max(1.0);

    let mut stack: Vec<(Vec<Interval>, u32)> = vec![(domain.bounds().to_vec(), 0)];
    let mut boxes_processed = 0u64;
    let mut max_depth_reached = 0u32;

    let status = loop {
        let Some((bounds, depth)) = stack.pop() else {
            break Status::Verified;
        };
        if boxes_processed >= cfg.max_boxes {
            break inconclusive(domain, &bounds, "box budget exhausted");
        }
        boxes_processed += 1;
        max_depth_reached = max_depth_reached.max(depth);

        let bound = problem.upper_bound(&bounds);
        if !bound.is_finite() {
            break inconclusive(domain, &bounds, "numeric: non-finite bound");
        }
        if bound < threshold {
            continue;
        }
        let centre: Vec<f64> = bounds.iter().map(Interval::midpoint).collect();
        let value = problem.point_value(&centre);
        if value >= cfg.epsilon {
            break Status::Falsified { witness: centre, value };
        }
        if depth >= cfg.max_depth {
            break inconclusive(domain, &bounds, "depth limit reached");
        }
        let Some(axis) = split_axis(&bounds, &problem.active) else {
            break inconclusive(domain, &bounds, "box cannot be split further");
        };
        let (lower, upper) = bounds[axis].split();
        let mut hi_box = bounds.clone();
        hi_box[axis] = upper;
        let mut lo_box = bounds;
        lo_box[axis] = lower;
        stack.push((hi_box, depth + 1));
        stack.push((lo_box, depth + 1));
    };

    let status = match status {
        Status::Inconclusive { reason } => {
            probe(&problem, domain.bounds(), cfg.epsilon).unwrap_or(Status::Inconclusive { reason })
        }
        decided => decided,
    };

    Ok(Certificate {
        status,
        boxes_processed,
        max_depth_reached,
        elapsed: start.elapsed().as_secs_f64(),
        config: *cfg,
        polynomial: p.to_string(),
        domain: domain.clone(),
    })
}

/// Widest splittable dimension among those `p` depends on.
fn split_axis(bounds: &[Interval], active: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &k in active {
        let b = bounds[k];
        if b.midpoint() <= b.lo || b.midpoint() >= b.hi {
            continue;
        }
        match best {
            Some((_, w)) if b.width() <= w => {}
            _ => best = Some((k, b.width())),
        }
    }
    best.map(|(k, _)| k)
}

fn inconclusive(domain: &BoxDomain, bounds: &[Interval], reason: &str) -> Status {
    let stuck = domain.with_bounds(bounds.to_vec());
    Status::Inconclusive { reason: format!("{reason} at box {stuck}") }
}

/// Seeded random search of the whole domain for a point with `f ≥ ε`.
fn probe(problem: &Problem, bounds: &[Interval], epsilon: f64) -> Option<Status> {
    let mut rng = ChaCha8Rng::seed_from_u64(FALLBACK_SEED);
    for _ in 0..FALLBACK_SAMPLES {
        let x: Vec<f64> =
            bounds.iter().map(|b| if b.width() > 0.0 { rng.random_range(b.lo..=b.hi) } else { b.lo }).collect();
        let value = problem.point_value(&x);
        if value >= epsilon {
            return Some(Status::Falsified { witness: x, value });
        }
    }
    None
}
