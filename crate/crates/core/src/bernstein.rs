//! Bernstein basis polynomials, Bernstein series of scalar functions and the
//! switching-signal interpolants built from them.
//!
//! A degree-`m` series on `[lo, hi]` samples its function at the `m + 1`
//! equispaced nodes `lo + (r/m)(hi - lo)` and evaluates
//! `Σ_r samples[r] · C(m, r) t^r (1 - t)^{m-r}` at the normalized parameter
//! `t = (x - lo)/(hi - lo)`. Evaluation uses the de Casteljau recurrence, so no
//! binomial coefficient is ever formed on that path.

use thiserror::Error;

use crate::poly::MultiPoly;

/// Default ceiling on the degree accepted by [`BernsteinSeries::to_poly`].
/// Monomial coefficients alternate in sign and grow like `C(m, m/2)`, which
/// makes the expansion useless well before `m = 100`.
pub const DEFAULT_EXPANSION_LIMIT: u32 = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BernsteinError {
    #[error("basis index {r} out of range for degree {m}")]
    IndexOutOfRange { m: u32, r: u32 },
    #[error("basis parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("invalid domain [{lo}, {hi}]: need finite lo < hi")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("non-finite sample {value} at node {index} (x = {node})")]
    NonFiniteSample { index: usize, node: f64, value: f64 },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid pulse window [{t0}, {t1}]: need 0 <= t0 < t1 <= 1")]
    InvalidWindow { t0: f64, t1: f64 },
    #[error("scale delta must be finite and positive, got {0}")]
    InvalidDelta(f64),
    #[error("composition depth must be at least 1")]
    ZeroDepth,
    #[error(
        "degree {degree} exceeds the monomial expansion limit {limit}; \
         use evaluation-only paths or a smaller degree"
    )]
    ExpansionLimit { degree: u32, limit: u32 },
}

/// `C(m, r)` as a float, by the multiplicative formula over the shorter side.
pub fn binomial(m: u32, r: u32) -> f64 {
    if r > m {
        return 0.0;
    }
    let k = r.min(m - r);
    let mut c = 1.0_f64;
    for i in 1..=k {
        c = c * f64::from(m - k + i) / f64::from(i);
    }
    c
}

/// The Bernstein basis polynomial `C(m, r) t^r (1 - t)^{m-r}`.
///
/// The binomial factor is interleaved with the powers of `t` so that
/// intermediate values stay moderate; a log-space path takes over if that
/// ever overflows.
pub fn basis(m: u32, r: u32, t: f64) -> Result<f64, BernsteinError> {
    if r > m {
        return Err(BernsteinError::IndexOutOfRange { m, r });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(BernsteinError::ParameterOutOfRange(t));
    }
    let s = 1.0 - t;
    let rest = m - r;
    // Pair each factor (rest + i)/i with one power of t.
    let mut v = 1.0_f64;
    for i in 1..=r {
        v *= f64::from(rest + i) / f64::from(i) * t;
    }
    v *= s.powi(rest as i32);
    if v.is_finite() {
        return Ok(v);
    }

    let mut ln = 0.0;
    for i in 1..=r {
        ln += (f64::from(rest + i) / f64::from(i)).ln();
    }
    ln += f64::from(r) * t.ln() + f64::from(rest) * (-t).ln_1p();
    Ok(ln.exp())
}

/// All `m + 1` basis values at `t`, from the triangular recurrence
/// `b_{k+1,r} = (1 - t) b_{k,r} + t b_{k,r-1}`. Every step is a convex
/// combination, so the values stay non-negative and sum to one to rounding.
pub fn basis_all(m: u32, t: f64) -> Result<Vec<f64>, BernsteinError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(BernsteinError::ParameterOutOfRange(t));
    }
    let m = m as usize;
    let s = 1.0 - t;
    let mut b = vec![0.0; m + 1];
    b[0] = 1.0;
    for k in 1..=m {
        for r in (1..=k).rev() {
            b[r] = s * b[r] + t * b[r - 1];
        }
        b[0] *= s;
    }
    Ok(b)
}

/// Anything that maps a real argument to a real value.
pub trait Signal {
    fn eval(&self, x: f64) -> f64;
}

/// A degree-`m` Bernstein approximant on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinSeries {
    lo: f64,
    hi: f64,
    samples: Vec<f64>,
}

fn check_domain(lo: f64, hi: f64) -> Result<(), BernsteinError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(BernsteinError::InvalidDomain { lo, hi })
    }
}

impl BernsteinSeries {
    /// Samples `f` at the `m + 1` nodes of `[lo, hi]`.
    pub fn from_function<F>(f: F, m: u32, lo: f64, hi: f64) -> Result<Self, BernsteinError>
    where
        F: Fn(f64) -> f64,
    {
        if m == 0 {
            return Err(BernsteinError::ZeroDegree);
        }
        check_domain(lo, hi)?;
        let samples = (0..=m)
            .map(|r| {
                let x = node(lo, hi, r, m);
                let value = f(x);
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(BernsteinError::NonFiniteSample { index: r as usize, node: x, value })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { lo, hi, samples })
    }

    pub fn from_samples(samples: Vec<f64>, lo: f64, hi: f64) -> Result<Self, BernsteinError> {
        if samples.len() < 2 {
            return Err(BernsteinError::TooFewSamples(samples.len()));
        }
        check_domain(lo, hi)?;
        let m = (samples.len() - 1) as u32;
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(BernsteinError::NonFiniteSample { index, node: node(lo, hi, index as u32, m), value });
        }
        Ok(Self { lo, hi, samples })
    }

    /// Interpolant of the unit step that jumps from 0 to 1 at the midpoint of
    /// `[lo, hi]`. A node landing exactly on the jump samples 1/2.
    pub fn step(m: u32, lo: f64, hi: f64) -> Result<Self, BernsteinError> {
        if m == 0 {
            return Err(BernsteinError::ZeroDegree);
        }
        check_domain(lo, hi)?;
        // Node r sits left of, on, or right of the midpoint as 2r <, =, > m.
        let samples = (0..=m)
            .map(|r| match (2 * r).cmp(&m) {
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Greater => 1.0,
            })
            .collect();
        Ok(Self { lo, hi, samples })
    }

    pub fn degree(&self) -> u32 {
        (self.samples.len() - 1) as u32
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Normalized parameter of `x`, clamped to `[0, 1]`.
    pub fn normalize(&self, x: f64) -> f64 {
        ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    /// Value at `x`; arguments outside the domain clamp to the nearest end.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_normalized(self.normalize(x))
    }

    /// de Casteljau evaluation at a normalized parameter `t ∈ [0, 1]`.
    pub fn eval_normalized(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let s = 1.0 - t;
        let mut b = self.samples.clone();
        let m = b.len() - 1;
        for k in 1..=m {
            for i in 0..=(m - k) {
                b[i] = s * b[i] + t * b[i + 1];
            }
        }
        b[0]
    }

    /// Monomial-basis expansion in the normalized variable `var`, with the
    /// default degree limit.
    pub fn to_poly(&self, var: &str) -> Result<MultiPoly, BernsteinError> {
        self.to_poly_with_limit(var, DEFAULT_EXPANSION_LIMIT)
    }

    /// Monomial coefficients `c_k = C(m, k) Δ^k samples[0]`, where `Δ` is the
    /// forward difference operator on the samples.
    pub fn to_poly_with_limit(&self, var: &str, limit: u32) -> Result<MultiPoly, BernsteinError> {
        let m = self.degree();
        if m > limit {
            return Err(BernsteinError::ExpansionLimit { degree: m, limit });
        }
        let mut diffs = self.samples.clone();
        let mut coeffs = Vec::with_capacity(diffs.len());
        for k in 0..=m as usize {
            coeffs.push(binomial(m, k as u32) * diffs[0]);
            for i in 0..diffs.len() - 1 - k {
                diffs[i] = diffs[i + 1] - diffs[i];
            }
        }
        let terms = coeffs.into_iter().enumerate().map(|(k, c)| (vec![k as u32], c));
        // An invalid variable name is the caller's bug, not a numeric failure.
        Ok(MultiPoly::from_terms(&[var], terms).expect("variable name must be a valid identifier"))
    }
}

impl Signal for BernsteinSeries {
    fn eval(&self, x: f64) -> f64 {
        BernsteinSeries::eval(self, x)
    }
}

fn node(lo: f64, hi: f64, r: u32, m: u32) -> f64 {
    lo + (f64::from(r) / f64::from(m)) * (hi - lo)
}

/// A chain of series applied innermost first: `stages[k](… stages[0](x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedSignal {
    stages: Vec<BernsteinSeries>,
}

impl ComposedSignal {
    pub fn single(series: BernsteinSeries) -> Self {
        Self { stages: vec![series] }
    }

    /// Applies `outer` to the output of the current chain.
    pub fn then(mut self, outer: BernsteinSeries) -> Self {
        self.stages.push(outer);
        self
    }

    pub fn stages(&self) -> &[BernsteinSeries] {
        &self.stages
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }
}

impl Signal for ComposedSignal {
    fn eval(&self, x: f64) -> f64 {
        self.stages.iter().fold(x, |v, s| s.eval(v))
    }
}

/// `x ↦ outer(inner(x))`. The inner output is clamped into the outer domain.
pub fn compose(outer: &BernsteinSeries, inner: &BernsteinSeries) -> ComposedSignal {
    ComposedSignal::single(inner.clone()).then(outer.clone())
}

/// State-dependent switching weight `w(x1, x2)`: the 0/1 step interpolant on
/// `[-1, 1]` evaluated at `u = δ·x1·x2`. The complementary weight is `1 - w`.
///
/// With `depth > 1` the result is pushed through further step interpolants
/// on `[0, 1]` (jump at 1/2), which sharpens the transition while keeping
/// `w(0) = 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignInterpolant {
    delta: f64,
    signal: ComposedSignal,
}

impl SignInterpolant {
    pub fn new(m: u32, delta: f64, depth: u32) -> Result<Self, BernsteinError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(BernsteinError::InvalidDelta(delta));
        }
        if depth == 0 {
            return Err(BernsteinError::ZeroDepth);
        }
        let mut signal = ComposedSignal::single(BernsteinSeries::step(m, -1.0, 1.0)?);
        for _ in 1..depth {
            signal = signal.then(BernsteinSeries::step(m, 0.0, 1.0)?);
        }
        Ok(Self { delta, signal })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn degree(&self) -> u32 {
        self.signal.stages[0].degree()
    }

    pub fn depth(&self) -> usize {
        self.signal.depth()
    }

    pub fn signal(&self) -> &ComposedSignal {
        &self.signal
    }

    /// Weight at the blend argument `u` (already scaled by δ).
    pub fn weight_at(&self, u: f64) -> f64 {
        self.signal.eval(u)
    }

    pub fn weight(&self, x1: f64, x2: f64) -> f64 {
        self.weight_at(self.delta * x1 * x2)
    }

    /// `(w, 1 - w)`; both lie in `[0, 1]` and sum to one.
    pub fn weights(&self, x1: f64, x2: f64) -> [f64; 2] {
        let w = self.weight(x1, x2);
        [w, 1.0 - w]
    }
}

fn check_window(t0: f64, t1: f64) -> Result<(), BernsteinError> {
    if t0.is_finite() && t1.is_finite() && 0.0 <= t0 && t0 < t1 && t1 <= 1.0 {
        Ok(())
    } else {
        Err(BernsteinError::InvalidWindow { t0, t1 })
    }
}

/// Interpolant on `[0, 1]` of the indicator of a single time window.
pub fn pulse_interpolant(m: u32, t0: f64, t1: f64) -> Result<BernsteinSeries, BernsteinError> {
    window_interpolant(m, &[(t0, t1)])
}

/// Interpolant on `[0, 1]` of the indicator of a union of windows.
///
/// Each sample is the mean of the indicator's left and right limits at its
/// node, so a node on an interior jump samples 1/2. At `t = 0` only the right
/// limit exists and at `t = 1` only the left one, which makes a window
/// touching the domain edge reproduce exactly there.
pub fn window_interpolant(m: u32, windows: &[(f64, f64)]) -> Result<BernsteinSeries, BernsteinError> {
    if m == 0 {
        return Err(BernsteinError::ZeroDegree);
    }
    for &(t0, t1) in windows {
        check_window(t0, t1)?;
    }
    let left = |t: f64| windows.iter().any(|&(a, b)| a < t && t <= b);
    let right = |t: f64| windows.iter().any(|&(a, b)| a <= t && t < b);
    let indicator = |on: bool| if on { 1.0 } else { 0.0 };
    let samples = (0..=m)
        .map(|r| {
            let t = f64::from(r) / f64::from(m);
            if r == 0 {
                indicator(right(t))
            } else if r == m {
                indicator(left(t))
            } else {
                0.5 * (indicator(left(t)) + indicator(right(t)))
            }
        })
        .collect();
    Ok(BernsteinSeries { lo: 0.0, hi: 1.0, samples })
}
