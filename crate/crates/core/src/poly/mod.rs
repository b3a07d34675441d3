//! Sparse multivariate polynomials over named variables with `f64` coefficients.
//!
//! A [`MultiPoly`] keeps its variables sorted by name and stores one exponent
//! vector per term. Binary operations unify the two variable sets by name, so a
//! univariate polynomial in `t` can be combined freely with one in `x1, x2`.

mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use thiserror::Error;

pub use parse::ParsePolyError;

/// Errors raised by polynomial operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid variable name `{0}`")]
    InvalidVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("exponent vector has length {got}, expected {expected}")]
    ExponentLength { expected: usize, got: usize },
}

pub(crate) fn is_valid_var_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A sparse polynomial `Σ c_α · Π x_i^{α_i}`.
///
/// Invariants: `vars` is sorted and duplicate-free, every exponent vector has
/// `vars.len()` entries and no stored coefficient is exactly zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiPoly {
    vars: Vec<String>,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl MultiPoly {
    /// The zero polynomial with no variables.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(Vec::new(), c);
        }
        Self { vars: Vec::new(), terms }
    }

    /// The polynomial consisting of the single variable `name`.
    pub fn var(name: &str) -> Result<Self, PolyError> {
        if !is_valid_var_name(name) {
            return Err(PolyError::InvalidVariable(name.to_string()));
        }
        let mut terms = BTreeMap::new();
        terms.insert(vec![1], 1.0);
        Ok(Self { vars: vec![name.to_string()], terms })
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs whose exponent
    /// vectors follow the order of `vars`. Like terms are summed.
    pub fn from_terms<S, I>(vars: &[S], terms: I) -> Result<Self, PolyError>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let names: Vec<&str> = vars.iter().map(AsRef::as_ref).collect();
        for name in &names {
            if !is_valid_var_name(name) {
                return Err(PolyError::InvalidVariable(name.to_string()));
            }
        }
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| names[a].cmp(names[b]));
        for pair in order.windows(2) {
            if names[pair[0]] == names[pair[1]] {
                return Err(PolyError::DuplicateVariable(names[pair[0]].to_string()));
            }
        }
        let sorted: Vec<String> = order.iter().map(|&i| names[i].to_string()).collect();

        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != names.len() {
                return Err(PolyError::ExponentLength { expected: names.len(), got: exps.len() });
            }
            let permuted: Vec<u32> = order.iter().map(|&i| exps[i]).collect();
            *acc.entry(permuted).or_insert(0.0) += c;
        }
        Ok(Self::from_raw(sorted, acc))
    }

    fn from_raw(vars: Vec<String>, mut terms: BTreeMap<Vec<u32>, f64>) -> Self {
        terms.retain(|_, c| *c != 0.0);
        Self { vars, terms }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Terms in ascending lexicographic exponent order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&[u32], f64)> + '_ {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the monomial with the given exponents (in `vars()` order).
    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&vec![0; self.vars.len()])
    }

    /// Total degree; `0` for constants and the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    /// Whether some term has a positive exponent in `name`.
    pub fn depends_on(&self, name: &str) -> bool {
        match self.var_index(name) {
            Some(k) => self.terms.keys().any(|e| e[k] > 0),
            None => false,
        }
    }

    /// Evaluates at `x`, whose coordinates follow `vars()` order.
    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.vars.len() {
            return Err(PolyError::DimensionMismatch { expected: self.vars.len(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        // Expanded Bernstein weights have huge alternating coefficients, so
        // each term carries its product rounding error (via fma) and the sum
        // is compensated.
        let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
        let mut add = |v: f64| {
            let t = sum + v;
            comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
            sum = t;
        };
        for (exps, &c) in &self.terms {
            let (mut hi, mut lo) = (c, 0.0_f64);
            for (&xi, &e) in x.iter().zip(exps) {
                for _ in 0..e {
                    let p = hi * xi;
                    lo = lo * xi + hi.mul_add(xi, -p);
                    hi = p;
                }
            }
            add(hi);
            add(lo);
        }
        sum + comp
    }

    /// Evaluates with coordinates supplied by name. Every variable of the
    /// polynomial must be present; extra names are ignored.
    pub fn eval_named<S: AsRef<str>>(&self, point: &[(S, f64)]) -> Result<f64, PolyError> {
        let mut x = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let value = point
                .iter()
                .find(|(name, _)| name.as_ref() == v)
                .map(|&(_, value)| value)
                .ok_or_else(|| PolyError::UnknownVariable(v.clone()))?;
            x.push(value);
        }
        Ok(self.eval_unchecked(&x))
    }

    /// Re-expresses the polynomial over a superset of its variables.
    pub fn with_vars<S: AsRef<str>>(&self, vars: &[S]) -> Result<Self, PolyError> {
        let mut target: Vec<String> = Vec::with_capacity(vars.len());
        for v in vars {
            let v = v.as_ref();
            if !is_valid_var_name(v) {
                return Err(PolyError::InvalidVariable(v.to_string()));
            }
            target.push(v.to_string());
        }
        target.sort();
        target.dedup();
        for v in &self.vars {
            if target.binary_search(v).is_err() {
                return Err(PolyError::UnknownVariable(v.clone()));
            }
        }
        Ok(self.embed(&target))
    }

    /// `target` must be a sorted superset of `self.vars`.
    fn embed(&self, target: &[String]) -> Self {
        if target == self.vars.as_slice() {
            return self.clone();
        }
        let slots: Vec<usize> = self
            .vars
            .iter()
            .map(|v| target.binary_search(v).expect("embed target must contain every variable"))
            .collect();
        let terms = self
            .terms
            .iter()
            .map(|(exps, &c)| {
                let mut out = vec![0; target.len()];
                for (&slot, &e) in slots.iter().zip(exps) {
                    out[slot] = e;
                }
                (out, c)
            })
            .collect();
        Self { vars: target.to_vec(), terms }
    }

    fn unified_vars(&self, other: &Self) -> Vec<String> {
        let mut vars: Vec<String> = self.vars.iter().chain(&other.vars).cloned().collect();
        vars.sort();
        vars.dedup();
        vars
    }

    pub fn add(&self, other: &Self) -> Self {
        let vars = self.unified_vars(other);
        let a = self.embed(&vars);
        let b = other.embed(&vars);
        let mut terms = a.terms;
        for (exps, c) in b.terms {
            *terms.entry(exps).or_insert(0.0) += c;
        }
        Self::from_raw(vars, terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let vars = self.unified_vars(other);
        let a = self.embed(&vars);
        let b = other.embed(&vars);
        let mut terms: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (ea, &ca) in &a.terms {
            for (eb, &cb) in &b.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *terms.entry(exps).or_insert(0.0) += ca * cb;
            }
        }
        Self::from_raw(vars, terms)
    }

    pub fn scale(&self, c: f64) -> Self {
        let terms = self.terms.iter().map(|(e, &v)| (e.clone(), v * c)).collect();
        Self::from_raw(self.vars.clone(), terms)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::constant(1.0).embed(&self.vars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Formal partial derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Result<Self, PolyError> {
        let k = self.var_index(var).ok_or_else(|| PolyError::UnknownVariable(var.to_string()))?;
        let mut terms = BTreeMap::new();
        for (exps, &c) in &self.terms {
            let e = exps[k];
            if e == 0 {
                continue;
            }
            let mut lowered = exps.clone();
            lowered[k] = e - 1;
            *terms.entry(lowered).or_insert(0.0) += c * f64::from(e);
        }
        Ok(Self::from_raw(self.vars.clone(), terms))
    }

    /// Replaces every occurrence of `var` by `replacement`. A polynomial that
    /// does not mention `var` is returned unchanged.
    pub fn substitute(&self, var: &str, replacement: &MultiPoly) -> Self {
        let Some(k) = self.var_index(var) else {
            return self.clone();
        };
        let max_exp = self.terms.keys().map(|e| e[k]).max().unwrap_or(0);
        let mut powers = vec![MultiPoly::constant(1.0)];
        for i in 1..=max_exp as usize {
            let next = powers[i - 1].mul(replacement);
            powers.push(next);
        }

        let mut acc = MultiPoly::zero();
        for (exps, &c) in &self.terms {
            let mut rest = exps.clone();
            rest[k] = 0;
            let mono = Self::from_raw(self.vars.clone(), BTreeMap::from([(rest, c)]));
            acc = acc.add(&mono.mul(&powers[exps[k] as usize]));
        }
        // `var` no longer occurs unless the replacement reintroduces it.
        if replacement.var_index(var).is_some() {
            acc
        } else {
            acc.drop_var(var)
        }
    }

    fn drop_var(&self, var: &str) -> Self {
        let Some(k) = self.var_index(var) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        vars.remove(k);
        let mut terms: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, &c) in &self.terms {
            debug_assert_eq!(exps[k], 0);
            let mut e = exps.clone();
            e.remove(k);
            *terms.entry(e).or_insert(0.0) += c;
        }
        Self::from_raw(vars, terms)
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        MultiPoly::add(self, rhs)
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        MultiPoly::sub(self, rhs)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        MultiPoly::mul(self, rhs)
    }
}

impl Mul<f64> for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: f64) -> MultiPoly {
        self.scale(rhs)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

/// Canonical text form: `coeff*var^exp` monomials joined by ` + ` / ` - `,
/// highest exponent vector (lexicographically) first. The zero polynomial
/// prints as `0`.
impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (exps, &c)) in self.terms.iter().rev().enumerate() {
            let magnitude = c.abs();
            match (i, c.is_sign_negative()) {
                (0, true) => write!(f, "-{magnitude}")?,
                (0, false) => write!(f, "{magnitude}")?,
                (_, true) => write!(f, " - {magnitude}")?,
                (_, false) => write!(f, " + {magnitude}")?,
            }
            for (name, &e) in self.vars.iter().zip(exps) {
                match e {
                    0 => {}
                    1 => write!(f, "*{name}")?,
                    _ => write!(f, "*{name}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

impl FromStr for MultiPoly {
    type Err = ParsePolyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse(s)
    }
}
