//! Lyapunov candidates and their Lie derivatives along polynomial vector
//! fields, including the polynomial form of a blended state-sign system.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bernstein::{BernsteinError, DEFAULT_EXPANSION_LIMIT};
use crate::poly::{MultiPoly, PolyError};
use crate::switched::{SwitchedSystem, SwitchingRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("candidate has nonzero constant term {0}; V(0) must be 0")]
    NonzeroAtOrigin(f64),
    #[error("candidate depends on `{0}`, which is not a state variable of the field")]
    ForeignVariable(String),
    #[error("vector field has {components} components for {vars} state variables")]
    FieldShape { components: usize, vars: usize },
    #[error("polynomial vector fields need a blended state-sign rule")]
    UnsupportedRule,
    #[error(
        "effective blend degree {degree} exceeds the expansion limit {limit}; \
         use a smaller degree for verification"
    )]
    DegreeLimit { degree: u32, limit: u32 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
}

/// Names of the state variables of an `n`-dimensional system: `x1, …, xn`.
pub fn state_vars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// A polynomial `V` with `V(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCandidate {
    v: MultiPoly,
}

impl LyapunovCandidate {
    pub fn new(v: MultiPoly) -> Result<Self, LyapunovError> {
        let c = v.constant_term();
        if c != 0.0 {
            return Err(LyapunovError::NonzeroAtOrigin(c));
        }
        Ok(Self { v })
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.v
    }

    pub fn into_poly(self) -> MultiPoly {
        self.v
    }
}

fn check_square(p: &DMatrix<f64>) -> Result<(), LyapunovError> {
    if !p.is_square() {
        return Err(LyapunovError::NotSquare { rows: p.nrows(), cols: p.ncols() });
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(LyapunovError::NonFinite);
    }
    Ok(())
}

/// `V(x) = xᵀ P x` over `x1, …, xn`.
pub fn quadratic_candidate(p: &DMatrix<f64>) -> Result<LyapunovCandidate, LyapunovError> {
    check_square(p)?;
    let n = p.nrows();
    for row in 0..n {
        for col in row + 1..n {
            let (a, b) = (p[(row, col)], p[(col, row)]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(LyapunovError::NotSymmetric { row, col });
            }
        }
    }
    let vars = state_vars(n);
    let mut terms = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0; n];
            e[i] += 1;
            e[j] += 1;
            terms.push((e, p[(i, j)]));
        }
    }
    Ok(LyapunovCandidate { v: MultiPoly::from_terms(&vars, terms)? })
}

/// Whether a symmetric matrix is positive definite, by Sylvester's criterion
/// on the leading principal minors.
pub fn is_positive_definite(p: &DMatrix<f64>) -> bool {
    if !p.is_square() {
        return false;
    }
    (1..=p.nrows()).all(|k| p.view((0, 0), (k, k)).clone_owned().determinant() > 0.0)
}

/// `dx/dt = f(x)` with one polynomial per state variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVectorField {
    vars: Vec<String>,
    components: Vec<MultiPoly>,
}

impl PolyVectorField {
    /// `components[i]` is the rate of `vars[i]`. Components may only mention
    /// state variables.
    pub fn new(vars: Vec<String>, components: Vec<MultiPoly>) -> Result<Self, LyapunovError> {
        if vars.len() != components.len() {
            return Err(LyapunovError::FieldShape { components: components.len(), vars: vars.len() });
        }
        let components = components.iter().map(|c| c.with_vars(&vars)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { vars, components })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn components(&self) -> &[MultiPoly] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    /// Evaluates every component at `x` (coordinates in `vars()` order).
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, LyapunovError> {
        let named: Vec<(&str, f64)> = self.vars.iter().map(String::as_str).zip(x.iter().copied()).collect();
        if x.len() != self.vars.len() {
            return Err(PolyError::DimensionMismatch { expected: self.vars.len(), got: x.len() }.into());
        }
        self.components.iter().map(|c| Ok(c.eval_named(&named)?)).collect()
    }
}

/// Component `i` is `Σ_j A_ij x_j`.
pub fn vector_field_from_linear(a: &DMatrix<f64>) -> Result<PolyVectorField, LyapunovError> {
    check_square(a)?;
    let n = a.nrows();
    let vars = state_vars(n);
    let components = (0..n)
        .map(|i| {
            let terms = (0..n).map(|j| {
                let mut e = vec![0; n];
                e[j] = 1;
                (e, a[(i, j)])
            });
            MultiPoly::from_terms(&vars, terms)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PolyVectorField { vars, components })
}

/// `V̇ = Σ_i ∂V/∂x_i · f_i`.
pub fn lie_derivative(v: &LyapunovCandidate, f: &PolyVectorField) -> Result<MultiPoly, LyapunovError> {
    for name in v.poly().vars() {
        if v.poly().depends_on(name) && !f.vars.contains(name) {
            return Err(LyapunovError::ForeignVariable(name.clone()));
        }
    }
    let mut acc = MultiPoly::zero();
    for (name, fi) in f.vars.iter().zip(&f.components) {
        if !v.poly().depends_on(name) {
            continue;
        }
        let grad = v.poly().differentiate(name)?;
        acc = acc.add(&grad.mul(fi));
    }
    Ok(acc.with_vars(&f.vars)?)
}

/// Polynomial form of a blended state-sign system.
///
/// The weight series is expanded in its normalized variable and the affine
/// domain map `t = (δ·x1·x2 + 1)/2` is substituted, so the field agrees with
/// [`SwitchedSystem::rhs_bswitched`] wherever `|δ·x1·x2| ≤ 1` (the
/// polynomial cannot reproduce the clamping outside that region).
pub fn vector_field_bswitched(sys: &SwitchedSystem) -> Result<PolyVectorField, LyapunovError> {
    vector_field_bswitched_with_limit(sys, DEFAULT_EXPANSION_LIMIT)
}

pub fn vector_field_bswitched_with_limit(sys: &SwitchedSystem, limit: u32) -> Result<PolyVectorField, LyapunovError> {
    if !matches!(sys.rule(), SwitchingRule::StateSign { .. }) {
        return Err(LyapunovError::UnsupportedRule);
    }
    let sign = sys.sign_interpolant().ok_or(LyapunovError::UnsupportedRule)?;
    let stages = sign.signal().stages();
    let effective = stages.iter().try_fold(1u32, |acc, s| acc.checked_mul(s.degree())).unwrap_or(u32::MAX);
    if effective > limit {
        return Err(LyapunovError::DegreeLimit { degree: effective, limit });
    }

    let n = sys.dim();
    let vars = state_vars(n);
    // Each stage maps its input affinely onto t ∈ [0, 1]; the innermost
    // input is u = δ x1 x2, so its t is (u + 1)/2.
    let product = MultiPoly::var(&vars[0])?.mul(&MultiPoly::var(&vars[1])?);
    let mut weight = product.scale(sign.delta());
    for stage in stages {
        let (lo, hi) = stage.domain();
        let arg = weight.add(&MultiPoly::constant(-lo)).scale(1.0 / (hi - lo));
        weight = stage.to_poly_with_limit("t", limit)?.substitute("t", &arg);
    }
    let complement = MultiPoly::constant(1.0).sub(&weight);

    let linear: Vec<PolyVectorField> =
        sys.subsystems().iter().map(|s| vector_field_from_linear(s.matrix())).collect::<Result<_, _>>()?;
    let components =
        (0..n).map(|i| weight.mul(&linear[0].components[i]).add(&complement.mul(&linear[1].components[i]))).collect();
    PolyVectorField::new(vars, components)
}
