#![allow(dead_code)]

use bswitch_core::MultiPoly;
use proptest::prelude::*;

pub const VARS: [&str; 3] = ["x1", "x2", "x3"];

/// Polynomials in up to three variables with total degree at most `max_deg`.
pub fn poly(nvars: usize, max_deg: u32) -> impl Strategy<Value = MultiPoly> {
    let term = (prop::collection::vec(0..=max_deg, nvars), -5.0..5.0_f64);
    prop::collection::vec(term, 1..8).prop_map(move |terms| {
        let kept = terms.into_iter().filter(|(e, _)| e.iter().sum::<u32>() <= max_deg);
        MultiPoly::from_terms(&VARS[..nvars], kept).unwrap()
    })
}

pub fn point(nvars: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, nvars)
}

/// `Σ |c| |x|^e`: the natural scale of rounding error when evaluating `p` at `x`.
pub fn magnitude(p: &MultiPoly, x: &[f64]) -> f64 {
    p.terms().map(|(e, c)| c.abs() * e.iter().zip(x).map(|(&k, v)| v.abs().powi(k as i32)).product::<f64>()).sum()
}
