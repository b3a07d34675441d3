//! Switched linear systems as single polynomial systems.
//!
//! The switching signal of a two-mode (or time-windowed) linear system is
//! replaced by a Bernstein interpolant, which turns the hybrid system into one
//! polynomial ODE. From there the crate builds Lyapunov candidate derivatives
//! as explicit polynomials and certifies bounds of the form `∀x ∈ D: f(x) < ε`
//! with interval arithmetic, second-order Taylor bounds and branch and bound.
//!
//! - [`poly`]: sparse multivariate polynomials.
//! - [`bernstein`]: Bernstein basis, series and switching interpolants.
//! - [`switched`]: subsystems, switching rules and RK4 simulation.
//! - [`lyapunov`]: quadratic candidates and Lie derivatives.
//! - [`verifier`]: interval enclosures and the branch-and-bound certifier.
//! - [`config`]: plain-text system files.

pub mod bernstein;
pub mod config;
pub mod lyapunov;
pub mod poly;
pub mod switched;
pub mod verifier;

pub use bernstein::{BernsteinSeries, ComposedSignal, SignInterpolant, Signal};
pub use lyapunov::{LyapunovCandidate, PolyVectorField};
pub use poly::MultiPoly;
pub use switched::{Mode, SwitchedSystem, SwitchingRule, Trajectory};
pub use verifier::{BoxDomain, Certificate, Interval, Status, VerifyConfig};
