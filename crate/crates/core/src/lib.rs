//! Numerical construction and verification of radially symmetric breathers
//! for the curl-curl wave equation with double power nonlinearity
//!
//! ```text
//! ρ u_tt + ∇×(M ∇×u) + μ u + v_p |u|^{p−1} u + v_q |u|^{q−1} u = 0,  1 < p < q.
//! ```
//!
//! Fields of the form u = y(|x|, t)·x/|x| are gradients, so the curl-curl term
//! drops out and every radius carries an independent oscillator. Rescaling
//! y = τ̃ φ(σ̃ t) reduces all of them to a single equation
//! φ̈ + φ + |φ|^{p−1}φ + |φ|^{q−1}φ = 0 ([`oscillator`]); the energy level at
//! each radius is then tuned through the inverse period map ([`periodmap`]) so
//! that every shell shares the same temporal period ([`radial`]).
//!
//! Coefficient profiles are written as expressions in `r` ([`coeffexpr`]);
//! [`verify`] holds residual and consistency checks on the results.

pub mod coeffexpr;
pub mod finite_diff;
pub mod oscillator;
pub mod periodmap;
pub mod quadrature;
pub mod radial;
pub mod rk;
pub mod roots;
pub mod verify;

pub use coeffexpr::{ExprAst, ParseError, RadialProfile};
pub use oscillator::{EnergyLevel, PhaseState, PowerPair};
pub use periodmap::{PeriodMap, QuadratureSettings, TailFit};
pub use radial::{BreatherSpec, HypothesisReport, MediumCoefficients};
pub use verify::ResidualReport;
