//! Exact algebra for monotone and symmetric rearrangements of piecewise-linear
//! functions on `[-1, 1]`, together with the weighted first-order functionals
//! `I(a, u) = ∫ F(u, a(x, u)|u'|) dx` they feed into.
//!
//! The crate is `no_std` + `alloc`; everything here is pure computation.
//! IO, file formats and the CLI live in the companion `rearrange` crate.
//!
//! Module map:
//! - [`pl`] — piecewise-linear carrier type, distribution function,
//!   rearrangements and level-set machinery;
//! - [`expr`] — the mini expression language for weights, integrands and
//!   test functions;
//! - [`weight`] — weight representation and the admissibility conditions;
//! - [`functional`] — adaptive quadrature for `I(a, u)` and inequality
//!   verification;
//! - [`constructs`] — explicit counterexample builders;
//! - [`approx`] — the Lipschitz-approximation pipeline.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod approx;
pub mod constructs;
pub mod expr;
pub mod functional;
pub mod pl;
pub mod weight;

pub(crate) mod math;

pub use expr::{Bindings, Expr};
pub use functional::{Integrand, VerifyMode, VerifyReport};
pub use pl::PiecewiseLinear;
pub use weight::Weight;
