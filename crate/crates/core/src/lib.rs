//! Monic orthogonal polynomials for the weight `w(x; t) = x^λ e^{-x² - t/x}`
//! on `(0, ∞)`.
//!
//! The pipeline runs moments by double-exponential quadrature, then a Hankel
//! Cholesky factorization for `α_n, β_n, h_n, p(n, t)`, then the ladder
//! functions `R_n, r_n`. Everything is carried in MPFR arithmetic at a
//! precision chosen from the degree and the requested digits. [`verify`]
//! checks the difference and differential-difference equations the
//! coefficients satisfy, and [`asymptotics`] compares them with their large-`n`
//! expansions.
//!
//! ```text
//! params → compute_moments → RecurrenceTable → LadderTable → verify / asym
//! ```

pub mod error;
pub mod precision;
pub mod quadrature;
pub mod weight;
pub mod recurrence;
pub mod residual;
pub mod ladder;
pub mod pipeline;
pub mod asymptotics;
pub mod verify;
pub mod config;
pub mod output;
pub mod cli;
