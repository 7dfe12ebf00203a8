//! Monte Carlo toolkit for irregular functionals of SDEs: Euler-Maruyama
//! simulation with exact level coupling, multilevel Monte Carlo, strong-error
//! curves for discontinuous and fractional-Sobolev payoffs, discrete
//! Hardy-Littlewood maximal operators and terminal-density diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod irregular_error;
pub mod maximal;
pub mod mlmc;
pub mod payoff;
pub mod quadrature;
pub mod randomkit;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
