//! Discrete Hardy-Littlewood maximal operators, the fractional operator
//! G_{s,p}, and the weak-type and pointwise estimate checks built on them.

mod grid;
mod gsp;
mod operator;
mod pointwise;
mod weak;

pub use grid::{Atom, GridField, GridMeasure};
pub use gsp::{gsp_field, gsp_power, GspResult, LadderRung};
pub use operator::{maximal_at, MaximalOperator};
pub use pointwise::{
    mollified_gradient, pointwise_check, pointwise_ratio, PairRatio, PointwiseMode,
    PointwiseReport,
};
pub use weak::{percentile_lambdas, weak_type_check, weak_type_check_with, MaximalReport, WeakTypeOptions};

#[cfg(test)]
mod tests;
