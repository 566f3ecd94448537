//! Numerical foundation: compensated summation, adaptive quadrature,
//! bisection, special functions, inverse-CDF grids, low-discrepancy points
//! and test statistics.

pub mod bisect;
pub mod grid;
pub mod kahan;
pub mod lowdisc;
pub mod quad;
pub mod special;
pub mod stats;
