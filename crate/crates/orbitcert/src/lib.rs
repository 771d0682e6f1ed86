//! Rigorous certification of periodic orbits for flows with nearly
//! one-dimensional attractors.
//!
//! The pipeline: validated integration of a polynomial vector field
//! ([`flow`]) drives a rigorous Poincaré return map ([`poincare`]); a
//! contracting grid of h-sets around an attracting periodic orbit is
//! verified with interval arithmetic ([`hset`], [`grid`]); the verified
//! grid's spatial permutation then yields, by exact combinatorics
//! ([`shark`]), loops of covering relations that force periodic orbits of
//! every period in the Sharkovskii tail (and pattern-specific extras).
//! The built-in case studies ([`rossler`]) reproduce four parameter values
//! of the Rössler system.

pub mod cert;
pub mod flow;
pub mod grid;
pub mod hset;
pub mod interval;
pub mod matrix;
pub mod numeric;
pub mod poincare;
pub mod polyfield;
pub mod rossler;
pub mod shark;

pub use interval::{IBox, Interval, IntervalError};
pub use matrix::{IMatrix, MatrixError};
