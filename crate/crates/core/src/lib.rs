//! Grid impact analysis and on-site mitigation sizing for megawatt-scale
//! heavy-duty EV charging stations on radial distribution feeders.

// `!(a < b)` is how validation rejects NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod mitigation;
pub mod network;
pub mod powerflow;
pub mod profiles;
pub mod scenarios;
pub mod sensitivity;
pub mod sizing;
pub mod station;
pub mod timeseries;

pub use error::{Error, Result};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Output order always follows the index.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
