//! Desk-scale laboratory for supercritical bond percolation on Z^d:
//! cylinder min-cutsets and the flow-constant norm, Wulff crystals and their
//! surface energy, anchored Cheeger profiles, coupled Monte-Carlo
//! experiments, and renormalization-event scans.

pub mod cheeger;
pub mod cluster;
pub mod crystal;
pub mod cylinder;
pub mod error;
pub mod flow;
pub mod lattice;
pub mod maxflow;
pub mod norm;
pub mod polytope;
pub mod regularity;
pub mod rng;

pub use error::{Error, Result};

pub(crate) mod par {
    /// Map `0..n` through `f`, in parallel when the `parallel` feature is on.
    /// Results are collected by index, so the output never depends on
    /// scheduling order.
    #[cfg(feature = "parallel")]
    pub fn par_map_indexed<T: Send, F: Fn(usize) -> T + Sync>(n: usize, f: F) -> Vec<T> {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn par_map_indexed<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
        (0..n).map(f).collect()
    }
}
