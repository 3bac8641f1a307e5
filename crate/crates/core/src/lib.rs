//! Solvers for budget-constrained connected coverage and its relatives.
//!
//! The library covers six problems over node-weighted graphs:
//!
//! - directed and undirected rooted budgeted maximum coverage
//!   ([`coverage::solve_dcbc`], [`coverage::solve_ucbc`]): pick a rooted tree
//!   of cost at most `(1 + eps) * budget` maximizing the prize of the covered
//!   ground-set elements;
//! - node-weighted directed Steiner tree ([`dst::solve_dst`]) and its
//!   bidirected-with-sink-terminals special case
//!   ([`bidirected::solve_dst_bidirected`]);
//! - minimum connected set cover and node-weighted group Steiner tree, both
//!   directed and undirected ([`reductions::solve_csc`],
//!   [`reductions::solve_gst`]).
//!
//! The budgeted solvers round a flow-based linear relaxation solved by the
//! embedded simplex in [`lp`]; exact brute-force oracles for desk-scale
//! instances live in [`oracle`]. File formats, a seeded instance generator,
//! and the pieces behind the `covertree` binary are in [`instance`],
//! [`generate`], and [`runner`].
//!
//! Runnable walkthroughs for each capability are in `examples/`.

pub mod bidirected;
pub mod coverage;
pub mod dst;
pub mod generate;
pub mod graph;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod reductions;
pub mod runner;

pub use coverage::{solve_dcbc, solve_ucbc, CoverageInstance, RunReport};
pub use dst::{solve_dst, SteinerInstance};
pub use bidirected::solve_dst_bidirected;
pub use graph::{NodeWeightedDigraph, OutTree};
pub use reductions::{solve_csc, solve_gst, GroupInstance};
