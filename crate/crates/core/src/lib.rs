//! Interference nulling for two-tier massive-MIMO networks built on sparse
//! (nested) antenna arrays and their difference co-arrays.
//!
//! The crate is organized in layers:
//!
//! * [`coarray`] — physical array geometry, steering vectors, second-order
//!   co-array construction and DoF accounting.
//! * [`beamforming`] — co-array beamforming weights that pass desired
//!   directions at unit gain while nulling interference directions.
//! * [`hetnet`] — the two-tier network model: placements, path loss,
//!   association, multipath counts and the exact per-user rate expressions.
//! * [`optimizer`] — the nulling-assignment optimization chain: product-form
//!   objective, truncated polynomial expansion, linearization, Gomory
//!   cutting planes, a unimodular LP fast path, an upper-bound program, a
//!   greedy heuristic and a brute-force oracle.
//! * [`harness`] — scenario generation, the Monte Carlo experiment runner,
//!   aggregation, and CSV/JSON emission consumed by the CLI.

// Index-based loops are the clearer idiom in the matrix kernels here.
#![allow(clippy::needless_range_loop)]

pub mod beamforming;
pub mod coarray;
pub mod harness;
pub mod hetnet;
pub mod optimizer;

pub use coarray::{ArrayGeometry, CoArray, SourceEnsemble};
pub use hetnet::{BaseStation, NullingAssignment, Scenario, User};
pub use optimizer::{IntegerProgram, Method, PolynomialObjective, SolveReport};
