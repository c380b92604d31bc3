//! Decomposition of continuous piecewise affine (PWA) functions into
//! differences of two convex PWA functions.
//!
//! Three decomposition routes are provided:
//!
//! * [`decomp::folds`] — collect the convex folds of `f` and sum the
//!   corresponding two-piece max terms into `g`, then `h = g - f` on the
//!   overlay partition.
//! * [`decomp::opt`] — keep the partition of `f` and search for affine
//!   pieces of `g` and `h` directly, encoding convexity across shared
//!   facets as a linear feasibility problem (Farkas multipliers).
//! * [`decomp::novel`] — cut the domain by *all* fold hyperplanes (convex
//!   and concave), relabel `f` on the resulting cells, and run the
//!   optimization-based route there; the refined partition makes the
//!   feasibility problem solvable by construction and `g`, `h` share one
//!   cell set.
//!
//! [`empc`] generates the benchmark PWA control law (explicit MPC for a
//! constrained double integrator) and [`dc`] evaluates decompositions in
//! max-minus-max form and benchmarks them against point location.
//!
//! All numeric code is generic over the [`Scalar`] trait (`f32`/`f64`);
//! the crate root exports `f64` aliases, which the CLI and the test
//! suites use.

pub mod arrange;
pub mod config;
pub mod dc;
pub mod decomp;
pub mod empc;
pub mod error;
pub mod geom;
pub mod json;
pub mod lp;
pub mod pwa;
pub mod sample;
pub mod scalar;
pub mod verify;

pub use config::Config;
pub use error::Error;
pub use scalar::Scalar;

/// `f64` aliases for the core types; the default precision everywhere.
// WIP pub type Polyhedron = geom::Polyhedron<f64>;
// WIP pub type Hyperplane = geom::Hyperplane<f64>;
pub type LinearProgram = lp::LinearProgram<f64>;
pub type LpResult = lp::LpResult<f64>;
// WIP pub type AffinePiece = pwa::AffinePiece<f64>;
// WIP pub type PwaFunction = pwa::PwaFunction<f64>;
// WIP pub type FoldSets = pwa::FoldSets;
// WIP pub type Decomposition = decomp::Decomposition<f64>;
// WIP pub type FarkasSystem = decomp::opt::FarkasSystem<f64>;
// WIP pub type MpcSpec = empc::MpcSpec<f64>;
// WIP pub type CondensedQp = empc::CondensedQp<f64>;
// WIP pub type CriticalRegion = empc::CriticalRegion<f64>;
// WIP pub type DcForm = dc::DcForm<f64>;
// WIP pub type BenchReport = dc::BenchReport;
