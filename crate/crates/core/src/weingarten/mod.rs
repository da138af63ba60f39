//! Exact Weingarten calculus for Haar unitary matrices.
//!
//! Expectations of products of entries of a Haar unitary Ψ are sums over
//! admissible permutation pairs (σ, τ) of `Wg(στ⁻¹, d)`. Everything here is
//! exact rational arithmetic; Monte Carlo is only used in tests.

mod gamma;
mod graph;
mod penalty;
mod perm;
mod wg;

pub use gamma::{gamma, gamma_moment_exact, gamma_uncentered, IndexPattern};
pub use graph::{
    banana_maxima, build_graph, covering_class_counts, covering_fixtures, enumerate_coverings, graph_order_bound,
    haar_moment, haar_moment_with_cap, CircuitCovering, Edge, EdgeKind, WeingartenGraph,
    DEFAULT_COVERING_CAP,
};
pub use penalty::{centered_product_moment, penalty_fixtures, rho_penalty, CenteredMoment, PenaltyFixture};
pub use perm::{CycleType, Permutation};
pub use wg::{mobius, one_step_identity_check, orthogonality_residual, wg_exact, wg_leading, wg_table, WgTable};

use num_rational::BigRational;
use num_traits::ToPrimitive;

/// Lossy conversion for reporting.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
