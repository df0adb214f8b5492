//! Projected Newton driver.
//!
//! Each iteration evaluates the element quadratics, resolves the spectral
//! filter (for the adaptive strategy from the trust-region ratio of the last
//! accepted step), solves the filtered system, and backtracks along the
//! resulting direction.

mod line_search;
mod solve;
mod trace;

pub use line_search::{line_search, LineSearchFailure, LineSearchOutcome};
pub use solve::{newton_solve, resolve_pod_shift, total_energy, Problem, SolveError};
pub use trace::{IterationRecord, PhaseTimes, SolveStatus, SolveTrace, StepMode};

use crate::projection::ProjectionStrategy;
use crate::Real;
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T: Real> {
    pub max_iters: usize,
    /// Convergence threshold on `−½ gᵀu` (absolute).
    pub decrement_tol: T,
    pub ls_shrink: T,
    pub ls_armijo_c: T,
    pub ls_max_iters: usize,
    pub strategy: ProjectionStrategy<T>,
    /// Relative floor on the predicted reduction below which ρ is taken as 1.
    pub rho_guard: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 200,
            decrement_tol: T::lit(1e-5),
            ls_shrink: T::lit(0.8),
            ls_armijo_c: T::lit(1e-4),
            ls_max_iters: 64,
            strategy: ProjectionStrategy::adaptive(),
            rho_guard: T::lit(1e-12),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn with_strategy(strategy: ProjectionStrategy<T>) -> Self {
        Self { strategy, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.into()));
        if self.max_iters == 0 {
            return bad("max_iters must be > 0");
        }
        if !(self.decrement_tol > T::zero()) {
            return bad("decrement_tol must be > 0");
        }
        if !(self.ls_shrink > T::zero() && self.ls_shrink < T::one()) {
            return bad("ls_shrink must lie in (0, 1)");
        }
        if !(self.ls_armijo_c >= T::zero() && self.ls_armijo_c < T::one()) {
            return bad("ls_armijo_c must lie in [0, 1)");
        }
        if self.ls_max_iters == 0 {
            return bad("ls_max_iters must be > 0");
        }
        if !(self.rho_guard > T::zero()) {
            return bad("rho_guard must be > 0");
        }
        self.strategy.validate().map_err(|e| SolveError::InvalidConfig(e.to_string()))
    }
}

/// `−½ gᵀu`; nonnegative whenever `u` solves a positive-definite system.
pub fn newton_decrement<T: Real>(g: &DVector<T>, u: &DVector<T>) -> T {
    -T::lit(0.5) * g.dot(u)
}

/// Ratio of actual to model-predicted reduction for the accepted step `u`
/// taken from a point with energy `f_prev` and gradient `g_prev`; `u_h_u` is
/// `uᵀHu` with the raw Hessian there.
///
/// Returns exactly 1 when the predicted reduction is below
/// `guard · max(1, |f_prev|)`.
pub fn trust_region_ratio<T: Real>(f_prev: T, f_cur: T, g_prev: &DVector<T>, u: &DVector<T>, u_h_u: T, guard: T) -> T {
    let predicted = -(g_prev.dot(u) + T::lit(0.5) * u_h_u);
    let actual = f_prev - f_cur;
    if predicted.abs() < guard * T::one().max(f_prev.abs()) {
        return T::one();
    }
    actual / predicted
}
