use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome<T: Real> {
    pub step: T,
    /// Number of trial evaluations, including the accepted one.
    pub ls_iters: usize,
    pub value: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("line search found no acceptable step in {ls_iters} trials")]
pub struct LineSearchFailure {
    pub ls_iters: usize,
}

/// Backtracking from step 1 by `shrink` until the Armijo condition
/// `φ(t) ≤ f0 + c·t·slope` holds. Non-finite trial values simply fail the test.
///
/// `phi(t)` is the objective at `x + t·u` and `slope = gᵀu`.
pub fn line_search<T: Real>(
    f0: T,
    slope: T,
    mut phi: impl FnMut(T) -> T,
    shrink: T,
    armijo_c: T,
    max_iters: usize,
) -> Result<LineSearchOutcome<T>, LineSearchFailure> {
    let mut step = T::one();
    for k in 1..=max_iters {
        let value = phi(step);
        if value.is_finite() && value <= f0 + armijo_c * step * slope {
            return Ok(LineSearchOutcome { step, ls_iters: k, value });
        }
        step *= shrink;
    }
    Err(LineSearchFailure { ls_iters: max_iters })
}
