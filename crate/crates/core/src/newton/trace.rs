use crate::projection::SpectralMode;
use crate::Real;
use nalgebra::Vector3;
use std::fmt;

/// How the Hessian was treated in one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepMode<T: Real> {
    Unprojected,
    Spectral(SpectralMode<T>),
    /// Raw Hessian plus `δ·I`.
    PodShift(T),
}

impl<T: Real> fmt::Display for StepMode<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepMode::Unprojected => write!(f, "unprojected"),
            StepMode::Spectral(m) => write!(f, "{m}"),
            StepMode::PodShift(d) => write!(f, "pod_shift({:e})", d.as_f64()),
        }
    }
}

/// Wall-clock seconds spent in each phase of an iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    /// Element evaluation, filtering, assembly and the linear solve.
    pub direction: f64,
    pub line_search: f64,
    /// Trust-region ratio of the accepted step.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T: Real> {
    pub iter: usize,
    /// Energy at the start of the iteration.
    pub energy: T,
    pub decrement: T,
    /// Ratio of the step that led here; `None` on the first iteration.
    pub rho: Option<T>,
    pub mode: StepMode<T>,
    /// Line-search trials; 0 when no step was taken.
    pub ls_iters: usize,
    /// Accepted step length; 0 when no step was taken.
    pub step: T,
    pub wall_time: f64,
    pub phases: PhaseTimes,
    /// Cholesky factorizations attempted (more than one only for the diagonal-shift strategy).
    pub factorizations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LineSearchFailed,
    NotPositiveDefinite,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::LineSearchFailed => "line_search_failed",
            SolveStatus::NotPositiveDefinite => "not_positive_definite",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace<T: Real> {
    pub records: Vec<IterationRecord<T>>,
    pub status: SolveStatus,
    pub final_positions: Vec<Vector3<T>>,
    /// Energy at `final_positions`.
    pub final_energy: T,
}

impl<T: Real> SolveTrace<T> {
    /// Newton steps actually taken.
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.ls_iters > 0 && r.step > T::zero()).count()
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Mean line-search trials over iterations that took a step.
    pub fn mean_ls_iters(&self) -> f64 {
        let stepped: Vec<_> = self.records.iter().filter(|r| r.ls_iters > 0).collect();
        if stepped.is_empty() {
            return 0.0;
        }
        stepped.iter().map(|r| r.ls_iters as f64).sum::<f64>() / stepped.len() as f64
    }

    pub fn total_time(&self) -> f64 {
        self.records.iter().map(|r| r.wall_time).sum()
    }

    pub fn phase_totals(&self) -> PhaseTimes {
        self.records.iter().fold(PhaseTimes::default(), |acc, r| PhaseTimes {
            direction: acc.direction + r.phases.direction,
            line_search: acc.line_search + r.phases.line_search,
            ratio: acc.ratio + r.phases.ratio,
        })
    }
}
