use super::{
    line_search, newton_decrement, trust_region_ratio, IterationRecord, PhaseTimes, SolveStatus, SolveTrace,
    SolverConfig, StepMode,
};
use crate::assembly::{
    assemble_with_hessians, build_pattern, quadratic_form, AssemblyError, DofMap, SparseCholesky, SystemLayout,
};
use crate::energy::{element_energy, element_quadratics, ElementQuadratics, EnergyError, EnergyModel, MaterialParams, Matrix12};
use crate::mesh::{apply_scenario, precompute_rest, MeshError, RestData, ScenarioSpec, TetMesh};
use crate::projection::{project_element, resolve_adaptive, ProjectionStrategy, SpectralMode};
use crate::Real;
use nalgebra::{DVector, Vector3};
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial configuration has infinite energy")]
    InfeasibleStart,
}

/// Everything a solve needs besides the solver settings.
#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub mesh: TetMesh<T>,
    pub rest: RestData<T>,
    pub model: EnergyModel,
    pub params: MaterialParams<T>,
    pub initial_positions: Vec<Vector3<T>>,
    /// Sorted, unique.
    pub fixed: Vec<usize>,
}

impl<T: Real> Problem<T> {
    pub fn new(
        mesh: TetMesh<T>,
        model: EnergyModel,
        params: MaterialParams<T>,
        scenario: &ScenarioSpec<T>,
    ) -> Result<Self, SolveError> {
        let rest = precompute_rest(&mesh)?;
        let state = apply_scenario(&mesh, scenario)?;
        Ok(Self { mesh, rest, model, params, initial_positions: state.initial_positions, fixed: state.fixed })
    }

    /// Problem with explicitly given start positions and fixed set.
    pub fn with_state(
        mesh: TetMesh<T>,
        model: EnergyModel,
        params: MaterialParams<T>,
        initial_positions: Vec<Vector3<T>>,
        mut fixed: Vec<usize>,
    ) -> Result<Self, SolveError> {
        if initial_positions.len() != mesh.vertex_count() {
            return Err(MeshError::PositionCount { expected: mesh.vertex_count(), got: initial_positions.len() }.into());
        }
        fixed.sort_unstable();
        fixed.dedup();
        if fixed.last().is_some_and(|&v| v >= mesh.vertex_count()) {
            return Err(MeshError::InvalidFixed("vertex out of range".into()).into());
        }
        let rest = precompute_rest(&mesh)?;
        Ok(Self { mesh, rest, model, params, initial_positions, fixed })
    }

    fn element_energies(&self, positions: &[Vector3<T>]) -> Vec<T> {
        (0..self.mesh.tet_count())
            .into_par_iter()
            .map(|e| {
                let x = self.mesh.element_positions(e, positions);
                element_energy(self.model, &self.params, &x, &self.rest.dm_inv[e], self.rest.volume[e])
            })
            .collect()
    }

    fn element_quadratics(&self, positions: &[Vector3<T>]) -> Result<Vec<ElementQuadratics<T>>, EnergyError> {
        (0..self.mesh.tet_count())
            .into_par_iter()
            .map(|e| {
                let x = self.mesh.element_positions(e, positions);
                element_quadratics(self.model, &self.params, &x, &self.rest.dm_inv[e], self.rest.volume[e])
            })
            .collect()
    }
}

/// Total energy, summed in element order so results do not depend on threading.
pub fn total_energy<T: Real>(problem: &Problem<T>, positions: &[Vector3<T>]) -> T {
    problem.element_energies(positions).into_iter().fold(T::zero(), |acc, e| acc + e)
}

/// Diagonal shift schedule: tries `δ = 0`, then `δ₀ = 1e-8·scale` growing by
/// `growth` while `δ ≤ 1e8·scale`. Returns the accepted shift and the number
/// of attempts, or `None` when the schedule is exhausted.
///
/// `scale` is the mean absolute diagonal of the matrix.
pub fn resolve_pod_shift<T: Real>(scale: T, growth: T, mut try_factor: impl FnMut(T) -> bool) -> Option<(T, usize)> {
    let mut attempts = 1;
    if try_factor(T::zero()) {
        return Some((T::zero(), attempts));
    }
    let scale = if scale > T::zero() && scale.is_finite() { scale } else { T::one() };
    let limit = T::lit(1e8) * scale;
    let mut delta = T::lit(1e-8) * scale;
    while delta <= limit {
        attempts += 1;
        if try_factor(delta) {
            return Some((delta, attempts));
        }
        delta *= growth;
    }
    None
}

struct Direction<T: Real> {
    u: DVector<T>,
    gradient: DVector<T>,
    energy: T,
    mode: StepMode<T>,
    factorizations: usize,
}

fn compute_direction<T: Real>(
    layout: &SystemLayout,
    chol: &mut SparseCholesky<T>,
    elems: &[ElementQuadratics<T>],
    strategy: &ProjectionStrategy<T>,
    adaptive_mode: Option<SpectralMode<T>>,
) -> Result<Direction<T>, (StepMode<T>, usize)> {
    let (spectral, floor) = match *strategy {
        ProjectionStrategy::Unprojected | ProjectionStrategy::PodShift { .. } => (None, T::zero()),
        ProjectionStrategy::Clamp { floor } => (Some(SpectralMode::Clamp), floor),
        ProjectionStrategy::Abs => (Some(SpectralMode::Abs), T::zero()),
        ProjectionStrategy::Adaptive { .. } => (adaptive_mode, T::zero()),
        ProjectionStrategy::FixedBlend { w } => (Some(SpectralMode::Blend(w)), T::zero()),
        ProjectionStrategy::ThresholdAbs { tau } => (Some(SpectralMode::ThresholdAbs(tau)), T::zero()),
    };

    let system = match spectral {
        Some(mode) => {
            let projected: Vec<Matrix12<T>> = elems
                .par_iter()
                .map(|q| project_element(&q.hessian, mode, floor).expect("element Hessians are symmetrized"))
                .collect();
            assemble_with_hessians(layout, elems, &projected)
        }
        None => assemble_with_hessians(layout, elems, &elems.iter().map(|q| &q.hessian).collect::<Vec<_>>()),
    }
    .map_err(|_| (StepMode::Unprojected, 0))?;

    let (mode, factorizations) = match (*strategy, spectral) {
        (_, Some(mode)) => {
            chol.factor(layout, &system.hessian_values, T::zero()).map_err(|_| (StepMode::Spectral(mode), 1))?;
            (StepMode::Spectral(mode), 1)
        }
        (ProjectionStrategy::PodShift { shift_growth }, None) => {
            let n = T::from_usize(layout.dim()).unwrap();
            let scale = layout.diagonal_slots().iter().fold(T::zero(), |a, &s| a + system.hessian_values[s].abs()) / n;
            let values = &system.hessian_values;
            let (delta, attempts) = resolve_pod_shift(scale, shift_growth, |d| chol.factor(layout, values, d).is_ok())
                .ok_or((StepMode::PodShift(T::infinity()), 0))?;
            (StepMode::PodShift(delta), attempts)
        }
        _ => {
            chol.factor(layout, &system.hessian_values, T::zero()).map_err(|_| (StepMode::Unprojected, 1))?;
            (StepMode::Unprojected, 1)
        }
    };

    let u = -chol.solve(layout, &system.gradient);
    Ok(Direction { u, gradient: system.gradient, energy: system.energy, mode, factorizations })
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Runs projected Newton from the problem's initial state.
///
/// Solver outcomes (convergence, iteration cap, line-search failure, failed
/// factorization) are reported through [`SolveTrace::status`]; `Err` is
/// reserved for inputs that cannot start a solve.
pub fn newton_solve<T: Real>(problem: &Problem<T>, cfg: &SolverConfig<T>) -> Result<SolveTrace<T>, SolveError> {
    cfg.validate()?;
    let layout = build_pattern(&problem.mesh, DofMap::new(&problem.mesh, &problem.fixed));
    let mut chol = SparseCholesky::new(&layout)?;
    let dofmap = layout.dofmap();

    let mut x = problem.initial_positions.clone();
    for &v in &problem.fixed {
        x[v] = problem.initial_positions[v];
    }
    let mut f = total_energy(problem, &x);
    if !f.is_finite() {
        return Err(SolveError::InfeasibleStart);
    }

    let rho_eps = match cfg.strategy {
        ProjectionStrategy::Adaptive { rho_eps } => Some(rho_eps),
        _ => None,
    };

    // (energy, gradient, accepted displacement, uᵀHu) of the previous iteration
    let mut previous: Option<(T, DVector<T>, DVector<T>, T)> = None;
    let mut records = Vec::new();
    let mut status = SolveStatus::MaxIters;

    for iter in 0..cfg.max_iters {
        let started = Instant::now();
        let mut phases = PhaseTimes::default();

        let rho = previous
            .as_ref()
            .map(|(f_prev, g_prev, s, s_h_s)| trust_region_ratio(*f_prev, f, g_prev, s, *s_h_s, cfg.rho_guard));
        let adaptive_mode = rho_eps.map(|eps| match rho {
            None => SpectralMode::Abs,
            Some(r) => resolve_adaptive(r, eps),
        });

        let dir_start = Instant::now();
        let elems = problem.element_quadratics(&x)?;
        let direction = compute_direction(&layout, &mut chol, &elems, &cfg.strategy, adaptive_mode);
        phases.direction = secs(dir_start);

        let dir = match direction {
            Ok(d) => d,
            Err((mode, factorizations)) => {
                records.push(IterationRecord {
                    iter,
                    energy: f,
                    decrement: T::infinity(),
                    rho,
                    mode,
                    ls_iters: 0,
                    step: T::zero(),
                    wall_time: secs(started),
                    phases,
                    factorizations,
                });
                status = SolveStatus::NotPositiveDefinite;
                break;
            }
        };

        let decrement = newton_decrement(&dir.gradient, &dir.u);
        let mut record = IterationRecord {
            iter,
            energy: f,
            decrement,
            rho,
            mode: dir.mode,
            ls_iters: 0,
            step: T::zero(),
            wall_time: 0.0,
            phases,
            factorizations: dir.factorizations,
        };
        if decrement < cfg.decrement_tol {
            record.wall_time = secs(started);
            records.push(record);
            status = SolveStatus::Converged;
            break;
        }

        let ls_start = Instant::now();
        let slope = dir.gradient.dot(&dir.u);
        let mut trial = x.clone();
        let outcome = line_search(
            f,
            slope,
            |t| {
                trial.copy_from_slice(&x);
                dofmap.apply_step(&mut trial, &dir.u, t);
                total_energy(problem, &trial)
            },
            cfg.ls_shrink,
            cfg.ls_armijo_c,
            cfg.ls_max_iters,
        );
        record.phases.line_search = secs(ls_start);

        let accepted = match outcome {
            Ok(o) => o,
            Err(fail) => {
                record.ls_iters = fail.ls_iters;
                record.wall_time = secs(started);
                records.push(record);
                status = SolveStatus::LineSearchFailed;
                break;
            }
        };
        record.ls_iters = accepted.ls_iters;
        record.step = accepted.step;

        let ratio_start = Instant::now();
        let s = &dir.u * accepted.step;
        let s_h_s = quadratic_form(&layout, &elems, &s);
        record.phases.ratio = secs(ratio_start);

        dofmap.apply_step(&mut x, &dir.u, accepted.step);
        previous = Some((f, dir.gradient, s, s_h_s));
        debug_assert_eq!(dir.energy, f);
        f = accepted.value;
        record.wall_time = secs(started);
        records.push(record);
    }

    Ok(SolveTrace { records, status, final_positions: x, final_energy: f })
}
