//! `trace.csv` and `summary.json`.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use trn_core::newton::{PhaseTimes, SolveTrace};
use trn_core::Real;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {msg}")]
    Trace { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

pub const TRACE_HEADER: [&str; 8] = ["iter", "energy", "decrement", "rho", "mode", "ls_iters", "step", "wall_time"];

/// 17 significant digits: enough to round-trip an f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One parsed `trace.csv` row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub decrement: f64,
    pub rho: Option<f64>,
    pub mode: String,
    pub ls_iters: usize,
    pub step: f64,
    pub wall_time: f64,
}

pub fn write_trace_csv<T: Real>(path: &Path, trace: &SolveTrace<T>) -> Result<(), OutputError> {
    let err = |source| OutputError::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(TRACE_HEADER).map_err(err)?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            fmt_f64(r.energy.as_f64()),
            fmt_f64(r.decrement.as_f64()),
            r.rho.map(|v| fmt_f64(v.as_f64())).unwrap_or_default(),
            r.mode.to_string(),
            r.ls_iters.to_string(),
            fmt_f64(r.step.as_f64()),
            fmt_f64(r.wall_time),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|source| OutputError::Io { path: path.into(), source })
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, OutputError> {
    let err = |source| OutputError::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let header = r.headers().map_err(err)?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(OutputError::Trace { path: path.into(), msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()) });
    }
    let rows = r.deserialize().collect::<Result<Vec<TraceRow>, _>>().map_err(err)?;
    if rows.is_empty() {
        return Err(OutputError::Trace { path: path.into(), msg: "trace has no rows".into() });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub direction: f64,
    pub line_search: f64,
    pub ratio: f64,
}

impl From<PhaseTimes> for PhaseSummary {
    fn from(p: PhaseTimes) -> Self {
        Self { direction: p.direction, line_search: p.line_search, ratio: p.ratio }
    }
}

/// Choices that are not visible in the config but shape the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecidedParameters {
    pub energy_variant: String,
    pub lame_parameters: String,
    pub first_iteration_mode: String,
    pub decrement: String,
    pub armijo_c: f64,
    pub rho_model_hessian: String,
    pub pod_shift_scale: String,
    pub fixed_vertices: String,
    pub dirichlet: String,
}

impl DecidedParameters {
    pub fn new(armijo_c: f64, fixed_region: Option<[f64; 2]>) -> Self {
        Self {
            energy_variant: "stable_neo_hookean: mu/2 (I_C - 3) + lambda/2 (J - 1 - mu/lambda)^2, no log term; \
                             arap_vol and symmetric_dirichlet_vol add lambda/2 (J - 1)^2"
                .into(),
            lame_parameters: "mu = E / (2(1+nu)), lambda = E nu / ((1+nu)(1-2nu)), not reparameterized".into(),
            first_iteration_mode: "abs".into(),
            decrement: "-0.5 g.u, absolute threshold".into(),
            armijo_c,
            rho_model_hessian: "raw (unfiltered) Hessian at the step origin, matrix-free".into(),
            pod_shift_scale: "delta_0 = 1e-8 * mean |diag H|".into(),
            fixed_vertices: match fixed_region {
                Some([lo, hi]) => format!("axial slabs: low fraction {lo}, high fraction {hi} (0 = end faces only)"),
                None => "explicit vertex list from the mesh source".into(),
            },
            dirichlet: "eliminated".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub tets: usize,
    pub fixed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    pub iterations: usize,
    pub records: usize,
    pub total_time: f64,
    pub mean_iter_time: f64,
    pub mean_ls_iters: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_decrement: f64,
    pub phase_times: PhaseSummary,
    pub factorizations: usize,
    pub threads: usize,
    pub mesh: MeshStats,
    pub decided: DecidedParameters,
    pub config: crate::config::RunConfig,
}

impl RunSummary {
    pub fn from_trace<T: Real>(trace: &SolveTrace<T>, mesh: MeshStats, config: crate::config::RunConfig) -> Self {
        let total_time = trace.total_time();
        Self {
            status: trace.status.name().into(),
            iterations: trace.iterations(),
            records: trace.records.len(),
            total_time,
            mean_iter_time: if trace.records.is_empty() { 0.0 } else { total_time / trace.records.len() as f64 },
            mean_ls_iters: trace.mean_ls_iters(),
            initial_energy: trace.records.first().map_or(trace.final_energy, |r| r.energy).as_f64(),
            final_energy: trace.final_energy.as_f64(),
            final_decrement: trace.records.last().map_or(0.0, |r| r.decrement.as_f64()),
            phase_times: trace.phase_totals().into(),
            factorizations: trace.records.iter().map(|r| r.factorizations).sum(),
            threads: rayon::current_num_threads(),
            decided: DecidedParameters::new(config.solver.ls_armijo_c, config.scenario.fixed_region),
            mesh,
            config,
        }
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), OutputError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| OutputError::Json { path: path.into(), source })?;
    std::fs::write(path, text + "\n").map_err(|source| OutputError::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 1e8] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn empty_trace_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, TRACE_HEADER.join(",") + "\n").unwrap();
        assert!(matches!(read_trace_csv(&p), Err(OutputError::Trace { .. })));
        std::fs::write(&p, "").unwrap();
        assert!(read_trace_csv(&p).is_err());
    }
}
