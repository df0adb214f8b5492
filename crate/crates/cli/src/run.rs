use crate::config::{resolve_path, ConfigError, RunConfig};
use crate::output::{write_json, write_trace_csv, MeshStats, OutputError, RunSummary};
use std::path::{Path, PathBuf};
use trn_core::mesh::export_vtk;
use trn_core::newton::{newton_solve, Problem, SolveError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("solver could not start: {0}")]
    Solve(#[from] SolveError),
    #[error("cannot create {path}: {source}")]
    CreateDir { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summary: RunSummary,
}

/// Solves one configuration and writes `trace.csv`, `summary.json` and optionally `final.vtk`.
///
/// `config_path` anchors relative paths. Everything is validated before the
/// output directory is created, so a bad config leaves no outputs behind.
pub fn execute_run(config: &RunConfig, config_path: &Path) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let mesh = config.mesh.build::<f64>(config_path)?;
    let scenario = config.scenario.to_spec::<f64>()?;
    let params = config.material.params::<f64>()?;
    let solver = config.solver.to_config::<f64>()?;
    let problem = Problem::new(mesh, config.material.model.into(), params, &scenario)?;

    let trace = newton_solve(&problem, &solver)?;

    let output_dir = resolve_path(config_path, &config.output_dir);
    std::fs::create_dir_all(&output_dir).map_err(|source| RunError::CreateDir { path: output_dir.clone(), source })?;
    write_trace_csv(&output_dir.join("trace.csv"), &trace)?;
    let stats = MeshStats { vertices: problem.mesh.vertex_count(), tets: problem.mesh.tet_count(), fixed: problem.fixed.len() };
    let summary = RunSummary::from_trace(&trace, stats, config.clone());
    write_json(&output_dir.join("summary.json"), &summary)?;
    if config.emit_vtk {
        export_vtk(&problem.mesh, &trace.final_positions, &output_dir.join("final.vtk")).map_err(ConfigError::from)?;
    }
    Ok(RunOutcome { output_dir, summary })
}
