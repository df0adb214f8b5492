//! JSON configuration files (`"version": 1`).
//!
//! Every optional field has an explicit default so that the resolved
//! configuration, serialized back out, records every value actually used.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use trn_core::energy::{EnergyModel, MaterialParams};
use trn_core::mesh::{generate_beam, load_mesh, MeshFormat, ScenarioKind, ScenarioSpec, TetMesh};
use trn_core::newton::SolverConfig;
use trn_core::projection::ProjectionStrategy;
use trn_core::Real;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: cannot read: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {msg}")]
    Syntax { path: PathBuf, line: usize, column: usize, msg: String },
    #[error("{path}: unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    Version { path: PathBuf, found: u32 },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] trn_core::mesh::MeshError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// Reads and parses a config file, reporting syntax and schema errors with line/column.
pub fn read_json<C: for<'de> Deserialize<'de>>(path: &Path) -> Result<C, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    let syntax = |e: serde_json::Error| ConfigError::Syntax {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    };
    #[derive(Deserialize)]
    struct Versioned {
        version: u32,
    }
    let v: Versioned = serde_json::from_str(&text).map_err(syntax)?;
    if v.version != SCHEMA_VERSION {
        return Err(ConfigError::Version { path: path.into(), found: v.version });
    }
    serde_json::from_str(&text).map_err(syntax)
}

/// Resolves `p` against the directory containing the config file.
pub fn resolve_path(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Tetgen,
    Msh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// Structured box `divisions[0] × divisions[1] × divisions[2]` cells of total size `extent`.
    Beam { divisions: [usize; 3], extent: [f64; 3] },
    File {
        path: PathBuf,
        format: FileFormat,
        /// Explicit Dirichlet vertices, used when the scenario has no `fixed_region`.
        #[serde(default)]
        fixed: Vec<usize>,
    },
}

impl MeshSource {
    pub fn label(&self) -> String {
        match self {
            MeshSource::Beam { divisions: [a, b, c], .. } => format!("beam{a}x{b}x{c}"),
            MeshSource::File { path, .. } => {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mesh".into())
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let MeshSource::Beam { divisions, extent } = self {
            if divisions.contains(&0) {
                return invalid("beam divisions must be positive");
            }
            if extent.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
                return invalid("beam extent must be positive and finite");
            }
        }
        Ok(())
    }

    /// `base` is the config file path, for resolving relative mesh paths.
    pub fn build<T: Real>(&self, base: &Path) -> Result<TetMesh<T>, ConfigError> {
        self.validate()?;
        Ok(match self {
            MeshSource::Beam { divisions, extent } => generate_beam(*divisions, extent.map(T::lit))?,
            MeshSource::File { path, format, fixed } => {
                let format = match format {
                    FileFormat::Tetgen => MeshFormat::Tetgen,
                    FileFormat::Msh => MeshFormat::Msh,
                };
                load_mesh::<T>(&resolve_path(base, path), format)?.with_fixed_vertices(fixed.clone())?
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Identity,
    Stretch,
    Compress,
    Bend,
    Twist,
}

impl From<ScenarioName> for ScenarioKind {
    fn from(s: ScenarioName) -> Self {
        match s {
            ScenarioName::Identity => ScenarioKind::Identity,
            ScenarioName::Stretch => ScenarioKind::Stretch,
            ScenarioName::Compress => ScenarioKind::Compress,
            ScenarioName::Bend => ScenarioKind::Bend,
            ScenarioName::Twist => ScenarioKind::Twist,
        }
    }
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_fixed_region() -> Option<[f64; 2]> {
    Some([0.0, 0.0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioName,
    /// Axial scale (stretch/compress) or total angle in radians (bend/twist). Ignored for identity.
    #[serde(default = "one")]
    pub magnitude: f64,
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
    /// Axial fractions pinned at the low and high end; `null` uses the mesh's explicit list.
    #[serde(default = "default_fixed_region")]
    pub fixed_region: Option<[f64; 2]>,
}

fn one() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn label(&self) -> String {
        match self.kind {
            ScenarioName::Identity => "identity".into(),
            k => format!("{}{}", ScenarioKind::from(k).name(), self.magnitude),
        }
    }

    pub fn to_spec<T: Real>(&self) -> Result<ScenarioSpec<T>, ConfigError> {
        let mut spec = ScenarioSpec::new(self.kind.into(), T::lit(self.magnitude));
        spec.axis = nalgebra::Vector3::from(self.axis.map(T::lit));
        spec.fixed_region = self.fixed_region.map(|[a, b]| (T::lit(a), T::lit(b)));
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    StableNeoHookean,
    ArapVol,
    SymmetricDirichletVol,
}

impl From<ModelName> for EnergyModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::StableNeoHookean => EnergyModel::StableNeoHookean,
            ModelName::ArapVol => EnergyModel::ArapVol,
            ModelName::SymmetricDirichletVol => EnergyModel::SymmetricDirichletVol,
        }
    }
}

fn default_young() -> f64 {
    1e8
}

fn default_model() -> ModelName {
    ModelName::StableNeoHookean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    #[serde(default = "default_young")]
    pub young: f64,
    pub poisson: f64,
    #[serde(default = "default_model")]
    pub model: ModelName,
}

impl MaterialConfig {
    pub fn params<T: Real>(&self) -> Result<MaterialParams<T>, ConfigError> {
        MaterialParams::new(T::lit(self.young), T::lit(self.poisson)).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    Unprojected,
    Clamp {
        #[serde(default)]
        floor: f64,
    },
    Abs,
    Adaptive {
        #[serde(default = "default_rho_eps")]
        rho_eps: f64,
    },
    FixedBlend {
        w: f64,
    },
    ThresholdAbs {
        tau: f64,
    },
    PodShift {
        #[serde(default = "default_shift_growth")]
        shift_growth: f64,
    },
}

fn default_rho_eps() -> f64 {
    0.01
}

fn default_shift_growth() -> f64 {
    10.0
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig::Adaptive { rho_eps: default_rho_eps() }
    }
}

impl StrategyConfig {
    pub fn to_strategy<T: Real>(self) -> ProjectionStrategy<T> {
        match self {
            StrategyConfig::Unprojected => ProjectionStrategy::Unprojected,
            StrategyConfig::Clamp { floor } => ProjectionStrategy::Clamp { floor: T::lit(floor) },
            StrategyConfig::Abs => ProjectionStrategy::Abs,
            StrategyConfig::Adaptive { rho_eps } => ProjectionStrategy::Adaptive { rho_eps: T::lit(rho_eps) },
            StrategyConfig::FixedBlend { w } => ProjectionStrategy::FixedBlend { w: T::lit(w) },
            StrategyConfig::ThresholdAbs { tau } => ProjectionStrategy::ThresholdAbs { tau: T::lit(tau) },
            StrategyConfig::PodShift { shift_growth } => ProjectionStrategy::PodShift { shift_growth: T::lit(shift_growth) },
        }
    }

    pub fn label(&self) -> String {
        match *self {
            StrategyConfig::Unprojected => "unprojected".into(),
            StrategyConfig::Clamp { floor: 0.0 } => "clamp".into(),
            StrategyConfig::Clamp { floor } => format!("clamp({floor})"),
            StrategyConfig::Abs => "abs".into(),
            StrategyConfig::Adaptive { .. } => "adaptive".into(),
            StrategyConfig::FixedBlend { w } => format!("fixed_blend({w})"),
            StrategyConfig::ThresholdAbs { tau } => format!("threshold_abs({tau})"),
            StrategyConfig::PodShift { .. } => "pod_shift".into(),
        }
    }
}

/// Solver settings; `null`/absent fields take the defaults shown in the resolved echo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub decrement_tol: f64,
    pub ls_shrink: f64,
    pub ls_armijo_c: f64,
    pub ls_max_iters: usize,
    pub strategy: StrategyConfig,
    pub rho_guard: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::<f64>::default();
        Self {
            max_iters: d.max_iters,
            decrement_tol: d.decrement_tol,
            ls_shrink: d.ls_shrink,
            ls_armijo_c: d.ls_armijo_c,
            ls_max_iters: d.ls_max_iters,
            strategy: StrategyConfig::default(),
            rho_guard: d.rho_guard,
        }
    }
}

impl SolverSettings {
    pub fn to_config<T: Real>(&self) -> Result<SolverConfig<T>, ConfigError> {
        let cfg = SolverConfig {
            max_iters: self.max_iters,
            decrement_tol: T::lit(self.decrement_tol),
            ls_shrink: T::lit(self.ls_shrink),
            ls_armijo_c: T::lit(self.ls_armijo_c),
            ls_max_iters: self.ls_max_iters,
            strategy: self.strategy.to_strategy(),
            rho_guard: T::lit(self.rho_guard),
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub mesh: MeshSource,
    pub scenario: ScenarioConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub solver: SolverSettings,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_vtk: bool,
    /// Recorded for reproducibility; the solve itself is deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    /// Checks everything that can be checked without touching the file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.mesh.validate()?;
        self.scenario.to_spec::<f64>()?;
        self.material.params::<f64>()?;
        self.solver.to_config::<f64>()?;
        Ok(())
    }
}

/// Cross product of meshes × scenarios × Poisson ratios × strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub version: u32,
    pub meshes: Vec<MeshSource>,
    pub scenarios: Vec<ScenarioConfig>,
    pub poisson: Vec<f64>,
    pub strategies: Vec<StrategyConfig>,
    #[serde(default = "default_young")]
    pub young: f64,
    #[serde(default = "default_model")]
    pub model: ModelName,
    /// Shared solver settings; each cell overrides `strategy`.
    #[serde(default)]
    pub solver: SolverSettings,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_vtk: bool,
    #[serde(default)]
    pub seed: u64,
    /// Concurrent cells; `--jobs` overrides. 0 = one per available core.
    #[serde(default = "one_usize")]
    pub jobs: usize,
}

fn one_usize() -> usize {
    1
}

/// One cell of a bench matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub index: usize,
    pub mesh: String,
    pub scenario: String,
    pub poisson: f64,
    pub strategy: String,
    pub run: RunConfig,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.meshes.is_empty() || self.scenarios.is_empty() || self.poisson.is_empty() || self.strategies.is_empty() {
            return invalid("bench matrix must have at least one mesh, scenario, poisson value and strategy");
        }
        self.cells().iter().try_for_each(|c| c.run.validate())
    }

    /// Cells in matrix order: meshes, then scenarios, then Poisson ratios, then strategies.
    pub fn cells(&self) -> Vec<BenchCell> {
        let mut cells = Vec::new();
        for (mi, mesh) in self.meshes.iter().enumerate() {
            let mesh_label = format!("{}{}", mesh.label(), if self.meshes.len() > 1 { format!("#{mi}") } else { String::new() });
            for scenario in &self.scenarios {
                for &poisson in &self.poisson {
                    for &strategy in &self.strategies {
                        let index = cells.len();
                        let dir = format!("{index:03}_{}_{}_nu{}_{}", mesh_label, scenario.label(), poisson, strategy.label());
                        cells.push(BenchCell {
                            index,
                            mesh: mesh_label.clone(),
                            scenario: scenario.label(),
                            poisson,
                            strategy: strategy.label(),
                            run: RunConfig {
                                version: SCHEMA_VERSION,
                                mesh: mesh.clone(),
                                scenario: scenario.clone(),
                                material: MaterialConfig { young: self.young, poisson, model: self.model },
                                solver: SolverSettings { strategy, ..self.solver },
                                output_dir: self.output_dir.join("cells").join(sanitize(&dir)),
                                emit_vtk: self.emit_vtk,
                                seed: self.seed,
                            },
                        });
                    }
                }
            }
        }
        cells
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "._-#".contains(c) { c } else { '_' }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenMeshConfig {
    pub version: u32,
    pub divisions: [usize; 3],
    pub extent: [f64; 3],
    /// Output base path; `.node` and `.ele` are appended.
    pub out: PathBuf,
}
