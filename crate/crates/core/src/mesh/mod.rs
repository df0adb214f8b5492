//! Tetrahedral meshes: representation, rest-state precomputation, generators,
//! file formats and deformation scenarios.

mod generate;
pub mod io;
mod scenario;

pub use generate::generate_beam;
pub use io::{export_vtk, load_mesh, read_vtk, write_tetgen, MeshFormat};
pub use scenario::{apply_scenario, ScenarioKind, ScenarioSpec, ScenarioState};

use crate::Real;
use nalgebra::{Matrix3, Vector3};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("tet {tet} references vertex {vertex} but the mesh has {count} vertices")]
    IndexOutOfRange { tet: usize, vertex: usize, count: usize },
    #[error("tet {tet} repeats vertex {vertex}")]
    RepeatedVertex { tet: usize, vertex: usize },
    #[error("tet {tet} is degenerate (|det Dm| = {det:e} below threshold {threshold:e})")]
    Degenerate { tet: usize, det: f64, threshold: f64 },
    #[error("invalid fixed vertex set: {0}")]
    InvalidFixed(String),
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("mesh has no tetrahedra")]
    Empty,
    #[error("expected {expected} positions, got {got}")]
    PositionCount { expected: usize, got: usize },
}

/// A tetrahedral mesh in its rest configuration.
///
/// Every tet has strictly positive rest volume: constructors swap two indices
/// of negatively oriented tets and reject degenerate ones.
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh<T: Real> {
    rest_positions: Vec<Vector3<T>>,
    tets: Vec<[usize; 4]>,
    fixed_vertices: Vec<usize>,
}

impl<T: Real> TetMesh<T> {
    pub fn new(rest_positions: Vec<Vector3<T>>, mut tets: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        if tets.is_empty() {
            return Err(MeshError::Empty);
        }
        let count = rest_positions.len();
        for (t, tet) in tets.iter().enumerate() {
            for (a, &v) in tet.iter().enumerate() {
                if v >= count {
                    return Err(MeshError::IndexOutOfRange { tet: t, vertex: v, count });
                }
                if tet[..a].contains(&v) {
                    return Err(MeshError::RepeatedVertex { tet: t, vertex: v });
                }
            }
        }

        let threshold = degenerate_threshold(&rest_positions);
        for (t, tet) in tets.iter_mut().enumerate() {
            let det = rest_shape(&rest_positions, tet).determinant();
            if det.abs() <= threshold {
                return Err(MeshError::Degenerate { tet: t, det: det.as_f64(), threshold: threshold.as_f64() });
            }
            if det < T::zero() {
                tet.swap(1, 2);
            }
        }

        Ok(Self { rest_positions, tets, fixed_vertices: Vec::new() })
    }

    /// Attaches an explicit fixed-vertex list (used when no slab selection is given).
    pub fn with_fixed_vertices(mut self, fixed: Vec<usize>) -> Result<Self, MeshError> {
        let mut sorted = fixed;
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(MeshError::InvalidFixed("duplicate vertex index".into()));
        }
        if let Some(&v) = sorted.last() {
            if v >= self.rest_positions.len() {
                return Err(MeshError::InvalidFixed(format!("vertex {v} out of range")));
            }
        }
        self.fixed_vertices = sorted;
        Ok(self)
    }

    pub fn rest_positions(&self) -> &[Vector3<T>] {
        &self.rest_positions
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn fixed_vertices(&self) -> &[usize] {
        &self.fixed_vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Vector3<T>, Vector3<T>) {
        bounds(&self.rest_positions)
    }

    /// Element positions gathered from a full position array.
    #[inline]
    pub fn element_positions(&self, elem: usize, positions: &[Vector3<T>]) -> [Vector3<T>; 4] {
        let t = &self.tets[elem];
        [positions[t[0]], positions[t[1]], positions[t[2]], positions[t[3]]]
    }

    /// Signed volume of every element for the given positions.
    pub fn signed_volumes(&self, positions: &[Vector3<T>]) -> Vec<T> {
        let sixth = T::lit(1.0 / 6.0);
        self.tets.iter().map(|t| rest_shape(positions, t).determinant() * sixth).collect()
    }
}

fn bounds<T: Real>(points: &[Vector3<T>]) -> (Vector3<T>, Vector3<T>) {
    let mut lo = Vector3::repeat(T::infinity());
    let mut hi = Vector3::repeat(-T::infinity());
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// `1e-12 · h³` with `h` the bounding-box diagonal.
fn degenerate_threshold<T: Real>(points: &[Vector3<T>]) -> T {
    let (lo, hi) = bounds(points);
    let h = (hi - lo).norm();
    T::lit(1e-12) * h * h * h
}

/// Columns `x1 - x0, x2 - x0, x3 - x0`.
#[inline]
pub(crate) fn rest_shape<T: Real>(positions: &[Vector3<T>], tet: &[usize; 4]) -> Matrix3<T> {
    let x0 = positions[tet[0]];
    Matrix3::from_columns(&[positions[tet[1]] - x0, positions[tet[2]] - x0, positions[tet[3]] - x0])
}

/// Per-element inverse rest-shape matrices and rest volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct RestData<T: Real> {
    pub dm_inv: Vec<Matrix3<T>>,
    pub volume: Vec<T>,
}

impl<T: Real> RestData<T> {
    pub fn total_volume(&self) -> T {
        self.volume.iter().fold(T::zero(), |acc, &v| acc + v)
    }
}

pub fn precompute_rest<T: Real>(mesh: &TetMesh<T>) -> Result<RestData<T>, MeshError> {
    let threshold = degenerate_threshold(mesh.rest_positions());
    let sixth = T::lit(1.0 / 6.0);
    let mut dm_inv = Vec::with_capacity(mesh.tet_count());
    let mut volume = Vec::with_capacity(mesh.tet_count());
    for (t, tet) in mesh.tets().iter().enumerate() {
        let dm = rest_shape(mesh.rest_positions(), tet);
        let det = dm.determinant();
        let degenerate = MeshError::Degenerate { tet: t, det: det.as_f64(), threshold: threshold.as_f64() };
        if det.abs() <= threshold {
            return Err(degenerate);
        }
        dm_inv.push(dm.try_inverse().ok_or(degenerate)?);
        volume.push(det * sixth);
    }
    Ok(RestData { dm_inv, volume })
}
