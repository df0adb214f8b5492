//! Projected Newton for tetrahedral hyperelasticity.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` aliases below name the common double-precision
//! instantiations.

mod scalar;

pub mod assembly;
pub mod energy;
pub mod mesh;
pub mod newton;
pub mod projection;

pub use scalar::Real;

pub type TetMesh64 = mesh::TetMesh<f64>;
pub type RestData64 = mesh::RestData<f64>;
pub type ScenarioSpec64 = mesh::ScenarioSpec<f64>;
pub type MaterialParams64 = energy::MaterialParams<f64>;
pub type ProjectionStrategy64 = projection::ProjectionStrategy<f64>;
pub type SolverConfig64 = newton::SolverConfig<f64>;
pub type SolveTrace64 = newton::SolveTrace<f64>;
pub type Problem64 = newton::Problem<f64>;

pub type TetMesh32 = mesh::TetMesh<f32>;
pub type SolverConfig32 = newton::SolverConfig<f32>;
pub type Problem32 = newton::Problem<f32>;
