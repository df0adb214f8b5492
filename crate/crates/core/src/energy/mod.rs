//! Hyperelastic strain energies and their per-element derivatives.
//!
//! Densities are written in terms of the deformation gradient `F`; element
//! quantities follow by the chain rule through the constant map `dF/dx`.

mod density;
pub mod fd;

pub use density::{density, density_hessian, first_piola};

use crate::Real;
use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

pub type Vector12<T> = SVector<T, 12>;
pub type Matrix12<T> = SMatrix<T, 12, 12>;
pub type Matrix9<T> = SMatrix<T, 9, 9>;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnergyError {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("energy is infinite at this state (inverted element)")]
    Infeasible,
}

/// Lamé coefficients together with the engineering constants they came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams<T: Real> {
    pub young: T,
    pub poisson: T,
    pub mu: T,
    pub lambda: T,
}

impl<T: Real> MaterialParams<T> {
    pub fn new(young: T, poisson: T) -> Result<Self, EnergyError> {
        let (mu, lambda) = lame_from_young_poisson(young, poisson)?;
        Ok(Self { young, poisson, mu, lambda })
    }
}

pub fn lame_from_young_poisson<T: Real>(young: T, poisson: T) -> Result<(T, T), EnergyError> {
    if !(young > T::zero()) || !young.is_finite() {
        return Err(EnergyError::InvalidMaterial(format!("young must be > 0, got {young}")));
    }
    if !(poisson >= T::zero() && poisson < T::lit(0.5)) {
        return Err(EnergyError::InvalidMaterial(format!("poisson must lie in [0, 0.5), got {poisson}")));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let mu = young / (two * (one + poisson));
    let lambda = young * poisson / ((one + poisson) * (one - two * poisson));
    Ok((mu, lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnergyModel {
    /// `μ/2 (I_C − 3) + λ/2 (J − 1 − μ/λ)²`
    StableNeoHookean,
    /// `μ/2 ‖F − R‖² + λ/2 (J − 1)²`
    ArapVol,
    /// `μ/2 (‖F‖² + ‖F⁻¹‖² − 6) + λ/2 (J − 1)²`, infinite for `J ≤ 0`
    SymmetricDirichletVol,
}

impl EnergyModel {
    pub fn name(self) -> &'static str {
        match self {
            EnergyModel::StableNeoHookean => "stable_neo_hookean",
            EnergyModel::ArapVol => "arap_vol",
            EnergyModel::SymmetricDirichletVol => "symmetric_dirichlet_vol",
        }
    }

    pub fn all() -> [EnergyModel; 3] {
        [EnergyModel::StableNeoHookean, EnergyModel::ArapVol, EnergyModel::SymmetricDirichletVol]
    }
}

impl std::str::FromStr for EnergyModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::all().into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown energy model `{s}`"))
    }
}

/// `F = Ds · Dm⁻¹` with `Ds` columns `x_k − x_0`.
#[inline]
pub fn deformation_gradient<T: Real>(x: &[Vector3<T>; 4], dm_inv: &Matrix3<T>) -> Matrix3<T> {
    let ds = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
    ds * dm_inv
}

/// `dF/dx` as a 9×12 matrix, rows indexing column-major `vec(F)`, columns the
/// element's vertex-major coordinates.
pub fn shape_derivative<T: Real>(dm_inv: &Matrix3<T>) -> SMatrix<T, 9, 12> {
    // F_ic = Σ_a x_a,i D[a][c], with D[a] rows of Dm⁻¹ for a ≥ 1 and D[0] = −Σ D[a].
    let mut d = [[T::zero(); 3]; 4];
    for c in 0..3 {
        for a in 1..4 {
            d[a][c] = dm_inv[(a - 1, c)];
            d[0][c] -= dm_inv[(a - 1, c)];
        }
    }
    let mut b = SMatrix::<T, 9, 12>::zeros();
    for a in 0..4 {
        for i in 0..3 {
            for c in 0..3 {
                b[(i + 3 * c, 3 * a + i)] = d[a][c];
            }
        }
    }
    b
}

/// Value, gradient and Hessian of one element's energy w.r.t. its 12 coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementQuadratics<T: Real> {
    pub value: T,
    pub gradient: Vector12<T>,
    pub hessian: Matrix12<T>,
}

impl<T: Real> ElementQuadratics<T> {
    pub fn zero() -> Self {
        Self { value: T::zero(), gradient: Vector12::zeros(), hessian: Matrix12::zeros() }
    }
}

/// Element energy `volume · Ψ(F)`; `+∞` where the density is infeasible.
#[inline]
pub fn element_energy<T: Real>(
    model: EnergyModel,
    params: &MaterialParams<T>,
    x: &[Vector3<T>; 4],
    dm_inv: &Matrix3<T>,
    volume: T,
) -> T {
    volume * density(model, params, &deformation_gradient(x, dm_inv))
}

pub fn element_quadratics<T: Real>(
    model: EnergyModel,
    params: &MaterialParams<T>,
    x: &[Vector3<T>; 4],
    dm_inv: &Matrix3<T>,
    volume: T,
) -> Result<ElementQuadratics<T>, EnergyError> {
    let f = deformation_gradient(x, dm_inv);
    let psi = density(model, params, &f);
    if !psi.is_finite() {
        return Err(EnergyError::Infeasible);
    }
    let b = shape_derivative(dm_inv);
    let p = first_piola(model, params, &f);
    let p_vec = SVector::<T, 9>::from_column_slice(p.as_slice());
    let gradient = b.transpose() * p_vec * volume;
    let h9 = density_hessian(model, params, &f);
    let mut hessian = b.transpose() * h9 * b * volume;
    let half = T::lit(0.5);
    hessian = (hessian + hessian.transpose()) * half;
    Ok(ElementQuadratics { value: volume * psi, gradient, hessian })
}
