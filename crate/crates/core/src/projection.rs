//! Per-element spectral filtering of Hessians.
//!
//! Every filter here acts on the eigenvalues of a symmetric element matrix
//! and keeps its eigenvectors. `Blend(w)` interpolates between the raw
//! spectrum (`w = 0`), clamping at zero (`w = 0.5`) and absolute values
//! (`w = 1`).

use crate::energy::Matrix12;
use crate::Real;
use nalgebra::allocator::Allocator;
use nalgebra::{DefaultAllocator, Dim, DimDiff, DimSub, OMatrix, OVector, SymmetricEigen, U1};
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProjectionError {
    #[error("matrix is not symmetric (asymmetry {asym:e} vs norm {norm:e})")]
    NotSymmetric { asym: f64, norm: f64 },
    #[error("invalid strategy parameter: {0}")]
    InvalidParameter(String),
}

/// Filtering strategy selected for a whole solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionStrategy<T: Real> {
    /// Plain Newton on the raw Hessian; a failed factorization ends the solve.
    Unprojected,
    /// `max(λ, floor)`.
    Clamp { floor: T },
    /// `|λ|`.
    Abs,
    /// Absolute values on the first iteration, then clamp when `|ρ − 1| ≤ rho_eps`
    /// and absolute values otherwise.
    Adaptive { rho_eps: T },
    /// `(1 − w) λ + w |λ|` with a fixed `w ∈ [0, 1]`.
    FixedBlend { w: T },
    /// `|λ|` where `|λ| > tau`, `max(λ, 0)` elsewhere.
    ThresholdAbs { tau: T },
    /// Raw Hessian plus a growing diagonal shift until Cholesky succeeds.
    PodShift { shift_growth: T },
}

impl<T: Real> ProjectionStrategy<T> {
    pub fn clamp() -> Self {
        Self::Clamp { floor: T::zero() }
    }

    pub fn adaptive() -> Self {
        Self::Adaptive { rho_eps: T::lit(0.01) }
    }

    pub fn pod_shift() -> Self {
        Self::PodShift { shift_growth: T::lit(10.0) }
    }

    pub fn validate(&self) -> Result<(), ProjectionError> {
        let bad = |m: &str| Err(ProjectionError::InvalidParameter(m.into()));
        match *self {
            Self::Clamp { floor } if !(floor >= T::zero() && floor.is_finite()) => bad("clamp_floor must be >= 0"),
            Self::Adaptive { rho_eps } if !(rho_eps > T::zero() && rho_eps < T::one()) => {
                bad("rho_eps must lie in (0, 1)")
            }
            Self::FixedBlend { w } if !(w >= T::zero() && w <= T::one()) => bad("blend_w must lie in [0, 1]"),
            Self::ThresholdAbs { tau } if !(tau > T::zero()) => bad("tau must be > 0"),
            Self::PodShift { shift_growth } if !(shift_growth > T::one() && shift_growth.is_finite()) => {
                bad("shift_growth must be > 1")
            }
            _ => Ok(()),
        }
    }

    /// Short name used in file outputs.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Unprojected => "unprojected",
            Self::Clamp { .. } => "clamp",
            Self::Abs => "abs",
            Self::Adaptive { .. } => "adaptive",
            Self::FixedBlend { .. } => "fixed_blend",
            Self::ThresholdAbs { .. } => "threshold_abs",
            Self::PodShift { .. } => "pod_shift",
        }
    }
}

/// Filter applied to every element in one Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralMode<T: Real> {
    Clamp,
    Abs,
    Blend(T),
    ThresholdAbs(T),
}

impl<T: Real> fmt::Display for SpectralMode<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralMode::Clamp => write!(f, "clamp"),
            SpectralMode::Abs => write!(f, "abs"),
            SpectralMode::Blend(w) => write!(f, "blend({})", w.as_f64()),
            SpectralMode::ThresholdAbs(t) => write!(f, "threshold_abs({})", t.as_f64()),
        }
    }
}

/// Eigen-pairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymEig<T: Real, D: Dim>
where
    DefaultAllocator: Allocator<D, D> + Allocator<D>,
{
    pub eigenvalues: OVector<T, D>,
    pub eigenvectors: OMatrix<T, D, D>,
}

fn check_symmetric<T: Real, D: Dim>(h: &OMatrix<T, D, D>) -> Result<(), ProjectionError>
where
    DefaultAllocator: Allocator<D, D>,
{
    let n = h.nrows();
    let mut asym = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            let d = h[(i, j)] - h[(j, i)];
            asym += d * d;
        }
    }
    let asym = asym.sqrt();
    let norm = h.norm();
    if asym > T::lit(1e-8) * norm || !norm.is_finite() {
        return Err(ProjectionError::NotSymmetric { asym: asym.as_f64(), norm: norm.as_f64() });
    }
    Ok(())
}

pub fn eig_sym<T: Real, D>(h: &OMatrix<T, D, D>) -> Result<SymEig<T, D>, ProjectionError>
where
    D: DimSub<U1>,
    DefaultAllocator: Allocator<D, D> + Allocator<DimDiff<D, U1>> + Allocator<D>,
{
    check_symmetric(h)?;
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut eigenvalues = eig.eigenvalues.clone();
    let mut eigenvectors = eig.eigenvectors.clone();
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = eig.eigenvalues[src];
        eigenvectors.column_mut(dst).copy_from(&eig.eigenvectors.column(src));
    }
    Ok(SymEig { eigenvalues, eigenvectors })
}

#[inline]
fn filter_one<T: Real>(lambda: T, mode: SpectralMode<T>, clamp_floor: T) -> T {
    match mode {
        SpectralMode::Clamp => {
            if lambda <= clamp_floor {
                clamp_floor
            } else {
                lambda
            }
        }
        SpectralMode::Abs => lambda.abs(),
        SpectralMode::Blend(w) => (T::one() - w) * lambda + w * lambda.abs(),
        SpectralMode::ThresholdAbs(tau) => {
            if lambda.abs() > tau {
                lambda.abs()
            } else {
                lambda.max(T::zero())
            }
        }
    }
}

pub fn filter_spectrum<T: Real>(eigs: &[T], mode: SpectralMode<T>, clamp_floor: T) -> Vec<T> {
    eigs.iter().map(|&l| filter_one(l, mode, clamp_floor)).collect()
}

/// `|λ|` above `tau`, clamped at zero below.
pub fn resolve_threshold_abs<T: Real>(eigs: &[T], tau: T) -> Vec<T> {
    filter_spectrum(eigs, SpectralMode::ThresholdAbs(tau), T::zero())
}

/// Clamp when the quadratic model predicted the last step well, abs otherwise.
pub fn resolve_adaptive<T: Real>(rho: T, rho_eps: T) -> SpectralMode<T> {
    if (rho - T::one()).abs() <= rho_eps {
        SpectralMode::Clamp
    } else {
        SpectralMode::Abs
    }
}

/// Filters the spectrum of an element Hessian and reassembles `U Λ⁺ Uᵀ`.
pub fn project_element<T: Real>(
    h: &Matrix12<T>,
    mode: SpectralMode<T>,
    clamp_floor: T,
) -> Result<Matrix12<T>, ProjectionError> {
    let eig = eig_sym(h)?;
    let mut scaled = eig.eigenvectors;
    for k in 0..12 {
        let l = filter_one(eig.eigenvalues[k], mode, clamp_floor);
        scaled.column_mut(k).scale_mut(l);
    }
    let out = scaled * eig.eigenvectors.transpose();
    Ok((out + out.transpose()) * T::lit(0.5))
}
