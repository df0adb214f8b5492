//! Central finite-difference oracles on element energies.
//!
//! These use element values only; they never touch the analytic derivative
//! path they are meant to check.

use super::{element_energy, EnergyError, EnergyModel, MaterialParams, Matrix12, Vector12};
use crate::Real;
use nalgebra::{Matrix3, Vector3};

fn perturbed<T: Real>(x: &[Vector3<T>; 4], moves: &[(usize, T)]) -> [Vector3<T>; 4] {
    let mut y = *x;
    for &(k, d) in moves {
        y[k / 3][k % 3] += d;
    }
    y
}

fn checked<T: Real>(v: T) -> Result<T, EnergyError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EnergyError::Infeasible)
    }
}

/// Mean edge length of the element, the natural scale for the step.
pub fn characteristic_length<T: Real>(x: &[Vector3<T>; 4]) -> T {
    let mut sum = T::zero();
    for a in 0..4 {
        for b in a + 1..4 {
            sum += (x[a] - x[b]).norm();
        }
    }
    sum / T::lit(6.0)
}

/// Gradient of an arbitrary element energy by central differences.
pub fn fd_gradient_of<T: Real>(
    energy: impl Fn(&[Vector3<T>; 4]) -> T,
    x: &[Vector3<T>; 4],
    h: T,
) -> Result<Vector12<T>, EnergyError> {
    let two_h = T::lit(2.0) * h;
    let mut g = Vector12::zeros();
    for k in 0..12 {
        let fp = checked(energy(&perturbed(x, &[(k, h)])))?;
        let fm = checked(energy(&perturbed(x, &[(k, -h)])))?;
        g[k] = (fp - fm) / two_h;
    }
    Ok(g)
}

/// Hessian of an arbitrary element energy by second-order central differences of values.
pub fn fd_hessian_of<T: Real>(
    energy: impl Fn(&[Vector3<T>; 4]) -> T,
    x: &[Vector3<T>; 4],
    h: T,
) -> Result<Matrix12<T>, EnergyError> {
    let mut hess = Matrix12::zeros();
    let f0 = checked(energy(x))?;
    let h2 = h * h;
    for i in 0..12 {
        let fp = checked(energy(&perturbed(x, &[(i, h)])))?;
        let fm = checked(energy(&perturbed(x, &[(i, -h)])))?;
        hess[(i, i)] = (fp - T::lit(2.0) * f0 + fm) / h2;
        for j in i + 1..12 {
            let fpp = checked(energy(&perturbed(x, &[(i, h), (j, h)])))?;
            let fpm = checked(energy(&perturbed(x, &[(i, h), (j, -h)])))?;
            let fmp = checked(energy(&perturbed(x, &[(i, -h), (j, h)])))?;
            let fmm = checked(energy(&perturbed(x, &[(i, -h), (j, -h)])))?;
            let v = (fpp - fpm - fmp + fmm) / (T::lit(4.0) * h2);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Default step: `1e-5 ×` the element's characteristic edge length.
pub fn default_step<T: Real>(x: &[Vector3<T>; 4]) -> T {
    T::lit(1e-5) * characteristic_length(x)
}

pub fn fd_gradient<T: Real>(
    model: EnergyModel,
    params: &MaterialParams<T>,
    x: &[Vector3<T>; 4],
    dm_inv: &Matrix3<T>,
    volume: T,
    h: T,
) -> Result<Vector12<T>, EnergyError> {
    fd_gradient_of(|y| element_energy(model, params, y, dm_inv, volume), x, h)
}

pub fn fd_hessian<T: Real>(
    model: EnergyModel,
    params: &MaterialParams<T>,
    x: &[Vector3<T>; 4],
    dm_inv: &Matrix3<T>,
    volume: T,
    h: T,
) -> Result<Matrix12<T>, EnergyError> {
    fd_hessian_of(|y| element_energy(model, params, y, dm_inv, volume), x, h)
}
