//! Energy densities Ψ(F), first Piola–Kirchhoff stress ∂Ψ/∂F and the 9×9
//! tangent ∂²Ψ/∂F² (column-major `vec(F)` ordering).

use super::{EnergyModel, MaterialParams, Matrix9};
use crate::Real;
use nalgebra::{Matrix3, Vector3, SVD};

/// `∂det(F)/∂F`: columns `f1×f2, f2×f0, f0×f1`.
#[inline]
fn cofactor<T: Real>(f: &Matrix3<T>) -> Matrix3<T> {
    let (c0, c1, c2) = (f.column(0), f.column(1), f.column(2));
    Matrix3::from_columns(&[c1.cross(&c2), c2.cross(&c0), c0.cross(&c1)])
}

/// Directional derivative of [`cofactor`] along `df`.
#[inline]
fn cofactor_derivative<T: Real>(f: &Matrix3<T>, df: &Matrix3<T>) -> Matrix3<T> {
    let (f0, f1, f2) = (f.column(0), f.column(1), f.column(2));
    let (d0, d1, d2) = (df.column(0), df.column(1), df.column(2));
    Matrix3::from_columns(&[
        d1.cross(&f2) + f1.cross(&d2),
        d2.cross(&f0) + f2.cross(&d0),
        d0.cross(&f1) + f0.cross(&d1),
    ])
}

/// SVD with `U`, `V` proper rotations; the sign flip lands on the smallest
/// singular value so `U Vᵀ` is the closest rotation even for inverted `F`.
pub(crate) struct SignedSvd<T: Real> {
    pub u: Matrix3<T>,
    pub sigma: Vector3<T>,
    pub v: Matrix3<T>,
}

pub(crate) fn signed_svd<T: Real>(f: &Matrix3<T>) -> SignedSvd<T> {
    let svd = SVD::new(*f, true, true);
    let mut u = svd.u.expect("U requested");
    let mut v = svd.v_t.expect("V requested").transpose();
    let mut sigma = svd.singular_values;
    let k = sigma.imin();
    if u.determinant() < T::zero() {
        u.column_mut(k).neg_mut();
        sigma[k] = -sigma[k];
    }
    if v.determinant() < T::zero() {
        v.column_mut(k).neg_mut();
        sigma[k] = -sigma[k];
    }
    SignedSvd { u, sigma, v }
}

pub fn density<T: Real>(model: EnergyModel, params: &MaterialParams<T>, f: &Matrix3<T>) -> T {
    let (mu, lambda) = (params.mu, params.lambda);
    let half = T::lit(0.5);
    let one = T::one();
    let j = f.determinant();
    match model {
        EnergyModel::StableNeoHookean => {
            let ic = f.norm_squared();
            let shear = half * mu * (ic - T::lit(3.0));
            if lambda > T::zero() {
                let d = j - one - mu / lambda;
                shear + half * lambda * d * d
            } else {
                // λ → 0 limit with the constant μ²/(2λ) dropped
                shear - mu * (j - one)
            }
        }
        EnergyModel::ArapVol => {
            let s = signed_svd(f).sigma;
            let dev = (s - Vector3::repeat(one)).norm_squared();
            half * mu * dev + half * lambda * (j - one) * (j - one)
        }
        EnergyModel::SymmetricDirichletVol => {
            if !(j > T::zero()) {
                return T::infinity();
            }
            let inv = match f.try_inverse() {
                Some(inv) => inv,
                None => return T::infinity(),
            };
            half * mu * (f.norm_squared() + inv.norm_squared() - T::lit(6.0)) + half * lambda * (j - one) * (j - one)
        }
    }
}

/// `P = ∂Ψ/∂F`. Only meaningful where [`density`] is finite.
pub fn first_piola<T: Real>(model: EnergyModel, params: &MaterialParams<T>, f: &Matrix3<T>) -> Matrix3<T> {
    let (mu, lambda) = (params.mu, params.lambda);
    let one = T::one();
    let j = f.determinant();
    let cof = cofactor(f);
    match model {
        EnergyModel::StableNeoHookean => f * mu + cof * (lambda * (j - one) - mu),
        EnergyModel::ArapVol => {
            let svd = signed_svd(f);
            let r = svd.u * svd.v.transpose();
            (f - r) * mu + cof * (lambda * (j - one))
        }
        EnergyModel::SymmetricDirichletVol => {
            let g = f.try_inverse().unwrap_or_else(Matrix3::zeros);
            let gt = g.transpose();
            (f - gt * g * gt) * mu + cof * (lambda * (j - one))
        }
    }
}

/// `∂²Ψ/∂F²` as a 9×9 matrix acting on column-major `vec(dF)`.
pub fn density_hessian<T: Real>(model: EnergyModel, params: &MaterialParams<T>, f: &Matrix3<T>) -> Matrix9<T> {
    let (mu, lambda) = (params.mu, params.lambda);
    let one = T::one();
    let j = f.determinant();
    let cof = cofactor(f);
    let vol_coeff = match model {
        EnergyModel::StableNeoHookean => lambda * (j - one) - mu,
        _ => lambda * (j - one),
    };

    // per-model shear term as a linear map dF -> dP_shear
    let svd = matches!(model, EnergyModel::ArapVol).then(|| signed_svd(f));
    let inv = matches!(model, EnergyModel::SymmetricDirichletVol).then(|| f.try_inverse().unwrap_or_else(Matrix3::zeros));
    let shear = |df: &Matrix3<T>| -> Matrix3<T> {
        match model {
            EnergyModel::StableNeoHookean => df * mu,
            EnergyModel::ArapVol => {
                // polar rotation derivative: Uᵀ dF V = M, dR = U W Vᵀ with
                // W_ij = (M_ij − M_ji) / (σ_i + σ_j)
                let s = svd.as_ref().unwrap();
                let m = s.u.transpose() * df * s.v;
                let tiny = T::lit(1e-12) * (s.sigma.amax() + one);
                let mut w = Matrix3::zeros();
                for a in 0..3 {
                    for b in 0..3 {
                        if a != b {
                            let mut den = s.sigma[a] + s.sigma[b];
                            if den.abs() < tiny {
                                den = tiny;
                            }
                            w[(a, b)] = (m[(a, b)] - m[(b, a)]) / den;
                        }
                    }
                }
                (df - s.u * w * s.v.transpose()) * mu
            }
            EnergyModel::SymmetricDirichletVol => {
                // d(−Gᵀ G Gᵀ) with dG = −G dF G
                let g = inv.as_ref().unwrap();
                let gt = g.transpose();
                let dft = df.transpose();
                let inner = gt * dft * gt * g * gt + gt * g * df * g * gt + gt * g * gt * dft * gt;
                (df + inner) * mu
            }
        }
    };

    let mut h = Matrix9::zeros();
    for col in 0..9 {
        let mut e = Matrix3::zeros();
        e[(col % 3, col / 3)] = one;
        let dp = shear(&e) + cof * (lambda * cof[(col % 3, col / 3)]) + cofactor_derivative(f, &e) * vol_coeff;
        h.column_mut(col).copy_from_slice(dp.as_slice());
    }
    h
}
