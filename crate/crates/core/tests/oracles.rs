//! Analytic derivatives and sparse assembly against independent dense/FD oracles.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trn_core::assembly::{assemble, build_pattern, quadratic_form, DofMap};
use trn_core::energy::fd::{default_step, fd_gradient, fd_hessian};
use trn_core::energy::{element_quadratics, ElementQuadratics, EnergyModel, MaterialParams};
use trn_core::mesh::{generate_beam, precompute_rest, TetMesh};

fn random_state(rng: &mut impl Rng, amplitude: f64) -> [Vector3<f64>; 4] {
    let rest = [Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::z()];
    rest.map(|p| p + Vector3::from_fn(|_, _| rng.gen_range(-amplitude..amplitude)))
}

fn rel(a: f64, b: f64) -> f64 {
    a / b.max(1e-300)
}

#[test]
fn element_derivatives_match_finite_differences() {
    let dm_inv = Matrix3::identity();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for model in EnergyModel::all() {
        let mut checked = 0;
        while checked < 40 {
            let poisson = rng.gen_range(0.0..0.49);
            let params = MaterialParams::new(1.0, poisson).unwrap();
            let x = random_state(&mut rng, 0.4);
            let j = (x[1] - x[0]).cross(&(x[2] - x[0])).dot(&(x[3] - x[0]));
            if model == EnergyModel::SymmetricDirichletVol && j < 0.05 {
                continue;
            }
            let q = element_quadratics(model, &params, &x, &dm_inv, 1.0 / 6.0).unwrap();
            let h = default_step(&x);
            let g_fd = fd_gradient(model, &params, &x, &dm_inv, 1.0 / 6.0, h).unwrap();
            // Hessian differences need a larger step than gradients for the same accuracy
            let h_fd = fd_hessian(model, &params, &x, &dm_inv, 1.0 / 6.0, h * 100.0).unwrap();
            let eg = rel((q.gradient - g_fd).norm(), q.gradient.norm());
            let eh = rel((q.hessian - h_fd).norm(), q.hessian.norm());
            assert!(eg < 1e-4, "{model:?} gradient rel err {eg}");
            assert!(eh < 1e-3, "{model:?} hessian rel err {eh}");
            checked += 1;
        }
    }
}

fn dense_oracle(mesh: &TetMesh<f64>, fixed: &[usize], elems: &[ElementQuadratics<f64>]) -> (DVector<f64>, DMatrix<f64>, Vec<usize>) {
    // full 3n system, then restricted to free coordinates in vertex order
    let n = 3 * mesh.vertex_count();
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for (tet, q) in mesh.tets().iter().zip(elems) {
        for a in 0..12 {
            let ga = 3 * tet[a / 3] + a % 3;
            g[ga] += q.gradient[a];
            for b in 0..12 {
                h[(ga, 3 * tet[b / 3] + b % 3)] += q.hessian[(a, b)];
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed.contains(&(i / 3))).collect();
    let g_free = DVector::from_fn(free.len(), |i, _| g[free[i]]);
    let h_free = DMatrix::from_fn(free.len(), free.len(), |i, j| h[(free[i], free[j])]);
    (g_free, h_free, free)
}

#[test]
fn sparse_assembly_matches_dense_scatter() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = MaterialParams::new(1e6, 0.45).unwrap();
    for (div, model) in [([1, 1, 1], EnergyModel::StableNeoHookean), ([1, 1, 2], EnergyModel::ArapVol), ([2, 1, 1], EnergyModel::StableNeoHookean), ([1, 2, 2], EnergyModel::SymmetricDirichletVol)] {
        let mesh = generate_beam::<f64>(div, [1.0, 1.0, 1.0]).unwrap();
        assert!(mesh.vertex_count() <= 20);
        let rest = precompute_rest(&mesh).unwrap();
        let x: Vec<_> = mesh.rest_positions().iter().map(|p| p + Vector3::from_fn(|_, _| rng.gen_range(-0.05..0.05))).collect();
        let elems: Vec<_> = (0..mesh.tet_count())
            .map(|e| element_quadratics(model, &params, &mesh.element_positions(e, &x), &rest.dm_inv[e], rest.volume[e]).unwrap())
            .collect();
        for fixed in [vec![], vec![0], vec![0, 3, 5]] {
            let dofmap = DofMap::new(&mesh, &fixed);
            let layout = build_pattern(&mesh, dofmap.clone());
            let sys = assemble(&layout, &elems).unwrap();
            let (g_ref, h_ref, free) = dense_oracle(&mesh, &fixed, &elems);

            // permute the sparse result back to vertex order
            let perm: Vec<usize> = free.iter().map(|&i| dofmap.free_index(i / 3).unwrap() + i % 3).collect();
            let h_sparse = layout.to_dense(&sys.hessian_values);
            let h = DMatrix::from_fn(free.len(), free.len(), |i, j| h_sparse[(perm[i], perm[j])]);
            let g = DVector::from_fn(free.len(), |i, _| sys.gradient[perm[i]]);
            assert!((&h - &h_ref).norm() <= 1e-12 * h_ref.norm());
            assert!((&g - &g_ref).norm() <= 1e-12 * g_ref.norm().max(1.0));

            let u_perm = DVector::from_fn(free.len(), |_, _| rng.gen_range(-1.0..1.0));
            let mut u = DVector::zeros(free.len());
            for i in 0..free.len() {
                u[perm[i]] = u_perm[i];
            }
            let q_ref = u_perm.dot(&(&h_ref * &u_perm));
            let q = quadratic_form(&layout, &elems, &u);
            assert!((q - q_ref).abs() <= 1e-10 * q_ref.abs(), "{q} vs {q_ref}");
        }
    }
}
