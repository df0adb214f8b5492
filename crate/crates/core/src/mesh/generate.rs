use super::{MeshError, TetMesh};
use crate::Real;
use nalgebra::Vector3;

/// The six tets of a unit cell, all sharing the `000 -> 111` diagonal.
///
/// Corner bits: x = 1, y = 2, z = 4. Each tet walks from corner 0 to corner 7
/// along one permutation of the axes, so neighbouring cells agree on every
/// shared face diagonal.
const KUHN_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Axis-aligned box `[0, extent]` split into `divisions` cells of six tets each.
///
/// Vertices are numbered with x fastest, then y, then z.
pub fn generate_beam<T: Real>(divisions: [usize; 3], extent: [T; 3]) -> Result<TetMesh<T>, MeshError> {
    if divisions.contains(&0) {
        return Err(MeshError::InvalidGenerator(format!("divisions must be >= 1, got {divisions:?}")));
    }
    if extent.iter().any(|&e| !(e > T::zero()) || !e.is_finite()) {
        return Err(MeshError::InvalidGenerator("extent must be positive and finite".into()));
    }
    let [nx, ny, nz] = divisions;
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);

    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                positions.push(Vector3::new(
                    extent[0] * T::from_usize(i).unwrap() / T::from_usize(nx).unwrap(),
                    extent[1] * T::from_usize(j).unwrap() / T::from_usize(ny).unwrap(),
                    extent[2] * T::from_usize(k).unwrap() / T::from_usize(nz).unwrap(),
                ));
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corner = |c: usize| vid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                for t in KUHN_TETS {
                    tets.push([corner(t[0]), corner(t[1]), corner(t[2]), corner(t[3])]);
                }
            }
        }
    }
    TetMesh::new(positions, tets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::precompute_rest;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_cube() {
        let m = generate_beam([1, 1, 1], [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.tet_count(), 6);
        let rest = precompute_rest(&m).unwrap();
        assert_relative_eq!(rest.total_volume(), 1.0, max_relative = 1e-14);
        for v in &rest.volume {
            assert_relative_eq!(*v, 1.0 / 6.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn beam_counts() {
        // (nx+1)(ny+1)(nz+1) = 3*3*9 and 6*nx*ny*nz = 6*32
        let m = generate_beam([2, 2, 8], [1.0, 1.0, 4.0]).unwrap();
        assert_eq!(m.vertex_count(), 81);
        assert_eq!(m.tet_count(), 192);
    }

    #[test]
    fn zero_division_rejected() {
        assert!(matches!(
            generate_beam([0, 1, 1], [1.0, 1.0, 1.0]),
            Err(MeshError::InvalidGenerator(_))
        ));
        assert!(generate_beam([1, 1, 1], [1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn bit_reproducible() {
        let a = generate_beam([3, 2, 5], [0.3, 0.2, 1.1]).unwrap();
        let b = generate_beam([3, 2, 5], [0.3, 0.2, 1.1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn faces_are_conforming() {
        // every interior triangle is shared by exactly two tets, boundary ones by one
        let m = generate_beam([2, 3, 2], [1.0, 1.0, 1.0]).unwrap();
        let mut faces = std::collections::HashMap::new();
        for t in m.tets() {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&a| a != skip).map(|a| t[a]).collect();
                f.sort_unstable();
                *faces.entry(f).or_insert(0) += 1;
            }
        }
        assert!(faces.values().all(|&c| c == 1 || c == 2));
        let boundary = faces.values().filter(|&&c| c == 1).count();
        // 2 triangles per boundary quad: 2*(2*3 + 3*2 + 2*2) quads on the box surface
        assert_eq!(boundary, 2 * 2 * (6 + 6 + 4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn volume_partitions_box(
            nx in 1usize..4, ny in 1usize..4, nz in 1usize..6,
            ex in 0.1f64..3.0, ey in 0.1f64..3.0, ez in 0.1f64..3.0,
        ) {
            let m = generate_beam([nx, ny, nz], [ex, ey, ez]).unwrap();
            let rest = precompute_rest(&m).unwrap();
            let total = rest.total_volume();
            prop_assert!((total - ex * ey * ez).abs() <= 1e-10 * ex * ey * ez);
            prop_assert!(rest.volume.iter().all(|&v| v > 0.0));
            prop_assert_eq!(m.vertex_count(), (nx + 1) * (ny + 1) * (nz + 1));
            prop_assert_eq!(m.tet_count(), 6 * nx * ny * nz);
        }
    }
}
