//! Global free-DOF system: DOF numbering, fixed sparsity pattern, scatter of
//! element quantities, a matrix-free quadratic form and sparse Cholesky.

use crate::energy::{ElementQuadratics, Matrix12};
use crate::mesh::TetMesh;
use crate::Real;
use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::{CscCholesky, CscSymbolicCholesky};
use nalgebra_sparse::pattern::SparsityPattern;
use std::collections::{BTreeSet, VecDeque};

const NONE: usize = usize::MAX;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AssemblyError {
    #[error("system has no free degrees of freedom")]
    Empty,
    #[error("non-finite entry in element {element}")]
    NonFinite { element: usize },
    #[error("expected {expected} element entries, got {got}")]
    ElementCount { expected: usize, got: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Maps vertices to free-DOF blocks; fixed vertices map to `None`.
///
/// Free vertices are numbered in reverse Cuthill–McKee order over the mesh
/// graph to keep Cholesky fill low; the numbering is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    free_index: Vec<Option<usize>>,
    free_count: usize,
}

impl DofMap {
    pub fn new<T: Real>(mesh: &TetMesh<T>, fixed: &[usize]) -> Self {
        let n = mesh.vertex_count();
        let mut is_fixed = vec![false; n];
        for &v in fixed {
            is_fixed[v] = true;
        }
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for t in mesh.tets() {
            for &a in t {
                for &b in t {
                    if a != b && !is_fixed[a] && !is_fixed[b] {
                        adj[a].insert(b);
                    }
                }
            }
        }

        let mut order = Vec::with_capacity(n);
        let mut visited = is_fixed.clone();
        let degree = |v: usize| adj[v].len();
        loop {
            let start = (0..n).filter(|&v| !visited[v]).min_by_key(|&v| (degree(v), v));
            let Some(start) = start else { break };
            visited[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
                next.sort_by_key(|&w| (degree(w), w));
                for w in next {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order.reverse();

        let mut free_index = vec![None; n];
        for (k, &v) in order.iter().enumerate() {
            free_index[v] = Some(3 * k);
        }
        Self { free_index, free_count: 3 * order.len() }
    }

    /// First free DOF of vertex `v` (its three components are consecutive).
    #[inline]
    pub fn free_index(&self, v: usize) -> Option<usize> {
        self.free_index[v]
    }

    pub fn free_count(&self) -> usize {
        self.free_count
    }

    pub fn vertex_count(&self) -> usize {
        self.free_index.len()
    }

    /// Adds `step · u` to the free components of `positions`.
    pub fn apply_step<T: Real>(&self, positions: &mut [nalgebra::Vector3<T>], u: &DVector<T>, step: T) {
        for (v, idx) in self.free_index.iter().enumerate() {
            if let Some(i) = *idx {
                for c in 0..3 {
                    positions[v][c] += step * u[i + c];
                }
            }
        }
    }

    /// Free-DOF vector of `a − b` over free vertices.
    pub fn difference<T: Real>(&self, a: &[nalgebra::Vector3<T>], b: &[nalgebra::Vector3<T>]) -> DVector<T> {
        let mut out = DVector::zeros(self.free_count);
        for (v, idx) in self.free_index.iter().enumerate() {
            if let Some(i) = *idx {
                for c in 0..3 {
                    out[i + c] = a[v][c] - b[v][c];
                }
            }
        }
        out
    }
}

/// Symbolic structure shared by every iteration of a solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemLayout {
    dofmap: DofMap,
    pattern: SparsityPattern,
    /// Global DOF per local element coordinate, `NONE` when fixed.
    elem_dofs: Vec<[usize; 12]>,
    /// Value slot per local 12×12 entry (row-major), `NONE` when eliminated.
    scatter: Vec<[usize; 144]>,
    diag: Vec<usize>,
}

pub fn build_pattern<T: Real>(mesh: &TetMesh<T>, dofmap: DofMap) -> SystemLayout {
    let n = dofmap.free_count();
    let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let elem_dofs: Vec<[usize; 12]> = mesh
        .tets()
        .iter()
        .map(|t| {
            let mut d = [NONE; 12];
            for a in 0..4 {
                if let Some(i) = dofmap.free_index(t[a]) {
                    for c in 0..3 {
                        d[3 * a + c] = i + c;
                    }
                }
            }
            d
        })
        .collect();
    for d in &elem_dofs {
        for &r in d.iter().filter(|&&r| r != NONE) {
            for &c in d.iter().filter(|&&c| c != NONE) {
                cols[c].insert(r);
            }
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    offsets.push(0);
    for col in &cols {
        indices.extend(col.iter().copied());
        offsets.push(indices.len());
    }
    let pattern = SparsityPattern::try_from_offsets_and_indices(n, n, offsets, indices)
        .expect("pattern built from sorted unique sets");

    let slot = |row: usize, col: usize| -> usize {
        let lane = pattern.lane(col);
        pattern.major_offsets()[col] + lane.binary_search(&row).expect("entry in pattern")
    };
    let scatter = elem_dofs
        .iter()
        .map(|d| {
            let mut s = [NONE; 144];
            for r in 0..12 {
                for c in 0..12 {
                    if d[r] != NONE && d[c] != NONE {
                        s[12 * r + c] = slot(d[r], d[c]);
                    }
                }
            }
            s
        })
        .collect();
    let diag = (0..n).map(|i| slot(i, i)).collect();
    SystemLayout { dofmap, pattern, elem_dofs, scatter, diag }
}

impl SystemLayout {
    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.dofmap.free_count()
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    pub fn element_count(&self) -> usize {
        self.elem_dofs.len()
    }

    /// Value slots of the diagonal entries.
    pub fn diagonal_slots(&self) -> &[usize] {
        &self.diag
    }

    /// Dense copy of a matrix stored in this layout (tests and small systems).
    pub fn to_dense<T: Real>(&self, values: &[T]) -> DMatrix<T> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for col in 0..n {
            let start = self.pattern.major_offsets()[col];
            for (k, &row) in self.pattern.lane(col).iter().enumerate() {
                m[(row, col)] = values[start + k];
            }
        }
        m
    }

    /// `y = (A + shift·I) x` for `A` stored in this layout.
    pub fn mul_vec<T: Real>(&self, values: &[T], shift: T, x: &DVector<T>) -> DVector<T> {
        let n = self.dim();
        let mut y = x * shift;
        for col in 0..n {
            let start = self.pattern.major_offsets()[col];
            let xc = x[col];
            for (k, &row) in self.pattern.lane(col).iter().enumerate() {
                y[row] += values[start + k] * xc;
            }
        }
        y
    }

    pub fn trace<T: Real>(&self, values: &[T]) -> T {
        self.diag.iter().fold(T::zero(), |acc, &s| acc + values[s])
    }
}

/// Energy, gradient and Hessian restricted to the free DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSystem<T: Real> {
    pub energy: T,
    pub gradient: DVector<T>,
    /// Values aligned with the layout's sparsity pattern (full symmetric storage).
    pub hessian_values: Vec<T>,
}

pub fn assemble<T: Real>(layout: &SystemLayout, elems: &[ElementQuadratics<T>]) -> Result<GlobalSystem<T>, AssemblyError> {
    let hessians: Vec<&Matrix12<T>> = elems.iter().map(|e| &e.hessian).collect();
    assemble_with_hessians(layout, elems, &hessians)
}

/// Energy and gradient from `elems`, Hessian from the (possibly projected) `hessians`.
pub fn assemble_with_hessians<T: Real, H: std::borrow::Borrow<Matrix12<T>>>(
    layout: &SystemLayout,
    elems: &[ElementQuadratics<T>],
    hessians: &[H],
) -> Result<GlobalSystem<T>, AssemblyError> {
    let m = layout.element_count();
    if elems.len() != m || hessians.len() != m {
        return Err(AssemblyError::ElementCount { expected: m, got: elems.len().min(hessians.len()) });
    }
    let mut energy = T::zero();
    let mut gradient = DVector::zeros(layout.dim());
    let mut values = vec![T::zero(); layout.nnz()];
    for (e, (q, h)) in elems.iter().zip(hessians).enumerate() {
        let h = h.borrow();
        if !q.value.is_finite() || q.gradient.iter().any(|v| !v.is_finite()) || h.iter().any(|v| !v.is_finite()) {
            return Err(AssemblyError::NonFinite { element: e });
        }
        energy += q.value;
        let dofs = &layout.elem_dofs[e];
        for (a, &d) in dofs.iter().enumerate() {
            if d != NONE {
                gradient[d] += q.gradient[a];
            }
        }
        let slots = &layout.scatter[e];
        for r in 0..12 {
            for c in 0..12 {
                let s = slots[12 * r + c];
                if s != NONE {
                    values[s] += h[(r, c)];
                }
            }
        }
    }
    Ok(GlobalSystem { energy, gradient, hessian_values: values })
}

/// `uᵀ H u` element by element, with `H` the Hessians in `elems`.
pub fn quadratic_form<T: Real>(layout: &SystemLayout, elems: &[ElementQuadratics<T>], u: &DVector<T>) -> T {
    let mut total = T::zero();
    for (q, dofs) in elems.iter().zip(&layout.elem_dofs) {
        let local = crate::energy::Vector12::from_fn(|a, _| if dofs[a] == NONE { T::zero() } else { u[dofs[a]] });
        total += local.dot(&(q.hessian * local));
    }
    total
}

/// Cholesky factorization with symbolic analysis done once per layout.
#[derive(Debug, Clone)]
pub struct SparseCholesky<T: Real> {
    symbolic: CscSymbolicCholesky,
    numeric: Option<CscCholesky<T>>,
    shifted: Vec<T>,
}

impl<T: Real> SparseCholesky<T> {
    pub fn new(layout: &SystemLayout) -> Result<Self, AssemblyError> {
        if layout.dim() == 0 {
            return Err(AssemblyError::Empty);
        }
        Ok(Self { symbolic: CscSymbolicCholesky::factor(layout.pattern().clone()), numeric: None, shifted: Vec::new() })
    }

    /// Factors `A + shift·I`.
    pub fn factor(&mut self, layout: &SystemLayout, values: &[T], shift: T) -> Result<(), AssemblyError> {
        self.shifted.clear();
        self.shifted.extend_from_slice(values);
        if shift != T::zero() {
            for &s in layout.diagonal_slots() {
                self.shifted[s] += shift;
            }
        }
        // a failed numeric pass can leave stale workspace, so always start from the symbolic factor
        self.numeric = None;
        let chol = CscCholesky::factor_numerical(self.symbolic.clone(), &self.shifted)
            .map_err(|_| AssemblyError::NotPositiveDefinite)?;
        self.numeric = Some(chol);
        Ok(())
    }

    /// Solves with the last successful factorization, refining until the
    /// residual is below `1e-8 ‖rhs‖` (at most three rounds).
    pub fn solve(&self, layout: &SystemLayout, rhs: &DVector<T>) -> DVector<T> {
        let chol = self.numeric.as_ref().expect("factor() must succeed before solve()");
        let n = rhs.len();
        let solve_once = |b: &DVector<T>| -> DVector<T> {
            let x = chol.solve(&DMatrix::from_column_slice(n, 1, b.as_slice()));
            DVector::from_column_slice(x.as_slice())
        };
        let mut x = solve_once(rhs);
        let target = T::lit(1e-8) * rhs.norm();
        for _ in 0..3 {
            let r = rhs - layout.mul_vec(&self.shifted, T::zero(), &x);
            if r.norm() <= target {
                break;
            }
            x += solve_once(&r);
        }
        x
    }
}

/// Factor and solve in one call.
pub fn factor_solve<T: Real>(
    layout: &SystemLayout,
    system: &GlobalSystem<T>,
    rhs: &DVector<T>,
) -> Result<DVector<T>, AssemblyError> {
    let mut chol = SparseCholesky::new(layout)?;
    chol.factor(layout, &system.hessian_values, T::zero())?;
    Ok(chol.solve(layout, rhs))
}
