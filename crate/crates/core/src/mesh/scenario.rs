//! Initial deformations and Dirichlet vertex selection.

use super::{MeshError, TetMesh};
use crate::Real;
use nalgebra::{Rotation3, Unit, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Identity,
    Stretch,
    Compress,
    Bend,
    Twist,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Identity => "identity",
            ScenarioKind::Stretch => "stretch",
            ScenarioKind::Compress => "compress",
            ScenarioKind::Bend => "bend",
            ScenarioKind::Twist => "twist",
        }
    }
}

/// Initial-deformation recipe plus boundary conditions.
///
/// `magnitude` is the axial scale factor for stretch/compress and the total
/// angle in radians for bend/twist. `fixed_region` gives the axial fractions
/// pinned at the low and high end; `None` defers to the mesh's explicit fixed
/// vertex list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec<T: Real> {
    pub kind: ScenarioKind,
    pub magnitude: T,
    pub axis: Vector3<T>,
    pub fixed_region: Option<(T, T)>,
}

impl<T: Real> ScenarioSpec<T> {
    pub fn new(kind: ScenarioKind, magnitude: T) -> Self {
        Self { kind, magnitude, axis: Vector3::z(), fixed_region: Some((T::zero(), T::zero())) }
    }

    pub fn identity() -> Self {
        Self::new(ScenarioKind::Identity, T::one())
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |m: String| Err(MeshError::InvalidScenario(m));
        if !self.magnitude.is_finite() {
            return bad("magnitude must be finite".into());
        }
        if matches!(self.kind, ScenarioKind::Stretch | ScenarioKind::Compress) && self.magnitude <= T::zero() {
            return bad(format!("{} magnitude must be > 0", self.kind.name()));
        }
        if !(self.axis.norm() > T::zero()) {
            return bad("axis must be nonzero".into());
        }
        if let Some((lo, hi)) = self.fixed_region {
            let half = T::lit(0.5);
            if !(lo >= T::zero() && lo < half && hi >= T::zero() && hi < half) {
                return bad("fixed_region fractions must lie in [0, 0.5)".into());
            }
        }
        Ok(())
    }
}

/// Result of applying a scenario: starting positions and the pinned vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState<T: Real> {
    pub initial_positions: Vec<Vector3<T>>,
    /// Sorted, unique.
    pub fixed: Vec<usize>,
}

/// Frame attached to the mesh: unit axis, two perpendicular unit vectors, the
/// centre line origin and the axial range.
struct AxisFrame<T: Real> {
    axis: Vector3<T>,
    e1: Vector3<T>,
    e2: Vector3<T>,
    origin: Vector3<T>,
    s_min: T,
    length: T,
}

impl<T: Real> AxisFrame<T> {
    fn new(mesh: &TetMesh<T>, axis: &Vector3<T>) -> Self {
        let axis = axis.normalize();
        let helper = if axis.x.abs() < T::lit(0.9) { Vector3::x() } else { Vector3::y() };
        let e1 = (helper - axis * axis.dot(&helper)).normalize();
        let e2 = axis.cross(&e1);
        let (lo, hi) = mesh.bounds();
        let centre = (lo + hi) * T::lit(0.5);
        let (mut s_min, mut s_max) = (T::infinity(), -T::infinity());
        for p in mesh.rest_positions() {
            let s = axis.dot(&(p - centre));
            s_min = s_min.min(s);
            s_max = s_max.max(s);
        }
        Self { axis, e1, e2, origin: centre + axis * s_min, s_min: T::zero(), length: s_max - s_min }
    }

    /// `(a, p, q)`: axial coordinate from the low end and offsets along `e1`, `e2`.
    fn local(&self, x: &Vector3<T>) -> (T, T, T) {
        let d = x - self.origin;
        (self.axis.dot(&d) - self.s_min, self.e1.dot(&d), self.e2.dot(&d))
    }
}

pub fn apply_scenario<T: Real>(mesh: &TetMesh<T>, spec: &ScenarioSpec<T>) -> Result<ScenarioState<T>, MeshError> {
    spec.validate()?;
    let frame = AxisFrame::new(mesh, &spec.axis);
    let len = frame.length;
    let half = T::lit(0.5);

    let fixed = match spec.fixed_region {
        Some((lo_frac, hi_frac)) => {
            let tol = T::lit(1e-9) * len;
            let mut low = Vec::new();
            let mut high = Vec::new();
            for (i, p) in mesh.rest_positions().iter().enumerate() {
                let (a, _, _) = frame.local(p);
                if a <= lo_frac * len + tol {
                    low.push(i);
                } else if len - a <= hi_frac * len + tol {
                    high.push(i);
                }
            }
            if low.is_empty() || high.is_empty() {
                return Err(MeshError::InvalidScenario("fixed region selects no vertices at one end".into()));
            }
            let mut all = low;
            all.extend(high);
            all.sort_unstable();
            all
        }
        None => {
            if mesh.fixed_vertices().is_empty() {
                return Err(MeshError::InvalidScenario("no fixed vertices (unconstrained solve)".into()));
            }
            mesh.fixed_vertices().to_vec()
        }
    };

    let m = spec.magnitude;
    let transform = |x: &Vector3<T>| -> Vector3<T> {
        let (a, p, q) = frame.local(x);
        match spec.kind {
            ScenarioKind::Identity => *x,
            ScenarioKind::Stretch | ScenarioKind::Compress => {
                let centre = half * len;
                x + frame.axis * ((m - T::one()) * (a - centre))
            }
            ScenarioKind::Twist => {
                let angle = m * a / len;
                let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(frame.axis), angle);
                let radial = frame.e1 * p + frame.e2 * q;
                frame.origin + frame.axis * a + rot * radial
            }
            ScenarioKind::Bend => {
                if m.abs() <= T::lit(1e-12) {
                    return *x;
                }
                // the axis becomes an arc of radius len/m curving toward +e1
                let radius = len / m;
                let phi = a / radius;
                let (s, c) = (phi.sin(), phi.cos());
                let centre_line = frame.origin + frame.e1 * (radius * (T::one() - c)) + frame.axis * (radius * s);
                let normal = frame.e1 * c - frame.axis * s;
                centre_line + normal * p + frame.e2 * q
            }
        }
    };

    Ok(ScenarioState { initial_positions: mesh.rest_positions().iter().map(transform).collect(), fixed })
}
