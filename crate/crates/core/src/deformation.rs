//! Isometric first-order deformations, the trivial ones induced by Killing
//! fields, and first-order angle variations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{inner, vertex_angle_rate, Geometry, KillingField, Vec3};
use crate::linalg::{lstsq, newton_project, null_space, rank};
use crate::polygon::Polygon;
use crate::tolerance;

/// Tangent vectors `dv_i` at the vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderDeformation {
    pub velocities: Vec<Vec3>,
}

impl FirstOrderDeformation {
    pub fn zeros(n: usize) -> Self {
        FirstOrderDeformation { velocities: vec![Vec3::zeros(); n] }
    }

    pub fn from_stacked(g: Geometry, x: &DVector<f64>) -> Self {
        let d = g.stacked_dim();
        let velocities = (0..x.len() / d)
            .map(|i| if d == 2 { Vec3::new(x[2 * i], x[2 * i + 1], 0.0) } else { Vec3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]) })
            .collect();
        FirstOrderDeformation { velocities }
    }

    pub fn to_stacked(&self, g: Geometry) -> DVector<f64> {
        let d = g.stacked_dim();
        DVector::from_iterator(self.velocities.len() * d, self.velocities.iter().flat_map(|v| v.iter().take(d).copied().collect::<Vec<_>>()))
    }

    pub fn n(&self) -> usize {
        self.velocities.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        FirstOrderDeformation { velocities: self.velocities.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        FirstOrderDeformation {
            velocities: self.velocities.iter().zip(&other.velocities).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Euclidean norm of the stacked coordinates.
    pub fn norm(&self) -> f64 {
        self.velocities.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }
}

/// Restriction of a Killing field to the vertices.
pub fn killing_restriction(p: &Polygon, k: &KillingField) -> FirstOrderDeformation {
    FirstOrderDeformation { velocities: p.vertices().iter().map(|v| k.apply(v)).collect() }
}

pub fn trivial_deformations(p: &Polygon) -> [FirstOrderDeformation; 3] {
    KillingField::basis(p.geometry()).map(|k| killing_restriction(p, &k))
}

fn metric_row(g: Geometry, v: &Vec3) -> [f64; 3] {
    if g.is_lorentzian() {
        [v.x, v.y, -v.z]
    } else {
        [v.x, v.y, v.z]
    }
}

/// Linearized constraints: tangency `<v_i, dv_i> = 0` (quadrics) and
/// edge rows `<dv_i, v_{i+1}> + <v_i, dv_{i+1}> = 0`; in the plane the edge
/// rows are `<v_{i+1} - v_i, dv_{i+1} - dv_i> = 0`.
pub fn constraint_matrix(p: &Polygon) -> DMatrix<f64> {
    let g = p.geometry();
    let n = p.n();
    let d = g.stacked_dim();
    if g == Geometry::E2 {
        let mut a = DMatrix::zeros(n, 2 * n);
        for i in 0..n {
            let j = (i + 1) % n;
            let e = p.vertices()[j] - p.vertices()[i];
            a[(i, 2 * i)] -= e.x;
            a[(i, 2 * i + 1)] -= e.y;
            a[(i, 2 * j)] += e.x;
            a[(i, 2 * j + 1)] += e.y;
        }
        return a;
    }
    let mut a = DMatrix::zeros(2 * n, d * n);
    for i in 0..n {
        let j = (i + 1) % n;
        let vi = metric_row(g, &p.vertices()[i]);
        let vj = metric_row(g, &p.vertices()[j]);
        for c in 0..3 {
            a[(i, 3 * i + c)] = vi[c];
            a[(n + i, 3 * i + c)] += vj[c];
            a[(n + i, 3 * j + c)] += vi[c];
        }
    }
    a
}

/// Largest violation of the linearized isometry constraints.
pub fn isometry_defect(p: &Polygon, u: &FirstOrderDeformation) -> f64 {
    (constraint_matrix(p) * u.to_stacked(p.geometry())).amax()
}

/// True when all vertices lie on one geodesic (a line in the plane).
pub fn vertices_on_geodesic(p: &Polygon) -> bool {
    let lifted: Vec<Vec3> = p
        .vertices()
        .iter()
        .map(|v| if p.geometry() == Geometry::E2 { Vec3::new(v.x, v.y, 1.0) } else { *v })
        .collect();
    let m = DMatrix::from_fn(3, lifted.len(), |r, c| lifted[c][r]);
    rank(&m, 1e-9) < 3
}

/// Kernel of the linearized constraints and its splitting into trivial
/// deformations and an orthogonal complement.
#[derive(Clone, Debug)]
pub struct DeformationSpace {
    pub polygon: Polygon,
    /// Orthonormal columns spanning all isometric first-order deformations.
    pub full_basis: DMatrix<f64>,
    /// The three Killing restrictions as columns.
    pub trivial_basis: DMatrix<f64>,
    /// Orthonormal columns spanning the complement of the trivial ones.
    pub quotient_basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub gap_ratio: f64,
}

impl DeformationSpace {
    pub fn full_dim(&self) -> usize {
        self.full_basis.ncols()
    }

    pub fn quotient_dim(&self) -> usize {
        self.quotient_basis.ncols()
    }

    pub fn full_vector(&self, j: usize) -> FirstOrderDeformation {
        FirstOrderDeformation::from_stacked(self.polygon.geometry(), &self.full_basis.column(j).into_owned())
    }

    pub fn quotient_vector(&self, j: usize) -> FirstOrderDeformation {
        FirstOrderDeformation::from_stacked(self.polygon.geometry(), &self.quotient_basis.column(j).into_owned())
    }

    pub fn quotient_vectors(&self) -> Vec<FirstOrderDeformation> {
        (0..self.quotient_dim()).map(|j| self.quotient_vector(j)).collect()
    }

    /// Combination `sum c_j Q_j` of quotient basis vectors.
    pub fn combine(&self, coeffs: &[f64]) -> FirstOrderDeformation {
        let c = DVector::from_column_slice(coeffs);
        FirstOrderDeformation::from_stacked(self.polygon.geometry(), &(&self.quotient_basis * c))
    }

    /// Coordinates of the orthogonal projection of `u` on the quotient basis.
    pub fn quotient_coordinates(&self, u: &FirstOrderDeformation) -> DVector<f64> {
        self.quotient_basis.transpose() * u.to_stacked(self.polygon.geometry())
    }
}

pub fn isometric_deformation_space(p: &Polygon) -> Result<DeformationSpace> {
    isometric_deformation_space_with_tol(p, tolerance::rank())
}

pub fn isometric_deformation_space_with_tol(p: &Polygon, rel_tol: f64) -> Result<DeformationSpace> {
    if vertices_on_geodesic(p) {
        return Err(Error::DegenerateConfiguration("vertices lie on a geodesic".into()));
    }
    let g = p.geometry();
    let ns = null_space(&constraint_matrix(p), rel_tol);
    let k = ns.basis;
    let triv = trivial_deformations(p);
    let t = DMatrix::from_columns(&triv.iter().map(|u| u.to_stacked(g)).collect::<Vec<_>>());
    let m = k.transpose() * &t;
    if rank(&m, 1e-8) < 3 {
        return Err(Error::DegenerateConfiguration("trivial deformations are dependent".into()));
    }
    let w = null_space(&m.transpose(), 1e-10).basis;
    let quotient_basis = &k * w;
    Ok(DeformationSpace {
        polygon: p.clone(),
        full_basis: k,
        trivial_basis: t,
        quotient_basis,
        singular_values: ns.singular_values,
        gap_ratio: ns.gap_ratio,
    })
}

/// First-order variations of the interior angles. In the de Sitter plane
/// the variation is `i rho_i` and the returned values are the `rho_i`.
pub fn angle_variations(p: &Polygon, u: &FirstOrderDeformation) -> Result<Vec<f64>> {
    if u.n() != p.n() {
        return Err(Error::DegenerateConfiguration("deformation size mismatch".into()));
    }
    p.interior_angles()?;
    let g = p.geometry();
    let n = p.n() as isize;
    let dv = |i: isize| &u.velocities[i.rem_euclid(n) as usize];
    Ok((0..n)
        .map(|i| vertex_angle_rate(g, p.v(i), p.v(i - 1), p.v(i + 1), dv(i), dv(i - 1), dv(i + 1)))
        .collect())
}

/// `sum rate_i v_i` in ambient coordinates.
pub fn weighted_vertex_sum(p: &Polygon, rates: &[f64]) -> Vec3 {
    p.vertices().iter().zip(rates).map(|(v, a)| v * *a).sum()
}

/// `(|sum da_i v_i|, |sum da_i|)`; the scalar part is only meaningful in
/// the plane and is reported as 0 elsewhere.
pub fn angle_sum_residual(p: &Polygon, u: &FirstOrderDeformation) -> Result<(f64, f64)> {
    let rates = angle_variations(p, u)?;
    let vec = weighted_vertex_sum(p, &rates).norm();
    let scalar = if p.geometry() == Geometry::E2 { rates.iter().sum::<f64>().abs() } else { 0.0 };
    Ok((vec, scalar))
}

/// Inverse of the angle map: an isometric deformation with the given angle
/// variations, unique up to trivial deformations (returned orthogonal to
/// them).
pub fn deformation_from_angle_variations(p: &Polygon, rates: &[f64]) -> Result<FirstOrderDeformation> {
    if rates.len() != p.n() {
        return Err(Error::DegenerateConfiguration("rate vector size mismatch".into()));
    }
    let scale = rates.iter().map(|r| r.abs()).fold(0.0, f64::max).max(1.0)
        * p.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let mut residual = weighted_vertex_sum(p, rates).norm();
    if p.geometry() == Geometry::E2 {
        residual = residual.max(rates.iter().sum::<f64>().abs());
    }
    if residual > 1e-9 * scale {
        return Err(Error::ConstraintViolated(residual));
    }
    let space = isometric_deformation_space(p)?;
    let cols: Vec<DVector<f64>> = space
        .quotient_vectors()
        .iter()
        .map(|q| angle_variations(p, q).map(DVector::from_vec))
        .collect::<Result<_>>()?;
    let target = DVector::from_column_slice(rates);
    if cols.is_empty() {
        if target.amax() > tolerance::constraint() {
            return Err(Error::ConstraintViolated(target.amax()));
        }
        return Ok(FirstOrderDeformation::zeros(p.n()));
    }
    let a = DMatrix::from_columns(&cols);
    let c = lstsq(&a, &target, 1e-12);
    let miss = (&a * &c - &target).amax();
    if miss > tolerance::constraint() * target.amax().max(1.0) {
        return Err(Error::ConstraintViolated(miss));
    }
    Ok(space.combine(c.as_slice()))
}

/// Value of the edge constraint `<v_i, v_{i+1}>` (squared length in the
/// plane) for an edge of length `l`.
pub fn edge_invariant(g: Geometry, l: f64) -> f64 {
    match g {
        Geometry::E2 => l * l,
        Geometry::S2 | Geometry::DS2 => l.cos(),
        Geometry::H2 => -l.cosh(),
    }
}

fn edge_value(g: Geometry, a: &Vec3, b: &Vec3) -> f64 {
    if g == Geometry::E2 {
        (b - a).norm_squared()
    } else {
        inner(g, a, b)
    }
}

/// Gauss-Newton projection of `approx` onto the polygons with prescribed
/// edge invariants (see [`edge_invariant`]) lying on the model.
pub fn project_to_edge_invariants(g: Geometry, approx: &[Vec3], targets: &[f64]) -> Result<Vec<Vec3>> {
    let n = approx.len();
    let d = g.stacked_dim();
    let x0 = FirstOrderDeformation { velocities: approx.to_vec() }.to_stacked(g);
    let scale = approx.iter().map(|v| v.norm_squared()).fold(1.0, f64::max);
    let c = g.quadric_constant();
    let f = |x: &DVector<f64>| {
        let vs = FirstOrderDeformation::from_stacked(g, x).velocities;
        let rows = if c.is_some() { 2 * n } else { n };
        let mut r = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, d * n);
        let base = if c.is_some() { n } else { 0 };
        for i in 0..n {
            let j = (i + 1) % n;
            if let Some(c) = c {
                r[i] = inner(g, &vs[i], &vs[i]) - c;
                let m = metric_row(g, &vs[i]);
                for k in 0..3 {
                    jac[(i, 3 * i + k)] = 2.0 * m[k];
                }
            }
            r[base + i] = edge_value(g, &vs[i], &vs[j]) - targets[i];
            if g == Geometry::E2 {
                let e = vs[j] - vs[i];
                for k in 0..2 {
                    jac[(base + i, 2 * i + k)] -= 2.0 * e[k];
                    jac[(base + i, 2 * j + k)] += 2.0 * e[k];
                }
            } else {
                let mi = metric_row(g, &vs[i]);
                let mj = metric_row(g, &vs[j]);
                for k in 0..3 {
                    jac[(base + i, 3 * i + k)] += mj[k];
                    jac[(base + i, 3 * j + k)] += mi[k];
                }
            }
        }
        (r, jac)
    };
    let x = newton_project(&x0, f, 4.0 * f64::EPSILON * scale, 60)?;
    Ok(FirstOrderDeformation::from_stacked(g, &x).velocities)
}

/// The polygon reached from `p` by moving along `u` for time `h` and
/// projecting back onto the polygons with the edge lengths of `p`.
pub fn isometric_step(p: &Polygon, u: &FirstOrderDeformation, h: f64) -> Result<Polygon> {
    let g = p.geometry();
    let n = p.n() as isize;
    let targets: Vec<f64> = (0..n).map(|i| edge_value(g, p.v(i), p.v(i + 1))).collect();
    let approx: Vec<Vec3> = p.vertices().iter().zip(&u.velocities).map(|(v, d)| v + d * h).collect();
    Polygon::new(g, project_to_edge_invariants(g, &approx, &targets)?)
}
