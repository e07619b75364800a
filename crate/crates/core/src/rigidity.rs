//! Infinitesimal rigidity of convex polyhedra: face-isometric flexes, vertex
//! links, dihedral angle variations and the edge form `W`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::binvariant::b_of;
use crate::deformation::{angle_variations, weighted_vertex_sum, FirstOrderDeformation};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Vec3};
use crate::hull::{ConvexPolyhedron, Edge};
use crate::linalg::{lstsq, null_space};
use crate::polygon::Polygon;
use crate::tolerance;

/// Velocity of each vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralFlex {
    pub velocities: Vec<Vec3>,
}

impl PolyhedralFlex {
    pub fn from_stacked(x: &DVector<f64>) -> Self {
        Self { velocities: (0..x.len() / 3).map(|i| Vec3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2])).collect() }
    }

    pub fn to_stacked(&self) -> DVector<f64> {
        DVector::from_iterator(3 * self.velocities.len(), self.velocities.iter().flat_map(|v| v.iter().copied()))
    }
}

fn face_pairs(p: &ConvexPolyhedron, faces: &[usize], diagonals: bool) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for &f in faces {
        let face = &p.faces()[f];
        let k = face.len();
        for s in 0..k {
            for t in s + 1..k {
                let adjacent = t == s + 1 || (s == 0 && t == k - 1);
                if adjacent || diagonals {
                    let (a, b) = (face[s].min(face[t]), face[s].max(face[t]));
                    pairs.insert((a, b));
                }
            }
        }
    }
    pairs
}

/// Linearized distance constraints `<x_i - x_j, v_i - v_j> = 0` for the
/// vertex pairs of the selected faces (edges only, or all pairs).
pub fn constraint_matrix(p: &ConvexPolyhedron, faces: &[usize], diagonals: bool) -> DMatrix<f64> {
    let pairs = face_pairs(p, faces, diagonals);
    let x = p.vertices();
    let mut a = DMatrix::zeros(pairs.len(), 3 * x.len());
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let d = x[i] - x[j];
        for k in 0..3 {
            a[(r, 3 * i + k)] = d[k];
            a[(r, 3 * j + k)] = -d[k];
        }
    }
    a
}

/// Translations and infinitesimal rotations about the origin, as columns.
pub fn trivial_flexes(p: &ConvexPolyhedron) -> DMatrix<f64> {
    let x = p.vertices();
    let mut t = DMatrix::zeros(3 * x.len(), 6);
    for (i, xi) in x.iter().enumerate() {
        for k in 0..3 {
            t[(3 * i + k, k)] = 1.0;
            let w = Vec3::ith(k, 1.0).cross(xi);
            for c in 0..3 {
                t[(3 * i + c, 3 + k)] = w[c];
            }
        }
    }
    t
}

#[derive(Clone, Debug)]
pub struct FlexSpace {
    /// Orthonormal columns spanning the flexes.
    pub basis: DMatrix<f64>,
    pub flex_dim: usize,
    pub quotient_dim: usize,
    /// Singular values of the constraint system, ascending, padded to 3V.
    pub singular_values: Vec<f64>,
    /// `sigma_7 / sigma_6` in ascending order.
    pub gap_ratio: f64,
    /// Largest relative constraint residual of the six trivial flexes.
    pub trivial_residual: f64,
}

impl FlexSpace {
    pub fn flex(&self, j: usize) -> PolyhedralFlex {
        PolyhedralFlex::from_stacked(&self.basis.column(j).into_owned())
    }

    pub fn combine(&self, c: &[f64]) -> PolyhedralFlex {
        PolyhedralFlex::from_stacked(&(&self.basis * DVector::from_column_slice(c)))
    }
}

pub fn flex_space(p: &ConvexPolyhedron) -> Result<FlexSpace> {
    let all: Vec<usize> = (0..p.faces().len()).collect();
    flex_space_with(p, &all, true)
}

/// Flexes of the system restricted to some faces, with or without the face
/// diagonals.
pub fn flex_space_with(p: &ConvexPolyhedron, faces: &[usize], diagonals: bool) -> Result<FlexSpace> {
    let a = constraint_matrix(p, faces, diagonals);
    let n = a.ncols();
    if a.nrows() == 0 {
        return Err(Error::InvalidPolyhedron("no constraints".into()));
    }
    let ns = null_space(&a, tolerance::rank());
    let mut asc = ns.singular_values.clone();
    asc.reverse();
    let smax = *asc.last().unwrap();
    let floor = (smax * f64::EPSILON).max(f64::MIN_POSITIVE);
    let gap_ratio = if n > 6 { asc[6] / asc[5].max(floor) } else { f64::INFINITY };
    let t = trivial_flexes(p);
    let anorm = a.norm();
    let trivial_residual =
        (0..6).map(|k| (&a * t.column(k)).norm() / (anorm * t.column(k).norm())).fold(0.0, f64::max);
    let flex_dim = ns.basis.ncols();
    if flex_dim < 6 {
        return Err(Error::InvalidPolyhedron("flex space misses trivial motions".into()));
    }
    Ok(FlexSpace {
        basis: ns.basis,
        flex_dim,
        quotient_dim: flex_dim - 6,
        singular_values: asc,
        gap_ratio,
        trivial_residual,
    })
}

/// Largest relative change of intra-face squared distances under `v`.
pub fn face_isometry_defect(p: &ConvexPolyhedron, v: &PolyhedralFlex) -> f64 {
    let all: Vec<usize> = (0..p.faces().len()).collect();
    let a = constraint_matrix(p, &all, true);
    let r = &a * v.to_stacked();
    r.amax() / (a.amax() * v.to_stacked().amax().max(f64::MIN_POSITIVE))
}

/// Link of a vertex: unit edge directions in cyclic order, as a convex
/// spherical polygon. `neighbors[j]` is the far end of the edge giving link
/// vertex `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexLink {
    pub vertex: usize,
    pub polygon: Polygon,
    pub neighbors: Vec<usize>,
}

pub fn vertex_link(p: &ConvexPolyhedron, x: usize) -> Result<VertexLink> {
    if x >= p.vertices().len() {
        return Err(Error::InvalidVertex(x));
    }
    // next[q] = r when some face reads ... q, x, r ...
    let mut next = std::collections::BTreeMap::new();
    for f in p.faces() {
        let k = f.len();
        if let Some(pos) = f.iter().position(|&i| i == x) {
            next.insert(f[(pos + k - 1) % k], f[(pos + 1) % k]);
        }
    }
    if next.len() < 3 {
        return Err(Error::InvalidVertex(x));
    }
    let start = *next.keys().next().unwrap();
    let mut ring = vec![start];
    let mut cur = next[&start];
    while cur != start {
        if ring.len() > next.len() {
            return Err(Error::InvalidVertex(x));
        }
        ring.push(cur);
        cur = *next.get(&cur).ok_or(Error::InvalidVertex(x))?;
    }
    if ring.len() != next.len() {
        return Err(Error::InvalidVertex(x));
    }
    let base = p.vertices()[x];
    let dirs = |r: &[usize]| -> Vec<Vec3> { r.iter().map(|&j| (p.vertices()[j] - base).normalize()).collect() };
    let poly = Polygon::new(Geometry::S2, dirs(&ring)).map_err(|_| Error::InvalidVertex(x))?;
    if poly.is_convex() {
        return Ok(VertexLink { vertex: x, polygon: poly, neighbors: ring });
    }
    ring.reverse();
    let poly = Polygon::new(Geometry::S2, dirs(&ring)).map_err(|_| Error::InvalidVertex(x))?;
    Ok(VertexLink { vertex: x, polygon: poly, neighbors: ring })
}

/// Deformation of the link induced by `v`: the derivative of each unit edge
/// direction.
pub fn link_deformation(p: &ConvexPolyhedron, link: &VertexLink, v: &PolyhedralFlex) -> FirstOrderDeformation {
    let x = p.vertices()[link.vertex];
    let vx = v.velocities[link.vertex];
    FirstOrderDeformation {
        velocities: link
            .neighbors
            .iter()
            .zip(link.polygon.vertices())
            .map(|(&j, u)| {
                let len = (p.vertices()[j] - x).norm();
                let dv = (v.velocities[j] - vx) / len;
                dv - u * u.dot(&dv)
            })
            .collect(),
    }
}

/// Least-squares rigid motion `p -> w x p + t` fitted to `v` on a face.
pub fn face_killing(p: &ConvexPolyhedron, f: usize, v: &PolyhedralFlex) -> (Vec3, Vec3) {
    let face = &p.faces()[f];
    let mut a = DMatrix::zeros(3 * face.len(), 6);
    let mut b = DVector::zeros(3 * face.len());
    for (r, &i) in face.iter().enumerate() {
        let x = p.vertices()[i];
        // w x x = -[x]_x w
        let m = [[0.0, x.z, -x.y], [-x.z, 0.0, x.x], [x.y, -x.x, 0.0]];
        for c in 0..3 {
            for k in 0..3 {
                a[(3 * r + c, k)] = m[c][k];
            }
            a[(3 * r + c, 3 + c)] = 1.0;
            b[3 * r + c] = v.velocities[i][c];
        }
    }
    let s = lstsq(&a, &b, 1e-12);
    (Vec3::new(s[0], s[1], s[2]), Vec3::new(s[3], s[4], s[5]))
}

/// First-order variation of the dihedral angle at `e`, from the rotations
/// of its two faces.
pub fn dihedral_rate(p: &ConvexPolyhedron, e: &Edge, v: &PolyhedralFlex) -> f64 {
    let (n1, n2) = (p.face_normal(e.left), p.face_normal(e.right));
    let (w1, _) = face_killing(p, e.left, v);
    let (w2, _) = face_killing(p, e.right, v);
    let c = n1.cross(&n2);
    (w1 - w2).dot(&c) / c.norm()
}

/// Per-edge data for the edge oriented `a -> b`. The opposite orientation
/// has the same `theta_dot` and opposite `w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeQuantity {
    pub a: usize,
    pub b: usize,
    pub theta_dot: f64,
    /// `theta_dot * d(u0_dot)(e)` evaluated at `a` and at `b`.
    pub w_at_a: f64,
    pub w_at_b: f64,
    /// Mean of the two evaluations.
    pub w: f64,
}

fn check_basepoint(p: &ConvexPolyhedron, p0: &Vec3) -> Result<()> {
    if p.strictly_contains(p0) {
        Ok(())
    } else {
        Err(Error::ExteriorBasepoint)
    }
}

pub fn edge_quantities(p: &ConvexPolyhedron, v: &PolyhedralFlex, p0: &Vec3) -> Result<Vec<EdgeQuantity>> {
    check_basepoint(p, p0)?;
    let x = p.vertices();
    Ok(p.edges()
        .iter()
        .map(|e| {
            let theta_dot = dihedral_rate(p, e, v);
            let len = (x[e.b] - x[e.a]).norm();
            let u = (x[e.b] - x[e.a]) / len;
            let dv = (v.velocities[e.b] - v.velocities[e.a]) / len;
            let du0 = |q: usize| dv.dot(&(x[q] - p0)) + v.velocities[q].dot(&u);
            let (w_at_a, w_at_b) = (theta_dot * du0(e.a), theta_dot * du0(e.b));
            EdgeQuantity { a: e.a, b: e.b, theta_dot, w_at_a, w_at_b, w: 0.5 * (w_at_a + w_at_b) }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSum {
    pub vertex: usize,
    /// Sum of `W_e` over the edges leaving the vertex.
    pub w_sum: f64,
    /// `<sum da_i dv_i, p0 x>` on the link.
    pub b_term: f64,
    /// `<v(x), sum da_i v_i>` on the link.
    pub balance_term: f64,
    /// Whether `x - p0` points against the positive cone over the link.
    pub in_cone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumReport {
    pub global_sum: f64,
    pub vertices: Vec<VertexSum>,
    /// Largest `|w_sum - b_term - balance_term|`.
    pub vertex_mismatch: f64,
    /// Largest difference between the two endpoint evaluations of `W_e`.
    pub constancy_mismatch: f64,
}

pub fn sum_identities(p: &ConvexPolyhedron, v: &PolyhedralFlex, p0: &Vec3) -> Result<SumReport> {
    let eq = edge_quantities(p, v, p0)?;
    let nv = p.vertices().len();
    let mut w_sum = vec![0.0; nv];
    for q in &eq {
        w_sum[q.a] += q.w;
        w_sum[q.b] -= q.w;
    }
    let global_sum: f64 = w_sum.iter().sum();
    let constancy_mismatch = eq.iter().map(|q| (q.w_at_a - q.w_at_b).abs()).fold(0.0, f64::max);
    let mut vertices = Vec::with_capacity(nv);
    let mut vertex_mismatch: f64 = 0.0;
    for x in 0..nv {
        let link = vertex_link(p, x)?;
        let u = link_deformation(p, &link, v);
        let rates = angle_variations(&link.polygon, &u)?;
        let px = p.vertices()[x] - p0;
        let b_term = b_of(&link.polygon, &u)?.vector.dot(&px);
        let balance_term = v.velocities[x].dot(&weighted_vertex_sum(&link.polygon, &rates));
        let in_cone = link.polygon.interior_contains(&(-px).normalize()).unwrap_or(false);
        vertex_mismatch = vertex_mismatch.max((w_sum[x] - b_term - balance_term).abs());
        vertices.push(VertexSum { vertex: x, w_sum: w_sum[x], b_term, balance_term, in_cone });
    }
    Ok(SumReport { global_sum, vertices, vertex_mismatch, constancy_mismatch })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Rigid,
    Flexible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub flex_dim: usize,
    pub quotient_dim: usize,
    pub gap_ratio: f64,
    pub trivial_residual: f64,
    pub links_convex: bool,
    /// Link edge lengths against face angles.
    pub link_length_residual: f64,
    /// Link angles against dihedral angles.
    pub link_angle_residual: f64,
    /// Largest `|global sum|` and per-vertex mismatch over the flex basis.
    pub global_sum: f64,
    pub vertex_mismatch: f64,
    /// Absent in diagnostic mode.
    pub verdict: Option<Verdict>,
}

/// Largest link/face-angle and link/dihedral mismatches, and whether every
/// link is convex.
pub fn link_consistency(p: &ConvexPolyhedron) -> Result<(bool, f64, f64)> {
    let x = p.vertices();
    let mut convex = true;
    let (mut len_res, mut ang_res): (f64, f64) = (0.0, 0.0);
    for vi in 0..x.len() {
        let link = vertex_link(p, vi)?;
        convex &= link.polygon.is_convex();
        let lengths = link.polygon.real_edge_lengths()?;
        let angles = link.polygon.real_angles()?;
        let k = link.neighbors.len();
        for j in 0..k {
            let (a, b) = (link.neighbors[j], link.neighbors[(j + 1) % k]);
            let face_angle = (x[a] - x[vi]).angle(&(x[b] - x[vi]));
            len_res = len_res.max((lengths[j] - face_angle).abs());
            let (lo, hi) = (vi.min(a), vi.max(a));
            let e = p.edges().iter().find(|e| e.a == lo && e.b == hi).ok_or(Error::InvalidVertex(vi))?;
            ang_res = ang_res.max((angles[j] - p.dihedral_angle(e)).abs());
        }
    }
    Ok((convex, len_res, ang_res))
}

fn report(p: &ConvexPolyhedron, space: &FlexSpace, verdict: bool) -> Result<RigidityReport> {
    let (links_convex, link_length_residual, link_angle_residual) = link_consistency(p)?;
    let p0 = p.centroid();
    let (mut global_sum, mut vertex_mismatch): (f64, f64) = (0.0, 0.0);
    for j in 0..space.flex_dim {
        let s = sum_identities(p, &space.flex(j), &p0)?;
        global_sum = global_sum.max(s.global_sum.abs());
        vertex_mismatch = vertex_mismatch.max(s.vertex_mismatch);
    }
    Ok(RigidityReport {
        vertices: p.vertices().len(),
        edges: p.edges().len(),
        faces: p.faces().len(),
        flex_dim: space.flex_dim,
        quotient_dim: space.quotient_dim,
        gap_ratio: space.gap_ratio,
        trivial_residual: space.trivial_residual,
        links_convex,
        link_length_residual,
        link_angle_residual,
        global_sum,
        vertex_mismatch,
        verdict: verdict.then_some(if space.quotient_dim == 0 { Verdict::Rigid } else { Verdict::Flexible }),
    })
}

pub fn rigidity_verdict(p: &ConvexPolyhedron) -> Result<RigidityReport> {
    report(p, &flex_space(p)?, true)
}

/// Same diagnostics for a modified constraint system (face diagonals
/// dropped); no verdict is given.
pub fn rigidity_diagnostics(p: &ConvexPolyhedron, diagonals: bool) -> Result<RigidityReport> {
    let all: Vec<usize> = (0..p.faces().len()).collect();
    report(p, &flex_space_with(p, &all, diagonals)?, false)
}
