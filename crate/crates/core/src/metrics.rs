//! Barycenters, the metrics `<b(U,V), F(p)>` on spaces of convex polygons
//! with fixed edge lengths, the area form on plane polygons with fixed
//! angles, and the flat limit of spherical polygons.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use nalgebra::{DMatrix, Rotation3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binvariant::{b2_of, b_of};
use crate::deformation::{
    angle_variations, isometric_deformation_space, trivial_deformations, weighted_vertex_sum, FirstOrderDeformation,
};
use crate::error::{Error, Result};
use crate::geometry::{det3, minkowski, normalize, Geometry, Vec3};
use crate::isoperimetric::{sample_isometric_competitors, solve_max_area};
use crate::linalg::{null_space, sym_eigenvalues};
use crate::polygon::Polygon;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BarycenterKind {
    /// Vertices, equal weights.
    Vertices,
    /// Area measure of the interior.
    Interior,
    /// Vertices weighted by exterior angles.
    Angles,
    /// Length measure of the boundary.
    Boundary,
}

impl BarycenterKind {
    pub const ALL: [BarycenterKind; 4] =
        [BarycenterKind::Vertices, BarycenterKind::Interior, BarycenterKind::Angles, BarycenterKind::Boundary];
}

impl std::fmt::Display for BarycenterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BarycenterKind::Vertices => "v",
            BarycenterKind::Interior => "i",
            BarycenterKind::Angles => "alpha",
            BarycenterKind::Boundary => "boundary",
        })
    }
}

impl FromStr for BarycenterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v" | "vertices" | "c_v" => Ok(BarycenterKind::Vertices),
            "i" | "interior" | "c_i" => Ok(BarycenterKind::Interior),
            "alpha" | "angles" | "c_alpha" => Ok(BarycenterKind::Angles),
            "boundary" | "d" | "c_boundary" => Ok(BarycenterKind::Boundary),
            other => Err(Error::Parse(format!("unknown barycenter kind {other:?}"))),
        }
    }
}

fn check_curved_convex(p: &Polygon) -> Result<()> {
    if !matches!(p.geometry(), Geometry::S2 | Geometry::H2) {
        return Err(Error::UnsupportedGeometry(p.geometry().to_string()));
    }
    if !p.is_convex() {
        return Err(Error::NotConvex);
    }
    Ok(())
}

fn radius(g: Geometry, y: &Vec3) -> f64 {
    if g == Geometry::S2 {
        y.norm()
    } else {
        (-minkowski(y, y)).sqrt()
    }
}

// Degree-5 seven-point rule on the reference triangle (barycentric, weight).
const DUNAVANT5: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.059_715_871_789_770, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.470_142_064_105_115, 0.059_715_871_789_770], 0.132_394_152_788_506),
    ([0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.797_426_985_353_087, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.101_286_507_323_456, 0.797_426_985_353_087], 0.125_939_180_544_827),
];

/// `int x dA` over the geodesic triangle with vertices `a, b, c`, through
/// the radial projection of the flat triangle: `dA = |det(y, b-a, c-a)| /
/// r(y)^3` and `x = y / r(y)`.
fn triangle_moment(g: Geometry, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let rule = |a: &Vec3, b: &Vec3, c: &Vec3| -> Vec3 {
        let jac = det3(a, &(b - a), &(c - a)).abs();
        DUNAVANT5
            .iter()
            .map(|(l, w)| {
                let y = a * l[0] + b * l[1] + c * l[2];
                let r = radius(g, &y);
                y * (w * 0.5 * jac / r.powi(4))
            })
            .sum()
    };
    fn refine(
        a: Vec3,
        b: Vec3,
        c: Vec3,
        whole: Vec3,
        depth: usize,
        rule: &dyn Fn(&Vec3, &Vec3, &Vec3) -> Vec3,
    ) -> Vec3 {
        let (ab, bc, ca) = ((a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0);
        let parts = [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)];
        let vals: Vec<Vec3> = parts.iter().map(|(x, y, z)| rule(x, y, z)).collect();
        let sum: Vec3 = vals.iter().sum();
        if depth >= 8 || (sum - whole).norm() <= 1e-12 * sum.norm().max(1e-300) + 1e-14 {
            return sum;
        }
        parts.iter().zip(vals).map(|((x, y, z), v)| refine(*x, *y, *z, v, depth + 1, rule)).sum()
    }
    let whole = rule(a, b, c);
    refine(*a, *b, *c, whole, 0, &rule)
}

/// Unnormalized ambient moment `int_int(p) x dA`, by a fan from the vertex
/// barycenter.
pub fn interior_moment(p: &Polygon) -> Result<Vec3> {
    check_curved_convex(p)?;
    let g = p.geometry();
    let c = normalize(g, &p.vertices().iter().sum::<Vec3>())?;
    let n = p.n() as isize;
    Ok((0..n).map(|i| triangle_moment(g, &c, p.v(i), p.v(i + 1))).sum())
}

/// `int_{boundary} x ds`; a geodesic arc `[a, b]` of length `L` contributes
/// `tan(L/2) (a + b)` (sphere) or `tanh(L/2) (a + b)` (hyperbolic plane).
pub fn boundary_moment(p: &Polygon) -> Result<Vec3> {
    check_curved_convex(p)?;
    let l = p.real_edge_lengths()?;
    let n = p.n() as isize;
    Ok((0..n)
        .map(|i| {
            let t = if p.geometry() == Geometry::S2 { (l[i as usize] / 2.0).tan() } else { (l[i as usize] / 2.0).tanh() };
            (p.v(i) + p.v(i + 1)) * t
        })
        .sum())
}

pub fn barycenter(p: &Polygon, kind: BarycenterKind) -> Result<Vec3> {
    check_curved_convex(p)?;
    let g = p.geometry();
    let raw = match kind {
        BarycenterKind::Vertices => p.vertices().iter().sum(),
        BarycenterKind::Angles => {
            let a = p.real_angles()?;
            p.vertices().iter().zip(&a).map(|(v, a)| v * (PI - a)).sum()
        }
        BarycenterKind::Interior => interior_moment(p)?,
        BarycenterKind::Boundary => boundary_moment(p)?,
    };
    normalize(g, &raw)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub geometry: Geometry,
    pub kind: BarycenterKind,
    pub center: Vec3,
    /// Gram matrix on the orthonormal quotient basis.
    pub gram: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Gram matrix of `<b(U_j, U_k), F>` over the given deformations.
pub fn b_gram(p: &Polygon, us: &[FirstOrderDeformation], f: &Vec3) -> Result<DMatrix<f64>> {
    let k = us.len();
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = b2_of(p, &us[a], &us[b])?.pair(f);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

pub fn moduli_metric(p: &Polygon, kind: BarycenterKind) -> Result<MetricSample> {
    let center = barycenter(p, kind)?;
    let space = isometric_deformation_space(p)?;
    let m = b_gram(p, &space.quotient_vectors(), &center)?;
    let eigenvalues = if m.nrows() == 0 { Vec::new() } else { sym_eigenvalues(&m) };
    Ok(MetricSample { geometry: p.geometry(), kind, center, gram: to_rows(&m), eigenvalues })
}

/// Normal map and tangent images of the angle map at a spherical polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSubmanifoldProbe {
    pub angles: Vec<f64>,
    /// `(<v_1, w>, ..., <v_n, w>)` for `w = e1, e2, e3`.
    pub normal_map: [Vec<f64>; 3],
    /// Angle variations of the quotient basis.
    pub tangent_images: Vec<Vec<f64>>,
    /// Largest `|<tangent, normal>|`.
    pub orthogonality_residual: f64,
}

pub fn angle_submanifold_probe(q: &Polygon) -> Result<AngleSubmanifoldProbe> {
    if q.geometry() != Geometry::S2 {
        return Err(Error::UnsupportedGeometry(q.geometry().to_string()));
    }
    let normal_map = [0, 1, 2].map(|k| q.vertices().iter().map(|v| v[k]).collect::<Vec<f64>>());
    let space = isometric_deformation_space(q)?;
    let tangent_images: Vec<Vec<f64>> =
        space.quotient_vectors().iter().map(|u| angle_variations(q, u)).collect::<Result<_>>()?;
    let mut res: f64 = 0.0;
    for t in &tangent_images {
        for nm in &normal_map {
            res = res.max(t.iter().zip(nm).map(|(a, b)| a * b).sum::<f64>().abs());
        }
    }
    Ok(AngleSubmanifoldProbe { angles: q.real_angles()?, normal_map, tangent_images, orthogonality_residual: res })
}

/// `-<b(U), w>` for `w = e1, e2, e3`: the components of the second
/// fundamental form of the angle submanifold along the normal map.
pub fn second_fundamental_form_components(q: &Polygon, u: &FirstOrderDeformation) -> Result<[f64; 3]> {
    let b = b_of(q, u)?;
    Ok([-b.vector.x, -b.vector.y, -b.vector.z])
}

pub use crate::binvariant::second_fundamental_form_check;

/// Edge lengths, distances to `x0`, and their first-order variations.
fn lengths_heights(q: &Polygon, x0: &Vec3, u: &FirstOrderDeformation) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = q.n() as isize;
    let mut out = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let du = |i: isize| u.velocities[i.rem_euclid(n) as usize];
    let cross2 = |a: &Vec3, b: &Vec3| a.x * b.y - a.y * b.x;
    for i in 0..n {
        let (a, b) = (*q.v(i), *q.v(i + 1));
        let e = b - a;
        let de = du(i + 1) - du(i);
        let l = e.norm();
        let dl = e.dot(&de) / l;
        let w = x0 - a;
        let c = cross2(&e, &w);
        let h = c / l;
        let dc = cross2(&de, &w) - cross2(&e, &du(i));
        let dh = dc / l - c * dl / (l * l);
        out.0.push(l);
        out.1.push(h);
        out.2.push(dl);
        out.3.push(dh);
    }
    out
}

/// `g_A(U, V) = 1/4 sum dl_i(U) dh_i(V) + dl_i(V) dh_i(U)`, with `h_i` the
/// distance from `x0` to edge `i`.
pub fn area_form(q: &Polygon, u: &FirstOrderDeformation, v: &FirstOrderDeformation, x0: &Vec3) -> Result<f64> {
    if q.geometry() != Geometry::E2 {
        return Err(Error::UnsupportedGeometry(q.geometry().to_string()));
    }
    if !q.is_convex() {
        return Err(Error::NotConvex);
    }
    let (_, _, dlu, dhu) = lengths_heights(q, x0, u);
    let (_, _, dlv, dhv) = lengths_heights(q, x0, v);
    Ok(0.25 * (0..q.n()).map(|i| dlu[i] * dhv[i] + dlv[i] * dhu[i]).sum::<f64>())
}

/// Orthonormal basis of the deformations of a plane polygon keeping all
/// angles fixed, modulo translations and rotations (dimension `n - 2`).
pub fn fixed_angle_basis(q: &Polygon) -> Result<Vec<FirstOrderDeformation>> {
    if q.geometry() != Geometry::E2 {
        return Err(Error::UnsupportedGeometry(q.geometry().to_string()));
    }
    let n = q.n();
    let g = Geometry::E2;
    let mut dalpha = DMatrix::zeros(n, 2 * n);
    for j in 0..2 * n {
        let mut e = nalgebra::DVector::zeros(2 * n);
        e[j] = 1.0;
        let rates = angle_variations(q, &FirstOrderDeformation::from_stacked(g, &e))?;
        dalpha.set_column(j, &nalgebra::DVector::from_vec(rates));
    }
    let k = null_space(&dalpha, 1e-10).basis;
    let triv = trivial_deformations(q);
    let t = DMatrix::from_columns(&triv.iter().map(|u| u.to_stacked(g)).collect::<Vec<_>>());
    let w = null_space(&(k.transpose() * &t).transpose(), 1e-10).basis;
    let basis = &k * w;
    Ok((0..basis.ncols()).map(|j| FirstOrderDeformation::from_stacked(g, &basis.column(j).into_owned())).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaFormSignature {
    pub gram: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub positive: usize,
    pub negative: usize,
}

pub fn area_form_signature(q: &Polygon, x0: &Vec3) -> Result<AreaFormSignature> {
    let basis = fixed_angle_basis(q)?;
    let k = basis.len();
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = area_form(q, &basis[a], &basis[b], x0)?;
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    let eigenvalues = sym_eigenvalues(&m);
    let scale = eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max).max(1e-300);
    let positive = eigenvalues.iter().filter(|&&e| e > 1e-9 * scale).count();
    let negative = eigenvalues.iter().filter(|&&e| e < -1e-9 * scale).count();
    Ok(AreaFormSignature { gram: to_rows(&m), eigenvalues, positive, negative })
}

/// Rotation taking `c` to the north pole.
fn to_pole(c: &Vec3) -> Rotation3<f64> {
    Rotation3::rotation_between(c, &Vec3::z()).unwrap_or_else(|| Rotation3::from_axis_angle(&Vec3::x_axis(), PI))
}

/// Central projection of a spherical polygon, after rotating its vertex
/// barycenter to the north pole, to the tangent plane there.
pub fn projective_flatten(q: &Polygon) -> Result<Polygon> {
    if q.geometry() != Geometry::S2 {
        return Err(Error::UnsupportedGeometry(q.geometry().to_string()));
    }
    let c = normalize(Geometry::S2, &q.vertices().iter().sum::<Vec3>())?;
    let r = to_pole(&c);
    let pts: Vec<Vec3> = q.vertices().iter().map(|v| r * v).collect();
    if pts.iter().any(|p| p.z <= 1e-12) {
        return Err(Error::NotInHemisphere);
    }
    Polygon::new(Geometry::E2, pts.iter().map(|p| Vec3::new(p.x / p.z, p.y / p.z, 0.0)).collect())
}

/// Whether `alpha` satisfies the limit hypotheses: positive entries summing
/// to `2 pi` and no cyclic run summing to `pi`.
pub fn check_limit_angles(alpha: &[f64]) -> Result<()> {
    let n = alpha.len();
    if n < 3 || alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::HypothesisViolated("angles must be positive, at least three".into()));
    }
    if (alpha.iter().sum::<f64>() - TAU).abs() > 1e-9 {
        return Err(Error::HypothesisViolated("angles must sum to 2 pi".into()));
    }
    for start in 0..n {
        let mut s = 0.0;
        for len in 1..n {
            s += alpha[(start + len - 1) % n];
            if (s - PI).abs() < 1e-9 {
                return Err(Error::HypothesisViolated(format!("run from {start} of length {len} sums to pi")));
            }
        }
    }
    Ok(())
}

/// Deformation of the dual polygon induced by `u` (dual vertex `i` is the
/// normalized `v_i x v_{i+1}`).
pub fn dual_deformation(p: &Polygon, u: &FirstOrderDeformation) -> FirstOrderDeformation {
    let n = p.n() as isize;
    let du = |i: isize| u.velocities[i.rem_euclid(n) as usize];
    FirstOrderDeformation {
        velocities: (0..n)
            .map(|i| {
                let m = p.v(i).cross(p.v(i + 1));
                let len = m.norm();
                let q = m / len;
                let dm = du(i).cross(p.v(i + 1)) + p.v(i).cross(&du(i + 1));
                (dm - q * q.dot(&dm)) / len
            })
            .collect(),
    }
}

/// Smallest `eps` with `(1 - eps) G_i <= -2 G_A <= (1 + eps) G_i` at one
/// polygon with fixed edge lengths. `G_i` is the gram of the
/// interior-barycenter metric and `G_A` the area form of the flattened dual
/// polygon along the induced deformations (normalized to keep the dual's
/// vertex barycenter fixed).
pub fn limit_discrepancy(p: &Polygon) -> Result<f64> {
    let space = isometric_deformation_space(p)?;
    let us = space.quotient_vectors();
    let ci = barycenter(p, BarycenterKind::Interior)?;
    let gi = b_gram(p, &us, &ci)?;
    let q = p.dual()?;
    let sum: Vec3 = q.vertices().iter().sum();
    let cv = sum.normalize();
    let rot = to_pole(&cv);
    let flat = projective_flatten(&q)?;
    let x0c = rot * ci;
    if x0c.z <= 0.0 {
        return Err(Error::NotInHemisphere);
    }
    let x0 = Vec3::new(x0c.x / x0c.z, x0c.y / x0c.z, 0.0);
    let induced: Vec<FirstOrderDeformation> = us
        .iter()
        .map(|u| {
            let dq = dual_deformation(p, u);
            // keep the normalized vertex sum fixed
            let ds: Vec3 = dq.velocities.iter().sum();
            let dc = (ds - cv * cv.dot(&ds)) / sum.norm();
            let w = dc.cross(&cv);
            FirstOrderDeformation {
                velocities: q
                    .vertices()
                    .iter()
                    .zip(&dq.velocities)
                    .map(|(x, dx)| {
                        let (y, dy) = (rot * x, rot * (dx + w.cross(x)));
                        Vec3::new(dy.x / y.z - y.x * dy.z / (y.z * y.z), dy.y / y.z - y.y * dy.z / (y.z * y.z), 0.0)
                    })
                    .collect(),
            }
        })
        .collect();
    let k = us.len();
    let mut ga = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            ga[(a, b)] = area_form(&flat, &induced[a], &induced[b], &x0)?;
        }
    }
    if k == 0 {
        return Ok(0.0);
    }
    let chol = gi.cholesky().ok_or(Error::SingularOperator)?;
    let linv = chol.l().try_inverse().ok_or(Error::SingularOperator)?;
    let m = &linv * (ga * -2.0) * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    Ok(sym_eigenvalues(&m).iter().map(|e| (e - 1.0).abs()).fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub a_k: f64,
    /// Largest discrepancy over the sampled polygons.
    pub discrepancy: f64,
    pub samples: usize,
}

/// For `l^k = (1 - 1/k) alpha`, the discrepancy between `g_i / 2a_k` and
/// the area form on the flattened duals rescaled by `1/sqrt(a_k)`, at the
/// maximal-area polygon and `extra` polygons sampled around it.
pub fn convergence_experiment(alpha: &[f64], ks: &[usize], extra: usize, seed: u64) -> Result<Vec<ConvergenceRow>> {
    check_limit_angles(alpha)?;
    ks.par_iter()
        .map(|&k| {
            if k < 2 {
                return Err(Error::HypothesisViolated("k must be at least 2".into()));
            }
            let f = 1.0 - 1.0 / k as f64;
            let l: Vec<f64> = alpha.iter().map(|a| a * f).collect();
            let a_k = TAU - l.iter().sum::<f64>();
            let sol = solve_max_area(&l, Geometry::S2)?;
            let mut polys = vec![sol.polygon.clone()];
            if extra > 0 {
                let comp = sample_isometric_competitors(&sol.polygon, extra, seed ^ k as u64)?;
                polys.extend(comp);
            }
            let mut worst: f64 = 0.0;
            for p in &polys {
                worst = worst.max(limit_discrepancy(p)?);
            }
            Ok(ConvergenceRow { k, a_k, discrepancy: worst, samples: polys.len() })
        })
        .collect()
}

/// Whether `c` lies strictly inside the dual of the convex spherical
/// polygon `p`.
pub fn in_dual_interior(p: &Polygon, c: &Vec3) -> Result<bool> {
    p.dual()?.interior_contains(c)
}

/// Angle-sum residual `|sum da_i v_i|` for each quotient basis vector, used
/// as a consistency probe of the normal map.
pub fn normal_map_residual(q: &Polygon) -> Result<f64> {
    let space = isometric_deformation_space(q)?;
    let mut worst: f64 = 0.0;
    for u in space.quotient_vectors() {
        let r = angle_variations(q, &u)?;
        worst = worst.max(weighted_vertex_sum(q, &r).norm());
    }
    Ok(worst)
}
