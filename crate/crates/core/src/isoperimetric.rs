//! Maximal-area convex polygons with prescribed edge lengths on the sphere
//! and the hyperbolic plane, criticality, and concavity of the area.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binvariant::b2_of;
use crate::deformation::{
    angle_variations, isometric_deformation_space, isometric_step, vertices_on_geodesic, FirstOrderDeformation,
};
use crate::error::{Error, Result};
use crate::geometry::{causal_type, cross, inner, minkowski, normalize, tangent_toward, CausalType, Geometry, Vec3};
use crate::linalg::{lstsq, sym_eigenvalues};
use crate::polygon::Polygon;
use crate::random::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocusKind {
    Circle,
    Horocycle,
    Equidistant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Locus {
    Circle { radius: f64 },
    Horocycle,
    Equidistant { distance: f64 },
}

impl Locus {
    pub fn kind(&self) -> LocusKind {
        match self {
            Locus::Circle { .. } => LocusKind::Circle,
            Locus::Horocycle => LocusKind::Horocycle,
            Locus::Equidistant { .. } => LocusKind::Equidistant,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocusClassification {
    /// Half-length sine (or sinh) of the longest edge.
    pub s1: f64,
    /// Sum of the same quantity over the other edges.
    pub sum_rest: f64,
    pub kind: LocusKind,
    /// Index of the longest edge.
    pub longest: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalSolution {
    pub locus: Locus,
    pub polygon: Polygon,
    pub area: f64,
    /// Largest edge-length error of the realized polygon.
    pub solver_residual: f64,
    /// The root `S` of the locus equation (1 for a horocycle).
    pub parameter: f64,
}

const HOROCYCLE_TOL: f64 = 1e-10;

fn half_measure(g: Geometry, l: f64) -> f64 {
    if g == Geometry::S2 {
        (l / 2.0).sin()
    } else {
        (l / 2.0).sinh()
    }
}

fn check_lengths(l: &[f64], g: Geometry) -> Result<()> {
    if !matches!(g, Geometry::S2 | Geometry::H2) {
        return Err(Error::UnsupportedGeometry(g.to_string()));
    }
    if l.len() < 3 {
        return Err(Error::TooFewVertices(l.len()));
    }
    if l.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Infeasible("edge lengths must be positive".into()));
    }
    if g == Geometry::S2 && l.iter().sum::<f64>() >= 2.0 * PI {
        return Err(Error::Infeasible("spherical perimeter must be below 2 pi".into()));
    }
    Ok(())
}

pub fn classify_locus(l: &[f64], g: Geometry) -> Result<LocusClassification> {
    check_lengths(l, g)?;
    let longest = (0..l.len()).max_by(|&a, &b| l[a].total_cmp(&l[b])).unwrap();
    let s1 = half_measure(g, l[longest]);
    let sum_rest: f64 = (0..l.len()).filter(|&i| i != longest).map(|i| half_measure(g, l[i])).sum();
    let kind = if (s1 - sum_rest).abs() <= HOROCYCLE_TOL * sum_rest.max(1.0) {
        LocusKind::Horocycle
    } else if s1 < sum_rest {
        LocusKind::Circle
    } else {
        LocusKind::Equidistant
    };
    if g == Geometry::S2 && kind != LocusKind::Circle {
        return Err(Error::Infeasible("longest edge too long for a convex spherical polygon".into()));
    }
    Ok(LocusClassification { s1, sum_rest, kind, longest })
}

fn rest(l: &[f64], g: Geometry, longest: usize) -> Vec<f64> {
    (0..l.len()).filter(|&i| i != longest).map(|i| half_measure(g, l[i])).collect()
}

/// `F(s) = s sin(sum_i asin(S_i / s))` over the edges other than the longest.
pub fn circle_function(l: &[f64], g: Geometry, s: f64) -> Result<f64> {
    let c = classify_locus(l, g)?;
    Ok(circle_f(&rest(l, g, c.longest), s))
}

/// `G(s) = s sinh(sum_i asinh(S_i / s))` over the edges other than the longest.
pub fn equidistant_function(l: &[f64], s: f64) -> Result<f64> {
    let c = classify_locus(l, Geometry::H2)?;
    Ok(equidistant_g(&rest(l, Geometry::H2, c.longest), s))
}

fn circle_f(r: &[f64], s: f64) -> f64 {
    s * r.iter().map(|x| (x / s).min(1.0).asin()).sum::<f64>().sin()
}

fn circle_df(r: &[f64], s: f64) -> f64 {
    let phi: f64 = r.iter().map(|x| (x / s).min(1.0).asin()).sum();
    let dphi: f64 = r.iter().map(|x| -x / (s * s * (1.0 - (x / s).powi(2)).max(1e-300).sqrt())).sum();
    phi.sin() + s * phi.cos() * dphi
}

fn equidistant_g(r: &[f64], s: f64) -> f64 {
    s * r.iter().map(|x| (x / s).asinh()).sum::<f64>().sinh()
}

fn equidistant_dg(r: &[f64], s: f64) -> f64 {
    let psi: f64 = r.iter().map(|x| (x / s).asinh()).sum();
    let dpsi: f64 = r.iter().map(|x| -x / (s * s * (1.0 + (x / s).powi(2)).sqrt())).sum();
    psi.sinh() + s * psi.cosh() * dpsi
}

/// Root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs,
/// bisection followed by one guarded Newton step.
fn bracketed_root(f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootBracketFailure);
    }
    let lo_sign = flo.signum();
    for _ in 0..400 {
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let d = df(mid);
    if d.is_finite() && d != 0.0 {
        let x = mid - f(mid) / d;
        if x >= lo && x <= hi && f(x).abs() <= f(mid).abs() {
            return Ok(x);
        }
    }
    Ok(mid)
}

/// Root of the locus equation; `lower` is the left end of the bracket.
fn locus_root(c: &LocusClassification, r: &[f64], g: Geometry, lower: f64) -> Result<f64> {
    match c.kind {
        LocusKind::Circle => {
            let f = |s: f64| circle_f(r, s) - c.s1;
            let df = |s: f64| circle_df(r, s);
            let lo = lower.max(c.s1 * (1.0 + 1e-12));
            let mut hi = 2.0 * lo;
            if g == Geometry::S2 {
                hi = 1.0;
                if lo >= 1.0 || f(hi) < 0.0 {
                    return Err(Error::Infeasible("no circumscribed circle within a hemisphere".into()));
                }
            } else {
                let mut k = 0;
                while f(hi) <= 0.0 {
                    hi *= 2.0;
                    k += 1;
                    if k > 200 {
                        return Err(Error::RootBracketFailure);
                    }
                }
            }
            bracketed_root(&f, &df, lo, hi)
        }
        LocusKind::Equidistant => {
            let f = |s: f64| equidistant_g(r, s) - c.s1;
            let df = |s: f64| equidistant_dg(r, s);
            let lo = lower.max(1.0);
            if f(lo) <= 0.0 {
                return Err(Error::Infeasible("polygon inequality violated".into()));
            }
            let mut hi = 2.0 * lo;
            let mut k = 0;
            while f(hi) >= 0.0 {
                hi *= 2.0;
                k += 1;
                if k > 200 {
                    return Err(Error::RootBracketFailure);
                }
            }
            bracketed_root(&f, &df, lo, hi)
        }
        LocusKind::Horocycle => Ok(1.0),
    }
}

/// Root of the locus equation with the bracket starting at `lower` (the
/// default bracket starts just above `S_1`). Exposed to compare independent
/// solver runs.
pub fn locus_parameter(l: &[f64], g: Geometry, lower: f64) -> Result<f64> {
    let c = classify_locus(l, g)?;
    locus_root(&c, &rest(l, g, c.longest), g, lower)
}

fn upper_half_plane_to_hyperboloid(x: f64, y: f64) -> Vec3 {
    let r2 = x * x + y * y;
    Vec3::new(x / y, (r2 - 1.0) / (2.0 * y), (r2 + 1.0) / (2.0 * y))
}

/// The convex polygon of maximal area with edge lengths `l` (edge `i` joins
/// vertices `i` and `i+1`), counterclockwise.
pub fn solve_max_area(l: &[f64], g: Geometry) -> Result<CriticalSolution> {
    let c = classify_locus(l, g)?;
    let n = l.len();
    let m = c.longest;
    let r = rest(l, g, m);
    let s = locus_root(&c, &r, g, 0.0)?;
    // Position parameter of each vertex along the locus, starting at v_{m+1}.
    let step = |i: usize| -> f64 {
        let si = half_measure(g, l[i]);
        match c.kind {
            LocusKind::Circle => 2.0 * (si / s).min(1.0).asin(),
            LocusKind::Equidistant => 2.0 * (si / s).asinh(),
            LocusKind::Horocycle => 2.0 * si,
        }
    };
    let mut params = vec![0.0; n];
    let mut t = 0.0;
    for k in 0..n {
        let idx = (m + 1 + k) % n;
        params[idx] = t;
        if k + 1 < n {
            t += step(idx);
        }
    }
    let (locus, place): (Locus, Box<dyn Fn(f64) -> Vec3>) = match (c.kind, g) {
        (LocusKind::Circle, Geometry::S2) => {
            let rad = s.asin();
            (Locus::Circle { radius: rad }, Box::new(move |a: f64| Vec3::new(rad.sin() * a.cos(), rad.sin() * a.sin(), rad.cos())))
        }
        (LocusKind::Circle, _) => {
            let rad = s.asinh();
            (
                Locus::Circle { radius: rad },
                Box::new(move |a: f64| Vec3::new(rad.sinh() * a.cos(), rad.sinh() * a.sin(), rad.cosh())),
            )
        }
        (LocusKind::Equidistant, _) => {
            let d = s.acosh();
            (
                Locus::Equidistant { distance: d },
                Box::new(move |a: f64| Vec3::new(s * a.sinh(), d.sinh(), s * a.cosh())),
            )
        }
        (LocusKind::Horocycle, _) => {
            let mid = 0.5 * t;
            (Locus::Horocycle, Box::new(move |a: f64| upper_half_plane_to_hyperboloid(a - mid, 1.0)))
        }
    };
    let verts: Vec<Vec3> = params.iter().map(|&a| place(a)).collect();
    let mut p = Polygon::new(g, verts.clone())?;
    if !p.is_convex() {
        p = Polygon::new(g, verts.iter().map(|v| Vec3::new(-v.x, v.y, v.z)).collect())?;
    }
    if !p.is_convex() {
        return Err(Error::Infeasible("realized polygon is not convex".into()));
    }
    let got = p.real_edge_lengths()?;
    let solver_residual = got.iter().zip(l).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(CriticalSolution { locus, area: p.area()?, polygon: p, solver_residual, parameter: s })
}

fn metric_matrix(g: Geometry) -> Matrix3<f64> {
    if g.is_lorentzian() {
        Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0))
    } else {
        Matrix3::identity()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityWitness {
    pub critical: bool,
    /// Least-squares solution of `<u, v_i> = 1`.
    pub u: Vec3,
    pub residual: f64,
    /// Locus read off the causal type of `u` (hyperbolic plane only; the
    /// sphere always gives a circle).
    pub locus: Option<LocusKind>,
}

const CRITICAL_TOL: f64 = 1e-9;

pub fn is_critical(p: &Polygon) -> Result<CriticalityWitness> {
    let g = p.geometry();
    if !matches!(g, Geometry::S2 | Geometry::H2) {
        return Err(Error::UnsupportedGeometry(g.to_string()));
    }
    if vertices_on_geodesic(p) {
        return Err(Error::DegenerateConfiguration("vertices on a geodesic".into()));
    }
    let n = p.n();
    let gm = metric_matrix(g);
    let mut a = DMatrix::zeros(n, 3);
    for (i, v) in p.vertices().iter().enumerate() {
        let row = gm * v;
        for k in 0..3 {
            a[(i, k)] = row[k];
        }
    }
    let x = lstsq(&a, &DVector::from_element(n, 1.0), 1e-12);
    let u = Vec3::new(x[0], x[1], x[2]);
    let residual = p.vertices().iter().map(|v| (inner(g, &u, v) - 1.0).abs()).fold(0.0, f64::max);
    let critical = residual < CRITICAL_TOL;
    let locus = if !critical {
        None
    } else if g == Geometry::S2 {
        Some(LocusKind::Circle)
    } else {
        let q = minkowski(&u, &u);
        Some(if q.abs() <= 1e-9 * u.norm_squared() {
            LocusKind::Horocycle
        } else {
            match causal_type(&u) {
                CausalType::Timelike => LocusKind::Circle,
                _ => LocusKind::Equidistant,
            }
        })
    };
    Ok(CriticalityWitness { critical, u, residual, locus })
}

/// `phi^{-1}(sum v_i)` with `phi(x) = sum <x, v_i> v_i`, not normalized.
fn phi_inverse_of_vertex_sum(p: &Polygon) -> Result<Vec3> {
    let gm = metric_matrix(p.geometry());
    let mut m = Matrix3::zeros();
    let mut sum = Vec3::zeros();
    for v in p.vertices() {
        m += v * (gm * v).transpose();
        sum += v;
    }
    let scale = m.abs().max();
    let svd = m.svd(false, false);
    if svd.singular_values.min() <= 1e-12 * scale {
        return Err(Error::SingularOperator);
    }
    m.lu().solve(&sum).ok_or(Error::SingularOperator)
}

/// Normalized `phi^{-1}(C_v)`.
pub fn center_cs(p: &Polygon) -> Result<Vec3> {
    let g = p.geometry();
    if !matches!(g, Geometry::S2 | Geometry::H2) {
        return Err(Error::UnsupportedGeometry(g.to_string()));
    }
    let w = phi_inverse_of_vertex_sum(p)?;
    normalize(g, &w).map_err(|_| Error::SingularOperator)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaHessian {
    /// Symmetric matrix in the orthonormal quotient basis.
    pub matrix: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub center: Vec3,
    pub center_inside: bool,
    /// Negative definiteness, only stated when the center lies inside.
    pub concave: Option<bool>,
}

/// Hessian of the area on the quotient deformation space at a critical
/// polygon: `-<b(U,V), w>` on the sphere and `<b(U,V), w>` in the hyperbolic
/// plane, with `w = phi^{-1}(sum v_i)`.
pub fn area_hessian(p: &Polygon) -> Result<AreaHessian> {
    let g = p.geometry();
    if !matches!(g, Geometry::S2 | Geometry::H2) {
        return Err(Error::UnsupportedGeometry(g.to_string()));
    }
    if vertices_on_geodesic(p) {
        return Err(Error::DegenerateConfiguration("vertices on a geodesic".into()));
    }
    let w = phi_inverse_of_vertex_sum(p)?;
    let center = normalize(g, &w).map_err(|_| Error::SingularOperator)?;
    let space = isometric_deformation_space(p)?;
    let basis = space.quotient_vectors();
    let k = basis.len();
    let sign = if g == Geometry::S2 { -1.0 } else { 1.0 };
    let mut h = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let val = sign * b2_of(p, &basis[a], &basis[b])?.pair(&w);
            h[(a, b)] = val;
            h[(b, a)] = val;
        }
    }
    let eigenvalues = if k == 0 { Vec::new() } else { sym_eigenvalues(&h) };
    let center_inside = p.is_convex() && p.interior_contains(&center).unwrap_or(false);
    let concave = center_inside.then(|| eigenvalues.iter().all(|&e| e < 0.0));
    let matrix = (0..k).map(|a| (0..k).map(|b| h[(a, b)]).collect()).collect();
    Ok(AreaHessian { matrix, eigenvalues, center, center_inside, concave })
}

/// Second derivative of the area along the isometric path tangent to `u`,
/// Richardson-extrapolated central differences.
pub fn area_second_difference(p: &Polygon, u: &FirstOrderDeformation, h: f64) -> Result<f64> {
    let a0 = p.area()?;
    let d2 = |h: f64| -> Result<f64> {
        let ap = isometric_step(p, u, h)?.area()?;
        let am = isometric_step(p, u, -h)?.area()?;
        Ok((ap - 2.0 * a0 + am) / (h * h))
    };
    let (s1, s2) = (d2(h)?, d2(h / 2.0)?);
    Ok((4.0 * s2 - s1) / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDerivative {
    pub vertex: usize,
    pub analytic: f64,
    pub finite_difference: f64,
}

/// Area derivative when the single flat vertex moves outward, at unit speed,
/// orthogonally to its two edges.
pub fn boundary_derivative_check(p: &Polygon) -> Result<BoundaryDerivative> {
    let g = p.geometry();
    if !matches!(g, Geometry::S2 | Geometry::H2) {
        return Err(Error::UnsupportedGeometry(g.to_string()));
    }
    let angles = p.real_angles()?;
    let flat: Vec<usize> = (0..p.n()).filter(|&i| (angles[i] - PI).abs() < 1e-9).collect();
    let [k] = flat[..] else { return Err(Error::NoFlatVertex) };
    let x = *p.v(k as isize);
    let t = tangent_toward(g, &x, p.v(k as isize + 1));
    let left = cross(g, &x, &t);
    let nrm = inner(g, &left, &left).sqrt();
    let out = -left / nrm;
    let mut u = FirstOrderDeformation::zeros(p.n());
    u.velocities[k] = out;
    let rates = angle_variations(p, &u)?;
    let sum: f64 = rates.iter().sum();
    let analytic = if g == Geometry::S2 { sum } else { -sum };
    let moved = |h: f64| -> Result<f64> {
        let mut vs = p.vertices().to_vec();
        vs[k] = if g == Geometry::S2 { x * h.cos() + out * h.sin() } else { x * h.cosh() + out * h.sinh() };
        Polygon::new(g, vs)?.area()
    };
    let d1 = |h: f64| -> Result<f64> { Ok((moved(h)? - moved(-h)?) / (2.0 * h)) };
    let h = 1e-4;
    let finite_difference = (4.0 * d1(h / 2.0)? - d1(h)?) / 3.0;
    Ok(BoundaryDerivative { vertex: k, analytic, finite_difference })
}

/// Convex polygons with the edge lengths of `p`, sampled by random walks in
/// the deformation space (steps of length `1e-2` followed by re-projection
/// onto the edge-length variety). Walks run in parallel and are seeded from
/// `seed`.
pub fn sample_isometric_competitors(p: &Polygon, count: usize, seed: u64) -> Result<Vec<Polygon>> {
    const STEPS: usize = 25;
    const H: f64 = 1e-2;
    let walks = count.div_ceil(STEPS);
    let out: Vec<Vec<Polygon>> = (0..walks)
        .into_par_iter()
        .map(|w| {
            let mut r = rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(w as u64));
            let mut cur = p.clone();
            let mut prev_dir: Option<FirstOrderDeformation> = None;
            let mut found = Vec::with_capacity(STEPS);
            let mut attempts = 0;
            while found.len() < STEPS && attempts < 20 * STEPS {
                attempts += 1;
                let Ok(space) = isometric_deformation_space(&cur) else { break };
                let k = space.quotient_dim();
                if k == 0 {
                    break;
                }
                let mut c: Vec<f64> = (0..k).map(|_| r.random_range(-1.0..1.0)).collect();
                if let Some(d) = &prev_dir {
                    let q = space.quotient_coordinates(d);
                    for j in 0..k {
                        c[j] = 0.25 * c[j] + q[j];
                    }
                }
                let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let dir = space.combine(&c.iter().map(|x| x / norm).collect::<Vec<_>>());
                match isometric_step(&cur, &dir, H) {
                    Ok(next) if next.is_convex() && next.area().is_ok() => {
                        prev_dir = Some(FirstOrderDeformation {
                            velocities: next.vertices().iter().zip(cur.vertices()).map(|(a, b)| (a - b) / H).collect(),
                        });
                        cur = next.clone();
                        found.push(next);
                    }
                    _ => {
                        prev_dir = None;
                    }
                }
            }
            found
        })
        .collect();
    Ok(out.into_iter().flatten().take(count).collect())
}
