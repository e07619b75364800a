//! The quadratic invariant `b(U) = sum da_i(U) dv_i(U)`, its polarization,
//! the vertex-by-vertex decomposition of a deformation, quadrilateral
//! derivative formulas and positivity certificates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::deformation::{angle_variations, isometric_deformation_space, killing_restriction, FirstOrderDeformation};
use crate::error::{Error, Result};
use crate::geometry::{distance, inner, Geometry, KillingField, Vec3, C64};
use crate::linalg::{condition_number, lstsq};
use crate::polygon::Polygon;

/// Value of `b`; in the de Sitter plane the stored vector is `i b(U)`, which
/// is real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BValue {
    pub vector: Vec3,
    pub geometry: Geometry,
}

impl BValue {
    /// `<b, x>` in the ambient form of the geometry.
    pub fn pair(&self, x: &Vec3) -> f64 {
        inner(self.geometry, &self.vector, x)
    }
}

fn real_coefficient(g: Geometry) -> f64 {
    // i * (i rho) = -rho
    if g == Geometry::DS2 {
        -1.0
    } else {
        1.0
    }
}

/// `sum da_i(U) dv_i(V)`, not symmetrized.
pub fn half_sum(p: &Polygon, u: &FirstOrderDeformation, v: &FirstOrderDeformation) -> Result<BValue> {
    let rates = angle_variations(p, u)?;
    let s: Vec3 = rates.iter().zip(&v.velocities).map(|(a, dv)| dv * *a).sum();
    Ok(BValue { vector: s * real_coefficient(p.geometry()), geometry: p.geometry() })
}

pub fn b_of(p: &Polygon, u: &FirstOrderDeformation) -> Result<BValue> {
    half_sum(p, u, u)
}

/// Symmetric polarization of `b`.
pub fn b2_of(p: &Polygon, u: &FirstOrderDeformation, v: &FirstOrderDeformation) -> Result<BValue> {
    let a = half_sum(p, u, v)?;
    let b = half_sum(p, v, u)?;
    Ok(BValue { vector: (a.vector + b.vector) * 0.5, geometry: p.geometry() })
}

/// Killing field fitted to prescribed values at some vertices.
fn fit_killing(g: Geometry, points: &[(Vec3, Vec3)]) -> Result<(KillingField, f64)> {
    let basis = KillingField::basis(g);
    let d = g.stacked_dim();
    let rows = points.len() * d;
    let mut a = DMatrix::zeros(rows, 3);
    let mut rhs = DVector::zeros(rows);
    for (k, (x, target)) in points.iter().enumerate() {
        for (c, kf) in basis.iter().enumerate() {
            let val = kf.apply(x);
            for r in 0..d {
                a[(k * d + r, c)] = val[r];
            }
        }
        for r in 0..d {
            rhs[k * d + r] = target[r];
        }
    }
    let cond = condition_number(&a);
    let coeffs = lstsq(&a, &rhs, 1e-14);
    Ok((KillingField::from_coefficients(g, &[coeffs[0], coeffs[1], coeffs[2]]), cond))
}

/// Decomposition `U = U_2 + ... + U_{n-2}` (after gauging `U` to vanish at
/// `v_1`, `v_2`): `U_i` vanishes on `v_1..v_i` and is the restriction of a
/// Killing field on `v_{i+1}, ..., v_{n-1}, v_0`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Components indexed by `i = 2..=n-2` (position `i - 2`).
    pub components: Vec<FirstOrderDeformation>,
    /// The gauged deformation `U - kappa`.
    pub gauged: FirstOrderDeformation,
    /// `|gauged - sum U_i|`.
    pub residual: f64,
}

pub fn decompose(p: &Polygon, u: &FirstOrderDeformation) -> Result<Decomposition> {
    let g = p.geometry();
    let n = p.n();
    if n < 4 {
        return Err(Error::DegenerateConfiguration("decomposition needs n >= 4".into()));
    }
    let vs = p.vertices();
    let (k0, cond) = fit_killing(g, &[(vs[1], u.velocities[1]), (vs[2], u.velocities[2])])?;
    if cond > 1e8 {
        return Err(Error::CollinearTriple);
    }
    let gauged = u.sub(&killing_restriction(p, &k0));
    let mut rest = gauged.clone();
    let mut components = Vec::with_capacity(n - 3);
    let basis = KillingField::basis(g);
    let pair = |a: &Vec3, b: &Vec3| if g == Geometry::E2 { a.dot(b) } else { inner(g, a, b) };
    let row = |x: &Vec3, e: &Vec3| Vec3::new(pair(&basis[0].apply(x), e), pair(&basis[1].apply(x), e), pair(&basis[2].apply(x), e));
    for i in 2..=n - 2 {
        // Killing fields keeping the edges (v_i, v_{i+1}) and (v_0, v_1) when
        // v_1..v_i stay fixed: the kernel of two linear conditions.
        let (e1, e0) = if g == Geometry::E2 { (vs[i + 1] - vs[i], vs[0] - vs[1]) } else { (vs[i], vs[1]) };
        let (r1, r0) = (row(&vs[i + 1], &e1), row(&vs[0], &e0));
        let y = r1.cross(&r0);
        if y.norm() <= 1e-8 * r1.norm() * r0.norm() {
            return Err(Error::CollinearTriple);
        }
        let k = KillingField::from_coefficients(g, &[y.x, y.y, y.z]);
        let w = k.apply(&vs[i + 1]);
        if w.norm() <= 1e-8 * y.norm() * vs[i + 1].norm().max(1.0) {
            return Err(Error::CollinearTriple);
        }
        let c = w.dot(&rest.velocities[i + 1]) / w.dot(&w);
        let mut comp = FirstOrderDeformation::zeros(n);
        for j in (i + 1..n).chain(std::iter::once(0)) {
            comp.velocities[j] = k.apply(&vs[j]) * c;
        }
        rest = rest.sub(&comp);
        components.push(comp);
    }
    Ok(Decomposition { components, gauged, residual: rest.norm() })
}

/// Derivatives of the angles of a quadrilateral `(v_0, v_1, v_2, v_3)` with
/// respect to the diagonal `t = d(v_1, v_3)`, from the closed forms.
/// `beta1`, `gamma1` are the parts of the angle at `v_1` in the triangles
/// `(v_0, v_1, v_3)` and `(v_1, v_2, v_3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadDerivatives {
    pub alpha0: C64,
    pub alpha1: C64,
    pub alpha2: C64,
    pub alpha3: C64,
    pub beta1: C64,
    pub gamma1: C64,
}

impl QuadDerivatives {
    pub fn as_array(&self) -> [C64; 6] {
        [self.alpha0, self.alpha1, self.alpha2, self.alpha3, self.beta1, self.gamma1]
    }
}

type Trig = (fn(C64) -> C64, fn(C64) -> C64, f64);

fn trig(g: Geometry) -> Result<Trig> {
    match g {
        Geometry::S2 | Geometry::DS2 => Ok((|z| z.cos(), |z| z.sin(), 1.0)),
        Geometry::H2 => Ok((|z| z.cosh(), |z| z.sinh(), -1.0)),
        Geometry::E2 => Err(Error::UnsupportedGeometry("E2".into())),
    }
}

pub fn quad_derivatives(q: &Polygon) -> Result<QuadDerivatives> {
    if q.n() != 4 {
        return Err(Error::DegenerateQuadrilateral);
    }
    let g = q.geometry();
    let (cf, sf, eps) = trig(g)?;
    let d = |i: isize, j: isize| distance(g, q.v(i), q.v(j)).map(|m| m.to_complex());
    let (d01, d03, d12, d23, t) = (d(0, 1)?, d(0, 3)?, d(1, 2)?, d(2, 3)?, d(1, 3)?);
    let ang = q.interior_angles().map_err(|_| Error::DegenerateQuadrilateral)?;
    let (s0, s2) = (ang[0].sin(), ang[2].sin());
    for z in [sf(d01), sf(d03), sf(d12), sf(d23), sf(t), s0, s2] {
        if z.norm() < 1e-12 {
            return Err(Error::DegenerateQuadrilateral);
        }
    }
    let a0 = sf(d01) * sf(d03) * s0;
    let a2 = sf(d12) * sf(d23) * s2;
    let alpha0 = sf(t) / a0;
    let alpha2 = sf(t) / a2;
    let beta1 = (cf(d03) * cf(t) - cf(d01)) * eps / (a0 * sf(t));
    let gamma1 = (cf(d23) * cf(t) - cf(d12)) * eps / (a2 * sf(t));
    let alpha3 = ((cf(d01) * cf(t) - cf(d03)) / (a0 * sf(t)) + (cf(d12) * cf(t) - cf(d23)) / (a2 * sf(t))) * eps;
    Ok(QuadDerivatives { alpha0, alpha1: beta1 + gamma1, alpha2, alpha3, beta1, gamma1 })
}

/// First-order variation of `t = d(x, y)` under velocities `dx`, `dy`
/// (complex in the de Sitter plane).
pub fn distance_rate(g: Geometry, x: &Vec3, y: &Vec3, dx: &Vec3, dy: &Vec3) -> Result<C64> {
    let t = distance(g, x, y)?.to_complex();
    let dc = inner(g, dx, y) + inner(g, x, dy);
    Ok(match g {
        Geometry::E2 => C64::new((y - x).dot(&(dy - dx)) / t.re, 0.0),
        Geometry::H2 => C64::new(-dc, 0.0) / t.sinh(),
        _ => C64::new(-dc, 0.0) / t.sin(),
    })
}

/// Closed form of `<b(U_i), v_1>` per unit `(d<v_1, v_{i+1}>)^2`, from the
/// quadrilateral `(v_1, v_i, v_{i+1}, v_0)`:
/// `sin a'_1 / (S(d_{0,i+1}) S(d_{i,i+1}) sin a'_0 sin a'_i)` with `S = sin`
/// or `sinh`.
pub fn component_pairing_coefficient(p: &Polygon, i: usize) -> Result<C64> {
    let g = p.geometry();
    let (_, sf, _) = trig(g)?;
    let vs = p.vertices();
    let q = Polygon::new(g, vec![vs[1], vs[i], vs[i + 1], vs[0]])?;
    let ang = q.interior_angles()?;
    let (a1, ai, a0) = (ang[0].sin(), ang[1].sin(), ang[3].sin());
    let d0 = sf(distance(g, &vs[0], &vs[i + 1])?.to_complex());
    let di = sf(distance(g, &vs[i], &vs[i + 1])?.to_complex());
    Ok(a1 / (d0 * di * a0 * ai))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentCheck {
    pub index: usize,
    /// `<b(U_i), v_1>` computed from the angle variations (re, im).
    pub direct: [f64; 2],
    /// Closed form times `(d<v_1, v_{i+1}>(U_i))^2` (re, im).
    pub closed_form: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PositivityReport {
    pub geometry: Geometry,
    /// `<b(U), v_j>` for every vertex (`i b(U)` for de Sitter).
    pub vertex_products: Vec<f64>,
    pub min_product: f64,
    pub verdict: bool,
    pub components: Vec<ComponentCheck>,
    /// Largest mismatch between direct and closed-form component values,
    /// relative to max(1, |closed form|).
    pub closed_form_mismatch: f64,
    pub decomposition_residual: f64,
    /// `|<b(U), v_1> - sum_i <b(U_i), v_1>|`.
    pub additivity_residual: f64,
    pub quotient_norm: f64,
}

fn complex_pair(g: Geometry, b: &BValue, x: &Vec3) -> C64 {
    // b.vector holds i b for de Sitter; undo the factor to report <b, x>.
    let v = b.pair(x);
    if g == Geometry::DS2 {
        C64::new(0.0, -v)
    } else {
        C64::new(v, 0.0)
    }
}

pub fn positivity_certificate(p: &Polygon, u: &FirstOrderDeformation) -> Result<PositivityReport> {
    let g = p.geometry();
    if g == Geometry::E2 {
        return Err(Error::UnsupportedGeometry("E2".into()));
    }
    if !p.is_convex() {
        return Err(Error::NotConvex);
    }
    let space = isometric_deformation_space(p)?;
    let quotient_norm = space.quotient_coordinates(u).norm();
    if quotient_norm <= 1e-8 {
        return Err(Error::TrivialDeformation);
    }
    let b = b_of(p, u)?;
    let vertex_products: Vec<f64> = p.vertices().iter().map(|v| b.pair(v)).collect();
    let min_product = vertex_products.iter().copied().fold(f64::INFINITY, f64::min);
    let mut components = Vec::new();
    let mut closed_form_mismatch: f64 = 0.0;
    let mut additivity_residual = 0.0;
    let mut decomposition_residual = 0.0;
    if p.n() >= 4 {
        let dec = decompose(p, u)?;
        decomposition_residual = dec.residual;
        let vs = p.vertices();
        let mut total = C64::new(0.0, 0.0);
        for (k, comp) in dec.components.iter().enumerate() {
            let i = k + 2;
            let direct = complex_pair(g, &b_of(p, comp)?, &vs[1]);
            let dd = inner(g, &vs[1], &comp.velocities[i + 1]);
            let closed = component_pairing_coefficient(p, i)? * dd * dd;
            closed_form_mismatch = closed_form_mismatch.max((direct - closed).norm() / closed.norm().max(1.0));
            total += direct;
            components.push(ComponentCheck {
                index: i,
                direct: [direct.re, direct.im],
                closed_form: [closed.re, closed.im],
            });
        }
        additivity_residual = (complex_pair(g, &b, &vs[1]) - total).norm();
    }
    Ok(PositivityReport {
        geometry: g,
        verdict: min_product > 0.0,
        vertex_products,
        min_product,
        components,
        closed_form_mismatch,
        decomposition_residual,
        additivity_residual,
        quotient_norm,
    })
}

/// Check of `<II(dPhi(U), dPhi(U)), Psi(w)> = -<b(U), w>` on a spherical
/// polygon: the left side is the second difference of the angle vector
/// along an isometric path, paired with `(<v_i, w>)_i`. Returns the largest
/// discrepancy over `w = e1, e2, e3`.
pub fn second_fundamental_form_check(q: &Polygon, u: &FirstOrderDeformation, h: f64) -> Result<f64> {
    if q.geometry() != Geometry::S2 {
        return Err(Error::UnsupportedGeometry(q.geometry().to_string()));
    }
    let angles = q.real_angles()?;
    if angles.iter().all(|a| a.abs() < 1e-6 || (a - std::f64::consts::PI).abs() < 1e-6) {
        return Err(Error::SingularPoint);
    }
    let b = b_of(q, u)?;
    let acc = angle_acceleration(q, u, h)?;
    let mut worst: f64 = 0.0;
    for w in [Vec3::x(), Vec3::y(), Vec3::z()] {
        let lhs: f64 = acc.iter().zip(q.vertices()).map(|(a, v)| a * v.dot(&w)).sum();
        worst = worst.max((lhs + b.vector.dot(&w)).abs());
    }
    Ok(worst)
}

/// Second derivative of the angles along the isometric path through `q`
/// tangent to `u`, by a Richardson-extrapolated central second difference.
pub fn angle_acceleration(q: &Polygon, u: &FirstOrderDeformation, h: f64) -> Result<Vec<f64>> {
    use crate::deformation::isometric_step;
    let a0 = q.real_angles()?;
    let second = |h: f64| -> Result<Vec<f64>> {
        let ap = isometric_step(q, u, h)?.real_angles()?;
        let am = isometric_step(q, u, -h)?.real_angles()?;
        Ok((0..a0.len()).map(|i| (ap[i] - 2.0 * a0[i] + am[i]) / (h * h)).collect())
    };
    let s1 = second(h)?;
    let s2 = second(h / 2.0)?;
    Ok(s1.iter().zip(&s2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{isometric_deformation_space, isometry_defect, DeformationSpace};
    use crate::random::{random_convex_polygon, random_killing, rng};
    use rand::Rng;

    fn random_u(s: &DeformationSpace, r: &mut impl Rng) -> FirstOrderDeformation {
        let c: Vec<f64> = (0..s.quotient_dim()).map(|_| r.random_range(-1.0..1.0)).collect();
        s.combine(&c)
    }

    #[test]
    fn trivial_gives_zero_and_b_is_gauge_invariant_and_quadratic() {
        let mut r = rng(10);
        for g in [Geometry::S2, Geometry::H2, Geometry::DS2, Geometry::E2] {
            let p = random_convex_polygon(g, 6, &mut r);
            let s = isometric_deformation_space(&p).unwrap();
            let k = killing_restriction(&p, &random_killing(g, &mut r));
            assert!(b_of(&p, &k).unwrap().vector.norm() < 1e-12);
            let u = random_u(&s, &mut r);
            let b = b_of(&p, &u).unwrap().vector;
            let b2 = b_of(&p, &u.add(&k)).unwrap().vector;
            assert!((b - b2).norm() < 1e-10, "{g}");
            let b3 = b_of(&p, &u.scaled(1.7)).unwrap().vector;
            assert!((b3 - b * 1.7 * 1.7).norm() < 1e-10);
            let v = random_u(&s, &mut r);
            assert!((b2_of(&p, &u, &u).unwrap().vector - b).norm() < 1e-12);
            assert_eq!(b2_of(&p, &u, &v).unwrap(), b2_of(&p, &v, &u).unwrap());
            let k2 = killing_restriction(&p, &random_killing(g, &mut r));
            let h1 = half_sum(&p, &u, &v).unwrap().vector;
            let h2 = half_sum(&p, &u.add(&k), &v.add(&k2)).unwrap().vector;
            assert!((h1 - h2).norm() < 1e-10);
        }
    }

    #[test]
    fn decomposition_invariants() {
        let mut r = rng(11);
        for g in [Geometry::S2, Geometry::H2, Geometry::DS2, Geometry::E2] {
            for n in [4usize, 6, 7] {
                let p = random_convex_polygon(g, n, &mut r);
                let s = isometric_deformation_space(&p).unwrap();
                let u = random_u(&s, &mut r);
                let d = decompose(&p, &u).unwrap();
                assert_eq!(d.components.len(), n - 3);
                assert!(d.residual < 1e-9, "{g} {n}: {}", d.residual);
                for (k, c) in d.components.iter().enumerate() {
                    let i = k + 2;
                    assert!(isometry_defect(&p, c) < 1e-9);
                    for j in 1..=i {
                        assert!(c.velocities[j].norm() < 1e-9);
                    }
                }
                if n == 4 {
                    assert!((d.components[0].sub(&d.gauged)).norm() < 1e-9);
                }
                if g != Geometry::E2 {
                    for a in 0..d.components.len() {
                        for b in 0..d.components.len() {
                            if a != b {
                                let x = b2_of(&p, &d.components[a], &d.components[b]).unwrap();
                                assert!(x.pair(p.v(1)).abs() < 1e-10);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn quad_closed_forms_match_analytic_rates() {
        let mut r = rng(12);
        for g in [Geometry::S2, Geometry::H2, Geometry::DS2] {
            for _ in 0..20 {
                let q = random_convex_polygon(g, 4, &mut r);
                let s = isometric_deformation_space(&q).unwrap();
                let u = s.quotient_vector(0);
                let dt = distance_rate(g, q.v(1), q.v(3), &u.velocities[1], &u.velocities[3]).unwrap();
                let rates = angle_variations(&q, &u).unwrap();
                let qd = quad_derivatives(&q).unwrap();
                let closed = [qd.alpha0, qd.alpha1, qd.alpha2, qd.alpha3];
                for i in 0..4 {
                    let a = if g == Geometry::DS2 { C64::new(0.0, rates[i]) } else { C64::new(rates[i], 0.0) };
                    let c = closed[i] * dt;
                    assert!((a - c).norm() < 1e-9 * (1.0 + c.norm()), "{g} {i}: {a} vs {c}");
                }
            }
        }
    }

    #[test]
    fn symmetric_quadrilateral_has_equal_side_rates() {
        // kite symmetric under the reflection swapping v1 and v3
        let v = |x: f64, y: f64| Vec3::new(x, y, 1.0).normalize();
        let q = Polygon::new(Geometry::S2, vec![v(0.0, -0.5), v(0.4, 0.0), v(0.0, 0.3), v(-0.4, 0.0)]).unwrap();
        let d = quad_derivatives(&q).unwrap();
        assert!((d.alpha1 - d.alpha3).norm() < 1e-12);
    }

    #[test]
    fn positivity_on_random_convex_polygons() {
        let mut r = rng(13);
        for g in [Geometry::S2, Geometry::H2, Geometry::DS2] {
            for n in 4..=7 {
                let p = random_convex_polygon(g, n, &mut r);
                let s = isometric_deformation_space(&p).unwrap();
                let u = random_u(&s, &mut r);
                let rep = positivity_certificate(&p, &u).unwrap();
                assert!(rep.verdict, "{g} n={n}: {:?}", rep.vertex_products);
                assert!(rep.closed_form_mismatch < 1e-9, "{g} n={n}: {:?}", rep.components);
                assert!(rep.additivity_residual < 1e-9);
            }
        }
    }

    #[test]
    fn trivial_deformation_is_rejected() {
        let mut r = rng(14);
        let p = random_convex_polygon(Geometry::S2, 5, &mut r);
        let k = killing_restriction(&p, &random_killing(Geometry::S2, &mut r));
        assert!(matches!(positivity_certificate(&p, &k), Err(Error::TrivialDeformation)));
    }

    #[test]
    fn second_fundamental_form_identity() {
        let mut r = rng(15);
        let p = random_convex_polygon(Geometry::S2, 5, &mut r);
        let s = isometric_deformation_space(&p).unwrap();
        let u = random_u(&s, &mut r);
        assert!(second_fundamental_form_check(&p, &u, 1e-3).unwrap() < 1e-5);
        let k = killing_restriction(&p, &random_killing(Geometry::S2, &mut r));
        assert!(second_fundamental_form_check(&p, &k, 1e-3).unwrap() < 1e-6);
    }
}
