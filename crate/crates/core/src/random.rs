//! Seeded random polygons and fields used by sweeps and tests.

use std::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, UnitQuaternion, Quaternion};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{minkowski, vertex_angle, Geometry, KillingField, Vec3};
use crate::polygon::Polygon;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `i` of the generator seeded by `seed`.
pub fn instance_rng(seed: u64, i: u64) -> SeededRng {
    let mut r = rng(seed);
    r.set_stream(i);
    r
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation3<f64> {
    let q = Quaternion::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

pub fn random_unit_vector<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

pub fn random_killing<R: Rng>(g: Geometry, rng: &mut R) -> KillingField {
    KillingField::new(
        g,
        Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)),
    )
}

/// Counterclockwise convex plane polygon inscribed in a randomly stretched
/// and rotated ellipse, with radius at most 1 around the origin. Interior
/// angles stay away from 0 and pi.
pub fn convex_plane_points<R: Rng>(n: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let min_gap = 0.35 * TAU / n as f64;
    loop {
        let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        t.sort_by(f64::total_cmp);
        let gaps_ok = (0..n).all(|i| {
            let next = if i + 1 == n { t[0] + TAU } else { t[i + 1] };
            next - t[i] >= min_gap
        });
        if !gaps_ok {
            continue;
        }
        let a = 1.0;
        let b = rng.random_range(0.45..1.0);
        let rot = rng.random_range(0.0..TAU);
        let shift = [rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15)];
        let pts: Vec<[f64; 2]> = t
            .iter()
            .map(|&s| {
                let (x, y) = (a * s.cos(), b * s.sin());
                let (c, sn) = (rot.cos(), rot.sin());
                [c * x - sn * y + shift[0], sn * x + c * y + shift[1]]
            })
            .collect();
        let rmax = pts.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        let pts: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] / rmax, p[1] / rmax]).collect();
        let poly = Polygon::euclidean(&pts).expect("distinct points");
        let ok = poly.is_convex()
            && poly.real_angles().map(|a| a.iter().all(|&x| x > 0.15 && x < PI - 0.08)).unwrap_or(false);
        if ok {
            return pts;
        }
    }
}

fn gnomonic_inverse(p: &[f64; 2]) -> Vec3 {
    Vec3::new(p[0], p[1], 1.0).normalize()
}

fn klein_to_hyperboloid(p: &[f64; 2]) -> Vec3 {
    let s = (1.0 - p[0] * p[0] - p[1] * p[1]).sqrt();
    Vec3::new(p[0] / s, p[1] / s, 1.0 / s)
}

/// Random counterclockwise convex polygon. De Sitter polygons are duals of
/// random convex hyperbolic polygons.
pub fn random_convex_polygon<R: Rng>(g: Geometry, n: usize, rng: &mut R) -> Polygon {
    loop {
        let pts = convex_plane_points(n, rng);
        let p = match g {
            Geometry::E2 => {
                let s = rng.random_range(0.5..3.0);
                let c = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let q: Vec<[f64; 2]> = pts.iter().map(|p| [c[0] + s * p[0], c[1] + s * p[1]]).collect();
                Polygon::euclidean(&q)
            }
            Geometry::S2 => {
                let s = rng.random_range(0.2..1.6);
                let rot = random_rotation(rng);
                let vs = pts.iter().map(|p| rot * gnomonic_inverse(&[s * p[0], s * p[1]])).collect();
                Polygon::new(Geometry::S2, vs)
            }
            Geometry::H2 => {
                let s = rng.random_range(0.15..0.95);
                let vs = pts.iter().map(|p| klein_to_hyperboloid(&[s * p[0], s * p[1]])).collect();
                Polygon::new(Geometry::H2, vs)
            }
            Geometry::DS2 => {
                let h = random_convex_polygon(Geometry::H2, n, rng);
                h.dual()
            }
        };
        if let Ok(p) = p {
            if p.is_convex() && p.interior_angles().is_ok() {
                return p;
            }
        }
    }
}

/// Random polygon without convexity: star-shaped vertex sets with random
/// radii (plane, sphere, hyperbolic plane), or random points of the de
/// Sitter plane kept away from lightlike configurations.
pub fn random_generic_polygon<R: Rng>(g: Geometry, n: usize, rng: &mut R) -> Polygon {
    loop {
        let p = if g == Geometry::DS2 {
            let vs: Vec<Vec3> = (0..n)
                .map(|_| {
                    let s: f64 = rng.random_range(-1.0..1.0);
                    let phi: f64 = rng.random_range(0.0..TAU);
                    Vec3::new(s.cosh() * phi.cos(), s.cosh() * phi.sin(), s.sinh())
                })
                .collect();
            Polygon::new(g, vs)
        } else {
            let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
            t.sort_by(f64::total_cmp);
            let pts: Vec<[f64; 2]> = t
                .iter()
                .map(|&s| {
                    let r = rng.random_range(0.3..1.0);
                    [r * s.cos(), r * s.sin()]
                })
                .collect();
            match g {
                Geometry::E2 => Polygon::euclidean(&pts.iter().map(|p| [2.0 * p[0], 2.0 * p[1]]).collect::<Vec<_>>()),
                Geometry::S2 => {
                    let rot = random_rotation(rng);
                    Polygon::new(g, pts.iter().map(|p| rot * gnomonic_inverse(&[1.2 * p[0], 1.2 * p[1]])).collect())
                }
                _ => Polygon::new(g, pts.iter().map(|p| klein_to_hyperboloid(&[0.9 * p[0], 0.9 * p[1]])).collect()),
            }
        };
        let Ok(p) = p else { continue };
        if generic_enough(&p) {
            return p;
        }
    }
}

/// Rejects near-degenerate vertices: angles close to 0 or pi and, in the de
/// Sitter plane, nearly lightlike edges or tangents.
fn generic_enough(p: &Polygon) -> bool {
    let n = p.n() as isize;
    if p.geometry() == Geometry::DS2 {
        for i in 0..n {
            let c = minkowski(p.v(i), p.v(i + 1));
            if (c.abs() - 1.0).abs() < 0.05 {
                return false;
            }
            let t = p.v(i + 1) - p.v(i) * c;
            if minkowski(&t, &t).abs() < 0.05 * t.norm_squared() {
                return false;
            }
            let t = p.v(i) - p.v(i + 1) * c;
            if minkowski(&t, &t).abs() < 0.05 * t.norm_squared() {
                return false;
            }
        }
    }
    (0..n).all(|i| match vertex_angle(p.geometry(), p.v(i), p.v(i - 1), p.v(i + 1)) {
        Ok(a) => {
            let s = a.sin().norm();
            let re = a.re.rem_euclid(PI);
            s > 0.05 && (p.geometry() == Geometry::DS2 || (re > 0.05 && re < PI - 0.05))
        }
        Err(_) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_reproducible_and_valid() {
        for g in Geometry::ALL {
            let a = random_convex_polygon(g, 6, &mut rng(11));
            let b = random_convex_polygon(g, 6, &mut rng(11));
            assert_eq!(a, b);
            assert!(a.is_convex(), "{g}");
            let c = random_generic_polygon(g, 7, &mut rng(3));
            assert_eq!(c.n(), 7);
        }
    }

    #[test]
    fn rotations_are_orthogonal() {
        let r = random_rotation(&mut rng(5));
        let m = r.matrix();
        assert!((m.transpose() * m - nalgebra::Matrix3::identity()).amax() < 1e-14);
        assert!((m.determinant() - 1.0).abs() < 1e-14);
    }
}
