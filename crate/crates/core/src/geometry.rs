//! Ambient models of the four constant-curvature planes.
//!
//! * `E2`: the plane `z = 0` in R^3.
//! * `S2`: the unit sphere in Euclidean R^3.
//! * `H2`: the upper sheet `<x,x> = -1, z > 0` in Minkowski space R^{2,1}.
//! * `DS2`: the de Sitter plane `<x,x> = 1` in R^{2,1}.
//!
//! The Minkowski product is `xx' + yy' - zz'`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

pub type Vec3 = Vector3<f64>;
pub type C64 = Complex<f64>;

/// Orientation sign used for de Sitter angles: `sin(theta) = SIGMA * i * S / K`.
/// Chosen so that duals of counterclockwise convex hyperbolic polygons have
/// interior angles of the form `pi - i r` with `r > 0`.
pub const DS2_SIGMA: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    E2,
    S2,
    H2,
    DS2,
}

impl Geometry {
    pub const ALL: [Geometry; 4] = [Geometry::E2, Geometry::S2, Geometry::H2, Geometry::DS2];

    /// The constant `c` with `<x,x> = c` on the model, `None` for the plane.
    pub fn quadric_constant(self) -> Option<f64> {
        match self {
            Geometry::E2 => None,
            Geometry::S2 | Geometry::DS2 => Some(1.0),
            Geometry::H2 => Some(-1.0),
        }
    }

    pub fn is_lorentzian(self) -> bool {
        matches!(self, Geometry::H2 | Geometry::DS2)
    }

    /// Number of coordinates per vertex in stacked deformation vectors.
    pub fn stacked_dim(self) -> usize {
        if self == Geometry::E2 {
            2
        } else {
            3
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Geometry::E2 => "E2",
            Geometry::S2 => "S2",
            Geometry::H2 => "H2",
            Geometry::DS2 => "DS2",
        };
        f.write_str(s)
    }
}

impl FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "E2" => Ok(Geometry::E2),
            "S2" => Ok(Geometry::S2),
            "H2" => Ok(Geometry::H2),
            "DS2" | "S21" => Ok(Geometry::DS2),
            other => Err(Error::Parse(format!("unknown geometry '{other}'"))),
        }
    }
}

pub fn minkowski(u: &Vec3, v: &Vec3) -> f64 {
    u.x * v.x + u.y * v.y - u.z * v.z
}

/// The ambient bilinear form of `g`.
pub fn inner(g: Geometry, u: &Vec3, v: &Vec3) -> f64 {
    if g.is_lorentzian() {
        minkowski(u, v)
    } else {
        u.dot(v)
    }
}

/// Minkowski cross product `J(a x b)`, so that `<x, a ⊠ b> = det(x, a, b)`.
pub fn lorentz_cross(a: &Vec3, b: &Vec3) -> Vec3 {
    let c = a.cross(b);
    Vec3::new(c.x, c.y, -c.z)
}

pub fn cross(g: Geometry, a: &Vec3, b: &Vec3) -> Vec3 {
    if g.is_lorentzian() {
        lorentz_cross(a, b)
    } else {
        a.cross(b)
    }
}

pub fn det3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a.dot(&b.cross(c))
}

pub fn quadric_residual(g: Geometry, x: &Vec3) -> f64 {
    match g.quadric_constant() {
        None => x.z.abs(),
        Some(c) => (inner(g, x, x) - c).abs() / x.norm_squared().max(1.0),
    }
}

pub fn check_on_quadric(g: Geometry, x: &Vec3) -> Result<()> {
    if !x.iter().all(|c| c.is_finite()) {
        return Err(Error::OffQuadric(f64::INFINITY));
    }
    let r = quadric_residual(g, x);
    if r > tolerance::quadric() {
        return Err(Error::OffQuadric(r));
    }
    if g == Geometry::H2 && x.z <= 0.0 {
        return Err(Error::OffQuadric(f64::INFINITY));
    }
    Ok(())
}

/// Radially rescale `x` onto the model (for `H2`, onto the future sheet).
pub fn normalize(g: Geometry, x: &Vec3) -> Result<Vec3> {
    match g {
        Geometry::E2 => Ok(Vec3::new(x.x, x.y, 0.0)),
        Geometry::S2 => {
            let n = x.norm();
            if n == 0.0 {
                return Err(Error::DegenerateConfiguration("zero vector".into()));
            }
            Ok(x / n)
        }
        Geometry::H2 => {
            let q = -minkowski(x, x);
            if q <= 0.0 {
                return Err(Error::DegenerateConfiguration("vector is not timelike".into()));
            }
            let y = x / q.sqrt();
            Ok(if y.z < 0.0 { -y } else { y })
        }
        Geometry::DS2 => {
            let q = minkowski(x, x);
            if q <= 0.0 {
                return Err(Error::DegenerateConfiguration("vector is not spacelike".into()));
            }
            Ok(x / q.sqrt())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalType {
    Spacelike,
    Timelike,
    Lightlike,
}

pub fn causal_type(v: &Vec3) -> CausalType {
    let q = minkowski(v, v);
    if q.abs() <= tolerance::lightlike() * v.norm_squared() {
        CausalType::Lightlike
    } else if q > 0.0 {
        CausalType::Spacelike
    } else {
        CausalType::Timelike
    }
}

/// Which closed form a complex distance or angle came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Real,
    /// `i r`
    Imaginary,
    /// `pi - i r`
    PiMinusImaginary,
    /// `pi/2 + i r`
    HalfPiPlusImaginary,
    Lightlike,
    /// Analytic continuation of the oriented spherical angle.
    Analytic,
}

/// A possibly complex length or angle `re + i im`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMeasure {
    pub re: f64,
    pub im: f64,
    pub branch: Branch,
}

impl ComplexMeasure {
    pub fn real(x: f64) -> Self {
        ComplexMeasure { re: x, im: 0.0, branch: Branch::Real }
    }

    pub fn new(re: f64, im: f64, branch: Branch) -> Self {
        ComplexMeasure { re, im, branch }
    }

    pub fn to_complex(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn cos(&self) -> C64 {
        self.to_complex().cos()
    }

    pub fn sin(&self) -> C64 {
        self.to_complex().sin()
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }

    /// Same value with the real part reduced to `(-pi, pi]`.
    pub fn normalized(&self) -> Self {
        let tau = std::f64::consts::TAU;
        let mut re = self.re.rem_euclid(tau);
        if re > std::f64::consts::PI {
            re -= tau;
        }
        ComplexMeasure { re, ..*self }
    }
}

/// Geodesic distance. For `DS2` the value is complex: `arccos<x,y>` for
/// spacelike separation, `i arccosh<x,y>` for timelike separation in the
/// same half, `pi - i arccosh(-<x,y>)` across the two halves.
pub fn distance(g: Geometry, x: &Vec3, y: &Vec3) -> Result<ComplexMeasure> {
    check_on_quadric(g, x)?;
    check_on_quadric(g, y)?;
    match g {
        Geometry::E2 => Ok(ComplexMeasure::real((x - y).norm())),
        Geometry::S2 => {
            let c = x.dot(y) / (x.norm() * y.norm());
            if c < -1.0 + 1e-12 {
                return Err(Error::AntipodalPoints);
            }
            Ok(ComplexMeasure::real(x.cross(y).norm().atan2(x.dot(y))))
        }
        Geometry::H2 => {
            let d = x - y;
            let q = minkowski(&d, &d).max(0.0);
            Ok(ComplexMeasure::real(2.0 * (q.sqrt() / 2.0).asinh()))
        }
        Geometry::DS2 => {
            let c = minkowski(x, y);
            let tol = tolerance::lightlike() * x.norm() * y.norm();
            if (x - y).norm() <= 1e-15 * x.norm().max(1.0) {
                Ok(ComplexMeasure::real(0.0))
            } else if (c - 1.0).abs() <= tol {
                Ok(ComplexMeasure::new(0.0, 0.0, Branch::Lightlike))
            } else if (c + 1.0).abs() <= tol {
                Ok(ComplexMeasure::new(std::f64::consts::PI, 0.0, Branch::Lightlike))
            } else if c.abs() < 1.0 {
                let d = x - y;
                let q = minkowski(&d, &d).max(0.0);
                let s = (q.sqrt() / 2.0).min(1.0);
                Ok(ComplexMeasure::real(2.0 * s.asin()))
            } else if c > 1.0 {
                Ok(ComplexMeasure::new(0.0, c.acosh(), Branch::Imaginary))
            } else {
                Ok(ComplexMeasure::new(
                    std::f64::consts::PI,
                    -(-c).acosh(),
                    Branch::PiMinusImaginary,
                ))
            }
        }
    }
}

/// Tangent vector at `x` pointing along the geodesic toward `y`
/// (not normalized; for quadrics this is `y - (<x,y>/c) x`).
pub fn tangent_toward(g: Geometry, x: &Vec3, y: &Vec3) -> Vec3 {
    match g.quadric_constant() {
        None => y - x,
        Some(c) => y - x * (inner(g, x, y) / c),
    }
}

/// Unit normal to the model at `x` used for orientation: `e3` for the
/// plane, `x` itself otherwise.
fn orientation_normal(g: Geometry, x: &Vec3) -> Vec3 {
    if g == Geometry::E2 {
        Vec3::z()
    } else {
        *x
    }
}

fn sqrt_c(q: f64) -> C64 {
    if q >= 0.0 {
        C64::new(q.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-q).sqrt())
    }
}

fn check_tangent(g: Geometry, u: &Vec3) -> Result<()> {
    if u.norm() <= 1e-14 {
        return Err(Error::ZeroTangent);
    }
    if g == Geometry::DS2 && causal_type(u) == CausalType::Lightlike {
        return Err(Error::LightlikeTangent);
    }
    Ok(())
}

/// Angle between tangent vectors `u`, `v` at `x`.
///
/// In the Riemannian models this is the counterclockwise angle from `u`
/// to `v`, in `[0, 2pi)`. In `DS2` it is the unoriented angle given by
/// the cases: spacelike pairs give `i r` or `pi - i r`, timelike pairs
/// `i r` (same cone) or `pi - i r`, and mixed pairs `pi/2 + i r`.
pub fn angle(g: Geometry, x: &Vec3, u: &Vec3, v: &Vec3) -> Result<ComplexMeasure> {
    check_on_quadric(g, x)?;
    check_tangent(g, u)?;
    check_tangent(g, v)?;
    let c = inner(g, u, v);
    if g != Geometry::DS2 {
        let n = orientation_normal(g, x);
        let s = det3(&n, u, v);
        return Ok(ComplexMeasure::real(s.atan2(c).rem_euclid(std::f64::consts::TAU)));
    }
    let uu = minkowski(u, u);
    let vv = minkowski(v, v);
    let pi = std::f64::consts::PI;
    if uu * vv > 0.0 {
        let r = (c.abs() / (uu * vv).sqrt()).max(1.0).acosh();
        let same = if uu > 0.0 { c > 0.0 } else { c < 0.0 };
        if same {
            Ok(ComplexMeasure::new(0.0, r, Branch::Imaginary))
        } else {
            Ok(ComplexMeasure::new(pi, -r, Branch::PiMinusImaginary))
        }
    } else {
        let r = (c / (uu.abs() * vv.abs()).sqrt()).asinh();
        Ok(ComplexMeasure::new(pi / 2.0, r, Branch::HalfPiPlusImaginary))
    }
}

/// Oriented interior angle at `x` of a polygon with neighbours `prev`, `next`:
/// the counterclockwise angle from the direction of `next` to the direction
/// of `prev`. Real part in `[0, 2pi)`. For `DS2` it is the analytic
/// continuation `theta = -i Log((C - sigma S)/K)`.
pub fn vertex_angle(g: Geometry, x: &Vec3, prev: &Vec3, next: &Vec3) -> Result<ComplexMeasure> {
    let u = tangent_toward(g, x, next);
    let v = tangent_toward(g, x, prev);
    check_tangent(g, &u)?;
    check_tangent(g, &v)?;
    let n = orientation_normal(g, x);
    let c = inner(g, &u, &v);
    let s = det3(&n, &u, &v);
    if g != Geometry::DS2 {
        return Ok(ComplexMeasure::real(s.atan2(c).rem_euclid(std::f64::consts::TAU)));
    }
    let k = sqrt_c(minkowski(&u, &u)) * sqrt_c(minkowski(&v, &v));
    let z = C64::new(c - DS2_SIGMA * s, 0.0) / k;
    Ok(ComplexMeasure::new(
        z.arg().rem_euclid(std::f64::consts::TAU),
        -z.norm().ln(),
        Branch::Analytic,
    ))
}

/// First-order variation of [`vertex_angle`] when `x`, `prev`, `next`
/// move with velocities `xd`, `prevd`, `nextd`. For `DS2` the derivative
/// is purely imaginary and the returned value is its imaginary part.
pub fn vertex_angle_rate(
    g: Geometry,
    x: &Vec3,
    prev: &Vec3,
    next: &Vec3,
    xd: &Vec3,
    prevd: &Vec3,
    nextd: &Vec3,
) -> f64 {
    let tangent_rate = |y: &Vec3, yd: &Vec3| -> Vec3 {
        match g.quadric_constant() {
            None => yd - xd,
            Some(c) => {
                yd - x * ((inner(g, xd, y) + inner(g, x, yd)) / c) - xd * (inner(g, x, y) / c)
            }
        }
    };
    let u = tangent_toward(g, x, next);
    let v = tangent_toward(g, x, prev);
    let ud = tangent_rate(next, nextd);
    let vd = tangent_rate(prev, prevd);
    let n = orientation_normal(g, x);
    let nd = if g == Geometry::E2 { Vec3::zeros() } else { *xd };
    let c = inner(g, &u, &v);
    let cd = inner(g, &ud, &v) + inner(g, &u, &vd);
    let s = det3(&n, &u, &v);
    let sd = det3(&nd, &u, &v) + det3(&n, &ud, &v) + det3(&n, &u, &vd);
    let k2 = inner(g, &u, &u) * inner(g, &v, &v);
    let rate = (c * sd - s * cd) / k2;
    if g == Geometry::DS2 {
        DS2_SIGMA * rate
    } else {
        rate
    }
}

/// Killing field of the model. For the quadrics `v(x) = Y x x` (sphere) or
/// `Y ⊠ x` (Minkowski models); for the plane `y = (omega, tx, ty)` gives the
/// rotation `omega (-x2, x1)` plus the translation `(tx, ty)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KillingField {
    pub geometry: Geometry,
    pub y: Vec3,
}

impl KillingField {
    pub fn new(geometry: Geometry, y: Vec3) -> Self {
        KillingField { geometry, y }
    }

    pub fn basis(g: Geometry) -> [KillingField; 3] {
        [
            KillingField::new(g, Vec3::x()),
            KillingField::new(g, Vec3::y()),
            KillingField::new(g, Vec3::z()),
        ]
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        match self.geometry {
            Geometry::E2 => Vec3::new(-self.y.x * x.y + self.y.y, self.y.x * x.x + self.y.z, 0.0),
            Geometry::S2 => self.y.cross(x),
            Geometry::H2 | Geometry::DS2 => lorentz_cross(&self.y, x),
        }
    }

    /// The Killing field whose parameter vector is `y` in the basis order.
    pub fn from_coefficients(g: Geometry, coeffs: &[f64; 3]) -> Self {
        KillingField::new(g, Vec3::new(coeffs[0], coeffs[1], coeffs[2]))
    }
}

/// Residuals of the cosine and sine laws on a triangle, relative to the
/// magnitude of the terms involved.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TriangleReport {
    pub cosine_residual: f64,
    pub sine_residual: f64,
}

impl TriangleReport {
    pub fn max(&self) -> f64 {
        self.cosine_residual.max(self.sine_residual)
    }
}

pub fn triangle_laws(g: Geometry, a: &Vec3, b: &Vec3, c: &Vec3) -> Result<TriangleReport> {
    let sa = distance(g, b, c)?.to_complex();
    let sb = distance(g, a, c)?.to_complex();
    let sc = distance(g, a, b)?.to_complex();
    let al = vertex_angle(g, a, c, b)?.to_complex();
    let be = vertex_angle(g, b, a, c)?.to_complex();
    let ga = vertex_angle(g, c, b, a)?.to_complex();
    let sn: fn(C64) -> C64 = match g {
        Geometry::E2 => |z| z,
        Geometry::S2 | Geometry::DS2 => |z| z.sin(),
        Geometry::H2 => |z| z.sinh(),
    };
    for s in [sa, sb, sc] {
        if sn(s).norm() < 1e-12 {
            return Err(Error::DegenerateTriangle);
        }
    }
    let law = |x: C64, y: C64, z: C64, ang: C64| -> f64 {
        let (lhs, t1, t2) = match g {
            Geometry::E2 => (x * x, y * y + z * z, -y * z * ang.cos() * 2.0),
            Geometry::S2 | Geometry::DS2 => {
                (x.cos(), y.cos() * z.cos(), y.sin() * z.sin() * ang.cos())
            }
            Geometry::H2 => (x.cosh(), y.cosh() * z.cosh(), -y.sinh() * z.sinh() * ang.cos()),
        };
        let scale = 1f64.max(lhs.norm()).max(t1.norm()).max(t2.norm());
        (lhs - t1 - t2).norm() / scale
    };
    let cosine_residual = law(sa, sb, sc, al).max(law(sb, sa, sc, be)).max(law(sc, sa, sb, ga));
    let ra = al.sin() / sn(sa);
    let rb = be.sin() / sn(sb);
    let rc = ga.sin() / sn(sc);
    let scale = 1f64.max(ra.norm()).max(rb.norm()).max(rc.norm());
    let sine_residual = (ra - rb).norm().max((rb - rc).norm()).max((ra - rc).norm()) / scale;
    Ok(TriangleReport { cosine_residual, sine_residual })
}
