//! Oracle for quadrilateral angle derivatives: central differences of the
//! triangle cosine law in double-double arithmetic. Only field operations
//! and square roots are used: the diagonal is shifted with the addition
//! theorem and Taylor series of the step, and `d alpha = -d(cos alpha) / sin alpha`.
//! Double-double quotients are corrected by residual steps, since the
//! library quotient is only accurate to double precision.

use polyflex::binvariant::quad_derivatives;
use polyflex::geometry::{distance, Geometry};
use polyflex::random::{random_convex_polygon, rng};
use polyflex::Polygon;
use twofloat::TwoFloat;

type T = TwoFloat;

/// `(C(x), S(x))`: cosine and sine, or their hyperbolic versions.
type Trig = (T, T);

pub fn div(a: T, b: T) -> T {
    let mut q = T::from(a.hi() / b.hi());
    for _ in 0..2 {
        q += (a - b * q) / b.hi();
    }
    q
}

/// `C(h)`, `S(h)` for a small step by Taylor series.
fn step(g: Geometry, h: f64) -> Trig {
    let h = T::from(h);
    let sign = if g == Geometry::H2 { 1.0 } else { -1.0 };
    let (mut c, mut s) = (T::from(1.0), h);
    let (mut tc, mut ts) = (T::from(1.0), h);
    for k in 1..8 {
        let k = k as f64;
        tc = tc * h * h * sign / ((2.0 * k - 1.0) * (2.0 * k));
        ts = ts * h * h * sign / ((2.0 * k) * (2.0 * k + 1.0));
        c += tc;
        s += ts;
    }
    (c, s)
}

fn shifted(g: Geometry, base: Trig, d: Trig) -> Trig {
    let ((c0, s0), (ch, sh)) = (base, d);
    if g == Geometry::H2 {
        (c0 * ch + s0 * sh, s0 * ch + c0 * sh)
    } else {
        (c0 * ch - s0 * sh, s0 * ch + c0 * sh)
    }
}

fn fixed(g: Geometry, x: f64) -> Trig {
    if g == Geometry::H2 {
        (T::from(x.cosh()), T::from(x.sinh()))
    } else {
        (T::from(x.cos()), T::from(x.sin()))
    }
}

/// Cosine of the angle between sides `a`, `b` opposite `c`.
fn cos_angle(g: Geometry, a: Trig, b: Trig, c: Trig) -> T {
    if g == Geometry::H2 {
        div(a.0 * b.0 - c.0, a.1 * b.1)
    } else {
        div(c.0 - a.0 * b.0, a.1 * b.1)
    }
}

struct Quad {
    g: Geometry,
    d01: Trig,
    d03: Trig,
    d12: Trig,
    d23: Trig,
    t: Trig,
}

/// Six triangle angles as cosines of the diagonal shifted by `h`:
/// `alpha0, alpha2, beta1, gamma1`, and the two parts of `alpha3`.
fn cosines(q: &Quad, h: f64) -> [T; 6] {
    let g = q.g;
    let t = shifted(g, q.t, step(g, h));
    [
        cos_angle(g, q.d01, q.d03, t),
        cos_angle(g, q.d12, q.d23, t),
        cos_angle(g, q.d01, t, q.d03),
        cos_angle(g, q.d12, t, q.d23),
        cos_angle(g, q.d03, t, q.d01),
        cos_angle(g, q.d23, t, q.d12),
    ]
}

/// Central-difference angle rates with step `h`.
fn rates(q: &Quad, h: f64) -> [T; 6] {
    let (p, m, c) = (cosines(q, h), cosines(q, -h), cosines(q, 0.0));
    std::array::from_fn(|k| -div((p[k] - m[k]) / (2.0 * h), (T::from(1.0) - c[k] * c[k]).sqrt()))
}

/// Rates in the order of the closed forms.
fn assemble(r: &[T; 6]) -> [T; 6] {
    [r[0], r[2] + r[3], r[1], r[4] + r[5], r[2], r[3]]
}

fn quad(q: &Polygon) -> Quad {
    let g = q.geometry();
    let d = |i: usize, j: usize| distance(g, &q.vertices()[i], &q.vertices()[j]).unwrap().re;
    let t0 = d(1, 3);
    // Exact base point: the sine is recomputed from the cosine in double-double.
    let c0 = T::from(if g == Geometry::H2 { t0.cosh() } else { t0.cos() });
    let s0 = if g == Geometry::H2 { (c0 * c0 - 1.0).sqrt() } else { (T::from(1.0) - c0 * c0).sqrt() };
    Quad { g, d01: fixed(g, d(0, 1)), d03: fixed(g, d(0, 3)), d12: fixed(g, d(1, 2)), d23: fixed(g, d(2, 3)), t: (c0, s0) }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct QuadStats {
    /// Largest `|ratio - 4|` of successive Richardson differences.
    pub max_ratio_deviation: f64,
    pub ratios: usize,
    /// Largest error of the extrapolated rates against the closed forms,
    /// relative to `max(1, |closed form|)`.
    pub max_closed_form_error: f64,
    /// Largest imaginary part of a closed form.
    pub max_imaginary: f64,
}

/// Richardson study at base steps `1e-4` and `1e-5` on random convex
/// quadrilaterals.
pub fn quad_study(g: Geometry, seed: u64, count: usize) -> QuadStats {
    let mut r = rng(seed);
    let mut st = QuadStats::default();
    for _ in 0..count {
        let p = random_convex_polygon(g, 4, &mut r);
        let closed = quad_derivatives(&p).unwrap().as_array();
        let q = quad(&p);
        for h in [1e-4, 1e-5] {
            let (r1, r2, r4) = (rates(&q, h), rates(&q, h / 2.0), rates(&q, h / 4.0));
            for k in 0..6 {
                let num = f64::from(r1[k] - r2[k]);
                let den = f64::from(r2[k] - r4[k]);
                // A vanishing third derivative leaves nothing to extrapolate.
                if den.abs() > 1e-24 {
                    st.max_ratio_deviation = st.max_ratio_deviation.max((num / den - 4.0).abs());
                    st.ratios += 1;
                }
            }
            let (a1, a2) = (assemble(&r1), assemble(&r2));
            for k in 0..6 {
                let extrapolated = f64::from((a2[k] * 4.0 - a1[k]) / 3.0);
                let exact = closed[k];
                st.max_imaginary = st.max_imaginary.max(exact.im.abs());
                let err = (extrapolated - exact.re).abs() / exact.re.abs().max(1.0);
                st.max_closed_form_error = st.max_closed_form_error.max(err);
            }
        }
    }
    st
}
