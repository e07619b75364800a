//! C interface to `polyflex`.
//!
//! Every fallible function returns a [`PfStatus`]. On failure the message is
//! available from [`pf_last_error`] on the same thread. Handles are opaque and
//! must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use polyflex::cli::verify_polygon;
use polyflex::geometry::{Geometry, Vec3};
use polyflex::hull::ConvexPolyhedron;
use polyflex::io::{polygon_from_json, polygon_to_json, polyhedron_from_str};
use polyflex::isoperimetric::{solve_max_area, Locus};
use polyflex::polygon::Polygon;
use polyflex::rigidity::{rigidity_diagnostics, rigidity_verdict, Verdict};
use polyflex::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Infeasible = 4,
    Computation = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfGeometry {
    E2 = 0,
    S2 = 1,
    H2 = 2,
    DS2 = 3,
}

impl From<PfGeometry> for Geometry {
    fn from(g: PfGeometry) -> Self {
        match g {
            PfGeometry::E2 => Geometry::E2,
            PfGeometry::S2 => Geometry::S2,
            PfGeometry::H2 => Geometry::H2,
            PfGeometry::DS2 => Geometry::DS2,
        }
    }
}

impl From<Geometry> for PfGeometry {
    fn from(g: Geometry) -> Self {
        match g {
            Geometry::E2 => PfGeometry::E2,
            Geometry::S2 => PfGeometry::S2,
            Geometry::H2 => PfGeometry::H2,
            Geometry::DS2 => PfGeometry::DS2,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfLocus {
    Circle = 0,
    Horocycle = 1,
    Equidistant = 2,
}

/// Verdict codes for [`PfRigidity::verdict`].
pub const PF_VERDICT_NONE: i32 = -1;
pub const PF_VERDICT_RIGID: i32 = 0;
pub const PF_VERDICT_FLEXIBLE: i32 = 1;

/// Opaque polygon handle.
pub struct PfPolygon(Polygon);

/// Opaque convex polyhedron handle.
pub struct PfPolyhedron(ConvexPolyhedron);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PfVerify {
    pub quotient_dim: usize,
    pub gap_ratio: f64,
    /// Largest angle-sum residual over the kernel basis.
    pub angle_sum_residual: f64,
    /// 1 when the positivity check applied (convex, curved, quotient > 0).
    pub positivity_checked: i32,
    pub min_positivity: f64,
    pub pass: i32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PfSolution {
    pub locus: PfLocus,
    /// Radius or distance of the locus, 0 for a horocycle.
    pub locus_size: f64,
    pub area: f64,
    pub solver_residual: f64,
    pub parameter: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PfRigidity {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub flex_dim: usize,
    pub quotient_dim: usize,
    pub trivial_residual: f64,
    pub global_sum: f64,
    pub verdict: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PfStatus {
    match e {
        Error::Parse(_) => PfStatus::Parse,
        Error::Infeasible(_) => PfStatus::Infeasible,
        Error::TooFewVertices(_)
        | Error::OffQuadric(_)
        | Error::RepeatedVertex(_)
        | Error::AntipodalPoints
        | Error::InvalidPolyhedron(_)
        | Error::UnsupportedGeometry(_) => PfStatus::InvalidArgument,
        _ => PfStatus::Computation,
    }
}

struct Fail(PfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PfStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PfStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {m}"));
            PfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail(PfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Fail> {
    h.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must come from a `pf_*` function documented as returning an owned
/// string, or be null.
#[no_mangle]
pub unsafe extern "C" fn pf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a polygon from `n` vertices given as `3 * n` ambient coordinates.
/// Plane polygons use `z = 0`.
///
/// # Safety
/// `coords` must point to `3 * n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_new(
    geometry: PfGeometry,
    coords: *const f64,
    n: usize,
    out: *mut *mut PfPolygon,
) -> PfStatus {
    guard(|| {
        let c = slice_arg(coords, 3 * n, "coords")?;
        let vs = c.chunks_exact(3).map(|v| Vec3::new(v[0], v[1], v[2])).collect();
        let p = Polygon::new(geometry.into(), vs)?;
        write_out(out, boxed(PfPolygon(p)), "out")
    })
}

/// Parse a polygon from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_from_json(json: *const c_char, out: *mut *mut PfPolygon) -> PfStatus {
    guard(|| {
        let p = polygon_from_json(str_arg(json, "json")?)?;
        write_out(out, boxed(PfPolygon(p)), "out")
    })
}

/// Serialize a polygon to JSON. Release the result with [`pf_string_free`].
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_to_json(p: *const PfPolygon, out: *mut *mut c_char) -> PfStatus {
    guard(|| {
        let p = handle(p, "polygon")?;
        let s = CString::new(polygon_to_json(&p.0)).map_err(|e| Fail(PfStatus::Computation, e.to_string()))?;
        write_out(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `p` must be a handle from this library or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_free(p: *mut PfPolygon) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of vertices, 0 for a null handle.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_vertex_count(p: *const PfPolygon) -> usize {
    p.as_ref().map_or(0, |p| p.0.n())
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_geometry(p: *const PfPolygon, out: *mut PfGeometry) -> PfStatus {
    guard(|| write_out(out, handle(p, "polygon")?.0.geometry().into(), "out"))
}

/// Copy the `3 * n` ambient coordinates into `buf`, which holds `len` doubles.
///
/// # Safety
/// `p` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_vertices(p: *const PfPolygon, buf: *mut f64, len: usize) -> PfStatus {
    guard(|| {
        let p = handle(p, "polygon")?;
        let need = 3 * p.0.n();
        if len < need {
            return Err(Fail(PfStatus::InvalidArgument, format!("buffer holds {len} doubles, need {need}")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        for (i, v) in p.0.vertices().iter().enumerate() {
            buf.add(3 * i).copy_from_nonoverlapping(v.as_ptr(), 3);
        }
        Ok(())
    })
}

/// Area of a spherical or hyperbolic polygon; other models report
/// `InvalidArgument`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_area(p: *const PfPolygon, out: *mut f64) -> PfStatus {
    guard(|| {
        let a = handle(p, "polygon")?.0.area()?;
        write_out(out, a, "out")
    })
}

/// Compute the isometric deformation space, check the angle-sum identity on
/// its kernel basis and, for convex curved polygons, positivity of `b`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polygon_verify(p: *const PfPolygon, out: *mut PfVerify) -> PfStatus {
    guard(|| {
        let v = verify_polygon(0, &handle(p, "polygon")?.0)?;
        let r = PfVerify {
            quotient_dim: v.quotient_dim,
            gap_ratio: v.gap_ratio,
            angle_sum_residual: v.angle_sum_residual,
            positivity_checked: v.min_positivity.is_some() as i32,
            min_positivity: v.min_positivity.unwrap_or(f64::NAN),
            pass: v.pass as i32,
        };
        write_out(out, r, "out")
    })
}

/// Solve for the maximal-area polygon with the given edge lengths (S2 or H2).
/// `polygon_out` may be null when only the summary is wanted.
///
/// # Safety
/// `lengths` must point to `n` doubles; `info` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_solve_max_area(
    geometry: PfGeometry,
    lengths: *const f64,
    n: usize,
    info: *mut PfSolution,
    polygon_out: *mut *mut PfPolygon,
) -> PfStatus {
    guard(|| {
        let l = slice_arg(lengths, n, "lengths")?;
        if info.is_null() {
            return Err(null("info"));
        }
        let s = solve_max_area(l, geometry.into())?;
        let (locus, locus_size) = match s.locus {
            Locus::Circle { radius } => (PfLocus::Circle, radius),
            Locus::Horocycle => (PfLocus::Horocycle, 0.0),
            Locus::Equidistant { distance } => (PfLocus::Equidistant, distance),
        };
        info.write(PfSolution {
            locus,
            locus_size,
            area: s.area,
            solver_residual: s.solver_residual,
            parameter: s.parameter,
        });
        if !polygon_out.is_null() {
            polygon_out.write(boxed(PfPolygon(s.polygon)));
        }
        Ok(())
    })
}

/// Build a convex polyhedron from `nv` vertices (`3 * nv` doubles) and `nf`
/// faces. Face `f` uses `indices[offsets[f]..offsets[f + 1]]`, so `offsets`
/// holds `nf + 1` entries. Faces are oriented counterclockwise from outside.
///
/// # Safety
/// All arrays must have the lengths described above; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polyhedron_new(
    coords: *const f64,
    nv: usize,
    offsets: *const usize,
    indices: *const usize,
    nf: usize,
    out: *mut *mut PfPolyhedron,
) -> PfStatus {
    guard(|| {
        let c = slice_arg(coords, 3 * nv, "coords")?;
        let off = slice_arg(offsets, nf + 1, "offsets")?;
        let total = *off.last().unwrap_or(&0);
        if off.windows(2).any(|w| w[0] > w[1]) || off.first().is_some_and(|&o| o != 0) {
            return Err(Fail(PfStatus::InvalidArgument, "face offsets must start at 0 and be nondecreasing".into()));
        }
        let idx = slice_arg(indices, total, "indices")?;
        let vs = c.chunks_exact(3).map(|v| Vec3::new(v[0], v[1], v[2])).collect();
        let faces = off.windows(2).map(|w| idx[w[0]..w[1]].to_vec()).collect();
        let p = ConvexPolyhedron::new(vs, faces)?;
        write_out(out, boxed(PfPolyhedron(p)), "out")
    })
}

/// Parse a polyhedron from JSON or OFF text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polyhedron_from_text(text: *const c_char, out: *mut *mut PfPolyhedron) -> PfStatus {
    guard(|| {
        let p = polyhedron_from_str(str_arg(text, "text")?)?;
        write_out(out, boxed(PfPolyhedron(p)), "out")
    })
}

/// # Safety
/// `p` must be a handle from this library or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn pf_polyhedron_free(p: *mut PfPolyhedron) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Infinitesimal rigidity report. With `diagonals == 0` the face diagonal
/// constraints are dropped and the verdict is [`PF_VERDICT_NONE`].
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_polyhedron_rigidity(p: *const PfPolyhedron, diagonals: i32, out: *mut PfRigidity) -> PfStatus {
    guard(|| {
        let p = &handle(p, "polyhedron")?.0;
        let r = if diagonals != 0 { rigidity_verdict(p)? } else { rigidity_diagnostics(p, false)? };
        let verdict = match r.verdict {
            None => PF_VERDICT_NONE,
            Some(Verdict::Rigid) => PF_VERDICT_RIGID,
            Some(Verdict::Flexible) => PF_VERDICT_FLEXIBLE,
        };
        let o = PfRigidity {
            vertices: r.vertices,
            edges: r.edges,
            faces: r.faces,
            flex_dim: r.flex_dim,
            quotient_dim: r.quotient_dim,
            trivial_residual: r.trivial_residual,
            global_sum: r.global_sum,
            verdict,
        };
        write_out(out, o, "out")
    })
}
