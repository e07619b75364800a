//! Convex polyhedra: validation, a brute-force hull, and standard solids.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::random::random_unit_vector;

pub const PLANE_TOL: f64 = 1e-9;

/// Closed convex polyhedron with faces listed counterclockwise as seen from
/// outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolyhedron {
    vertices: Vec<Vec3>,
    faces: Vec<Vec<usize>>,
    #[serde(skip)]
    edges: Vec<Edge>,
}

/// Undirected edge `a < b`; `left` is the face traversing `a -> b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub left: usize,
    pub right: usize,
}

fn newell_normal(pts: &[Vec3]) -> Vec3 {
    let mut n = Vec3::zeros();
    for i in 0..pts.len() {
        let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
        n += Vec3::new((p.y - q.y) * (p.z + q.z), (p.z - q.z) * (p.x + q.x), (p.x - q.x) * (p.y + q.y));
    }
    n
}

impl ConvexPolyhedron {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<Vec<usize>>) -> Result<Self> {
        let bad = |m: &str| Error::InvalidPolyhedron(m.to_string());
        if vertices.len() < 4 || faces.len() < 4 {
            return Err(bad("too few vertices or faces"));
        }
        if vertices.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(bad("non-finite coordinate"));
        }
        let scale = vertices.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let tol = PLANE_TOL * scale;
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if f.len() < 3 || f.iter().any(|&i| i >= vertices.len()) {
                return Err(bad("face with fewer than 3 valid indices"));
            }
            if f.iter().collect::<BTreeSet<_>>().len() != f.len() {
                return Err(bad("face repeats a vertex"));
            }
            let pts: Vec<Vec3> = f.iter().map(|&i| vertices[i]).collect();
            let n = newell_normal(&pts);
            if n.norm() <= tol * scale {
                return Err(bad("degenerate face"));
            }
            let n = n.normalize();
            let d = n.dot(&pts[0]);
            if pts.iter().any(|p| (n.dot(p) - d).abs() > tol) {
                return Err(bad("non-planar face"));
            }
            if vertices.iter().any(|p| n.dot(p) - d > tol) {
                return Err(bad("not convex or not outward oriented"));
            }
            for k in 0..f.len() {
                let e = (f[k], f[(k + 1) % f.len()]);
                if directed.insert(e, fi).is_some() {
                    return Err(bad("edge traversed twice in one direction"));
                }
            }
        }
        let mut edges = Vec::new();
        for (&(a, b), &fl) in &directed {
            let Some(&fr) = directed.get(&(b, a)) else { return Err(bad("edge with a single face")) };
            if a < b {
                edges.push(Edge { a, b, left: fl, right: fr });
            }
        }
        let used: BTreeSet<usize> = faces.iter().flatten().copied().collect();
        if used.len() != vertices.len() {
            return Err(bad("vertex not on any face"));
        }
        if vertices.len() + faces.len() != edges.len() + 2 {
            return Err(bad("Euler characteristic is not 2"));
        }
        Ok(Self { vertices, faces, edges })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Unit outward normal of a face.
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let pts: Vec<Vec3> = self.faces[f].iter().map(|&i| self.vertices[i]).collect();
        newell_normal(&pts).normalize()
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64
    }

    /// Signed distance of `p` to the plane of face `f` (negative inside).
    pub fn plane_distance(&self, f: usize, p: &Vec3) -> f64 {
        let n = self.face_normal(f);
        n.dot(&(p - self.vertices[self.faces[f][0]]))
    }

    pub fn strictly_contains(&self, p: &Vec3) -> bool {
        let scale = self.vertices.iter().map(|v| v.norm()).fold(1.0, f64::max);
        (0..self.faces.len()).all(|f| self.plane_distance(f, p) < -PLANE_TOL * scale)
    }

    /// Interior dihedral angle at an edge.
    pub fn dihedral_angle(&self, e: &Edge) -> f64 {
        let (n1, n2) = (self.face_normal(e.left), self.face_normal(e.right));
        std::f64::consts::PI - n1.cross(&n2).norm().atan2(n1.dot(&n2))
    }
}

/// Convex hull by enumeration of supporting planes through point triples.
/// Coplanar facets (within 1e-9 relative) are merged, and points interior
/// to faces or edges are dropped.
pub fn convex_hull(points: &[Vec3]) -> Result<ConvexPolyhedron> {
    let n = points.len();
    if n < 4 {
        return Err(Error::InvalidPolyhedron("need at least 4 points".into()));
    }
    let scale = points.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let tol = PLANE_TOL * scale;
    let mut planes: BTreeMap<Vec<usize>, Vec3> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let nrm = (points[j] - points[i]).cross(&(points[k] - points[i]));
                if nrm.norm() <= tol * scale {
                    continue;
                }
                let nrm = nrm.normalize();
                let d = nrm.dot(&points[i]);
                let (mut above, mut below) = (false, false);
                let mut on = Vec::new();
                for (m, p) in points.iter().enumerate() {
                    let s = nrm.dot(p) - d;
                    if s > tol {
                        above = true;
                    } else if s < -tol {
                        below = true;
                    } else {
                        on.push(m);
                    }
                    if above && below {
                        break;
                    }
                }
                if above && below {
                    continue;
                }
                if !above && !below {
                    return Err(Error::InvalidPolyhedron("points are coplanar".into()));
                }
                let outward = if above { -nrm } else { nrm };
                planes.entry(on).or_insert(outward);
            }
        }
    }
    let mut faces = Vec::new();
    for (on, nrm) in planes {
        let c: Vec3 = on.iter().map(|&m| points[m]).sum::<Vec3>() / on.len() as f64;
        let e1 = (points[on[0]] - c).normalize();
        let e2 = nrm.cross(&e1);
        let mut ring: Vec<(f64, usize)> = on
            .iter()
            .map(|&m| {
                let d = points[m] - c;
                (d.dot(&e2).atan2(d.dot(&e1)), m)
            })
            .collect();
        ring.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ids: Vec<usize> = ring.into_iter().map(|x| x.1).collect();
        // drop points that are not corners of the face
        loop {
            let len = ids.len();
            let drop = (0..len).find(|&t| {
                let (p, q, r) = (points[ids[(t + len - 1) % len]], points[ids[t]], points[ids[(t + 1) % len]]);
                (q - p).cross(&(r - q)).dot(&nrm) <= tol * scale
            });
            match drop {
                Some(t) if len > 3 => {
                    ids.remove(t);
                }
                _ => break,
            }
        }
        faces.push(ids);
    }
    let used: BTreeSet<usize> = faces.iter().flatten().copied().collect();
    let index: BTreeMap<usize, usize> = used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let vertices: Vec<Vec3> = used.iter().map(|&i| points[i]).collect();
    let faces: Vec<Vec<usize>> = faces.into_iter().map(|f| f.into_iter().map(|i| index[&i]).collect()).collect();
    ConvexPolyhedron::new(vertices, faces)
}

pub fn tetrahedron() -> ConvexPolyhedron {
    let pts: Vec<Vec3> = [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z))
        .collect();
    convex_hull(&pts).expect("tetrahedron")
}

pub fn cube() -> ConvexPolyhedron {
    let mut pts = Vec::new();
    for x in [-1.0, 1.0] {
        for y in [-1.0, 1.0] {
            for z in [-1.0, 1.0] {
                pts.push(Vec3::new(x, y, z));
            }
        }
    }
    convex_hull(&pts).expect("cube")
}

pub fn icosahedron() -> ConvexPolyhedron {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts = Vec::new();
    for a in [-1.0, 1.0] {
        for b in [-phi, phi] {
            pts.push(Vec3::new(0.0, a, b));
            pts.push(Vec3::new(a, b, 0.0));
            pts.push(Vec3::new(b, 0.0, a));
        }
    }
    convex_hull(&pts).expect("icosahedron")
}

/// Triangular prism with square side faces.
pub fn square_prism() -> ConvexPolyhedron {
    let r = 1.0 / 3f64.sqrt();
    let mut pts = Vec::new();
    for z in [-0.5, 0.5] {
        for k in 0..3 {
            let t = std::f64::consts::TAU * k as f64 / 3.0;
            pts.push(Vec3::new(r * t.cos(), r * t.sin(), z));
        }
    }
    convex_hull(&pts).expect("prism")
}

/// Hull of `n` random points on the unit sphere, jittered radially by up to
/// 2 percent.
pub fn random_sphere_hull<R: Rng>(n: usize, rng: &mut R) -> ConvexPolyhedron {
    loop {
        let pts: Vec<Vec3> = (0..n).map(|_| random_unit_vector(rng) * rng.random_range(0.98..1.02)).collect();
        if let Ok(p) = convex_hull(&pts) {
            return p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;

    #[test]
    fn standard_solids_have_expected_counts() {
        let t = tetrahedron();
        assert_eq!((t.vertices().len(), t.edges().len(), t.faces().len()), (4, 6, 4));
        let c = cube();
        assert_eq!((c.vertices().len(), c.edges().len(), c.faces().len()), (8, 12, 6));
        assert!(c.faces().iter().all(|f| f.len() == 4));
        let i = icosahedron();
        assert_eq!((i.vertices().len(), i.edges().len(), i.faces().len()), (12, 30, 20));
        let p = square_prism();
        assert_eq!((p.vertices().len(), p.edges().len(), p.faces().len()), (6, 9, 5));
    }

    #[test]
    fn cube_dihedral_angles_are_right() {
        let c = cube();
        for e in c.edges() {
            assert!((c.dihedral_angle(e) - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        }
        assert!(c.strictly_contains(&c.centroid()));
        assert!(!c.strictly_contains(&Vec3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn interior_points_are_dropped() {
        let mut pts: Vec<Vec3> = cube().vertices().to_vec();
        pts.push(Vec3::new(0.1, 0.2, -0.3));
        pts.push(Vec3::new(0.0, 0.0, 1.0));
        pts.push(Vec3::new(1.0, 0.0, 1.0));
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices().len(), 8);
    }

    #[test]
    fn rejects_bad_orientation_and_open_surfaces() {
        let c = cube();
        let mut faces = c.faces().to_vec();
        faces[0].reverse();
        assert!(ConvexPolyhedron::new(c.vertices().to_vec(), faces.clone()).is_err());
        faces.remove(0);
        assert!(ConvexPolyhedron::new(c.vertices().to_vec(), faces).is_err());
    }

    #[test]
    fn random_hulls_are_valid() {
        let mut r = rng(1);
        for n in [8, 20, 40] {
            let h = random_sphere_hull(n, &mut r);
            assert!(h.vertices().len() >= 4);
            assert!(h.strictly_contains(&h.centroid()));
        }
    }
}
