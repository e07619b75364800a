//! Polygons: edge lengths, interior angles, convexity, duality and area.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    check_on_quadric, cross, det3, distance, lorentz_cross, minkowski, normalize, vertex_angle,
    ComplexMeasure, Geometry, Vec3,
};

/// A closed polygon `v_0, ..., v_{n-1}` (indices are cyclic). Vertices are
/// expected counterclockwise; the interior lies to the left of each edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    geometry: Geometry,
    vertices: Vec<Vec3>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeData {
    pub lengths: Vec<ComplexMeasure>,
    pub angles: Vec<ComplexMeasure>,
}

impl Polygon {
    pub fn new(geometry: Geometry, vertices: Vec<Vec3>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::TooFewVertices(n));
        }
        for v in &vertices {
            check_on_quadric(geometry, v)?;
        }
        for i in 0..n {
            let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
            let scale = a.norm().max(b.norm()).max(1.0);
            if (a - b).norm() <= 1e-12 * scale {
                return Err(Error::RepeatedVertex(i));
            }
            if matches!(geometry, Geometry::S2 | Geometry::DS2) && (a + b).norm() <= 1e-12 * scale {
                return Err(Error::AntipodalPoints);
            }
        }
        Ok(Polygon { geometry, vertices })
    }

    /// Plane polygon from 2D coordinates.
    pub fn euclidean(points: &[[f64; 2]]) -> Result<Self> {
        Polygon::new(Geometry::E2, points.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect())
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Vertex with cyclic index.
    pub fn v(&self, i: isize) -> &Vec3 {
        let n = self.n() as isize;
        &self.vertices[i.rem_euclid(n) as usize]
    }

    /// Same polygon with vertex `k` moved to position 0.
    pub fn relabeled(&self, k: usize) -> Polygon {
        let n = self.n();
        let vertices = (0..n).map(|i| self.vertices[(i + k) % n]).collect();
        Polygon { geometry: self.geometry, vertices }
    }

    /// `l_i = d(v_i, v_{i+1})`.
    pub fn edge_lengths(&self) -> Result<Vec<ComplexMeasure>> {
        (0..self.n() as isize)
            .map(|i| distance(self.geometry, self.v(i), self.v(i + 1)))
            .collect()
    }

    /// Real edge lengths; fails on complex de Sitter lengths.
    pub fn real_edge_lengths(&self) -> Result<Vec<f64>> {
        self.edge_lengths()?
            .into_iter()
            .map(|l| {
                if l.is_real() {
                    Ok(l.re)
                } else {
                    Err(Error::DegenerateConfiguration("edge is not spacelike".into()))
                }
            })
            .collect()
    }

    pub fn interior_angles(&self) -> Result<Vec<ComplexMeasure>> {
        (0..self.n() as isize)
            .map(|i| {
                vertex_angle(self.geometry, self.v(i), self.v(i - 1), self.v(i + 1))
                    .map_err(|_| Error::DegenerateVertex(i as usize))
            })
            .collect()
    }

    pub fn edge_data(&self) -> Result<EdgeData> {
        Ok(EdgeData { lengths: self.edge_lengths()?, angles: self.interior_angles()? })
    }

    /// Real interior angles (riemannian models).
    pub fn real_angles(&self) -> Result<Vec<f64>> {
        Ok(self.interior_angles()?.iter().map(|a| a.re).collect())
    }

    /// Gauss-Bonnet area.
    pub fn area(&self) -> Result<f64> {
        let ext: f64 = match self.geometry {
            Geometry::S2 | Geometry::H2 => self.real_angles()?.iter().map(|a| PI - a).sum(),
            g => return Err(Error::UnsupportedGeometry(g.to_string())),
        };
        Ok(if self.geometry == Geometry::S2 { TAU - ext } else { ext - TAU })
    }

    /// Turning number of a plane polygon, `sum (pi - alpha_i) / 2pi`.
    pub fn turning_number(&self) -> Result<f64> {
        if self.geometry != Geometry::E2 {
            return Err(Error::UnsupportedGeometry(self.geometry.to_string()));
        }
        let ext: f64 = self.real_angles()?.iter().map(|a| PI - a).sum();
        Ok(ext / TAU)
    }

    fn lifted(&self, i: isize) -> Vec3 {
        let v = self.v(i);
        if self.geometry == Geometry::E2 {
            Vec3::new(v.x, v.y, 1.0)
        } else {
            *v
        }
    }

    /// Sign test: every vertex lies strictly left of every edge line it is
    /// not incident to.
    fn left_of_all_edges(&self) -> bool {
        let n = self.n() as isize;
        for i in 0..n {
            let (a, b) = (self.lifted(i), self.lifted(i + 1));
            for j in 0..n {
                if j == i || j == (i + 1) % n {
                    continue;
                }
                let c = self.lifted(j);
                let scale = a.norm() * b.norm() * c.norm();
                if det3(&a, &b, &c) <= 1e-12 * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Unit timelike normals of the edges of a de Sitter polygon. For the dual
    /// of a counterclockwise hyperbolic polygon `v_i ⊠ v_{i+1}` is past-pointing.
    fn ds2_dual_candidates(&self) -> Option<Vec<Vec3>> {
        let n = self.n() as isize;
        (0..n)
            .map(|i| {
                let m = lorentz_cross(self.v(i), self.v(i + 1));
                let timelike = -minkowski(&m, &m) > 1e-12 * m.norm_squared();
                if timelike && m.z < 0.0 {
                    normalize(Geometry::H2, &m).ok()
                } else {
                    None
                }
            })
            .collect()
    }

    /// Convexity in the sense of bounding a convex region, traversed
    /// counterclockwise. A de Sitter polygon is convex when it is the dual of a
    /// convex hyperbolic polygon (in particular all its edges are spacelike).
    pub fn is_convex(&self) -> bool {
        match self.geometry {
            Geometry::E2 | Geometry::S2 | Geometry::H2 => self.left_of_all_edges(),
            Geometry::DS2 => {
                let n = self.n() as isize;
                if (0..n).any(|i| minkowski(self.v(i), self.v(i + 1)).abs() >= 1.0) {
                    return false;
                }
                match self.ds2_dual_candidates() {
                    Some(w) => Polygon::new(Geometry::H2, w).map(|q| q.is_convex()).unwrap_or(false),
                    None => false,
                }
            }
        }
    }

    /// Dual polygon: vertex `i` is the unit (co)normal of edge `i`.
    /// Sphere to sphere, hyperbolic to de Sitter and back. The dual of the
    /// dual is the original polygon shifted by one index.
    pub fn dual(&self) -> Result<Polygon> {
        if !self.is_convex() {
            return Err(Error::NotConvex);
        }
        let g = self.geometry;
        let n = self.n() as isize;
        let (target, verts) = match g {
            Geometry::S2 | Geometry::H2 => {
                let target = if g == Geometry::S2 { Geometry::S2 } else { Geometry::DS2 };
                let vs: Result<Vec<Vec3>> =
                    (0..n).map(|i| normalize(target, &cross(g, self.v(i), self.v(i + 1)))).collect();
                (target, vs?)
            }
            Geometry::DS2 => (Geometry::H2, self.ds2_dual_candidates().ok_or(Error::NotConvex)?),
            Geometry::E2 => return Err(Error::UnsupportedGeometry("E2".into())),
        };
        Polygon::new(target, verts)
    }

    /// Strict interior membership of a point of the model.
    pub fn interior_contains(&self, x: &Vec3) -> Result<bool> {
        if !self.is_convex() {
            return Err(Error::NotConvex);
        }
        check_on_quadric(self.geometry, x)?;
        let xl = if self.geometry == Geometry::E2 { Vec3::new(x.x, x.y, 1.0) } else { *x };
        let n = self.n() as isize;
        Ok((0..n).all(|i| {
            let (a, b) = (self.lifted(i), self.lifted(i + 1));
            det3(&a, &b, &xl) > 1e-12 * a.norm() * b.norm() * xl.norm()
        }))
    }
}
