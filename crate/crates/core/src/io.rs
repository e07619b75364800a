//! File formats: polygon JSON, edge-length JSON, polyhedron JSON and OFF,
//! CSV tables.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Vec3};
use crate::hull::ConvexPolyhedron;
use crate::isoperimetric::{CriticalSolution, Locus};
use crate::polygon::Polygon;

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// Serialized polygon. Plane vertices have two coordinates, all others three.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonFile {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub geometry: Geometry,
    pub vertices: Vec<Vec<f64>>,
}

impl PolygonFile {
    pub fn from_polygon(p: &Polygon) -> Self {
        let plane = p.geometry() == Geometry::E2;
        let vertices = p
            .vertices()
            .iter()
            .map(|v| if plane { vec![v.x, v.y] } else { vec![v.x, v.y, v.z] })
            .collect();
        PolygonFile { schema: SCHEMA_VERSION, geometry: p.geometry(), vertices }
    }

    pub fn to_polygon(&self) -> Result<Polygon> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema {}", self.schema)));
        }
        let mut vs = Vec::with_capacity(self.vertices.len());
        for (i, c) in self.vertices.iter().enumerate() {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse(format!("vertex {i} has a non-finite coordinate")));
            }
            let v = match (self.geometry, c.len()) {
                (Geometry::E2, 2) => Vec3::new(c[0], c[1], 0.0),
                (Geometry::E2, 3) if c[2] == 0.0 => Vec3::new(c[0], c[1], 0.0),
                (Geometry::E2, _) => return Err(Error::Parse(format!("vertex {i}: plane vertices take 2 coordinates"))),
                (_, 3) => Vec3::new(c[0], c[1], c[2]),
                _ => return Err(Error::Parse(format!("vertex {i}: expected 3 coordinates"))),
            };
            vs.push(v);
        }
        Polygon::new(self.geometry, vs)
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable value")
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn polygon_from_json(s: &str) -> Result<Polygon> {
    parse_json::<PolygonFile>(s)?.to_polygon()
}

pub fn polygon_to_json(p: &Polygon) -> String {
    to_json(&PolygonFile::from_polygon(p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthsFile {
    pub geometry: Geometry,
    pub lengths: Vec<f64>,
}

pub fn lengths_from_json(s: &str) -> Result<LengthsFile> {
    let f: LengthsFile = parse_json(s)?;
    if f.lengths.len() < 3 {
        return Err(Error::TooFewVertices(f.lengths.len()));
    }
    if f.lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::Parse("lengths must be positive and finite".into()));
    }
    Ok(f)
}

/// Serialized maximal-area solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub lengths: Vec<f64>,
    pub locus: Locus,
    pub polygon: PolygonFile,
    pub area: f64,
    pub solver_residual: f64,
    pub parameter: f64,
}

impl SolutionFile {
    pub fn new(lengths: &[f64], s: &CriticalSolution) -> Self {
        SolutionFile {
            lengths: lengths.to_vec(),
            locus: s.locus,
            polygon: PolygonFile::from_polygon(&s.polygon),
            area: s.area,
            solver_residual: s.solver_residual,
            parameter: s.parameter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhedronFile {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
}

impl PolyhedronFile {
    pub fn from_polyhedron(p: &ConvexPolyhedron) -> Self {
        PolyhedronFile {
            vertices: p.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
            faces: p.faces().to_vec(),
        }
    }

    pub fn to_polyhedron(&self) -> Result<ConvexPolyhedron> {
        let vs = self.vertices.iter().map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        ConvexPolyhedron::new(vs, self.faces.clone())
    }
}

pub fn polyhedron_from_json(s: &str) -> Result<ConvexPolyhedron> {
    parse_json::<PolyhedronFile>(s)?.to_polyhedron()
}

pub fn polyhedron_to_json(p: &ConvexPolyhedron) -> String {
    to_json(&PolyhedronFile::from_polyhedron(p))
}

/// Object File Format: `OFF`, counts line, vertices, then faces given as a
/// count followed by indices. `#` starts a comment.
pub fn polyhedron_from_off(s: &str) -> Result<ConvexPolyhedron> {
    let mut tokens = s.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(str::split_whitespace);
    let bad = |m: &str| Error::Parse(format!("OFF: {m}"));
    match tokens.next() {
        Some("OFF") => {}
        _ => return Err(bad("missing OFF header")),
    }
    let mut num = |what: &str| -> Result<f64> {
        tokens
            .next()
            .ok_or_else(|| bad(&format!("unexpected end of input reading {what}")))?
            .parse::<f64>()
            .map_err(|_| bad(&format!("invalid number in {what}")))
    };
    let count = |x: f64, what: &str| -> Result<usize> {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(bad(&format!("invalid {what}")))
        }
    };
    let nv = count(num("counts")?, "vertex count")?;
    let nf = count(num("counts")?, "face count")?;
    let _ne = num("counts")?;
    let mut vs = Vec::with_capacity(nv);
    for _ in 0..nv {
        vs.push(Vec3::new(num("vertex")?, num("vertex")?, num("vertex")?));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k = count(num("face")?, "face size")?;
        let mut f = Vec::with_capacity(k);
        for _ in 0..k {
            let i = count(num("face")?, "vertex index")?;
            if i >= nv {
                return Err(bad("vertex index out of range"));
            }
            f.push(i);
        }
        faces.push(f);
    }
    ConvexPolyhedron::new(vs, faces)
}

/// Reads a polyhedron file, choosing OFF or JSON from its first token.
pub fn polyhedron_from_str(s: &str) -> Result<ConvexPolyhedron> {
    if s.trim_start().starts_with("OFF") {
        polyhedron_from_off(s)
    } else {
        polyhedron_from_json(s)
    }
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::cube;
    use crate::random::{random_convex_polygon, rng};

    #[test]
    fn polygon_round_trip_all_geometries() {
        let mut r = rng(3);
        for g in Geometry::ALL {
            let p = random_convex_polygon(g, 6, &mut r);
            let s = polygon_to_json(&p);
            let q = polygon_from_json(&s).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn plane_vertices_are_two_dimensional() {
        let p = Polygon::euclidean(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let s = polygon_to_json(&p);
        assert!(s.contains("\"schema\": 1"));
        let f: PolygonFile = serde_json::from_str(&s).unwrap();
        assert!(f.vertices.iter().all(|v| v.len() == 2));
    }

    #[test]
    fn malformed_inputs_are_parse_errors() {
        assert!(matches!(polygon_from_json("{"), Err(Error::Parse(_))));
        assert!(matches!(
            polygon_from_json(r#"{"geometry":"S2","vertices":[[1,0]]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            polygon_from_json(r#"{"schema":2,"geometry":"E2","vertices":[[0,0],[1,0],[0,1]]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(lengths_from_json(r#"{"geometry":"H2","lengths":[1,-1,1]}"#), Err(Error::Parse(_))));
        assert!(matches!(polyhedron_from_off("OF 1 2"), Err(Error::Parse(_))));
    }

    #[test]
    fn off_and_json_agree_on_cube() {
        let c = cube();
        let mut off = format!("OFF\n# cube\n{} {} 0\n", c.vertices().len(), c.faces().len());
        for v in c.vertices() {
            off += &format!("{} {} {}\n", v.x, v.y, v.z);
        }
        for f in c.faces() {
            off += &format!("{} {}\n", f.len(), f.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "));
        }
        let a = polyhedron_from_str(&off).unwrap();
        let b = polyhedron_from_str(&polyhedron_to_json(&c)).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(a.faces(), b.faces());
    }

    #[test]
    fn csv_has_header_row() {
        #[derive(Serialize)]
        struct Row {
            k: usize,
            x: f64,
        }
        let s = csv_string(&[Row { k: 1, x: 0.5 }, Row { k: 2, x: 0.25 }]).unwrap();
        assert_eq!(s, "k,x\n1,0.5\n2,0.25\n");
    }
}
