//! Triangle meshes with a texture atlas, and the Wavefront OBJ reader/writer.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};

/// Slack accepted on texture coordinates before they are rejected as out of
/// range. Values inside the slack are clamped.
const UV_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub uv: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vector3::new(a.x, a.y, a.z),
            Vector3::new(b.x, a.y, a.z),
            Vector3::new(a.x, b.y, a.z),
            Vector3::new(b.x, b.y, a.z),
            Vector3::new(a.x, a.y, b.z),
            Vector3::new(b.x, a.y, b.z),
            Vector3::new(a.x, b.y, b.z),
            Vector3::new(b.x, b.y, b.z),
        ]
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> Vector3<f64> {
        (self.min + self.max) * 0.5
    }
}

/// A UV-mapped triangle mesh. Immutable once built; every constructor
/// validates the invariants below.
///
/// - triangle indices are in range
/// - every uv lies in `[0,1]²`
/// - every normal has unit length
/// - `diameter` is the length of the bounding-box diagonal
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vertex>,
    triangles: Vec<[u32; 3]>,
    bbox: Aabb,
    diameter: f64,
}

impl Mesh {
    pub fn new(vertices: Vec<Vertex>, triangles: Vec<[u32; 3]>) -> Result<Mesh> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::DegenerateMesh("mesh has no triangles".into()));
        }
        let n = vertices.len() as u32;
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&k| k >= n) {
                return Err(Error::DegenerateMesh(format!(
                    "triangle {i} references a vertex out of range"
                )));
            }
        }
        for (i, v) in vertices.iter().enumerate() {
            let (u, w) = (v.uv.x, v.uv.y);
            if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&w) {
                return Err(Error::DegenerateMesh(format!(
                    "vertex {i} has uv ({u}, {w}) outside [0,1]"
                )));
            }
            if (v.normal.norm() - 1.0).abs() > 1e-4 {
                return Err(Error::DegenerateMesh(format!(
                    "vertex {i} normal is not unit length"
                )));
            }
            if !v.position.iter().all(|c| c.is_finite()) {
                return Err(Error::DegenerateMesh(format!(
                    "vertex {i} has a non-finite position"
                )));
            }
        }

        let mut min = vertices[0].position;
        let mut max = vertices[0].position;
        for v in &vertices {
            min = min.inf(&v.position);
            max = max.sup(&v.position);
        }
        let bbox = Aabb { min, max };
        let diameter = bbox.diagonal();
        if diameter <= 0.0 {
            return Err(Error::DegenerateMesh("all vertices coincide".into()));
        }
        Ok(Mesh {
            vertices,
            triangles,
            bbox,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Same geometry with every vertex uv replaced through `f`.
    pub fn with_uvs(&self, mut f: impl FnMut(&Vertex) -> Vector2<f64>) -> Result<Mesh> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex { uv: f(v), ..*v })
            .collect();
        Mesh::new(vertices, self.triangles.clone())
    }
}

/// Loads an OBJ file. See [`parse_obj`].
pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    std::fs::write(path, to_obj(mesh)).map_err(|e| Error::io(path, e))
}

/// Serializes one `v`/`vt`/`vn` record per mesh vertex. Floats use the
/// shortest representation that parses back to the same value.
pub fn to_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let p = v.position;
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for v in &mesh.vertices {
        let _ = writeln!(out, "vt {} {}", v.uv.x, v.uv.y);
    }
    for v in &mesh.vertices {
        let n = v.normal;
        let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        let _ = writeln!(out, "f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}");
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Corner {
    position: usize,
    uv: usize,
    normal: Option<usize>,
}

/// Parses Wavefront OBJ text. Faces must reference texture coordinates;
/// polygons are fan-triangulated. A position used with several `vt` or `vn`
/// indices becomes several vertices. Missing normals are computed as
/// area-weighted face normals per position.
pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut positions: Vec<Vector3<f64>> = Vec::new();
    let mut uvs: Vec<(Vector2<f64>, usize)> = Vec::new();
    let mut normals: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[Corner; 3]> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => positions.push(parse_vec3(&mut tokens, line_no)?),
            "vn" => normals.push(parse_vec3(&mut tokens, line_no)?),
            "vt" => {
                let u = parse_f64(tokens.next(), line_no)?;
                let v = match tokens.next() {
                    Some(t) => parse_f64(Some(t), line_no)?,
                    None => 0.0,
                };
                uvs.push((Vector2::new(u, v), line_no));
            }
            "f" => {
                let mut corners = Vec::with_capacity(4);
                for tok in tokens {
                    corners.push(parse_corner(
                        tok,
                        line_no,
                        positions.len(),
                        uvs.len(),
                        normals.len(),
                    )?);
                }
                if corners.len() < 3 {
                    return Err(Error::parse("obj", line_no, "face with fewer than 3 vertices"));
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }

    if faces.is_empty() {
        return Err(Error::DegenerateMesh("no faces".into()));
    }

    // Area-weighted normals per position, used where a corner has no `vn`.
    let needs_normals = faces.iter().flatten().any(|c| c.normal.is_none());
    let mut computed = Vec::new();
    if needs_normals {
        computed = vec![Vector3::zeros(); positions.len()];
        for f in &faces {
            let (a, b, c) = (
                positions[f[0].position],
                positions[f[1].position],
                positions[f[2].position],
            );
            // Cross product length is twice the area, which gives the weighting.
            let n = (b - a).cross(&(c - a));
            for corner in f {
                computed[corner.position] += n;
            }
        }
    }

    let mut index_of: HashMap<Corner, u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(faces.len());
    for f in &faces {
        let mut tri = [0u32; 3];
        for (slot, corner) in f.iter().enumerate() {
            let idx = match index_of.get(corner) {
                Some(&i) => i,
                None => {
                    let (uv, uv_line) = uvs[corner.uv];
                    let uv = check_uv(uv, uv_line)?;
                    let raw_normal = match corner.normal {
                        Some(k) => normals[k],
                        None => computed[corner.position],
                    };
                    let normal = if raw_normal.norm() > 1e-12 {
                        raw_normal.normalize()
                    } else {
                        log::warn!("vertex {} has no usable normal; using +Z", corner.position + 1);
                        Vector3::z()
                    };
                    let i = vertices.len() as u32;
                    vertices.push(Vertex {
                        position: positions[corner.position],
                        normal,
                        uv,
                    });
                    index_of.insert(*corner, i);
                    i
                }
            };
            tri[slot] = idx;
        }
        triangles.push(tri);
    }

    Mesh::new(vertices, triangles)
}

fn check_uv(uv: Vector2<f64>, line: usize) -> Result<Vector2<f64>> {
    let ok = |c: f64| c.is_finite() && (-UV_SLACK..=1.0 + UV_SLACK).contains(&c);
    if !ok(uv.x) || !ok(uv.y) {
        return Err(Error::UvOutOfRange {
            line,
            u: uv.x,
            v: uv.y,
        });
    }
    Ok(Vector2::new(uv.x.clamp(0.0, 1.0), uv.y.clamp(0.0, 1.0)))
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse("obj", line, "missing number"))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse("obj", line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(Error::parse("obj", line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

fn parse_vec3<'a>(tokens: &mut impl Iterator<Item = &'a str>, line: usize) -> Result<Vector3<f64>> {
    let x = parse_f64(tokens.next(), line)?;
    let y = parse_f64(tokens.next(), line)?;
    let z = parse_f64(tokens.next(), line)?;
    Ok(Vector3::new(x, y, z))
}

fn resolve_index(tok: &str, count: usize, line: usize) -> Result<usize> {
    let raw: i64 = tok
        .parse()
        .map_err(|_| Error::parse("obj", line, format!("invalid index `{tok}`")))?;
    let resolved = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        -1
    };
    if resolved < 0 || resolved >= count as i64 {
        return Err(Error::parse("obj", line, format!("index {raw} out of range")));
    }
    Ok(resolved as usize)
}

fn parse_corner(tok: &str, line: usize, np: usize, nt: usize, nn: usize) -> Result<Corner> {
    let mut parts = tok.split('/');
    let position = resolve_index(parts.next().unwrap_or(""), np, line)?;
    let uv = match parts.next() {
        Some(s) if !s.is_empty() => resolve_index(s, nt, line)?,
        _ => return Err(Error::MissingUv { line }),
    };
    let normal = match parts.next() {
        Some(s) if !s.is_empty() => Some(resolve_index(s, nn, line)?),
        _ => None,
    };
    if parts.next().is_some() {
        return Err(Error::parse("obj", line, format!("malformed face corner `{tok}`")));
    }
    Ok(Corner {
        position,
        uv,
        normal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = include_str!("../../tests/data/cube.obj");

    #[test]
    fn unit_cube_loads() {
        let mesh = parse_obj(CUBE).unwrap();
        assert_eq!(mesh.triangles().len(), 12);
        // Eight corners, each shared by three faces with distinct uv/normal.
        assert_eq!(mesh.vertices().len(), 24);
        let distinct: std::collections::BTreeSet<_> = mesh
            .vertices()
            .iter()
            .map(|v| (v.position.x as i32, v.position.y as i32, v.position.z as i32))
            .collect();
        assert_eq!(distinct.len(), 8);
        assert!((mesh.diameter() - 3f64.sqrt()).abs() < 1e-12);
        assert!((mesh.bbox().diagonal() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn missing_vt_is_refused() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        assert!(matches!(parse_obj(text), Err(Error::MissingUv { line: 4 })));
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n";
        assert!(matches!(parse_obj(text), Err(Error::MissingUv { .. })));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "v 0 0 0\nv 1 0 zero\n";
        match parse_obj(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coincident_vertices_are_degenerate() {
        let text = "v 1 1 1\nv 1 1 1\nv 1 1 1\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n";
        assert!(matches!(parse_obj(text), Err(Error::DegenerateMesh(_))));
    }

    #[test]
    fn missing_normals_are_area_weighted() {
        // Two triangles sharing vertex 1: a large one in z=0 and a tiny one in x=0.
        let text = "v 0 0 0\nv 10 0 0\nv 0 10 0\nv 0 0.1 0\nv 0 0 0.1\n\
                    vt 0 0\nf 1/1 2/1 3/1\nf 1/1 4/1 5/1\n";
        let mesh = parse_obj(text).unwrap();
        let n = mesh.vertices()[0].normal;
        assert!((n.norm() - 1.0).abs() < 1e-12);
        assert!(n.z > 0.99 && n.x > 0.0);
    }

    #[test]
    fn per_corner_uvs_split_vertices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 1 1\nvt 0.5 0.5\n\
                    f 1/1 2/2 3/3\nf 2/5 4/4 3/3\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.vertices().len(), 5);
    }

    #[test]
    fn quads_and_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n\
                    f -4/-4 -3/-3 -2/-2 -1/-1\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.triangles().len(), 2);
    }

    #[test]
    fn uv_out_of_range_is_refused() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 2 0\nvt 0 1\nf 1/1 2/2 3/3\n";
        assert!(matches!(parse_obj(text), Err(Error::UvOutOfRange { line: 5, .. })));
    }

    #[test]
    fn loading_is_deterministic() {
        assert_eq!(parse_obj(CUBE).unwrap(), parse_obj(CUBE).unwrap());
    }
}
