//! Analytic test meshes with seam-free texture atlases.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};

use crate::error::Result;
use crate::scene_io::{Mesh, Vertex};

/// Square of side `size` in the z = 0 plane, centered at the origin, facing
/// −Z. Texture coordinates map x to u and y to v linearly over `[0,1]`.
pub fn quad(size: f64) -> Result<Mesh> {
    let h = size * 0.5;
    let n = Vector3::new(0.0, 0.0, -1.0);
    let vertices = [(-h, -h), (h, -h), (h, h), (-h, h)]
        .iter()
        .map(|&(x, y)| Vertex {
            position: Vector3::new(x, y, 0.0),
            normal: n,
            uv: Vector2::new(x / size + 0.5, y / size + 0.5),
        })
        .collect();
    Mesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]])
}

/// Inset of each face inside its atlas cell, as a fraction of the cell.
const CUBE_CELL_INSET: f64 = 0.02;

/// Axis-aligned cube of side `size` centered at the origin with flat
/// normals. Each face is box-projected into its own cell of a 3x2 atlas.
pub fn cube(size: f64) -> Result<Mesh> {
    let h = size * 0.5;
    let corners = [
        [-h, -h, -h],
        [h, -h, -h],
        [h, h, -h],
        [-h, h, -h],
        [-h, -h, h],
        [h, -h, h],
        [h, h, h],
        [-h, h, h],
    ];
    // Counter-clockwise seen from outside.
    let faces: [([usize; 4], [f64; 3]); 6] = [
        ([0, 3, 2, 1], [0.0, 0.0, -1.0]),
        ([4, 5, 6, 7], [0.0, 0.0, 1.0]),
        ([0, 1, 5, 4], [0.0, -1.0, 0.0]),
        ([3, 7, 6, 2], [0.0, 1.0, 0.0]),
        ([0, 4, 7, 3], [-1.0, 0.0, 0.0]),
        ([1, 2, 6, 5], [1.0, 0.0, 0.0]),
    ];
    let mut vertices = Vec::with_capacity(24);
    let mut triangles = Vec::with_capacity(12);
    for (k, (idx, normal)) in faces.iter().enumerate() {
        let (col, row) = ((k % 3) as f64, (k / 3) as f64);
        let (u0, u1) = ((col + CUBE_CELL_INSET) / 3.0, (col + 1.0 - CUBE_CELL_INSET) / 3.0);
        let (v0, v1) = ((row + CUBE_CELL_INSET) / 2.0, (row + 1.0 - CUBE_CELL_INSET) / 2.0);
        let uvs = [[u0, v0], [u1, v0], [u1, v1], [u0, v1]];
        let base = vertices.len() as u32;
        for (slot, &c) in idx.iter().enumerate() {
            vertices.push(Vertex {
                position: Vector3::from(corners[c]),
                normal: Vector3::from(*normal),
                uv: Vector2::from(uvs[slot]),
            });
        }
        triangles.push([base, base + 1, base + 2]);
        triangles.push([base, base + 2, base + 3]);
    }
    Mesh::new(vertices, triangles)
}

/// Torus around the z axis. `major_segments x minor_segments` quads; the
/// atlas is the (θ, φ) parameter rectangle, with duplicated seam vertices.
pub fn torus(major_radius: f64, minor_radius: f64, major_segments: usize, minor_segments: usize) -> Result<Mesh> {
    let (nu, nv) = (major_segments.max(3), minor_segments.max(3));
    let mut vertices = Vec::with_capacity((nu + 1) * (nv + 1));
    for j in 0..=nv {
        let phi = 2.0 * PI * j as f64 / nv as f64;
        for i in 0..=nu {
            let theta = 2.0 * PI * i as f64 / nu as f64;
            let ring = major_radius + minor_radius * phi.cos();
            vertices.push(Vertex {
                position: Vector3::new(ring * theta.cos(), ring * theta.sin(), minor_radius * phi.sin()),
                normal: Vector3::new(phi.cos() * theta.cos(), phi.cos() * theta.sin(), phi.sin()),
                uv: Vector2::new(i as f64 / nu as f64, j as f64 / nv as f64),
            });
        }
    }
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    let at = |i: usize, j: usize| (j * (nu + 1) + i) as u32;
    for j in 0..nv {
        for i in 0..nu {
            triangles.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            triangles.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Geodesic sphere: an icosahedron subdivided `subdivisions` times
/// (20·4^k triangles), smooth normals. Every triangle gets its own chart in
/// a grid atlas, two triangles per cell separated by a gutter.
pub fn icosphere(radius: f64, subdivisions: usize) -> Result<Mesh> {
    let (points, faces) = icosphere_topology(subdivisions);
    let cells = faces.len().div_ceil(2);
    let grid = (cells as f64).sqrt().ceil() as usize;
    let cell = 1.0 / grid as f64;
    let g = 0.06;
    let lower = [[g, g], [1.0 - 2.0 * g, g], [g, 1.0 - 2.0 * g]];
    let upper = [[1.0 - g, 1.0 - g], [2.0 * g, 1.0 - g], [1.0 - g, 2.0 * g]];

    let mut vertices = Vec::with_capacity(faces.len() * 3);
    let mut triangles = Vec::with_capacity(faces.len());
    for (k, f) in faces.iter().enumerate() {
        let c = k / 2;
        let (cx, cy) = ((c % grid) as f64 * cell, (c / grid) as f64 * cell);
        let local = if k % 2 == 0 { &lower } else { &upper };
        let base = vertices.len() as u32;
        for (slot, &pi) in f.iter().enumerate() {
            let dir = points[pi];
            vertices.push(Vertex {
                position: dir * radius,
                normal: dir,
                uv: Vector2::new(cx + local[slot][0] * cell, cy + local[slot][1] * cell),
            });
        }
        triangles.push([base, base + 1, base + 2]);
    }
    Mesh::new(vertices, triangles)
}

/// Unit-sphere vertices and outward-wound faces of a subdivided icosahedron.
pub fn icosphere_topology(subdivisions: usize) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut points: Vec<Vector3<f64>> = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::from(*v).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, points: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                points.push(((points[a] + points[b]) * 0.5).normalize());
                points.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut points);
            let bc = mid(b, c, &mut points);
            let ca = mid(c, a, &mut points);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (points, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outward(mesh: &Mesh) -> bool {
        let c = mesh.bbox().center();
        mesh.triangles().iter().all(|t| {
            let v = t.map(|i| mesh.vertices()[i as usize].position);
            let n = (v[1] - v[0]).cross(&(v[2] - v[0]));
            n.dot(&((v[0] + v[1] + v[2]) / 3.0 - c)) > 0.0
        })
    }

    #[test]
    fn icosphere_counts_and_diameter() {
        let (points, faces) = icosphere_topology(2);
        assert_eq!(points.len(), 162);
        assert_eq!(faces.len(), 320);
        let mesh = icosphere(0.5, 2).unwrap();
        assert_eq!(mesh.triangles().len(), 320);
        let extent = mesh.vertices().iter().fold(Vector3::zeros(), |m: Vector3<f64>, v| m.sup(&v.position.abs()));
        assert!((mesh.diameter() - 2.0 * extent.norm()).abs() < 1e-12);
        assert!((extent.max() - 0.5).abs() < 0.01);
        assert!(outward(&mesh));
    }

    #[test]
    fn cube_is_closed_and_outward() {
        let mesh = cube(2.0).unwrap();
        assert_eq!(mesh.triangles().len(), 12);
        assert!((mesh.diameter() - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(outward(&mesh));
        for t in mesh.triangles() {
            let v = t.map(|i| mesh.vertices()[i as usize]);
            let n = (v[1].position - v[0].position).cross(&(v[2].position - v[0].position)).normalize();
            assert!((n - v[0].normal).norm() < 1e-12);
        }
    }

    #[test]
    fn torus_normals_match_geometry() {
        let mesh = torus(0.3, 0.1, 24, 16).unwrap();
        assert_eq!(mesh.triangles().len(), 768);
        for v in mesh.vertices() {
            let ring = Vector3::new(v.position.x, v.position.y, 0.0).normalize() * 0.3;
            let expected = (v.position - ring).normalize();
            assert!((expected - v.normal).norm() < 1e-9);
        }
        assert!((mesh.diameter() - (0.8f64 * 0.8 * 2.0 + 0.2 * 0.2).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn quad_uv_is_identity() {
        let mesh = quad(1.0).unwrap();
        for v in mesh.vertices() {
            assert!((v.uv.x - (v.position.x + 0.5)).abs() < 1e-12);
            assert!((v.uv.y - (v.position.y + 0.5)).abs() < 1e-12);
        }
    }
}
