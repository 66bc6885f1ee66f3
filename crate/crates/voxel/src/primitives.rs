//! Synthetic watertight test meshes: axis-aligned boxes, icospheres,
//! and capped cylinders. Used by the test suites and handy for building
//! small training corpora.

use crate::mesh::{Triangle, TriangleMesh};

/// Axis-aligned box spanning [lo, hi], 12 triangles, outward winding.
pub fn cuboid(lo: [f64; 3], hi: [f64; 3]) -> TriangleMesh {
    let v = |x: usize, y: usize, z: usize| -> [f64; 3] {
        [
            if x == 0 { lo[0] } else { hi[0] },
            if y == 0 { lo[1] } else { hi[1] },
            if z == 0 { lo[2] } else { hi[2] },
        ]
    };
    // Each face as two triangles, wound counter-clockwise seen from outside.
    let quads = [
        [v(0, 0, 0), v(0, 1, 0), v(1, 1, 0), v(1, 0, 0)], // z = lo
        [v(0, 0, 1), v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)], // z = hi
        [v(0, 0, 0), v(1, 0, 0), v(1, 0, 1), v(0, 0, 1)], // y = lo
        [v(0, 1, 0), v(0, 1, 1), v(1, 1, 1), v(1, 1, 0)], // y = hi
        [v(0, 0, 0), v(0, 0, 1), v(0, 1, 1), v(0, 1, 0)], // x = lo
        [v(1, 0, 0), v(1, 1, 0), v(1, 1, 1), v(1, 0, 1)], // x = hi
    ];
    let mut triangles = Vec::with_capacity(12);
    for q in quads {
        triangles.push(Triangle::new(q[0], q[1], q[2]));
        triangles.push(Triangle::new(q[0], q[2], q[3]));
    }
    TriangleMesh::new(triangles)
}

/// Cube spanning the unit cube [0,1]^3.
pub fn unit_cube() -> TriangleMesh {
    cuboid([0.0; 3], [1.0; 3])
}

/// Icosphere of the given radius centered at the origin. Subdivision 0 is a
/// plain icosahedron; each level quadruples the triangle count (level 4 has
/// 5120 triangles).
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let base: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let faces: [[usize; 3]; 20] = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let project = |p: [f64; 3]| -> [f64; 3] {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [p[0] / n * radius, p[1] / n * radius, p[2] / n * radius]
    };
    let mut tris: Vec<[[f64; 3]; 3]> = faces
        .iter()
        .map(|f| [project(base[f[0]]), project(base[f[1]]), project(base[f[2]])])
        .collect();
    for _ in 0..subdivisions {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let mid = |p: [f64; 3], q: [f64; 3]| project([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]);
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    TriangleMesh::new(tris.into_iter().map(|[a, b, c]| Triangle::new(a, b, c)).collect())
}

/// Capped cylinder along z, centered at the origin.
pub fn cylinder(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    let n = segments.max(3);
    let h = height / 2.0;
    let ring = |i: usize| -> (f64, f64) {
        let a = std::f64::consts::TAU * i as f64 / n as f64;
        (radius * a.cos(), radius * a.sin())
    };
    let mut triangles = Vec::with_capacity(n * 4);
    for i in 0..n {
        let (x0, y0) = ring(i);
        let (x1, y1) = ring((i + 1) % n);
        // side quad
        triangles.push(Triangle::new([x0, y0, -h], [x1, y1, -h], [x1, y1, h]));
        triangles.push(Triangle::new([x0, y0, -h], [x1, y1, h], [x0, y0, h]));
        // caps (fans around the axis)
        triangles.push(Triangle::new([0.0, 0.0, -h], [x1, y1, -h], [x0, y0, -h]));
        triangles.push(Triangle::new([0.0, 0.0, h], [x0, y0, h], [x1, y1, h]));
    }
    TriangleMesh::new(triangles)
}
