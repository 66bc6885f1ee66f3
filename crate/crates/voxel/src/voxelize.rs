//! Solid voxelization.
//!
//! The mesh is uniformly scaled and translated so its bounding box fits the
//! unit cube (longest axis exactly spanning [0,1], other axes centered), and
//! a voxel is occupied iff its center is interior under parity ray casting,
//! majority-voted over the three axes. Rays that graze a triangle edge or
//! vertex, or columns whose crossing count comes back odd, are recast with a
//! deterministic sub-voxel jitter. Non-watertight meshes fall back to
//! surface voxelization (triangle/voxel overlap) and set the grid's
//! `surface_only` flag.

use std::collections::HashMap;

use crate::error::{arg_err, Result};
use crate::grid::VoxelGrid;
use crate::mesh::TriangleMesh;

/// Barycentric slack under which a ray/triangle hit counts as grazing.
const EDGE_EPS: f64 = 1e-9;

/// Lateral recast offsets in voxel units.
const JITTERS: [(f64, f64); 3] = [(0.25, 0.375), (-0.34, 0.21), (0.17, -0.43)];

pub fn voxelize(mesh: &TriangleMesh, dim: usize) -> Result<VoxelGrid> {
    if dim < 2 {
        return arg_err(format!("voxel dim must be >= 2, got {dim}"));
    }
    if !mesh.is_finite() {
        return arg_err("mesh has non-finite coordinates");
    }
    let mut grid = VoxelGrid::new(dim)?;
    let Some((lo, hi)) = mesh.bounds() else {
        return Ok(grid); // empty mesh: all-zero grid, identity transform
    };

    let extent = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let scale = extent[0].max(extent[1]).max(extent[2]);
    if scale <= 0.0 {
        // Degenerate point mesh: nothing has volume or surface area.
        grid.translate = lo;
        return Ok(grid);
    }
    let translate = [
        lo[0] - (scale - extent[0]) / 2.0,
        lo[1] - (scale - extent[1]) / 2.0,
        lo[2] - (scale - extent[2]) / 2.0,
    ];
    grid.translate = translate;
    grid.scale = scale;

    // Normalized triangle list; all further work happens in [0,1] space.
    let tris: Vec<[[f64; 3]; 3]> = mesh
        .triangles
        .iter()
        .map(|t| {
            let mut v = t.vertices;
            for p in &mut v {
                for a in 0..3 {
                    p[a] = (p[a] - translate[a]) / scale;
                }
            }
            v
        })
        .collect();

    if is_watertight(mesh) {
        parity_fill(&tris, dim, &mut grid);
    } else {
        surface_fill(&tris, dim, &mut grid);
        grid.surface_only = true;
    }
    Ok(grid)
}

/// Every undirected edge must be used by exactly two triangles. Vertices are
/// welded by exact coordinate bits, which holds for meshes whose shared
/// vertices were computed identically (CAD exports, our primitives).
fn is_watertight(mesh: &TriangleMesh) -> bool {
    fn key(p: [f64; 3]) -> [u64; 3] {
        [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()]
    }
    let mut edges: HashMap<([u64; 3], [u64; 3]), u32> = HashMap::new();
    for t in &mesh.triangles {
        for i in 0..3 {
            let a = key(t.vertices[i]);
            let b = key(t.vertices[(i + 1) % 3]);
            if a == b {
                return false; // degenerate edge
            }
            let k = if a <= b { (a, b) } else { (b, a) };
            *edges.entry(k).or_insert(0) += 1;
        }
    }
    !edges.is_empty() && edges.values().all(|&c| c == 2)
}

/// Triangle as seen by one ray axis: (u,v) lateral coordinates, w along the ray.
struct ProjectedTri {
    u: [f64; 3],
    v: [f64; 3],
    w: [f64; 3],
}

/// Crossings of the ray at lateral position q with each candidate triangle.
/// Returns None when any hit grazes an edge within EDGE_EPS (ambiguous
/// parity; the caller recasts with jitter).
fn ray_crossings(q: (f64, f64), tris: &[ProjectedTri], candidates: &[u32]) -> Option<Vec<f64>> {
    let mut crossings = Vec::new();
    for &ti in candidates {
        let t = &tris[ti as usize];
        let (e1u, e1v) = (t.u[1] - t.u[0], t.v[1] - t.v[0]);
        let (e2u, e2v) = (t.u[2] - t.u[0], t.v[2] - t.v[0]);
        let det = e1u * e2v - e1v * e2u;
        if det.abs() < 1e-14 {
            continue; // edge-on to the ray: no transversal crossing
        }
        let (qu, qv) = (q.0 - t.u[0], q.1 - t.v[0]);
        let s = (qu * e2v - qv * e2u) / det;
        let r = (e1u * qv - e1v * qu) / det;
        let third = 1.0 - s - r;
        let m = s.min(r).min(third);
        if m > EDGE_EPS {
            crossings.push(t.w[0] + s * (t.w[1] - t.w[0]) + r * (t.w[2] - t.w[0]));
        } else if m > -EDGE_EPS {
            return None; // grazing hit
        }
    }
    Some(crossings)
}

fn parity_fill(tris: &[[[f64; 3]; 3]], dim: usize, grid: &mut VoxelGrid) {
    let vox = 1.0 / dim as f64;
    let mut votes = vec![0u8; dim * dim * dim];
    // Lateral axes per ray axis, and voxel coordinates from (cu, cv, k).
    let lateral = [(1usize, 2usize), (0, 2), (0, 1)];

    for axis in 0..3 {
        let (uax, vax) = lateral[axis];
        let projected: Vec<ProjectedTri> = tris
            .iter()
            .map(|t| ProjectedTri {
                u: [t[0][uax], t[1][uax], t[2][uax]],
                v: [t[0][vax], t[1][vax], t[2][vax]],
                w: [t[0][axis], t[1][axis], t[2][axis]],
            })
            .collect();

        // Conservative candidate lists per column (triangle 2D bbox + one voxel).
        let mut candidates: Vec<Vec<u32>> = vec![Vec::new(); dim * dim];
        for (ti, t) in projected.iter().enumerate() {
            let (ulo, uhi) = (
                t.u[0].min(t.u[1]).min(t.u[2]),
                t.u[0].max(t.u[1]).max(t.u[2]),
            );
            let (vlo, vhi) = (
                t.v[0].min(t.v[1]).min(t.v[2]),
                t.v[0].max(t.v[1]).max(t.v[2]),
            );
            let cu0 = ((ulo * dim as f64).floor() as isize - 1).max(0) as usize;
            let cu1 = ((uhi * dim as f64).ceil() as isize + 1).min(dim as isize - 1) as usize;
            let cv0 = ((vlo * dim as f64).floor() as isize - 1).max(0) as usize;
            let cv1 = ((vhi * dim as f64).ceil() as isize + 1).min(dim as isize - 1) as usize;
            for cu in cu0..=cu1 {
                for cv in cv0..=cv1 {
                    candidates[cu * dim + cv].push(ti as u32);
                }
            }
        }

        for cu in 0..dim {
            for cv in 0..dim {
                let cands = &candidates[cu * dim + cv];
                if cands.is_empty() {
                    continue;
                }
                let base = ((cu as f64 + 0.5) * vox, (cv as f64 + 0.5) * vox);
                let mut crossings = None;
                for attempt in 0..=JITTERS.len() {
                    let q = if attempt == 0 {
                        base
                    } else {
                        let (ju, jv) = JITTERS[attempt - 1];
                        (base.0 + ju * vox, base.1 + jv * vox)
                    };
                    match ray_crossings(q, &projected, cands) {
                        Some(cs) if cs.len() % 2 == 0 => {
                            crossings = Some(cs);
                            break;
                        }
                        _ => continue,
                    }
                }
                let Some(mut cs) = crossings else {
                    continue; // unresolved column: leave exterior
                };
                cs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite crossing"));
                for pair in cs.chunks(2) {
                    let k0 = ((pair[0] * dim as f64 - 0.5).floor() as isize + 1).max(0);
                    let k1 = ((pair[1] * dim as f64 - 0.5).ceil() as isize - 1).min(dim as isize - 1);
                    for k in k0..=k1 {
                        let (x, y, z) = match axis {
                            0 => (k as usize, cu, cv),
                            1 => (cu, k as usize, cv),
                            _ => (cu, cv, k as usize),
                        };
                        votes[x * dim * dim + z * dim + y] += 1;
                    }
                }
            }
        }
    }

    for x in 0..dim {
        for y in 0..dim {
            for z in 0..dim {
                if votes[x * dim * dim + z * dim + y] >= 2 {
                    grid.set(x, y, z, true);
                }
            }
        }
    }
}

fn surface_fill(tris: &[[[f64; 3]; 3]], dim: usize, grid: &mut VoxelGrid) {
    let vox = 1.0 / dim as f64;
    let half = vox / 2.0;
    for t in tris {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in t {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        let cell = |lo: f64| (((lo * dim as f64).floor() as isize).max(0) as usize).min(dim - 1);
        let (x0, x1) = (cell(lo[0]), cell(hi[0]));
        let (y0, y1) = (cell(lo[1]), cell(hi[1]));
        let (z0, z1) = (cell(lo[2]), cell(hi[2]));
        for x in x0..=x1 {
            for y in y0..=y1 {
                for z in z0..=z1 {
                    if grid.get(x, y, z) {
                        continue;
                    }
                    let center = [
                        (x as f64 + 0.5) * vox,
                        (y as f64 + 0.5) * vox,
                        (z as f64 + 0.5) * vox,
                    ];
                    if tri_box_overlap(center, half, t) {
                        grid.set(x, y, z, true);
                    }
                }
            }
        }
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Separating-axis triangle/AABB overlap test (13 axes).
fn tri_box_overlap(center: [f64; 3], half: f64, tri: &[[f64; 3]; 3]) -> bool {
    let v: Vec<[f64; 3]> = tri
        .iter()
        .map(|p| [p[0] - center[0], p[1] - center[1], p[2] - center[2]])
        .collect();

    // Box face normals.
    for a in 0..3 {
        let lo = v[0][a].min(v[1][a]).min(v[2][a]);
        let hi = v[0][a].max(v[1][a]).max(v[2][a]);
        if lo > half || hi < -half {
            return false;
        }
    }

    let edges = [
        [v[1][0] - v[0][0], v[1][1] - v[0][1], v[1][2] - v[0][2]],
        [v[2][0] - v[1][0], v[2][1] - v[1][1], v[2][2] - v[1][2]],
        [v[0][0] - v[2][0], v[0][1] - v[2][1], v[0][2] - v[2][2]],
    ];

    // Cross products of box axes and triangle edges.
    let units = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for e in &edges {
        for u in &units {
            let axis = cross(*u, *e);
            let r = half * (axis[0].abs() + axis[1].abs() + axis[2].abs());
            let p = [dot(axis, v[0]), dot(axis, v[1]), dot(axis, v[2])];
            let lo = p[0].min(p[1]).min(p[2]);
            let hi = p[0].max(p[1]).max(p[2]);
            if lo > r || hi < -r {
                return false;
            }
        }
    }

    // Triangle plane.
    let n = cross(edges[0], edges[1]);
    let d = dot(n, v[0]);
    let r = half * (n[0].abs() + n[1].abs() + n[2].abs());
    d.abs() <= r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{cuboid, icosphere, unit_cube};
    use crate::mesh::{Triangle, TriangleMesh};

    #[test]
    fn full_cube_fills_every_voxel() {
        let grid = voxelize(&unit_cube(), 8).unwrap();
        assert_eq!(grid.occupied_count(), 512);
        assert!(!grid.surface_only);
    }

    #[test]
    fn empty_mesh_gives_zero_grid_with_identity_transform() {
        let grid = voxelize(&TriangleMesh::default(), 8).unwrap();
        assert_eq!(grid.occupied_count(), 0);
        assert_eq!(grid.translate, [0.0; 3]);
        assert_eq!(grid.scale, 1.0);
    }

    #[test]
    fn rejects_tiny_dim() {
        assert!(voxelize(&unit_cube(), 1).is_err());
    }

    #[test]
    fn half_cube_fills_half_the_grid() {
        // Box spanning x in [0, 1], y/z in [0, 0.5]: after normalization the
        // long axis spans the grid and the thin axes are centered, so a
        // 8x4x4 slab of an 8^3 grid is filled.
        let grid = voxelize(&cuboid([0.0, 0.0, 0.0], [1.0, 0.5, 0.5]), 8).unwrap();
        assert_eq!(grid.occupied_count(), 8 * 4 * 4);
        let (x, y, z) = (0, 3, 4); // inside the centered slab
        assert!(grid.get(x, y, z));
        assert!(!grid.get(0, 0, 0), "corner outside the slab must stay empty");
    }

    #[test]
    fn cube_is_watertight_single_triangle_is_not() {
        assert!(is_watertight(&unit_cube()));
        let tri = TriangleMesh::new(vec![Triangle::new(
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
        )]);
        assert!(!is_watertight(&tri));
    }

    #[test]
    fn icosphere_volume_fraction_near_pi_sixths() {
        let grid = voxelize(&icosphere(1.0, 4), 64).unwrap();
        assert!(!grid.surface_only);
        let frac = grid.occupied_fraction();
        let want = std::f64::consts::PI / 6.0;
        assert!(
            (frac - want).abs() / want < 0.03,
            "fraction {frac} vs {want}"
        );
    }

    #[test]
    fn non_watertight_mesh_falls_back_to_surface_mode() {
        let tri = TriangleMesh::new(vec![Triangle::new(
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 1.0],
        )]);
        let grid = voxelize(&tri, 8).unwrap();
        assert!(grid.surface_only);
        assert!(grid.occupied_count() > 0);
    }

    #[test]
    fn transform_records_inverse_mapping() {
        let grid = voxelize(&cuboid([2.0, 4.0, 6.0], [4.0, 5.0, 7.0]), 8).unwrap();
        // Longest extent is x: scale 2; y and z centered within the cube.
        assert_eq!(grid.scale, 2.0);
        assert_eq!(grid.translate, [2.0, 3.5, 5.5]);
    }

    #[test]
    fn voxelization_invariant_to_translation_and_uniform_scale() {
        let base = icosphere(1.0, 3);
        let g0 = voxelize(&base, 32).unwrap();
        let moved = base.transformed(2.0, [10.0, -4.0, 3.0]);
        let g1 = voxelize(&moved, 32).unwrap();
        assert_eq!(g0.occupancy(), g1.occupancy());
        assert_eq!(g1.scale, 2.0 * g0.scale);
    }

    #[test]
    fn occupancy_monotone_under_union() {
        let a = cuboid([0.0, 0.0, 0.0], [1.0, 0.4, 0.4]);
        let mut both = a.clone();
        both.triangles
            .extend(cuboid([0.0, 0.6, 0.6], [1.0, 1.0, 1.0]).triangles);
        let ga = voxelize(&a, 16).unwrap();
        let gb = voxelize(&both, 16).unwrap();
        // The union normalizes to the same unit cube (same overall bbox
        // along x), so adding a disjoint solid can only add voxels.
        assert!(gb.occupied_count() > ga.occupied_count());
    }
}
