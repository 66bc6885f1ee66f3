/// One triangle in model units, with an optional facet normal carried
/// through from the source file (never used for voxelization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [[f64; 3]; 3],
    pub normal: Option<[f64; 3]>,
}

impl Triangle {
    pub fn new(v0: [f64; 3], v1: [f64; 3], v2: [f64; 3]) -> Self {
        Triangle { vertices: [v0, v1, v2], normal: None }
    }
}

/// Triangle soup as read from CAD exports.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub triangles: Vec<Triangle>,
}

impl TriangleMesh {
    pub fn new(triangles: Vec<Triangle>) -> Self {
        TriangleMesh { triangles }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    /// Axis-aligned bounding box, or None for an empty mesh.
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        let mut iter = self.triangles.iter().flat_map(|t| t.vertices.iter());
        let first = *iter.next()?;
        let mut lo = first;
        let mut hi = first;
        for v in iter {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        Some((lo, hi))
    }

    /// True if every coordinate is finite.
    pub fn is_finite(&self) -> bool {
        self.triangles
            .iter()
            .all(|t| t.vertices.iter().all(|v| v.iter().all(|c| c.is_finite())))
    }

    /// Copy with `p -> p * scale + offset` applied to every vertex.
    pub fn transformed(&self, scale: f64, offset: [f64; 3]) -> TriangleMesh {
        let triangles = self
            .triangles
            .iter()
            .map(|t| {
                let mut out = *t;
                for v in &mut out.vertices {
                    for a in 0..3 {
                        v[a] = v[a] * scale + offset[a];
                    }
                }
                out
            })
            .collect();
        TriangleMesh { triangles }
    }
}
