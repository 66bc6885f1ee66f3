use crate::error::{arg_err, Result};

/// Dense cubic binary occupancy grid with the provenance transform that maps
/// grid space back to model units:
///   model = translate + normalized * scale
/// where normalized coordinates span the unit cube across the grid.
///
/// The occupancy buffer uses the binvox linearization (y fastest, then z,
/// then x): index = x*dim^2 + z*dim + y.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dim: usize,
    occupancy: Vec<u8>,
    pub translate: [f64; 3],
    pub scale: f64,
    /// Set when the mesh was not watertight and only the surface was marked.
    pub surface_only: bool,
}

impl VoxelGrid {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return arg_err("grid dim must be positive");
        }
        Ok(VoxelGrid {
            dim,
            occupancy: vec![0; dim * dim * dim],
            translate: [0.0; 3],
            scale: 1.0,
            surface_only: false,
        })
    }

    pub fn from_occupancy(dim: usize, occupancy: Vec<u8>) -> Result<Self> {
        if occupancy.len() != dim * dim * dim {
            return arg_err(format!(
                "occupancy holds {} values, dim {dim} needs {}",
                occupancy.len(),
                dim * dim * dim
            ));
        }
        if occupancy.iter().any(|&v| v > 1) {
            return arg_err("occupancy values must be 0 or 1");
        }
        let mut g = VoxelGrid::new(dim)?;
        g.occupancy = occupancy;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.dim && y < self.dim && z < self.dim);
        x * self.dim * self.dim + z * self.dim + y
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[self.index(x, y, z)] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.index(x, y, z);
        self.occupancy[i] = value as u8;
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.occupancy
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&v| v != 0).count()
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.occupied_count() as f64 / self.len() as f64
    }

    /// Occupancy as 0.0/1.0 reals in buffer order.
    pub fn to_f32(&self) -> Vec<f32> {
        self.occupancy.iter().map(|&v| v as f32).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linearization_is_y_fastest_then_z_then_x() {
        let g = VoxelGrid::new(4).unwrap();
        assert_eq!(g.index(0, 1, 0), 1);
        assert_eq!(g.index(0, 0, 1), 4);
        assert_eq!(g.index(1, 0, 0), 16);
        assert_eq!(g.index(3, 3, 3), 63);
    }

    #[test]
    fn rejects_non_binary_values() {
        assert!(VoxelGrid::from_occupancy(2, vec![2; 8]).is_err());
        assert!(VoxelGrid::from_occupancy(2, vec![0; 7]).is_err());
    }

    #[test]
    fn set_get_round_trip() {
        let mut g = VoxelGrid::new(3).unwrap();
        g.set(2, 1, 0, true);
        assert!(g.get(2, 1, 0));
        assert_eq!(g.occupied_count(), 1);
    }
}
