//! Geometry input for the voxel autoencoder: STL triangle meshes,
//! solid voxelization onto cubic occupancy grids, the binvox container,
//! and dataset indexing/loading.

mod binvox;
mod dataset;
mod error;
mod grid;
mod mesh;
pub mod primitives;
mod stl;
mod voxelize;

pub use binvox::{read_binvox, write_binvox};
pub use dataset::{build_index, load_batch, load_grid, tensor_from_grids, DatasetEntry, DatasetIndex, Split};
pub use error::{Result, VoxelError};
pub use grid::VoxelGrid;
pub use mesh::{Triangle, TriangleMesh};
pub use stl::{parse_stl, write_stl};
pub use voxelize::voxelize;
