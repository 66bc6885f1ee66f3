use std::path::{Path, PathBuf};

use vxae_tensor::rng::{derive_seed, shuffle};
use vxae_tensor::Tensor;

use crate::binvox::read_binvox;
use crate::error::{arg_err, Result, VoxelError};
use crate::grid::VoxelGrid;
use crate::stl::parse_stl;
use crate::voxelize::voxelize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub split: Split,
}

/// Deterministic train/test partition of the mesh and voxel files under a
/// dataset root. The same (root contents, fraction, seed) always produces
/// the same split.
#[derive(Debug, Clone)]
pub struct DatasetIndex {
    pub entries: Vec<DatasetEntry>,
    pub test_fraction: f64,
    pub seed: u64,
}

impl DatasetIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self, split: Split) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_ids(&self) -> Vec<usize> {
        self.ids(Split::Train)
    }

    pub fn test_ids(&self) -> Vec<usize> {
        self.ids(Split::Test)
    }
}

/// Scan `root` recursively for *.stl and *.binvox files and split them
/// test/train by a seeded shuffle. `test_fraction` of the files (rounded)
/// land in the test split.
pub fn build_index(root: &Path, test_fraction: f64, seed: u64) -> Result<DatasetIndex> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return arg_err(format!("test fraction must be in [0,1], got {test_fraction}"));
    }
    if !root.is_dir() {
        return Err(VoxelError::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root is not a directory"),
        });
    }
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| VoxelError::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("stl") | Some("binvox")) {
            paths.push(entry.into_path());
        }
    }
    paths.sort();
    shuffle(&mut paths, derive_seed(seed, 0x5711));

    let n_test = (test_fraction * paths.len() as f64).round() as usize;
    let entries = paths
        .into_iter()
        .enumerate()
        .map(|(i, path)| DatasetEntry {
            path,
            split: if i < n_test { Split::Test } else { Split::Train },
        })
        .collect();
    Ok(DatasetIndex { entries, test_fraction, seed })
}

/// Load one sample as a voxel grid at resolution `dim`: binvox files are
/// decoded (and must match `dim`), STL meshes are parsed and voxelized.
pub fn load_grid(path: &Path, dim: usize) -> Result<VoxelGrid> {
    let bytes = std::fs::read(path).map_err(|source| VoxelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("binvox") => {
            let grid = read_binvox(&bytes)?;
            if grid.dim() != dim {
                return arg_err(format!(
                    "{}: grid is {} voxels per edge, expected {dim}",
                    path.display(),
                    grid.dim()
                ));
            }
            Ok(grid)
        }
        _ => {
            let mesh = parse_stl(&bytes)?;
            voxelize(&mesh, dim)
        }
    }
}

/// Stack grids into a [N,1,dim,dim,dim] tensor of 0.0/1.0 occupancy.
pub fn tensor_from_grids(grids: &[VoxelGrid]) -> Result<Tensor<f32>> {
    if grids.is_empty() {
        return arg_err("cannot build a batch from zero grids");
    }
    let dim = grids[0].dim();
    let mut data = Vec::with_capacity(grids.len() * dim * dim * dim);
    for g in grids {
        if g.dim() != dim {
            return arg_err(format!("mixed grid dims in batch: {} vs {dim}", g.dim()));
        }
        data.extend(g.to_f32());
    }
    Ok(Tensor::from_vec(&[grids.len(), 1, dim, dim, dim], data)?)
}

/// Load the identified index entries as one batch tensor.
pub fn load_batch(index: &DatasetIndex, ids: &[usize], dim: usize) -> Result<Tensor<f32>> {
    let mut grids = Vec::with_capacity(ids.len());
    for &id in ids {
        let entry = index
            .entries
            .get(id)
            .ok_or_else(|| VoxelError::InvalidArgument {
                detail: format!("sample id {id} out of range ({} entries)", index.len()),
            })?;
        grids.push(load_grid(&entry.path, dim)?);
    }
    tensor_from_grids(&grids)
}
