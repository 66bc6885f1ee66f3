//! Codec inverses and dataset determinism.

use proptest::prelude::*;
use vxae_voxel::{
    build_index, parse_stl, read_binvox, voxelize, write_binvox, write_stl, Split, Triangle,
    TriangleMesh, VoxelGrid,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binvox_decode_inverts_encode(dim in 1usize..12, fill in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = vxae_tensor::rng::SplitMix64::new(seed);
        let occupancy: Vec<u8> = (0..dim * dim * dim)
            .map(|_| (rng.next_f64() < fill) as u8)
            .collect();
        let mut grid = VoxelGrid::from_occupancy(dim, occupancy).unwrap();
        grid.translate = [rng.next_normal(), rng.next_normal(), rng.next_normal()];
        grid.scale = rng.next_f64() + 0.25;
        let decoded = read_binvox(&write_binvox(&grid)).unwrap();
        prop_assert_eq!(decoded, grid);
    }

    #[test]
    fn binvox_encode_is_canonical(dim in 1usize..10, fill in 0.0f64..1.0, seed in any::<u64>()) {
        // encode(decode(bytes)) == bytes for canonically encoded inputs.
        let mut rng = vxae_tensor::rng::SplitMix64::new(seed);
        let occupancy: Vec<u8> = (0..dim * dim * dim)
            .map(|_| (rng.next_f64() < fill) as u8)
            .collect();
        let grid = VoxelGrid::from_occupancy(dim, occupancy).unwrap();
        let bytes = write_binvox(&grid);
        let reencoded = write_binvox(&read_binvox(&bytes).unwrap());
        prop_assert_eq!(reencoded, bytes);
    }

    #[test]
    fn stl_write_parse_round_trip(seed in any::<u64>()) {
        // Coordinates drawn as f32 so the binary format represents them exactly.
        let mut rng = vxae_tensor::rng::SplitMix64::new(seed);
        let mut coord = || (rng.next_normal() as f32 * 10.0) as f64;
        let triangles: Vec<Triangle> = (0..100)
            .map(|_| Triangle::new([coord(), coord(), coord()], [coord(), coord(), coord()], [coord(), coord(), coord()]))
            .collect();
        let mesh = TriangleMesh::new(triangles);
        let parsed = parse_stl(&write_stl(&mesh)).unwrap();
        prop_assert_eq!(parsed.len(), mesh.len());
        for (a, b) in parsed.triangles.iter().zip(&mesh.triangles) {
            prop_assert_eq!(a.vertices, b.vertices);
        }
    }
}

#[test]
fn index_split_counts_follow_fraction() {
    let dir = tempdir_with_files(10);
    let index = build_index(dir.path(), 0.2, 7).unwrap();
    assert_eq!(index.train_ids().len(), 8);
    assert_eq!(index.test_ids().len(), 2);

    let all_train = build_index(dir.path(), 0.0, 7).unwrap();
    assert_eq!(all_train.train_ids().len(), 10);
    assert!(all_train.test_ids().is_empty());
}

#[test]
fn index_is_seed_stable_and_seed_sensitive() {
    let dir = tempdir_with_files(16);
    let a = build_index(dir.path(), 0.25, 11).unwrap();
    let b = build_index(dir.path(), 0.25, 11).unwrap();
    let paths = |ix: &vxae_voxel::DatasetIndex, split| {
        ix.ids(split)
            .into_iter()
            .map(|i| ix.entries[i].path.clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(paths(&a, Split::Test), paths(&b, Split::Test));
    assert_eq!(paths(&a, Split::Train), paths(&b, Split::Train));

    let c = build_index(dir.path(), 0.25, 12).unwrap();
    assert_ne!(paths(&a, Split::Test), paths(&c, Split::Test));
}

#[test]
fn splits_are_disjoint_and_exhaustive() {
    let dir = tempdir_with_files(9);
    let ix = build_index(dir.path(), 0.33, 3).unwrap();
    let train = ix.train_ids();
    let test = ix.test_ids();
    assert_eq!(train.len() + test.len(), 9);
    for id in &test {
        assert!(!train.contains(id));
    }
}

#[test]
fn missing_root_is_an_error() {
    assert!(build_index(std::path::Path::new("/nonexistent/nowhere"), 0.2, 1).is_err());
}

fn tempdir_with_files(n: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..n {
        let grid = VoxelGrid::new(4).unwrap();
        std::fs::write(dir.path().join(format!("sample_{i:02}.binvox")), write_binvox(&grid)).unwrap();
    }
    dir
}

#[test]
fn voxelize_of_written_stl_matches_source_mesh() {
    let mesh = vxae_voxel::primitives::icosphere(1.0, 2);
    let direct = voxelize(&mesh, 16).unwrap();
    let reparsed = parse_stl(&write_stl(&mesh)).unwrap();
    let via_stl = voxelize(&reparsed, 16).unwrap();
    // f64 -> f32 -> f64 rounding moves the surface by ~1e-7 voxel: far from
    // any center threshold for this mesh.
    assert_eq!(direct.occupancy(), via_stl.occupancy());
}
