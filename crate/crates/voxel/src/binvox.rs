//! The binvox v1 container: a short ASCII header followed by run-length
//! encoded voxel data as (value, count) byte pairs with counts 1..=255.
//! Voxels are linearized y-fastest, then z, then x — the same order
//! `VoxelGrid` stores internally.

use crate::error::{binvox_err, Result};
use crate::grid::VoxelGrid;

/// Serialize a grid. The encoding is canonical: maximal runs, split only at
/// the 255 count limit.
pub fn write_binvox(grid: &VoxelGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + grid.len() / 16);
    let d = grid.dim();
    out.extend_from_slice(b"#binvox 1\n");
    out.extend_from_slice(format!("dim {d} {d} {d}\n").as_bytes());
    out.extend_from_slice(
        format!("translate {} {} {}\n", grid.translate[0], grid.translate[1], grid.translate[2]).as_bytes(),
    );
    out.extend_from_slice(format!("scale {}\n", grid.scale).as_bytes());
    out.extend_from_slice(b"data\n");

    let occ = grid.occupancy();
    let mut i = 0;
    while i < occ.len() {
        let value = occ[i];
        let mut run = 1usize;
        while i + run < occ.len() && occ[i + run] == value && run < 255 {
            run += 1;
        }
        out.push(value);
        out.push(run as u8);
        i += run;
    }
    out
}

/// Parse a binvox byte stream.
pub fn read_binvox(bytes: &[u8]) -> Result<VoxelGrid> {
    let mut lines = HeaderLines { bytes, pos: 0 };

    let magic = lines.next_line()?;
    if magic.trim() != "#binvox 1" {
        return binvox_err(format!("bad magic line '{}'", magic.trim()));
    }

    let mut dim: Option<usize> = None;
    let mut translate = [0.0f64; 3];
    let mut scale = 1.0f64;
    loop {
        let line = lines.next_line()?;
        let line = line.trim();
        if line == "data" {
            break;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("dim") => {
                let vals: Vec<usize> = parts
                    .map(|p| p.parse::<usize>().map_err(|_| ()))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| crate::error::VoxelError::Binvox { detail: format!("bad dim line '{line}'") })?;
                if vals.len() != 3 || vals[0] == 0 {
                    return binvox_err(format!("bad dim line '{line}'"));
                }
                if vals[0] != vals[1] || vals[1] != vals[2] {
                    return binvox_err(format!("non-cubic dims {vals:?}"));
                }
                dim = Some(vals[0]);
            }
            Some("translate") => {
                let vals: Vec<f64> = parts
                    .map(|p| p.parse::<f64>().map_err(|_| ()))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| crate::error::VoxelError::Binvox { detail: format!("bad translate line '{line}'") })?;
                if vals.len() != 3 {
                    return binvox_err(format!("bad translate line '{line}'"));
                }
                translate = [vals[0], vals[1], vals[2]];
            }
            Some("scale") => {
                let vals: Vec<f64> = parts
                    .map(|p| p.parse::<f64>().map_err(|_| ()))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| crate::error::VoxelError::Binvox { detail: format!("bad scale line '{line}'") })?;
                if vals.len() != 1 || vals[0] <= 0.0 {
                    return binvox_err(format!("bad scale line '{line}'"));
                }
                scale = vals[0];
            }
            Some(other) => return binvox_err(format!("unknown header keyword '{other}'")),
            None => {} // blank line
        }
    }
    let Some(dim) = dim else {
        return binvox_err("header has no dim line");
    };

    let expected = dim * dim * dim;
    let mut occupancy = Vec::with_capacity(expected);
    let mut pos = lines.pos;
    while pos < bytes.len() {
        if pos + 1 >= bytes.len() {
            return binvox_err("dangling value byte without a count");
        }
        let value = bytes[pos];
        let count = bytes[pos + 1] as usize;
        pos += 2;
        if value > 1 {
            return binvox_err(format!("voxel value {value} is not 0/1"));
        }
        if count == 0 {
            return binvox_err("zero run count");
        }
        if occupancy.len() + count > expected {
            return binvox_err(format!(
                "rle overrun: {} voxels declared, grid holds {expected}",
                occupancy.len() + count
            ));
        }
        occupancy.resize(occupancy.len() + count, value);
    }
    if occupancy.len() != expected {
        return binvox_err(format!("rle underrun: {} of {expected} voxels present", occupancy.len()));
    }

    let mut grid = VoxelGrid::from_occupancy(dim, occupancy)?;
    grid.translate = translate;
    grid.scale = scale;
    Ok(grid)
}

struct HeaderLines<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderLines<'a> {
    fn next_line(&mut self) -> Result<String> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return binvox_err("unterminated header (no data line)");
        }
        let line = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| crate::error::VoxelError::Binvox { detail: "non-utf8 header".into() })?
            .to_string();
        self.pos += 1; // consume newline
        Ok(line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_grid_is_single_run() {
        let g = VoxelGrid::new(4).unwrap();
        let bytes = write_binvox(&g);
        let data_at = bytes.windows(5).position(|w| w == b"data\n").unwrap() + 5;
        assert_eq!(&bytes[data_at..], &[0u8, 64]);
    }

    #[test]
    fn run_of_300_splits_at_255() {
        // 300 occupied voxels at the start of a 7^3 = 343 grid.
        let mut occ = vec![0u8; 343];
        occ[..300].fill(1);
        let g = VoxelGrid::from_occupancy(7, occ).unwrap();
        let bytes = write_binvox(&g);
        let data_at = bytes.windows(5).position(|w| w == b"data\n").unwrap() + 5;
        assert_eq!(&bytes[data_at..], &[1u8, 255, 1, 45, 0, 43]);
    }

    #[test]
    fn round_trip_preserves_everything() {
        let mut g = VoxelGrid::new(5).unwrap();
        g.set(0, 1, 2, true);
        g.set(4, 4, 4, true);
        g.translate = [-0.5, 1.25, 3.0];
        g.scale = 2.75;
        let back = read_binvox(&write_binvox(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(read_binvox(b"#voxbin 1\ndim 2 2 2\ndata\n").is_err());
    }

    #[test]
    fn non_cubic_dims_rejected() {
        assert!(read_binvox(b"#binvox 1\ndim 2 3 2\nscale 1\ndata\n").is_err());
    }

    #[test]
    fn rle_overrun_rejected() {
        let bytes = b"#binvox 1\ndim 2 2 2\ndata\n\x00\xff".to_vec();
        let err = read_binvox(&bytes).unwrap_err();
        assert!(err.to_string().contains("overrun"));
    }

    #[test]
    fn rle_underrun_rejected() {
        let bytes = b"#binvox 1\ndim 2 2 2\ndata\n\x00\x04".to_vec();
        let err = read_binvox(&bytes).unwrap_err();
        assert!(err.to_string().contains("underrun"));
    }
}
