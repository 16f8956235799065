//! In-memory volume types.
//!
//! All grids are stored flat with x varying fastest: voxel `(x, y, z)` sits
//! at `x + nx * (y + ny * z)`. Four-dimensional series append time as the
//! slowest axis, so frame `t` is the contiguous block
//! `[t * nvox, (t + 1) * nvox)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid geometry shared by every volume, mask and field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: [usize; 3],
    pub voxel_size_mm: [f64; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], voxel_size_mm: [f64; 3]) -> Result<Self> {
        let g = Grid { dims, voxel_size_mm };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::format("dims", "every dimension must be positive"));
        }
        if self
            .voxel_size_mm
            .iter()
            .any(|&s| !(s.is_finite() && s > 0.0))
        {
            return Err(Error::format(
                "voxel_size_mm",
                "voxel sizes must be finite and strictly positive",
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn n_voxels(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn flat_index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, flat: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [flat % nx, (flat / nx) % ny, flat / (nx * ny)]
    }

    /// Flat index of signed coordinates, or `None` outside the grid.
    #[inline]
    pub fn checked_index(&self, c: [i64; 3]) -> Option<usize> {
        for a in 0..3 {
            if c[a] < 0 || c[a] >= self.dims[a] as i64 {
                return None;
            }
        }
        Some(self.flat_index(c[0] as usize, c[1] as usize, c[2] as usize))
    }

    /// Voxel whose centre is nearest to a point in millimetres. Voxel
    /// `(x, y, z)` is centred at `(x * sx, y * sy, z * sz)`.
    pub fn nearest_voxel(&self, p: [f64; 3]) -> Option<usize> {
        let mut c = [0i64; 3];
        for a in 0..3 {
            let v = (p[a] / self.voxel_size_mm[a]).round();
            if !v.is_finite() {
                return None;
            }
            c[a] = v as i64;
        }
        self.checked_index(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl Volume3D {
    pub fn new(grid: Grid, data: Vec<f64>) -> Result<Self> {
        let v = Volume3D { grid, data };
        v.validate()?;
        Ok(v)
    }

    pub fn zeros(grid: Grid) -> Self {
        Volume3D {
            grid,
            data: vec![0.0; grid.n_voxels()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.data.len() != self.grid.n_voxels() {
            return Err(Error::SizeMismatch {
                expected: self.grid.n_voxels(),
                found: self.data.len(),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.grid.flat_index(x, y, z)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Volume4D {
    pub grid: Grid,
    pub n_frames: usize,
    pub tr_seconds: f64,
    pub data: Vec<f64>,
}

impl Volume4D {
    pub fn new(grid: Grid, n_frames: usize, tr_seconds: f64, data: Vec<f64>) -> Result<Self> {
        let v = Volume4D {
            grid,
            n_frames,
            tr_seconds,
            data,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.n_frames < 2 {
            return Err(Error::Invariant(format!(
                "a 4D series needs at least 2 frames, got {}",
                self.n_frames
            )));
        }
        if !(self.tr_seconds.is_finite() && self.tr_seconds > 0.0) {
            return Err(Error::format("tr_seconds", "must be finite and positive"));
        }
        let expected = self.grid.n_voxels() * self.n_frames;
        if self.data.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                found: self.data.len(),
            });
        }
        Ok(())
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.grid.n_voxels();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.grid.n_voxels();
        &mut self.data[t * n..(t + 1) * n]
    }

    /// Time course of one voxel.
    pub fn voxel_series(&self, flat: usize) -> Vec<f64> {
        let n = self.grid.n_voxels();
        (0..self.n_frames).map(|t| self.data[t * n + flat]).collect()
    }
}

/// Either kind of volume, as returned by [`crate::io::read_volume`].
#[derive(Debug, Clone, PartialEq)]
pub enum AnyVolume {
    Vol3(Volume3D),
    Vol4(Volume4D),
}

impl AnyVolume {
    pub fn into_3d(self) -> Result<Volume3D> {
        match self {
            AnyVolume::Vol3(v) => Ok(v),
            AnyVolume::Vol4(_) => Err(Error::Shape("expected a 3D volume, found 4D".into())),
        }
    }

    pub fn into_4d(self) -> Result<Volume4D> {
        match self {
            AnyVolume::Vol4(v) => Ok(v),
            AnyVolume::Vol3(_) => Err(Error::Shape("expected a 4D volume, found 3D".into())),
        }
    }

    pub fn grid(&self) -> Grid {
        match self {
            AnyVolume::Vol3(v) => v.grid,
            AnyVolume::Vol4(v) => v.grid,
        }
    }
}

/// Boolean voxel selection with at least one voxel set.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub grid: Grid,
    pub voxels: Vec<bool>,
}

impl Mask {
    pub fn new(grid: Grid, voxels: Vec<bool>) -> Result<Self> {
        grid.validate()?;
        if voxels.len() != grid.n_voxels() {
            return Err(Error::SizeMismatch {
                expected: grid.n_voxels(),
                found: voxels.len(),
            });
        }
        if !voxels.iter().any(|&v| v) {
            return Err(Error::Domain("mask has no voxels set".into()));
        }
        Ok(Mask { grid, voxels })
    }

    /// Mask of voxels with value > 0.5 (so stored 0/1 volumes round-trip).
    pub fn from_volume(vol: &Volume3D) -> Result<Self> {
        Mask::new(vol.grid, vol.data.iter().map(|&v| v > 0.5).collect())
    }

    pub fn to_volume(&self) -> Volume3D {
        Volume3D {
            grid: self.grid,
            data: self
                .voxels
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v).count()
    }

    /// Flat indices of set voxels, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.voxels
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| v.then_some(i))
            .collect()
    }

    #[inline]
    pub fn contains(&self, flat: usize) -> bool {
        self.voxels[flat]
    }
}
