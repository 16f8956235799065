//! Orientation distribution fields and sphere sampling schemes.

use crate::error::{Error, Result};
use crate::volume::{Grid, Mask};

/// Smallest direction count accepted for an ODF sampling scheme.
pub const MIN_DIRECTIONS: usize = 98;

const UNIT_NORM_TOL: f64 = 1e-9;
const ABSENT: u32 = u32::MAX;

/// ODF samples at a fixed direction set, one row per covered voxel.
///
/// Rows are kept in ascending flat-voxel order; `values` is row-major with
/// `n_dirs` entries per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct OdfField {
    pub grid: Grid,
    directions: Vec<[f64; 3]>,
    voxels: Vec<usize>,
    values: Vec<f64>,
    row_of_voxel: Vec<u32>,
}

impl OdfField {
    /// Builds a field from `(flat voxel index, samples)` records. Records may
    /// come in any order but must not repeat a voxel.
    pub fn new(
        grid: Grid,
        directions: Vec<[f64; 3]>,
        records: Vec<(usize, Vec<f64>)>,
    ) -> Result<Self> {
        grid.validate()?;
        validate_directions(&directions)?;
        let n_dirs = directions.len();
        let mut records = records;
        records.sort_by_key(|r| r.0);
        let mut voxels = Vec::with_capacity(records.len());
        let mut values = Vec::with_capacity(records.len() * n_dirs);
        let mut row_of_voxel = vec![ABSENT; grid.n_voxels()];
        for (row, (flat, samples)) in records.into_iter().enumerate() {
            if flat >= grid.n_voxels() {
                return Err(Error::format(
                    "voxel_index",
                    format!("index {flat} outside grid of {} voxels", grid.n_voxels()),
                ));
            }
            if row_of_voxel[flat] != ABSENT {
                return Err(Error::format(
                    "voxel_index",
                    format!("voxel {flat} appears twice"),
                ));
            }
            if samples.len() != n_dirs {
                return Err(Error::SizeMismatch {
                    expected: n_dirs,
                    found: samples.len(),
                });
            }
            if let Some(bad) = samples.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::format(
                    "values",
                    format!("ODF value {bad} at voxel {flat} is negative or not finite"),
                ));
            }
            row_of_voxel[flat] = row as u32;
            voxels.push(flat);
            values.extend_from_slice(&samples);
        }
        Ok(OdfField {
            grid,
            directions,
            voxels,
            values,
            row_of_voxel,
        })
    }

    /// Evaluates `odf(flat, direction)` at every direction for every mask voxel.
    pub fn from_fn<F>(grid: Grid, directions: Vec<[f64; 3]>, mask: &Mask, f: F) -> Result<Self>
    where
        F: Fn(usize, [f64; 3]) -> f64,
    {
        let records = mask
            .indices()
            .into_iter()
            .map(|v| (v, directions.iter().map(|&d| f(v, d)).collect()))
            .collect();
        OdfField::new(grid, directions, records)
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn n_dirs(&self) -> usize {
        self.directions.len()
    }

    /// Covered voxels, ascending.
    pub fn voxels(&self) -> &[usize] {
        &self.voxels
    }

    pub fn n_voxels(&self) -> usize {
        self.voxels.len()
    }

    /// Samples for one voxel, or `None` when the field does not cover it.
    pub fn samples(&self, flat: usize) -> Option<&[f64]> {
        let row = *self.row_of_voxel.get(flat)?;
        if row == ABSENT {
            return None;
        }
        let n = self.n_dirs();
        let start = row as usize * n;
        Some(&self.values[start..start + n])
    }

    pub fn covers(&self, flat: usize) -> bool {
        self.row_of_voxel.get(flat).is_some_and(|&r| r != ABSENT)
    }
}

pub fn validate_directions(directions: &[[f64; 3]]) -> Result<()> {
    if directions.len() < MIN_DIRECTIONS {
        return Err(Error::format(
            "directions",
            format!(
                "need at least {MIN_DIRECTIONS} directions, got {}",
                directions.len()
            ),
        ));
    }
    for (k, d) in directions.iter().enumerate() {
        let norm = norm3(*d);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::format(
                "directions",
                format!("direction {k} has norm {norm}, expected 1"),
            ));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `n` points of a Fibonacci spiral on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            normalize([r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

/// Antipodally symmetric scheme: `n_half` Fibonacci points on the upper
/// hemisphere followed by their negations.
pub fn symmetric_fibonacci_sphere(n_half: usize) -> Vec<[f64; 3]> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let upper: Vec<[f64; 3]> = (0..n_half)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / n_half as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            normalize([r * phi.cos(), r * phi.sin(), z])
        })
        .collect();
    let lower = upper.iter().map(|d| [-d[0], -d[1], -d[2]]);
    upper.iter().copied().chain(lower).collect()
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}
