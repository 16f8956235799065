//! Analytic test anatomy: straight fibre bundles with box cross-sections
//! that may cross each other, sampled as a white-matter mask, an ODF field
//! and a set of streamlines.
//!
//! The ODF of a voxel covered by bundles `T` is
//!
//! ```text
//! O(u) = iso + sum_{t in T} exp(kappa * ((u . e_t)^2 - 1)) / |T|
//! ```
//!
//! i.e. one antipodal lobe pair per bundle direction `e_t`, sharing unit
//! volume fraction in crossing voxels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::NeighborhoodSpec;
use crate::odf::{dot3, OdfField};
use crate::rng::CounterRng;
use crate::streamline::StreamlineSet;
use crate::volume::{Grid, Mask};

const STREAMLINE_STREAM: u64 = 10;

/// A straight bundle running along `axis` through the box `[lo, hi)`
/// (voxel coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub axis: usize,
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Bundle {
    fn contains(&self, c: [usize; 3]) -> bool {
        (0..3).all(|a| c[a] >= self.lo[a] && c[a] < self.hi[a])
    }

    fn direction(&self) -> [f64; 3] {
        let mut e = [0.0; 3];
        e[self.axis] = 1.0;
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnatomySpec {
    pub dims: [usize; 3],
    pub voxel_size_mm: [f64; 3],
    pub bundles: Vec<Bundle>,
    /// Isotropic floor of every ODF.
    pub odf_iso: f64,
    /// Lobe concentration.
    pub odf_kappa: f64,
    pub streamlines_per_bundle: usize,
    pub seed: u64,
}

impl Default for AnatomySpec {
    /// Two bundles crossing at right angles in a 40^3 grid.
    fn default() -> Self {
        AnatomySpec {
            dims: [40, 40, 40],
            voxel_size_mm: [1.0; 3],
            bundles: vec![
                Bundle {
                    axis: 0,
                    lo: [2, 12, 12],
                    hi: [38, 28, 20],
                },
                Bundle {
                    axis: 1,
                    lo: [12, 2, 16],
                    hi: [28, 38, 24],
                },
            ],
            odf_iso: 0.05,
            odf_kappa: 8.0,
            streamlines_per_bundle: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Anatomy {
    pub grid: Grid,
    pub mask: Mask,
    pub field: OdfField,
    pub streamlines: StreamlineSet,
}

impl AnatomySpec {
    pub fn validate(&self) -> Result<Grid> {
        let grid = Grid::new(self.dims, self.voxel_size_mm)?;
        if self.bundles.is_empty() {
            return Err(Error::Domain("anatomy needs at least one bundle".into()));
        }
        for b in &self.bundles {
            if b.axis > 2 || (0..3).any(|a| b.lo[a] >= b.hi[a] || b.hi[a] > self.dims[a]) {
                return Err(Error::Domain(format!("bundle {b:?} is empty or leaves the grid")));
            }
            if b.hi[b.axis] - b.lo[b.axis] < 2 {
                return Err(Error::Domain("bundle must span at least 2 voxels".into()));
            }
        }
        if !(self.odf_iso >= 0.0 && self.odf_kappa >= 0.0) {
            return Err(Error::Domain("ODF parameters must be non-negative".into()));
        }
        Ok(grid)
    }

    pub fn build(&self) -> Result<Anatomy> {
        let grid = self.validate()?;
        let voxels = (0..grid.n_voxels())
            .map(|v| self.bundles.iter().any(|b| b.contains(grid.coords(v))))
            .collect();
        let mask = Mask::new(grid, voxels)?;
        let directions = NeighborhoodSpec::new().unit_directions();
        let field = OdfField::from_fn(grid, directions, &mask, |v, u| self.odf_at(grid.coords(v), u))?;
        Ok(Anatomy {
            grid,
            mask,
            field,
            streamlines: self.streamlines(&grid)?,
        })
    }

    fn odf_at(&self, c: [usize; 3], u: [f64; 3]) -> f64 {
        let here: Vec<&Bundle> = self.bundles.iter().filter(|b| b.contains(c)).collect();
        let frac = 1.0 / here.len().max(1) as f64;
        self.odf_iso
            + here
                .iter()
                .map(|b| {
                    let d = dot3(u, b.direction());
                    frac * (self.odf_kappa * (d * d - 1.0)).exp()
                })
                .sum::<f64>()
    }

    /// Straight streamlines along each bundle at uniformly drawn positions
    /// of its cross-section, one vertex per millimetre.
    fn streamlines(&self, grid: &Grid) -> Result<StreamlineSet> {
        let rng = CounterRng::new(self.seed, STREAMLINE_STREAM);
        let mut lines = Vec::new();
        let mut counter = 0u64;
        for b in &self.bundles {
            let a = b.axis;
            let vs = grid.voxel_size_mm;
            let start = b.lo[a] as f64 * vs[a];
            let end = (b.hi[a] - 1) as f64 * vs[a];
            let n_pts = ((end - start).round() as usize).max(1) + 1;
            for _ in 0..self.streamlines_per_bundle {
                let mut base = [0.0; 3];
                for ax in (0..3).filter(|&ax| ax != a) {
                    // cross-section extends half a voxel past the outer centres
                    let lo = (b.lo[ax] as f64 - 0.5) * vs[ax];
                    let hi = (b.hi[ax] as f64 - 0.5) * vs[ax];
                    base[ax] = lo + rng.uniform(counter) * (hi - lo);
                    counter += 1;
                }
                let line = (0..n_pts)
                    .map(|k| {
                        let mut p = base;
                        p[a] = start + (end - start) * k as f64 / (n_pts - 1) as f64;
                        p
                    })
                    .collect();
                lines.push(line);
            }
        }
        StreamlineSet::new(lines)
    }
}
