//! Comparison filters: isotropic Gaussian smoothing over the whole volume,
//! and the morphology-only graph (uniform weights inside the mask, see
//! [`masked_uniform_graph`]).

use serde::{Deserialize, Serialize};

pub use crate::graph::masked_uniform_graph;

use crate::error::{Error, Result};
use crate::par;
use crate::volume::{Grid, Volume3D, Volume4D};

/// Kernels narrower than this many voxels are treated as a delta.
const DELTA_SIGMA_VOXELS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub fwhm_mm: f64,
    #[serde(default = "default_truncation")]
    pub truncation_radius_sigmas: f64,
}

fn default_truncation() -> f64 {
    4.0
}

impl GaussianSpec {
    pub fn new(fwhm_mm: f64) -> Result<Self> {
        let s = GaussianSpec {
            fwhm_mm,
            truncation_radius_sigmas: default_truncation(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_mm > 0.0 && self.fwhm_mm.is_finite()) {
            return Err(Error::Domain(format!("FWHM must be positive, got {}", self.fwhm_mm)));
        }
        if !(self.truncation_radius_sigmas > 0.0) {
            return Err(Error::Domain("truncation radius must be positive".into()));
        }
        Ok(())
    }

    pub fn sigma_mm(&self) -> f64 {
        fwhm_to_sigma(self.fwhm_mm)
    }

    /// Untruncated-normalised 1-D taps for one axis, centre at index
    /// `radius`. `None` means the axis is left untouched.
    pub fn axis_taps(&self, voxel_size_mm: f64) -> Option<Vec<f64>> {
        let sigma = self.sigma_mm() / voxel_size_mm;
        if sigma < DELTA_SIGMA_VOXELS {
            return None;
        }
        let radius = (self.truncation_radius_sigmas * sigma).ceil() as i64;
        Some(
            (-radius..=radius)
                .map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp())
                .collect(),
        )
    }
}

/// `sigma = FWHM / (2 sqrt(2 ln 2))`.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Separable Gaussian smoothing. At the volume boundary the kernel is
/// renormalised over the taps that fall inside the grid.
pub fn gaussian_filter(vol: &Volume3D, spec: &GaussianSpec) -> Result<Volume3D> {
    spec.validate()?;
    let mut data = vol.data.clone();
    smooth_frame(&mut data, &vol.grid, spec);
    Volume3D::new(vol.grid, data)
}

/// [`gaussian_filter`] applied to every frame.
pub fn gaussian_filter_4d(vol: &Volume4D, spec: &GaussianSpec) -> Result<Volume4D> {
    spec.validate()?;
    let mut out = vol.clone();
    let nvox = vol.grid.n_voxels();
    let grid = vol.grid;
    par::for_each_row(&mut out.data, nvox, |_, frame| smooth_frame(frame, &grid, spec));
    Ok(out)
}

fn smooth_frame(data: &mut [f64], grid: &Grid, spec: &GaussianSpec) {
    for axis in 0..3 {
        if let Some(taps) = spec.axis_taps(grid.voxel_size_mm[axis]) {
            smooth_axis(data, grid.dims, axis, &taps);
        }
    }
}

fn smooth_axis(data: &mut [f64], dims: [usize; 3], axis: usize, taps: &[f64]) {
    let len = dims[axis];
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let radius = (taps.len() / 2) as i64;
    let mut line = vec![0.0; len];
    let n_lines = data.len() / len;
    for l in 0..n_lines {
        // first element of line l
        let start = match axis {
            0 => l * dims[0],
            1 => (l / dims[0]) * dims[0] * dims[1] + l % dims[0],
            _ => l,
        };
        for (k, v) in line.iter_mut().enumerate() {
            *v = data[start + k * stride];
        }
        for k in 0..len as i64 {
            let lo = (k - radius).max(0);
            let hi = (k + radius).min(len as i64 - 1);
            let mut acc = 0.0;
            let mut norm = 0.0;
            for q in lo..=hi {
                let w = taps[(q - k + radius) as usize];
                acc += w * line[q as usize];
                norm += w;
            }
            data[start + k as usize * stride] = acc / norm;
        }
    }
}
