//! Plain-Rust side of the demo, usable (and tested) off the browser.

use wmgf_core::anatomy::{AnatomySpec, Bundle};
use wmgf_core::baseline::{gaussian_filter, GaussianSpec};
use wmgf_core::graph::{build_graph, masked_uniform_graph};
use wmgf_core::spectral::{cheb_coefficients, cheb_filter_apply, HeatKernel};
use wmgf_core::{Error, GraphBuildConfig, Grid, Mask, Result, Volume3D, VoxelGraph};

use wmgf_core::spectral::SpectralKernel;

/// Two bundles crossing at right angles in a thin slab; the middle slice is
/// what the page draws.
pub fn demo_anatomy() -> AnatomySpec {
    AnatomySpec {
        dims: [32, 32, 5],
        bundles: vec![
            Bundle {
                axis: 0,
                lo: [1, 11, 0],
                hi: [31, 19, 5],
            },
            Bundle {
                axis: 1,
                lo: [11, 1, 0],
                hi: [19, 31, 5],
            },
        ],
        streamlines_per_bundle: 1,
        ..AnatomySpec::default()
    }
}

/// Which smoother produced a response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoother {
    /// Heat kernel on the ODF-weighted graph.
    Anisotropic,
    /// Heat kernel on the unit-weight graph of the same mask.
    Uniform,
    /// Isotropic Gaussian, blind to the mask.
    Gaussian,
}

pub struct Explorer {
    grid: Grid,
    mask: Mask,
    odf_graph: VoxelGraph,
    uniform_graph: VoxelGraph,
    slice_z: usize,
}

impl Explorer {
    pub fn new() -> Result<Self> {
        let anatomy = demo_anatomy().build()?;
        let (odf_graph, _) = build_graph(&anatomy.mask, &anatomy.field, &GraphBuildConfig::default())?;
        let uniform_graph = masked_uniform_graph(&anatomy.mask)?;
        Ok(Explorer {
            grid: anatomy.grid,
            slice_z: anatomy.grid.dims[2] / 2,
            mask: anatomy.mask,
            odf_graph,
            uniform_graph,
        })
    }

    pub fn width(&self) -> usize {
        self.grid.dims[0]
    }

    pub fn height(&self) -> usize {
        self.grid.dims[1]
    }

    /// 1 inside the white-matter mask, 0 outside; row-major in `y`.
    pub fn mask_slice(&self) -> Vec<f64> {
        self.slice(&self.mask.to_volume())
    }

    fn slice(&self, vol: &Volume3D) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width() * self.height());
        for y in 0..self.height() {
            for x in 0..self.width() {
                out.push(vol.get(x, y, self.slice_z));
            }
        }
        out
    }

    /// Middle-slice response to a unit impulse at `(x, y)`.
    pub fn impulse_response(&self, smoother: Smoother, x: usize, y: usize, scale: f64, order: usize) -> Result<Vec<f64>> {
        if x >= self.width() || y >= self.height() {
            return Err(Error::Domain(format!("voxel ({x}, {y}) is outside the slice")));
        }
        let voxel = self.grid.flat_index(x, y, self.slice_z);
        if !self.mask.contains(voxel) {
            return Err(Error::Domain("pick a voxel inside the white-matter mask".into()));
        }
        let response = match smoother {
            Smoother::Gaussian => {
                let mut impulse = Volume3D::zeros(self.grid);
                impulse.data[voxel] = 1.0;
                gaussian_filter(&impulse, &GaussianSpec::new(scale)?)?
            }
            Smoother::Anisotropic | Smoother::Uniform => {
                let graph = match smoother {
                    Smoother::Anisotropic => &self.odf_graph,
                    _ => &self.uniform_graph,
                };
                let approx = cheb_coefficients(&HeatKernel::new(scale)?, order, 2.0)?;
                let vertices = graph.vertex_voxels();
                let mut signal = vec![0.0; vertices.len()];
                let at = vertices.binary_search(&voxel).map_err(|_| Error::Lookup(voxel.to_string()))?;
                signal[at] = 1.0;
                let filtered = cheb_filter_apply(graph, &approx, &signal)?.signal;
                let mut vol = Volume3D::zeros(self.grid);
                for (&v, value) in vertices.iter().zip(filtered) {
                    vol.data[v] = value;
                }
                vol
            }
        };
        Ok(self.slice(&response))
    }
}

/// The heat kernel `exp(-scale lambda)` next to its order-`order` Chebyshev
/// approximation, sampled at `n_points` eigenvalues in `[0, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub lambdas: Vec<f64>,
    pub exact: Vec<f64>,
    pub approx: Vec<f64>,
    pub sup_error: f64,
}

pub fn kernel_fit(scale: f64, order: usize, n_points: usize) -> Result<KernelFit> {
    if n_points < 2 {
        return Err(Error::Domain("need at least 2 sample points".into()));
    }
    let kernel = HeatKernel::new(scale)?;
    let cheb = cheb_coefficients(&kernel, order, 2.0)?;
    let lambdas: Vec<f64> = (0..n_points).map(|i| 2.0 * i as f64 / (n_points - 1) as f64).collect();
    let exact: Vec<f64> = lambdas.iter().map(|&l| kernel.eval(l)).collect();
    let approx: Vec<f64> = lambdas.iter().map(|&l| cheb.eval(l)).collect();
    let sup_error = exact.iter().zip(&approx).map(|(e, a)| (e - a).abs()).fold(0.0, f64::max);
    Ok(KernelFit {
        lambdas,
        exact,
        approx,
        sup_error,
    })
}
