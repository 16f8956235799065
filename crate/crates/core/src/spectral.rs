//! Spectral filtering of graph signals.
//!
//! Two routes compute `K(L) f` for a spectral kernel `K`:
//!
//! * [`cheb_filter_apply`] expands `K` in shifted Chebyshev polynomials on
//!   `[0, lambda_max]` and evaluates the truncated series with the
//!   three-term recurrence, touching `L` only through sparse products.
//! * [`exact_filter_apply`] (feature `dense`) diagonalises the dense
//!   Laplacian. It is only meant for small graphs and serves as the
//!   reference for the fast route.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VoxelGraph;
use crate::volume::{Mask, Volume4D};

/// Upper bound of the normalised-Laplacian spectrum.
pub const LAMBDA_MAX_BOUND: f64 = 2.0;
pub const DEFAULT_CHEB_ORDER: usize = 50;
pub const DEFAULT_DENSE_LIMIT: usize = 2000;
const MIN_QUADRATURE_NODES: usize = 200;

/// A real function on the graph spectrum.
pub trait SpectralKernel: Sync {
    fn eval(&self, lambda: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> SpectralKernel for F {
    fn eval(&self, lambda: f64) -> f64 {
        self(lambda)
    }
}

/// `K(lambda) = exp(-tau * lambda)`. `tau = 0` is the identity filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatKernel {
    pub tau: f64,
}

impl HeatKernel {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("heat kernel tau must be >= 0, got {tau}")));
        }
        Ok(HeatKernel { tau })
    }
}

impl SpectralKernel for HeatKernel {
    fn eval(&self, lambda: f64) -> f64 {
        (-self.tau * lambda).exp()
    }
}

pub fn heat_kernel_eval(tau: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(HeatKernel::new(tau)?.eval(lambda))
}

/// Truncated Chebyshev expansion `P(lambda) = sum_k c_k T_k(x)` with
/// `x = 2 lambda / lambda_max - 1`. The constant term is stored already
/// halved, so `c_0` is the mean level of the kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebApprox {
    pub coefficients: Vec<f64>,
    pub lambda_max: f64,
}

impl ChebApprox {
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Clenshaw evaluation of the series.
    pub fn eval(&self, lambda: f64) -> f64 {
        let x = 2.0 * lambda / self.lambda_max - 1.0;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coefficients[1..].iter().rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        self.coefficients[0] + x * b1 - b2
    }

    /// Largest `|P - K|` over `n_points` evenly spaced points of the interval.
    pub fn sup_error<K: SpectralKernel + ?Sized>(&self, kernel: &K, n_points: usize) -> f64 {
        (0..n_points)
            .map(|i| {
                let l = self.lambda_max * i as f64 / (n_points - 1) as f64;
                (self.eval(l) - kernel.eval(l)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Chebyshev coefficients of `kernel` on `[0, lambda_max]` by Gauss-Chebyshev
/// quadrature with `max(4 order, 200)` nodes.
pub fn cheb_coefficients<K: SpectralKernel + ?Sized>(
    kernel: &K,
    order: usize,
    lambda_max: f64,
) -> Result<ChebApprox> {
    if order < 1 {
        return Err(Error::Domain("Chebyshev order must be >= 1".into()));
    }
    if !(lambda_max > 0.0 && lambda_max <= LAMBDA_MAX_BOUND) {
        return Err(Error::Domain(format!(
            "lambda_max {lambda_max} outside (0, 2]"
        )));
    }
    let m = (4 * order).max(MIN_QUADRATURE_NODES);
    let half = lambda_max / 2.0;
    let samples: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            (theta, kernel.eval(half * theta.cos() + half))
        })
        .collect();
    let mut coefficients: Vec<f64> = (0..=order)
        .map(|k| {
            let s: f64 = samples
                .iter()
                .map(|&(theta, g)| g * (k as f64 * theta).cos())
                .sum();
            2.0 * s / m as f64
        })
        .collect();
    coefficients[0] /= 2.0;
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("non-finite Chebyshev coefficient".into()));
    }
    Ok(ChebApprox {
        coefficients,
        lambda_max,
    })
}

/// How a [`FilterResult`] was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FilterMethod {
    Chebyshev { order: usize, lambda_max: f64 },
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    pub signal: Vec<f64>,
    pub method: FilterMethod,
    pub graph_hash: u64,
}

/// `P(L) f` via the Chebyshev recurrence.
pub fn cheb_filter_apply(graph: &VoxelGraph, approx: &ChebApprox, f: &[f64]) -> Result<FilterResult> {
    check_len(graph, f.len())?;
    let mut out = cheb_filter_block(graph, std::slice::from_ref(approx), f, 1)?;
    Ok(FilterResult {
        signal: out.pop().unwrap(),
        method: FilterMethod::Chebyshev {
            order: approx.order(),
            lambda_max: approx.lambda_max,
        },
        graph_hash: graph.content_hash(),
    })
}

fn check_len(graph: &VoxelGraph, len: usize) -> Result<()> {
    if len != graph.n_vertices() {
        return Err(Error::Shape(format!(
            "signal has {len} entries, graph has {} vertices",
            graph.n_vertices()
        )));
    }
    Ok(())
}

/// Filters a block of `ncols` signals (vertex-major, `x[i * ncols + c]`)
/// with several expansions at once. All expansions must share
/// `lambda_max`; the recurrence is run once up to the highest order.
pub fn cheb_filter_block(
    graph: &VoxelGraph,
    approxes: &[ChebApprox],
    x: &[f64],
    ncols: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = graph.n_vertices();
    if x.len() != n * ncols {
        return Err(Error::Shape(format!(
            "block has {} entries, expected {n} x {ncols}",
            x.len()
        )));
    }
    let Some(first) = approxes.first() else {
        return Ok(Vec::new());
    };
    let lambda_max = first.lambda_max;
    if approxes.iter().any(|a| a.lambda_max != lambda_max) {
        return Err(Error::Domain("expansions disagree on lambda_max".into()));
    }
    let alpha = 2.0 / lambda_max;
    let max_order = approxes.iter().map(|a| a.order()).max().unwrap();

    let mut outs: Vec<Vec<f64>> = approxes
        .iter()
        .map(|a| x.iter().map(|v| a.coefficients[0] * v).collect())
        .collect();
    if n == 0 {
        return Ok(outs);
    }
    // shifted operator: Lt y = alpha (y - N y) - y
    let shifted = |y: &[f64], out: &mut [f64]| {
        graph.normalized_adjacency_block(y, ncols, out);
        for (o, v) in out.iter_mut().zip(y) {
            *o = alpha * (v - *o) - v;
        }
    };
    let mut t_prev = x.to_vec();
    let mut t_cur = vec![0.0; x.len()];
    shifted(&t_prev, &mut t_cur);
    accumulate(&mut outs, approxes, 1, &t_cur);
    let mut scratch = vec![0.0; x.len()];
    for k in 2..=max_order {
        shifted(&t_cur, &mut scratch);
        for (s, p) in scratch.iter_mut().zip(&t_prev) {
            *s = 2.0 * *s - p;
        }
        // rotate: prev <- cur, cur <- next
        std::mem::swap(&mut t_prev, &mut t_cur);
        std::mem::swap(&mut t_cur, &mut scratch);
        accumulate(&mut outs, approxes, k, &t_cur);
    }
    Ok(outs)
}

fn accumulate(outs: &mut [Vec<f64>], approxes: &[ChebApprox], k: usize, t: &[f64]) {
    for (out, a) in outs.iter_mut().zip(approxes) {
        if let Some(&c) = a.coefficients.get(k) {
            for (o, v) in out.iter_mut().zip(t) {
                *o += c * v;
            }
        }
    }
}

/// Filters every frame of `series` on the graph. Voxels outside the graph
/// (isolated mask voxels and everything outside the mask) pass through.
pub fn filter_timeseries(
    graph: &VoxelGraph,
    approx: &ChebApprox,
    series: &Volume4D,
    mask: &Mask,
) -> Result<Volume4D> {
    Ok(filter_timeseries_multi(graph, std::slice::from_ref(approx), series, mask)?
        .pop()
        .unwrap())
}

/// [`filter_timeseries`] for several kernels sharing one recurrence.
pub fn filter_timeseries_multi(
    graph: &VoxelGraph,
    approxes: &[ChebApprox],
    series: &Volume4D,
    mask: &Mask,
) -> Result<Vec<Volume4D>> {
    let grid = graph.grid();
    if grid.dims != series.grid.dims || grid.dims != mask.grid.dims {
        return Err(Error::Shape(format!(
            "graph dims {:?}, series dims {:?}, mask dims {:?} disagree",
            grid.dims, series.grid.dims, mask.grid.dims
        )));
    }
    if let Some(v) = graph.vertex_voxels().iter().find(|&&v| !mask.contains(v)) {
        return Err(Error::Invariant(format!(
            "graph vertex at voxel {v} lies outside the mask"
        )));
    }
    let nt = series.n_frames;
    let nvox = grid.n_voxels();
    let verts = graph.vertex_voxels();
    let mut block = vec![0.0; verts.len() * nt];
    for (i, &v) in verts.iter().enumerate() {
        for t in 0..nt {
            block[i * nt + t] = series.data[t * nvox + v];
        }
    }
    let filtered = cheb_filter_block(graph, approxes, &block, nt)?;
    Ok(filtered
        .into_iter()
        .map(|fb| {
            let mut out = series.clone();
            for (i, &v) in verts.iter().enumerate() {
                for t in 0..nt {
                    out.data[t * nvox + v] = fb[i * nt + t];
                }
            }
            out
        })
        .collect())
}

#[cfg(feature = "dense")]
pub use dense::{exact_filter_apply, exact_filter_apply_with_limit, DenseSpectrum};

#[cfg(feature = "dense")]
mod dense {
    use super::*;

    /// Eigendecomposition of the dense normalised Laplacian.
    pub struct DenseSpectrum {
        n: usize,
        /// Ascending eigenvalues.
        pub eigenvalues: Vec<f64>,
        /// Column-major: eigenvector `l` is `eigenvectors[l * n..(l + 1) * n]`.
        eigenvectors: Vec<f64>,
        graph_hash: u64,
    }

    impl DenseSpectrum {
        pub fn new(graph: &VoxelGraph, limit: usize) -> Result<Self> {
            let n = graph.n_vertices();
            if n > limit {
                return Err(Error::TooLarge {
                    n_vertices: n,
                    limit,
                });
            }
            let dense = graph.dense_laplacian();
            let m = faer::Mat::<f64>::from_fn(n, n, |i, j| dense[i * n + j]);
            let eig = m
                .self_adjoint_eigen(faer::Side::Lower)
                .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
            let s = eig.S().column_vector();
            let u = eig.U();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
            let eigenvalues = order.iter().map(|&l| s[l]).collect();
            let mut eigenvectors = Vec::with_capacity(n * n);
            for &l in &order {
                eigenvectors.extend((0..n).map(|i| u[(i, l)]));
            }
            Ok(DenseSpectrum {
                n,
                eigenvalues,
                eigenvectors,
                graph_hash: graph.content_hash(),
            })
        }

        pub fn eigenvector(&self, l: usize) -> &[f64] {
            &self.eigenvectors[l * self.n..(l + 1) * self.n]
        }

        /// Graph Fourier transform `f_hat[l] = <chi_l, f>`.
        pub fn forward(&self, f: &[f64]) -> Vec<f64> {
            (0..self.n)
                .map(|l| self.eigenvector(l).iter().zip(f).map(|(a, b)| a * b).sum())
                .collect()
        }

        pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; self.n];
            for (l, &c) in coeffs.iter().enumerate() {
                for (o, v) in out.iter_mut().zip(self.eigenvector(l)) {
                    *o += c * v;
                }
            }
            out
        }

        pub fn filter<K: SpectralKernel + ?Sized>(&self, kernel: &K, f: &[f64]) -> Result<FilterResult> {
            if f.len() != self.n {
                return Err(Error::Shape(format!(
                    "signal has {} entries, graph has {} vertices",
                    f.len(),
                    self.n
                )));
            }
            let mut coeffs = self.forward(f);
            for (c, &l) in coeffs.iter_mut().zip(&self.eigenvalues) {
                // roundoff can push the smallest eigenvalue slightly negative
                *c *= kernel.eval(l.max(0.0));
            }
            Ok(FilterResult {
                signal: self.inverse(&coeffs),
                method: FilterMethod::Exact,
                graph_hash: self.graph_hash,
            })
        }
    }

    pub fn exact_filter_apply<K: SpectralKernel + ?Sized>(
        graph: &VoxelGraph,
        kernel: &K,
        f: &[f64],
    ) -> Result<FilterResult> {
        exact_filter_apply_with_limit(graph, kernel, f, DEFAULT_DENSE_LIMIT)
    }

    pub fn exact_filter_apply_with_limit<K: SpectralKernel + ?Sized>(
        graph: &VoxelGraph,
        kernel: &K,
        f: &[f64],
        limit: usize,
    ) -> Result<FilterResult> {
        check_len(graph, f.len())?;
        DenseSpectrum::new(graph, limit)?.filter(kernel, f)
    }
}
