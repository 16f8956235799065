//! White-matter voxel graphs.
//!
//! Vertices are mask voxels; every voxel connects to the mask voxels in its
//! 5x5x5 neighbourhood. Edge weights measure how strongly the two voxels'
//! ODFs point at each other:
//!
//! ```text
//! p(i, r)  = (4 pi / N_o) * sum_{k : dir_k inside cone(r)} O_{i,k}^n
//! C_i      = 2 * max_{l in N(i)} p(i, r_il)
//! w_ij     = p(i, r_ij) / C_i + p(j, r_ji) / C_j        (in [0, 1])
//! ```
//!
//! The cone around each offset has solid angle 4 pi / 98, i.e. half-angle
//! with cosine 48/49. `N(i)` is restricted to mask voxels.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::{offset_mm, NeighborhoodSpec, N_DIRECTION_CLASSES, N_OFFSETS};
use crate::odf::{dot3, norm3, OdfField};
use crate::par;
use crate::volume::{Grid, Mask};

/// Cosine of the half-angle of a cone with solid angle 4 pi / 98.
pub const CONE_COS_4PI_OVER_98: f64 = 1.0 - 2.0 / N_DIRECTION_CLASSES as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphBuildConfig {
    /// Integer power applied to ODF samples before integration.
    pub sharpening_power: u32,
    pub cone_cos_threshold: f64,
    /// Edges with weight at or below this value are dropped.
    pub min_weight_epsilon: f64,
}

impl Default for GraphBuildConfig {
    fn default() -> Self {
        GraphBuildConfig {
            sharpening_power: 2,
            cone_cos_threshold: CONE_COS_4PI_OVER_98,
            min_weight_epsilon: 0.0,
        }
    }
}

impl GraphBuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sharpening_power < 1 {
            return Err(Error::Domain("sharpening power must be >= 1".into()));
        }
        if !(self.cone_cos_threshold > 0.0 && self.cone_cos_threshold < 1.0) {
            return Err(Error::Domain(format!(
                "cone cosine threshold {} outside (0, 1)",
                self.cone_cos_threshold
            )));
        }
        if !(self.min_weight_epsilon >= 0.0 && self.min_weight_epsilon.is_finite()) {
            return Err(Error::Domain("min_weight_epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

/// Indices of all directions within the cone around `r`.
pub fn solid_angle_membership(
    directions: &[[f64; 3]],
    r: [f64; 3],
    cone_cos_threshold: f64,
) -> Result<Vec<usize>> {
    let n = norm3(r);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain("offset vector must be nonzero and finite".into()));
    }
    let u = [r[0] / n, r[1] / n, r[2] / n];
    Ok(directions
        .iter()
        .enumerate()
        .filter(|(_, d)| dot3(**d, u) >= cone_cos_threshold)
        .map(|(k, _)| k)
        .collect())
}

/// Transition mass `p(i, r)` from voxel `voxel` along grid offset `offset`.
pub fn odf_transition_mass(
    field: &OdfField,
    voxel: usize,
    offset: [i64; 3],
    config: &GraphBuildConfig,
) -> Result<f64> {
    let samples = field
        .samples(voxel)
        .ok_or_else(|| Error::Lookup(format!("voxel {voxel} not covered by the ODF field")))?;
    let members = solid_angle_membership(
        field.directions(),
        offset_mm(offset, field.grid.voxel_size_mm),
        config.cone_cos_threshold,
    )?;
    Ok(mass_over(samples, &members, config.sharpening_power, field.n_dirs()))
}

#[inline]
fn mass_over(samples: &[f64], members: &[usize], power: u32, n_dirs: usize) -> f64 {
    let sum: f64 = members
        .iter()
        .map(|&k| samples[k].powi(power as i32))
        .sum();
    4.0 * PI / n_dirs as f64 * sum
}

/// Per-voxel normalisers `C_k`, computed on demand.
pub struct NormalizerCache<'a> {
    kernel: EdgeKernel<'a>,
    values: std::collections::HashMap<usize, f64>,
}

impl<'a> NormalizerCache<'a> {
    pub fn new(field: &'a OdfField, mask: &'a Mask, config: GraphBuildConfig) -> Result<Self> {
        Ok(NormalizerCache {
            kernel: EdgeKernel::new(field, mask, config)?,
            values: Default::default(),
        })
    }

    pub fn normalizer(&mut self, voxel: usize) -> Result<f64> {
        if let Some(&c) = self.values.get(&voxel) {
            return Ok(c);
        }
        let c = self.kernel.normalizer(voxel)?;
        self.values.insert(voxel, c);
        Ok(c)
    }
}

/// Weight of the edge between mask voxels `i` and `j`.
///
/// Returns [`Error::DegenerateVoxel`] when either endpoint has `C = 0`; such
/// edges are omitted from built graphs.
pub fn edge_weight(cache: &mut NormalizerCache<'_>, i: usize, j: usize) -> Result<f64> {
    let offset = cache.kernel.offset_between(i, j)?;
    let oi = cache.kernel.offset_index(offset);
    let oj = cache.kernel.nbhd.opposite(oi);
    let ci = cache.normalizer(i)?;
    let cj = cache.normalizer(j)?;
    if ci == 0.0 {
        return Err(Error::DegenerateVoxel(i));
    }
    if cj == 0.0 {
        return Err(Error::DegenerateVoxel(j));
    }
    let pi = cache.kernel.mass(i, oi)?;
    let pj = cache.kernel.mass(j, oj)?;
    Ok(combine(i, pi, ci, j, pj, cj))
}

/// Sums the two halves in a fixed (lower voxel first) order so that
/// `w(i, j)` and `w(j, i)` are bit-identical.
#[inline]
fn combine(i: usize, pi: f64, ci: f64, j: usize, pj: f64, cj: f64) -> f64 {
    if i < j {
        pi / ci + pj / cj
    } else {
        pj / cj + pi / ci
    }
}

/// Shared state for weight evaluation: cone memberships depend only on the
/// offset, so they are computed once per build.
struct EdgeKernel<'a> {
    field: &'a OdfField,
    mask: &'a Mask,
    config: GraphBuildConfig,
    nbhd: NeighborhoodSpec,
    members: Vec<Vec<usize>>,
}

impl<'a> EdgeKernel<'a> {
    fn new(field: &'a OdfField, mask: &'a Mask, config: GraphBuildConfig) -> Result<Self> {
        config.validate()?;
        if field.grid.dims != mask.grid.dims {
            return Err(Error::Shape(format!(
                "ODF field dims {:?} differ from mask dims {:?}",
                field.grid.dims, mask.grid.dims
            )));
        }
        if let Some(v) = mask.indices().into_iter().find(|&v| !field.covers(v)) {
            return Err(Error::Shape(format!(
                "ODF field does not cover mask voxel {v}"
            )));
        }
        let nbhd = NeighborhoodSpec::new();
        let members = nbhd
            .offsets()
            .iter()
            .map(|&o| {
                solid_angle_membership(
                    field.directions(),
                    offset_mm(o, field.grid.voxel_size_mm),
                    config.cone_cos_threshold,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeKernel {
            field,
            mask,
            config,
            nbhd,
            members,
        })
    }

    fn grid(&self) -> &Grid {
        &self.mask.grid
    }

    fn mass(&self, voxel: usize, offset_index: usize) -> Result<f64> {
        let samples = self
            .field
            .samples(voxel)
            .ok_or_else(|| Error::Lookup(format!("voxel {voxel} not covered by the ODF field")))?;
        Ok(mass_over(
            samples,
            &self.members[offset_index],
            self.config.sharpening_power,
            self.field.n_dirs(),
        ))
    }

    /// In-mask neighbours of `voxel` as `(flat index, offset index)`, in
    /// ascending flat order.
    fn neighbours(&self, voxel: usize) -> Vec<(usize, usize)> {
        let g = self.grid();
        let c = g.coords(voxel);
        self.nbhd
            .offsets()
            .iter()
            .enumerate()
            .filter_map(|(k, o)| {
                let q = [c[0] as i64 + o[0], c[1] as i64 + o[1], c[2] as i64 + o[2]];
                g.checked_index(q)
                    .filter(|&j| self.mask.contains(j))
                    .map(|j| (j, k))
            })
            .collect()
    }

    fn normalizer(&self, voxel: usize) -> Result<f64> {
        if !self.mask.contains(voxel) {
            return Err(Error::Lookup(format!("voxel {voxel} is outside the mask")));
        }
        let mut max = 0.0f64;
        for (_, k) in self.neighbours(voxel) {
            max = max.max(self.mass(voxel, k)?);
        }
        Ok(2.0 * max)
    }

    fn offset_between(&self, i: usize, j: usize) -> Result<[i64; 3]> {
        for v in [i, j] {
            if v >= self.grid().n_voxels() || !self.mask.contains(v) {
                return Err(Error::Lookup(format!("voxel {v} is outside the mask")));
            }
        }
        let a = self.grid().coords(i);
        let b = self.grid().coords(j);
        let o = [
            b[0] as i64 - a[0] as i64,
            b[1] as i64 - a[1] as i64,
            b[2] as i64 - a[2] as i64,
        ];
        if o == [0, 0, 0] || o.iter().any(|d| d.abs() > crate::neighborhood::RADIUS) {
            return Err(Error::Domain(format!(
                "voxels {i} and {j} are not neighbours (offset {o:?})"
            )));
        }
        Ok(o)
    }

    fn offset_index(&self, o: [i64; 3]) -> usize {
        self.nbhd.offsets().iter().position(|&p| p == o).unwrap()
    }
}

/// Summary of a graph build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub n_mask_voxels: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_components: usize,
    pub n_isolated: usize,
    pub n_degenerate: usize,
    /// Mask voxels left without any edge (flat indices). Includes degenerate ones.
    pub isolated_voxels: Vec<usize>,
    /// Mask voxels whose ODF gives zero transition mass towards every neighbour.
    pub degenerate_voxels: Vec<usize>,
}

/// Builds the ODF-weighted graph over `mask`.
pub fn build_graph(
    mask: &Mask,
    field: &OdfField,
    config: &GraphBuildConfig,
) -> Result<(VoxelGraph, BuildReport)> {
    let kernel = EdgeKernel::new(field, mask, *config)?;
    let voxels = mask.indices();

    // Pass 1: transition masses towards every in-mask neighbour, and C.
    let masses: Vec<Vec<(usize, usize, f64)>> = par::map_range(voxels.len(), |m| {
        let v = voxels[m];
        kernel
            .neighbours(v)
            .into_iter()
            .map(|(j, k)| (j, k, kernel.mass(v, k).unwrap_or(0.0)))
            .collect()
    });
    let mut row_of = vec![usize::MAX; mask.grid.n_voxels()];
    for (m, &v) in voxels.iter().enumerate() {
        row_of[v] = m;
    }
    let norms: Vec<f64> = masses
        .iter()
        .map(|row| 2.0 * row.iter().fold(0.0f64, |a, e| a.max(e.2)))
        .collect();

    // Pass 2: weights.
    let eps = config.min_weight_epsilon;
    let rows: Vec<Vec<(usize, f64)>> = par::map_range(voxels.len(), |m| {
        let i = voxels[m];
        let ci = norms[m];
        if ci == 0.0 {
            return Vec::new();
        }
        masses[m]
            .iter()
            .filter_map(|&(j, k, pij)| {
                let mj = row_of[j];
                let cj = norms[mj];
                if cj == 0.0 {
                    return None;
                }
                let back = kernel.nbhd.opposite(k);
                let pos = masses[mj].binary_search_by_key(&back, |e| e.1).ok()?;
                let pji = masses[mj][pos].2;
                let w = combine(i, pij, ci, j, pji, cj);
                (w > eps).then_some((j, w))
            })
            .collect()
    });

    let degenerate_voxels: Vec<usize> = voxels
        .iter()
        .enumerate()
        .filter(|&(m, _)| norms[m] == 0.0 && !masses[m].is_empty())
        .map(|(_, &v)| v)
        .collect();
    let graph = VoxelGraph::from_voxel_rows(mask.grid, &voxels, rows, Some(*config))?;
    let report = graph.report(mask, degenerate_voxels);
    Ok((graph, report))
}

/// Graph over `mask` with unit weight between every pair of mask voxels in
/// the same 5x5x5 neighbourhood.
pub fn masked_uniform_graph(mask: &Mask) -> Result<VoxelGraph> {
    let g = mask.grid;
    let nbhd = NeighborhoodSpec::new();
    let voxels = mask.indices();
    let rows = par::map_range(voxels.len(), |m| {
        let c = g.coords(voxels[m]);
        nbhd.offsets()
            .iter()
            .filter_map(|o| {
                g.checked_index([c[0] as i64 + o[0], c[1] as i64 + o[1], c[2] as i64 + o[2]])
                    .filter(|&j| mask.contains(j))
                    .map(|j| (j, 1.0))
            })
            .collect()
    });
    VoxelGraph::from_voxel_rows(g, &voxels, rows, None)
}

/// Sparse undirected weighted graph over grid voxels, stored as CSR with
/// sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGraph {
    grid: Grid,
    vertex_voxels: Vec<usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    inv_sqrt_deg: Vec<f64>,
    /// `w_ij / sqrt(d_i d_j)`, aligned with `weights`.
    norm_weights: Vec<f64>,
    config: Option<GraphBuildConfig>,
}

impl VoxelGraph {
    /// `rows[m]` lists `(neighbour flat index, weight)` for mask voxel
    /// `voxels[m]`. Voxels with empty rows are dropped as isolated.
    fn from_voxel_rows(
        grid: Grid,
        voxels: &[usize],
        rows: Vec<Vec<(usize, f64)>>,
        config: Option<GraphBuildConfig>,
    ) -> Result<Self> {
        let mut vertex_of = vec![usize::MAX; grid.n_voxels()];
        let mut vertex_voxels = Vec::new();
        for (m, &v) in voxels.iter().enumerate() {
            if !rows[m].is_empty() {
                vertex_of[v] = vertex_voxels.len();
                vertex_voxels.push(v);
            }
        }
        let mut row_ptr = Vec::with_capacity(vertex_voxels.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut weights = Vec::new();
        for mut row in rows.into_iter().filter(|r| !r.is_empty()) {
            row.sort_by_key(|e| e.0);
            for (j, w) in row {
                col_idx.push(vertex_of[j]);
                weights.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        VoxelGraph::from_csr(grid, vertex_voxels, row_ptr, col_idx, weights, config)
    }

    /// Validating constructor from raw CSR arrays.
    pub fn from_csr(
        grid: Grid,
        vertex_voxels: Vec<usize>,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        weights: Vec<f64>,
        config: Option<GraphBuildConfig>,
    ) -> Result<Self> {
        let n = vertex_voxels.len();
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 {
            return Err(Error::Invariant("row pointer array malformed".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) || row_ptr[n] != col_idx.len() {
            return Err(Error::Invariant("row pointers not monotone".into()));
        }
        if col_idx.len() != weights.len() {
            return Err(Error::SizeMismatch {
                expected: col_idx.len(),
                found: weights.len(),
            });
        }
        if vertex_voxels.windows(2).any(|w| w[0] >= w[1])
            || vertex_voxels.last().is_some_and(|&v| v >= grid.n_voxels())
        {
            return Err(Error::Invariant(
                "vertex table must be strictly ascending and inside the grid".into(),
            ));
        }
        for i in 0..n {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invariant(format!("row {i} columns not sorted")));
            }
            for (e, &j) in cols.iter().enumerate() {
                let w = weights[row_ptr[i] + e];
                if j >= n {
                    return Err(Error::Invariant(format!("column {j} out of range")));
                }
                if j == i {
                    return Err(Error::Invariant(format!("self-loop at vertex {i}")));
                }
                if !(w > 0.0 && w <= 1.0) {
                    return Err(Error::Invariant(format!(
                        "weight {w} on edge ({i}, {j}) outside (0, 1]"
                    )));
                }
                let back = &col_idx[row_ptr[j]..row_ptr[j + 1]];
                match back.binary_search(&i) {
                    Ok(p) if weights[row_ptr[j] + p] == w => {}
                    _ => {
                        return Err(Error::Invariant(format!(
                            "adjacency not symmetric at ({i}, {j})"
                        )))
                    }
                }
            }
        }
        let degrees: Vec<f64> = (0..n)
            .map(|i| weights[row_ptr[i]..row_ptr[i + 1]].iter().sum())
            .collect();
        if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::Invariant(format!("vertex {i} has zero degree")));
        }
        let inv_sqrt_deg: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut norm_weights = Vec::with_capacity(weights.len());
        for i in 0..n {
            for e in row_ptr[i]..row_ptr[i + 1] {
                norm_weights.push(weights[e] * inv_sqrt_deg[i] * inv_sqrt_deg[col_idx[e]]);
            }
        }
        Ok(VoxelGraph {
            grid,
            vertex_voxels,
            row_ptr,
            col_idx,
            weights,
            degrees,
            inv_sqrt_deg,
            norm_weights,
            config,
        })
    }

    /// Abstract graph on `n` vertices from an undirected edge list; each
    /// pair may appear once in either orientation. Vertices map to a
    /// 1-D grid of `n` voxels.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let grid = Grid::new([n.max(1), 1, 1], [1.0; 3])?;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Invariant(format!("edge ({i}, {j}) out of range")));
            }
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        for (i, r) in rows.iter_mut().enumerate() {
            r.sort_by_key(|e| e.0);
            if r.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Invariant(format!("duplicate edge at vertex {i}")));
            }
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut weights = Vec::new();
        for r in rows {
            for (j, w) in r {
                col_idx.push(j);
                weights.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        VoxelGraph::from_csr(grid, (0..n).collect(), row_ptr, col_idx, weights, None)
    }

    /// Build summary of this graph over `mask`.
    pub fn report(&self, mask: &Mask, degenerate_voxels: Vec<usize>) -> BuildReport {
        let isolated_voxels = self.isolated_voxels(mask);
        BuildReport {
            n_mask_voxels: mask.count(),
            n_vertices: self.n_vertices(),
            n_edges: self.n_edges(),
            n_components: connected_components(self).count,
            n_isolated: isolated_voxels.len(),
            n_degenerate: degenerate_voxels.len(),
            isolated_voxels,
            degenerate_voxels,
        }
    }

    /// Mask voxels that are not graph vertices.
    pub fn isolated_voxels(&self, mask: &Mask) -> Vec<usize> {
        let mut out = Vec::new();
        let mut it = self.vertex_voxels.iter().peekable();
        for v in mask.indices() {
            if it.peek() == Some(&&v) {
                it.next();
            } else {
                out.push(v);
            }
        }
        out
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_voxels.len()
    }

    /// Undirected edge count.
    pub fn n_edges(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn vertex_voxels(&self) -> &[usize] {
        &self.vertex_voxels
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn config(&self) -> Option<&GraphBuildConfig> {
        self.config.as_ref()
    }

    /// `(neighbour, weight)` pairs of vertex `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    /// Weight of edge `(i, j)`, zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.weights[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// `D^{1/2} 1`, the null vector of the normalised Laplacian.
    pub fn sqrt_degrees(&self) -> Vec<f64> {
        self.degrees.iter().map(|d| d.sqrt()).collect()
    }

    /// Normalised Laplacian as a dense row-major `n x n` matrix.
    pub fn dense_laplacian(&self) -> Vec<f64> {
        let n = self.n_vertices();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[i * n + self.col_idx[e]] -= self.norm_weights[e];
            }
        }
        m
    }

    /// `out = D^{-1/2} A D^{-1/2} x` for a block of `ncols` signals stored
    /// vertex-major (`x[i * ncols + c]`).
    pub fn normalized_adjacency_block(&self, x: &[f64], ncols: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_vertices() * ncols);
        debug_assert_eq!(out.len(), x.len());
        par::for_each_row(out, ncols, |i, row| {
            row.iter_mut().for_each(|v| *v = 0.0);
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let w = self.norm_weights[e];
                let src = &x[self.col_idx[e] * ncols..(self.col_idx[e] + 1) * ncols];
                for (o, s) in row.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        });
    }

    /// 64-bit FNV-1a digest of the graph structure and weights.
    pub fn content_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |word: u64| {
            for b in word.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        for d in self.grid.dims {
            eat(d as u64);
        }
        self.vertex_voxels.iter().for_each(|&v| eat(v as u64));
        self.row_ptr.iter().for_each(|&v| eat(v as u64));
        self.col_idx.iter().for_each(|&v| eat(v as u64));
        self.weights.iter().for_each(|w| eat(w.to_bits()));
        h
    }
}

/// `L f = f - D^{-1/2} A D^{-1/2} f`, without forming `L`.
pub fn laplacian_apply(graph: &VoxelGraph, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != graph.n_vertices() {
        return Err(Error::Shape(format!(
            "signal has {} entries, graph has {} vertices",
            f.len(),
            graph.n_vertices()
        )));
    }
    let mut out = vec![0.0; f.len()];
    graph.normalized_adjacency_block(f, 1, &mut out);
    for (o, x) in out.iter_mut().zip(f) {
        *o = x - *o;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// Component label per vertex, numbered in order of first appearance.
    pub labels: Vec<usize>,
    pub count: usize,
}

pub fn connected_components(graph: &VoxelGraph) -> Components {
    let n = graph.n_vertices();
    let mut labels = vec![usize::MAX; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if labels[s] != usize::MAX {
            continue;
        }
        labels[s] = count;
        queue.push_back(s);
        while let Some(i) = queue.pop_front() {
            for (j, _) in graph.neighbors(i) {
                if labels[j] == usize::MAX {
                    labels[j] = count;
                    queue.push_back(j);
                }
            }
        }
        count += 1;
    }
    Components { labels, count }
}

/// Number of offsets in the neighbourhood, the maximum vertex degree count.
pub const MAX_NEIGHBOURS: usize = N_OFFSETS;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odf::fibonacci_sphere;

    fn class_dirs() -> Vec<[f64; 3]> {
        NeighborhoodSpec::new().unit_directions()
    }

    fn line_mask(n: usize) -> Mask {
        Mask::new(Grid::new([1, 1, n], [1.0; 3]).unwrap(), vec![true; n]).unwrap()
    }

    fn constant_field(mask: &Mask, c: f64) -> OdfField {
        OdfField::from_fn(mask.grid, class_dirs(), mask, |_, _| c).unwrap()
    }

    #[test]
    fn cone_threshold_value() {
        assert!((CONE_COS_4PI_OVER_98 - 48.0 / 49.0).abs() < 1e-15);
    }

    #[test]
    fn membership_of_aligned_direction() {
        let dirs = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let m = solid_angle_membership(&dirs, [3.0, 0.0, 0.0], CONE_COS_4PI_OVER_98).unwrap();
        assert_eq!(m, vec![0]);
    }

    #[test]
    fn membership_rejects_zero_offset() {
        let dirs = fibonacci_sphere(98);
        assert!(matches!(
            solid_angle_membership(&dirs, [0.0; 3], 0.9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn transition_mass_of_constant_odf() {
        let mask = line_mask(2);
        let c = 1.7;
        let field = constant_field(&mask, c);
        let cfg = GraphBuildConfig::default();
        let m = solid_angle_membership(field.directions(), [0.0, 0.0, 1.0], cfg.cone_cos_threshold)
            .unwrap()
            .len() as f64;
        let p = odf_transition_mass(&field, 0, [0, 0, 1], &cfg).unwrap();
        let expected = 4.0 * PI / 98.0 * m * c * c;
        assert!((p - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn transition_mass_outside_mask() {
        let mask = line_mask(2);
        let field = constant_field(&mask, 1.0);
        let cfg = GraphBuildConfig::default();
        assert!(matches!(
            odf_transition_mass(&field, 7, [0, 0, 1], &cfg),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn zero_odf_has_zero_mass() {
        let mask = line_mask(2);
        let field = constant_field(&mask, 0.0);
        let cfg = GraphBuildConfig::default();
        assert_eq!(odf_transition_mass(&field, 0, [0, 0, 1], &cfg).unwrap(), 0.0);
    }

    #[test]
    fn path_graph_from_constant_odf() {
        let mask = line_mask(3);
        let field = constant_field(&mask, 0.5);
        let (g, report) = build_graph(&mask, &field, &GraphBuildConfig::default()).unwrap();
        assert_eq!(g.n_vertices(), 3);
        // offsets (0,0,1) and (0,0,2) are both neighbours in a 5x5x5 cube
        assert_eq!(g.n_edges(), 3);
        assert!(g.weights().iter().all(|&w| w == 1.0));
        assert_eq!(report.n_components, 1);
        assert_eq!(report.n_isolated, 0);
    }

    #[test]
    fn single_voxel_is_isolated() {
        let mask = line_mask(1);
        let field = constant_field(&mask, 1.0);
        let (g, report) = build_graph(&mask, &field, &GraphBuildConfig::default()).unwrap();
        assert_eq!(g.n_vertices(), 0);
        assert_eq!(report.n_isolated, 1);
        assert_eq!(report.isolated_voxels, vec![0]);
    }

    #[test]
    fn degenerate_voxel_edges_are_omitted() {
        let mask = line_mask(2);
        let field = OdfField::from_fn(mask.grid, class_dirs(), &mask, |v, _| if v == 1 { 0.0 } else { 1.0 })
            .unwrap();
        let mut cache = NormalizerCache::new(&field, &mask, GraphBuildConfig::default()).unwrap();
        assert!(matches!(edge_weight(&mut cache, 0, 1), Err(Error::DegenerateVoxel(1))));
        let (g, report) = build_graph(&mask, &field, &GraphBuildConfig::default()).unwrap();
        assert_eq!(g.n_vertices(), 0);
        assert_eq!(report.degenerate_voxels, vec![1]);
        assert_eq!(report.n_isolated, 2);
    }

    #[test]
    fn two_vertex_laplacian() {
        let g = VoxelGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(laplacian_apply(&g, &[1.0, 0.0]).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn laplacian_rejects_wrong_length() {
        let g = VoxelGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(laplacian_apply(&g, &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn from_edges_rejects_bad_weights_and_loops() {
        assert!(VoxelGraph::from_edges(2, &[(0, 1, 1.5)]).is_err());
        assert!(VoxelGraph::from_edges(2, &[(0, 0, 0.5), (0, 1, 0.5)]).is_err());
        assert!(VoxelGraph::from_edges(3, &[(0, 1, 0.5)]).is_err()); // vertex 2 has no edge
    }

    #[test]
    fn components_of_separated_clusters() {
        let grid = Grid::new([8, 1, 1], [1.0; 3]).unwrap();
        let mut vox = vec![false; 8];
        vox[0] = true;
        vox[1] = true;
        vox[5] = true;
        vox[6] = true;
        let mask = Mask::new(grid, vox).unwrap();
        let g = masked_uniform_graph(&mask).unwrap();
        let c = connected_components(&g);
        assert_eq!(c.count, 2);
        assert_eq!(c.labels, vec![0, 0, 1, 1]);
    }
}
