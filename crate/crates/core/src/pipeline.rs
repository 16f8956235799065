//! End-to-end ROC experiment: phantoms on a synthetic anatomy, filtered
//! by each method, analysed with the GLM and scored over the white-matter
//! mask.
//!
//! Every stage is a deterministic function of the configuration, so two
//! runs write byte-identical outputs regardless of thread count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activation::{average_roc, roc_curve, t_values_rows, DesignMatrix, RocCurve, TMap, DEFAULT_N_THRESHOLDS};
use crate::anatomy::AnatomySpec;
use crate::baseline::{gaussian_filter_4d, GaussianSpec};
use crate::error::{Error, Result};
use crate::graph::{build_graph, masked_uniform_graph, BuildReport, GraphBuildConfig, VoxelGraph};
use crate::phantom::{design_regressor, generate_phantom, BlockParadigm, PhantomSpec};
use crate::spectral::{cheb_coefficients, cheb_filter_block, ChebApprox, HeatKernel, DEFAULT_CHEB_ORDER, LAMBDA_MAX_BOUND};
use crate::volume::{Mask, Volume3D, Volume4D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub anatomy: AnatomySpec,
    pub graph: GraphBuildConfig,
    /// Template phantom; `rng_seed` is replaced by each entry of `seeds`.
    pub phantom: PhantomSpec,
    pub paradigm: BlockParadigm,
    pub seeds: Vec<u64>,
    pub taus: Vec<f64>,
    pub fwhms_mm: Vec<f64>,
    pub cheb_order: usize,
    /// Also run the heat kernel on the unweighted mask graph.
    pub uniform_graph: bool,
    pub n_thresholds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            anatomy: AnatomySpec::default(),
            graph: GraphBuildConfig::default(),
            phantom: PhantomSpec::default(),
            paradigm: BlockParadigm::default(),
            seeds: (0..10).collect(),
            taus: vec![1.3, 1.4, 2.2, 3.3],
            fwhms_mm: vec![2.0, 4.0, 6.0],
            cheb_order: DEFAULT_CHEB_ORDER,
            uniform_graph: false,
            n_thresholds: DEFAULT_N_THRESHOLDS,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.anatomy.validate()?;
        self.graph.validate()?;
        self.phantom.validate()?;
        self.paradigm.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Domain("experiment needs at least one phantom seed".into()));
        }
        for &tau in &self.taus {
            HeatKernel::new(tau)?;
        }
        for &fwhm in &self.fwhms_mm {
            GaussianSpec::new(fwhm)?;
        }
        if self.cheb_order < 1 {
            return Err(Error::Domain("Chebyshev order must be >= 1".into()));
        }
        Ok(())
    }
}

/// One filter setting evaluated over all phantoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    /// `none`, `gaussian`, `graph` or `uniform-graph`.
    pub filter: String,
    /// FWHM in mm for `gaussian`, tau for the graph filters.
    pub param: Option<f64>,
    /// Area under the averaged ROC curve.
    pub auc: f64,
    pub per_phantom_auc: Vec<f64>,
    pub n_phantoms: usize,
    #[serde(skip)]
    pub curve: RocCurve,
}

impl MethodResult {
    pub fn label(&self) -> String {
        match self.param {
            Some(p) => format!("{}_{p}", self.filter),
            None => self.filter.clone(),
        }
    }

    pub fn mean_phantom_auc(&self) -> f64 {
        self.per_phantom_auc.iter().sum::<f64>() / self.per_phantom_auc.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub build_report: BuildReport,
    pub methods: Vec<MethodResult>,
}

impl ExperimentResult {
    pub fn method(&self, filter: &str, param: Option<f64>) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.filter == filter && m.param == param)
    }

    /// Highest averaged-curve AUC among the settings of one filter.
    pub fn best(&self, filter: &str) -> Option<&MethodResult> {
        self.methods
            .iter()
            .filter(|m| m.filter == filter)
            .max_by(|a, b| a.auc.total_cmp(&b.auc))
    }

    /// Writes `summary.json`, `config.json` and one `roc_<label>.csv` per
    /// method into `dir`, returning the paths written.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        let summary = serde_json::json!({
            "build_report": self.build_report,
            "methods": self.methods,
        });
        put("summary.json".into(), to_pretty(&summary)?)?;
        put("config.json".into(), to_pretty(&self.config)?)?;
        for m in &self.methods {
            put(format!("roc_{}.csv", m.label()), m.curve.to_csv().into_bytes())?;
        }
        Ok(written)
    }
}

fn to_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Schema(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

struct Accumulator {
    filter: &'static str,
    param: Option<f64>,
    curves: Vec<RocCurve>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let anatomy = config.anatomy.build()?;
    let (graph, build_report) = build_graph(&anatomy.mask, &anatomy.field, &config.graph)?;
    let uniform = if config.uniform_graph {
        Some(masked_uniform_graph(&anatomy.mask)?)
    } else {
        None
    };
    let approxes: Vec<ChebApprox> = config
        .taus
        .iter()
        .map(|&tau| cheb_coefficients(&HeatKernel::new(tau)?, config.cheb_order, LAMBDA_MAX_BOUND))
        .collect::<Result<_>>()?;
    let design = DesignMatrix::new(design_regressor(&config.paradigm)?)?;
    let gaussians: Vec<GaussianSpec> = config
        .fwhms_mm
        .iter()
        .map(|&f| GaussianSpec::new(f))
        .collect::<Result<_>>()?;

    let mut accs = vec![Accumulator {
        filter: "none",
        param: None,
        curves: Vec::new(),
    }];
    accs.extend(config.fwhms_mm.iter().map(|&f| Accumulator {
        filter: "gaussian",
        param: Some(f),
        curves: Vec::new(),
    }));
    let graph_names: &[&'static str] = if uniform.is_some() {
        &["graph", "uniform-graph"]
    } else {
        &["graph"]
    };
    for &name in graph_names {
        accs.extend(config.taus.iter().map(|&t| Accumulator {
            filter: name,
            param: Some(t),
            curves: Vec::new(),
        }));
    }

    let mask_voxels = anatomy.mask.indices();
    for &seed in &config.seeds {
        let spec = PhantomSpec {
            rng_seed: seed,
            ..config.phantom
        };
        let phantom = generate_phantom(&anatomy.streamlines, &anatomy.grid, &spec, &config.paradigm)?;
        let truth = &phantom.pattern.ground_truth;
        let score = |rows: &[f64]| -> Result<RocCurve> {
            let t = t_values_rows(rows, &design)?;
            roc_curve(&scatter_tmap(&anatomy.mask, &mask_voxels, t, design.dof()), truth, config.n_thresholds)
        };

        let rows = mask_rows(&phantom.series, &mask_voxels);
        let mut curves = vec![score(&rows)?];
        for g in &gaussians {
            let smoothed = gaussian_filter_4d(&phantom.series, g)?;
            curves.push(score(&mask_rows(&smoothed, &mask_voxels))?);
        }
        for g in std::iter::once(&graph).chain(uniform.as_ref()) {
            for filtered in graph_filter_rows(g, &approxes, &rows, &anatomy.mask, phantom.series.n_frames)? {
                curves.push(score(&filtered)?);
            }
        }
        for (acc, curve) in accs.iter_mut().zip(curves) {
            acc.curves.push(curve);
        }
    }

    let methods = accs
        .into_iter()
        .map(|acc| {
            let curve = average_roc(&acc.curves)?;
            Ok(MethodResult {
                filter: acc.filter.to_string(),
                param: acc.param,
                auc: curve.auc,
                per_phantom_auc: acc.curves.iter().map(|c| c.auc).collect(),
                n_phantoms: acc.curves.len(),
                curve,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentResult {
        config: config.clone(),
        build_report,
        methods,
    })
}

/// Time series of the listed voxels, one row each.
fn mask_rows(series: &Volume4D, voxels: &[usize]) -> Vec<f64> {
    let nt = series.n_frames;
    let nvox = series.grid.n_voxels();
    let mut rows = vec![0.0; voxels.len() * nt];
    for (row, &v) in rows.chunks_mut(nt).zip(voxels) {
        for (t, r) in row.iter_mut().enumerate() {
            *r = series.data[t * nvox + v];
        }
    }
    rows
}

/// Filters mask rows on `graph`; rows of mask voxels that are not graph
/// vertices pass through unchanged.
fn graph_filter_rows(
    graph: &VoxelGraph,
    approxes: &[ChebApprox],
    rows: &[f64],
    mask: &Mask,
    nt: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut row_of = vec![usize::MAX; mask.grid.n_voxels()];
    for (r, v) in mask.indices().into_iter().enumerate() {
        row_of[v] = r;
    }
    let verts = graph.vertex_voxels();
    let mut block = Vec::with_capacity(verts.len() * nt);
    for &v in verts {
        let r = row_of[v];
        if r == usize::MAX {
            return Err(Error::Invariant(format!("graph vertex at voxel {v} lies outside the mask")));
        }
        block.extend_from_slice(&rows[r * nt..(r + 1) * nt]);
    }
    let filtered = cheb_filter_block(graph, approxes, &block, nt)?;
    Ok(filtered
        .into_iter()
        .map(|f| {
            let mut out = rows.to_vec();
            for (i, &v) in verts.iter().enumerate() {
                let r = row_of[v];
                out[r * nt..(r + 1) * nt].copy_from_slice(&f[i * nt..(i + 1) * nt]);
            }
            out
        })
        .collect())
}

fn scatter_tmap(mask: &Mask, voxels: &[usize], t: Vec<f64>, dof: usize) -> TMap {
    let mut data = vec![f64::NAN; mask.grid.n_voxels()];
    for (&v, t) in voxels.iter().zip(t) {
        data[v] = t;
    }
    TMap {
        volume: Volume3D { grid: mask.grid, data },
        dof,
    }
}
