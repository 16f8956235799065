use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use wmgf_core::activation::{average_roc, glm_fit, mask_tmap, roc_curve, t_map, DesignMatrix, TMap};
use wmgf_core::baseline::{gaussian_filter, gaussian_filter_4d, GaussianSpec};
use wmgf_core::graph::{build_graph as build, masked_uniform_graph};
use wmgf_core::io::{
    read_graph, read_odf_field, read_streamlines, read_volume, write_graph, write_odf_field, write_streamlines,
    write_volume, write_volume3d, write_volume4d,
};
use wmgf_core::phantom::{design_regressor, generate_phantom};
use wmgf_core::pipeline::run_experiment;
use wmgf_core::spectral::{cheb_coefficients, cheb_filter_block, filter_timeseries_multi, HeatKernel, LAMBDA_MAX_BOUND};
use wmgf_core::{AnyVolume, Grid, Mask, Volume3D, VoxelGraph};

use crate::config::{create_dir, provenance, sidecar, write_json, Loaded, RunConfig};
use crate::error::{as_input, CliError, CliResult};
use crate::Method;

/// Prints a result summary; a closed stdout (e.g. piped into `head`) is
/// not an error worth failing the command for.
fn print_json(value: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialise");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn read_mask(path: &Path) -> CliResult<Mask> {
    Ok(Mask::from_volume(&read_volume(path)?.into_3d()?)?)
}

pub fn synth(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let seed = cfg.require_seed("synth")?;
    let mut config = cfg.clone();
    config.experiment.anatomy.seed = seed;
    config.experiment.anatomy.validate().map_err(as_input)?;
    let anatomy = config.experiment.anatomy.build()?;
    create_dir(out)?;
    write_volume3d(&anatomy.mask.to_volume(), out.join("mask.vol"))?;
    write_odf_field(&anatomy.field, out.join("odf.odf"))?;
    write_streamlines(&anatomy.streamlines, out.join("streamlines.json"))?;
    write_json(&out.join("provenance.json"), &provenance("synth", &config, json!({})))?;
    print_json(&json!({
        "n_mask_voxels": anatomy.mask.count(),
        "n_streamlines": anatomy.streamlines.len(),
    }));
    Ok(())
}

pub fn build_graph(cfg: &RunConfig, mask_path: &Path, odf: Option<&Path>, uniform: bool, out: &Path) -> CliResult<()> {
    let mask = read_mask(mask_path)?;
    let (graph, report) = if uniform {
        let g = masked_uniform_graph(&mask)?;
        let report = g.report(&mask, Vec::new());
        (g, report)
    } else {
        let odf = odf.ok_or_else(|| CliError::input("--odf is required unless --uniform is given"))?;
        cfg.experiment.graph.validate().map_err(as_input)?;
        let field = read_odf_field(odf)?;
        build(&mask, &field, &cfg.experiment.graph)?
    };
    write_graph(&graph, out)?;
    let inputs = json!({
        "mask": path_str(mask_path),
        "odf": odf.map(path_str),
        "uniform": uniform,
    });
    write_json(&sidecar(out), &provenance("build-graph", cfg, inputs))?;
    print_json(&serde_json::to_value(&report).expect("report serialises"));
    Ok(())
}

pub fn phantom(cfg: &RunConfig, streamlines: &Path, grid_from: Option<&Path>, out: &Path) -> CliResult<()> {
    let seed = cfg.require_seed("phantom")?;
    let mut config = cfg.clone();
    config.experiment.phantom.rng_seed = seed;
    let grid = match grid_from {
        Some(p) => read_volume(p)?.grid(),
        None => config.experiment.anatomy.validate().map_err(as_input)?,
    };
    write_bundle(&config, streamlines, grid, out)
}

/// Regenerates a phantom bundle from the provenance record of an earlier run.
pub fn phantom_replay(record: &Path, out: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(record)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", record.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{} is not valid JSON: {e}", record.display())))?;
    if value["command"] != "phantom" {
        return Err(CliError::input(format!("{} is not a phantom provenance record", record.display())));
    }
    let config: RunConfig = serde_json::from_value(value["config"].clone())
        .map_err(|e| CliError::input(format!("config in {}: {e}", record.display())))?;
    let streamlines = value["inputs"]["streamlines"]
        .as_str()
        .ok_or_else(|| CliError::input("record lacks inputs.streamlines"))?;
    let grid: Grid = serde_json::from_value(value["inputs"]["grid"].clone())
        .map_err(|e| CliError::input(format!("record grid: {e}")))?;
    write_bundle(&config, Path::new(streamlines), grid, out)
}

fn write_bundle(config: &RunConfig, streamlines: &Path, grid: Grid, out: &Path) -> CliResult<()> {
    let exp = &config.experiment;
    exp.phantom.validate().map_err(as_input)?;
    exp.paradigm.validate().map_err(as_input)?;
    grid.validate().map_err(as_input)?;
    let set = read_streamlines(streamlines)?;
    let ph = generate_phantom(&set, &grid, &exp.phantom, &exp.paradigm)?;
    create_dir(out)?;
    let truth = Volume3D::new(grid, ph.pattern.ground_truth.iter().map(|&b| f64::from(u8::from(b))).collect())?;
    write_volume3d(&truth, out.join("truth.vol"))?;
    write_volume3d(&ph.pattern.amplitude, out.join("amplitude.vol"))?;
    write_volume4d(&ph.series, out.join("series.vol"))?;
    let inputs = json!({
        "streamlines": path_str(streamlines),
        "grid": grid,
    });
    write_json(&out.join("provenance.json"), &provenance("phantom", config, inputs))?;
    print_json(&json!({
        "n_active_voxels": ph.pattern.ground_truth.iter().filter(|&&b| b).count(),
        "selected_streamlines": ph.selected,
    }));
    Ok(())
}

/// Destination of each filtered output: `out` itself for a single
/// parameter, otherwise `out/<method>_<param>.vol`.
fn output_paths(out: &Path, label: &str, params: &[f64]) -> CliResult<Vec<PathBuf>> {
    if params.len() == 1 {
        return Ok(vec![out.to_path_buf()]);
    }
    create_dir(out)?;
    Ok(params.iter().map(|p| out.join(format!("{label}_{p}.vol"))).collect())
}

fn check_grid(a: Grid, b: Grid) -> CliResult<()> {
    if a.dims != b.dims {
        return Err(CliError::input(format!("grid dims {:?} and {:?} differ", a.dims, b.dims)));
    }
    Ok(())
}

fn graph_filter(cfg: &RunConfig, graph: &VoxelGraph, series: &AnyVolume) -> CliResult<Vec<AnyVolume>> {
    let exp = &cfg.experiment;
    if exp.cheb_order < 1 {
        return Err(CliError::input("--cheb-order must be at least 1"));
    }
    let approxes = exp
        .taus
        .iter()
        .map(|&tau| {
            let kernel = HeatKernel::new(tau).map_err(as_input)?;
            Ok(cheb_coefficients(&kernel, exp.cheb_order, LAMBDA_MAX_BOUND)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    check_grid(graph.grid(), series.grid())?;
    let grid = graph.grid();
    let mut on_graph = vec![false; grid.n_voxels()];
    for &v in graph.vertex_voxels() {
        on_graph[v] = true;
    }
    let mask = Mask::new(grid, on_graph)?;
    Ok(match series {
        AnyVolume::Vol4(s) => filter_timeseries_multi(graph, &approxes, s, &mask)?
            .into_iter()
            .map(AnyVolume::Vol4)
            .collect(),
        AnyVolume::Vol3(v) => {
            let verts = graph.vertex_voxels();
            let block: Vec<f64> = verts.iter().map(|&i| v.data[i]).collect();
            cheb_filter_block(graph, &approxes, &block, 1)?
                .into_iter()
                .map(|f| {
                    let mut out = v.clone();
                    for (&i, x) in verts.iter().zip(f) {
                        out.data[i] = x;
                    }
                    AnyVolume::Vol3(out)
                })
                .collect()
        }
    })
}

pub fn filter(
    cfg: &RunConfig,
    series_path: &Path,
    method: Method,
    graph_path: Option<&Path>,
    mask_path: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    let series = read_volume(series_path)?;
    let (label, params, outputs) = match method {
        Method::Graph => {
            let p = graph_path.ok_or_else(|| CliError::input("method `graph` needs --graph"))?;
            let graph = read_graph(p)?;
            ("graph", cfg.experiment.taus.clone(), graph_filter(cfg, &graph, &series)?)
        }
        Method::UniformGraph => {
            let p = mask_path.ok_or_else(|| CliError::input("method `uniform-graph` needs --mask"))?;
            let graph = masked_uniform_graph(&read_mask(p)?)?;
            ("uniform-graph", cfg.experiment.taus.clone(), graph_filter(cfg, &graph, &series)?)
        }
        Method::Gaussian => {
            let fwhms = cfg.experiment.fwhms_mm.clone();
            let outputs = fwhms
                .iter()
                .map(|&f| {
                    let spec = GaussianSpec::new(f).map_err(as_input)?;
                    Ok(match &series {
                        AnyVolume::Vol3(v) => AnyVolume::Vol3(gaussian_filter(v, &spec)?),
                        AnyVolume::Vol4(v) => AnyVolume::Vol4(gaussian_filter_4d(v, &spec)?),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            ("gaussian", fwhms, outputs)
        }
    };
    if params.is_empty() {
        return Err(CliError::input(format!("no parameters given for method `{label}`")));
    }
    let paths = output_paths(out, label, &params)?;
    for ((path, vol), p) in paths.iter().zip(&outputs).zip(&params) {
        write_volume(vol, path)?;
        let inputs = json!({
            "series": path_str(series_path),
            "graph": graph_path.map(path_str),
            "mask": mask_path.map(path_str),
            "method": label,
            "param": p,
        });
        write_json(&sidecar(path), &provenance("filter", cfg, inputs))?;
    }
    print_json(&json!({
        "method": label,
        "outputs": paths.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
    }));
    Ok(())
}

pub fn analyze(cfg: &RunConfig, series_path: &Path, mask_path: Option<&Path>, out: &Path) -> CliResult<()> {
    let paradigm = &cfg.experiment.paradigm;
    paradigm.validate().map_err(as_input)?;
    let series = read_volume(series_path)?.into_4d()?;
    let design = DesignMatrix::new(design_regressor(paradigm)?)?;
    let mask = mask_path.map(read_mask).transpose()?;
    let fit = glm_fit(&series, &design, mask.as_ref())?;
    let tmap = t_map(&fit);
    write_volume3d(&tmap.volume, out)?;
    let inputs = json!({
        "series": path_str(series_path),
        "mask": mask_path.map(path_str),
    });
    write_json(&sidecar(out), &provenance("analyze", cfg, inputs))?;
    print_json(&json!({
        "dof": tmap.dof,
        "n_scored": tmap.population().len(),
    }));
    Ok(())
}

pub fn roc(
    cfg: &RunConfig,
    tmaps: &[PathBuf],
    truths: &[PathBuf],
    mask_path: Option<&Path>,
    filter: &str,
    param: Option<f64>,
    out: &Path,
) -> CliResult<()> {
    if tmaps.len() != truths.len() {
        return Err(CliError::input(format!(
            "{} t-maps but {} ground-truth volumes",
            tmaps.len(),
            truths.len()
        )));
    }
    let n_thresholds = cfg.experiment.n_thresholds;
    if n_thresholds < 2 {
        return Err(CliError::input("n_thresholds must be at least 2"));
    }
    let mask = mask_path.map(read_mask).transpose()?;
    let mut curves = Vec::with_capacity(tmaps.len());
    for (tp, gp) in tmaps.iter().zip(truths) {
        let t = read_volume(tp)?.into_3d()?;
        let g = read_volume(gp)?.into_3d()?;
        check_grid(t.grid, g.grid)?;
        let mut tmap = TMap { volume: t, dof: 0 };
        if let Some(m) = &mask {
            tmap = mask_tmap(&tmap, m)?;
        }
        let truth: Vec<bool> = g.data.iter().map(|&x| x > 0.0).collect();
        curves.push(roc_curve(&tmap, &truth, n_thresholds)?);
    }
    let avg = average_roc(&curves)?;
    std::fs::write(out, avg.to_csv()).map_err(|e| CliError::Input {
        kind: "io",
        message: format!("cannot write {}: {e}", out.display()),
    })?;
    let summary = json!({
        "filter": filter,
        "param": param,
        "auc": avg.auc,
        "n_phantoms": curves.len(),
        "per_phantom_auc": curves.iter().map(|c| c.auc).collect::<Vec<_>>(),
    });
    let summary_path = if out.extension().is_some_and(|e| e == "json") {
        sidecar(out).with_extension("summary.json")
    } else {
        out.with_extension("json")
    };
    write_json(&summary_path, &summary)?;
    let inputs = json!({
        "tmaps": tmaps.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
        "truths": truths.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
        "mask": mask_path.map(path_str),
    });
    write_json(&sidecar(out), &provenance("roc", cfg, inputs))?;
    print_json(&summary);
    Ok(())
}

pub fn pipeline(loaded: &Loaded, out: &Path) -> CliResult<()> {
    let mut config = loaded.config.clone();
    let exp = &mut config.experiment;
    match config.seed {
        Some(base) => {
            let n = exp.seeds.len() as u64;
            exp.seeds = (base..base + n).collect();
        }
        None if loaded.explicit_seeds => {}
        None => {
            return Err(CliError::input(
                "`pipeline` is stochastic and needs --seed (or `seed`/`seeds` in the config)",
            ))
        }
    }
    exp.validate().map_err(as_input)?;
    let result = run_experiment(exp)?;
    result.write_outputs(out)?;
    write_json(&out.join("provenance.json"), &provenance("pipeline", &config, json!({})))?;
    print_json(&json!({
        "methods": result
            .methods
            .iter()
            .map(|m| json!({ "label": m.label(), "auc": m.auc }))
            .collect::<Vec<_>>(),
    }));
    Ok(())
}
