//! GLM activation maps, thresholding and ROC scoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::stats::t_two_sided_p;
use crate::volume::{Grid, Mask, Volume3D, Volume4D};

/// Residual sums of squares below this fraction of `||y||^2` count as an
/// exact fit.
const EXACT_FIT_REL: f64 = 1e-24;
pub const DEFAULT_N_THRESHOLDS: usize = 200;
pub const AVERAGE_GRID_POINTS: usize = 1001;

/// Two-column design `[regressor, intercept]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    regressor: Vec<f64>,
    /// `(X^T X)^{-1}` for the column order above.
    xtx_inv: [[f64; 2]; 2],
    /// `||x - mean(x)||`, the scale against which vanishing effects are judged.
    centered_norm: f64,
}

impl DesignMatrix {
    pub fn new(regressor: Vec<f64>) -> Result<Self> {
        let n = regressor.len();
        if n <= 2 {
            return Err(Error::Design(format!(
                "{n} frames cannot support 2 columns plus residual degrees of freedom"
            )));
        }
        if regressor.iter().any(|x| !x.is_finite()) {
            return Err(Error::Design("regressor has non-finite values".into()));
        }
        let sxx: f64 = regressor.iter().map(|x| x * x).sum();
        let sx: f64 = regressor.iter().sum();
        let nf = n as f64;
        let det = nf * sxx - sx * sx;
        if !(det > 1e-12 * nf * sxx) {
            return Err(Error::Design("regressor is constant; design is rank deficient".into()));
        }
        let mean = sx / nf;
        let centered_norm = regressor.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt();
        Ok(DesignMatrix {
            regressor,
            xtx_inv: [[nf / det, -sx / det], [-sx / det, sxx / det]],
            centered_norm,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.regressor.len()
    }

    pub fn dof(&self) -> usize {
        self.n_frames() - 2
    }

    pub fn regressor(&self) -> &[f64] {
        &self.regressor
    }

    /// `c^T (X^T X)^{-1} c` for the task contrast `c = (1, 0)`.
    pub fn task_variance_factor(&self) -> f64 {
        self.xtx_inv[0][0]
    }
}

/// Per-voxel OLS fit. Voxels outside the fitted mask hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub grid: Grid,
    pub beta_task: Vec<f64>,
    pub beta_intercept: Vec<f64>,
    /// `||y - X beta||^2 / dof`; exactly 0 for exact fits.
    pub residual_variance: Vec<f64>,
    pub dof: usize,
    pub variance_factor: f64,
}

pub fn glm_fit(series: &Volume4D, design: &DesignMatrix, mask: Option<&Mask>) -> Result<GlmFit> {
    if series.n_frames != design.n_frames() {
        return Err(Error::Shape(format!(
            "series has {} frames, design has {}",
            series.n_frames,
            design.n_frames()
        )));
    }
    if let Some(m) = mask {
        if m.grid.dims != series.grid.dims {
            return Err(Error::Shape("mask and series grids differ".into()));
        }
    }
    let nvox = series.grid.n_voxels();
    let fits: Vec<(f64, f64, f64)> = par::map_range(nvox, |v| {
        if mask.is_some_and(|m| !m.contains(v)) {
            return (f64::NAN, f64::NAN, f64::NAN);
        }
        fit_one(design, |t| series.data[t * nvox + v])
    });
    Ok(GlmFit {
        grid: series.grid,
        beta_task: fits.iter().map(|f| f.0).collect(),
        beta_intercept: fits.iter().map(|f| f.1).collect(),
        residual_variance: fits.iter().map(|f| f.2).collect(),
        dof: design.dof(),
        variance_factor: design.task_variance_factor(),
    })
}

/// OLS fit of one series: `(beta_task, beta_intercept, residual_variance)`.
fn fit_one(design: &DesignMatrix, y: impl Fn(usize) -> f64) -> (f64, f64, f64) {
    let x = design.regressor();
    let nt = x.len();
    let inv = design.xtx_inv;
    let (mut sxy, mut sy, mut syy) = (0.0, 0.0, 0.0);
    for t in 0..nt {
        let yt = y(t);
        sxy += x[t] * yt;
        sy += yt;
        syy += yt * yt;
    }
    let mut b_task = inv[0][0] * sxy + inv[0][1] * sy;
    let b0 = inv[1][0] * sxy + inv[1][1] * sy;
    let mut rss = 0.0;
    for t in 0..nt {
        let r = y(t) - b_task * x[t] - b0;
        rss += r * r;
    }
    if rss <= EXACT_FIT_REL * syy {
        rss = 0.0;
        if b_task.abs() * design.centered_norm <= 1e-12 * syy.sqrt() {
            b_task = 0.0;
        }
    }
    (b_task, b0, rss / design.dof() as f64)
}

fn t_value(b: f64, s2: f64, variance_factor: f64) -> f64 {
    if b.is_nan() {
        f64::NAN
    } else if s2 == 0.0 {
        if b == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(b)
        }
    } else {
        b / (s2 * variance_factor).sqrt()
    }
}

/// t-statistics for a block of series stored row by row
/// (`rows[i * n_frames + t]`).
pub fn t_values_rows(rows: &[f64], design: &DesignMatrix) -> Result<Vec<f64>> {
    let nt = design.n_frames();
    if rows.len() % nt != 0 {
        return Err(Error::Shape(format!(
            "{} values do not split into rows of {nt} frames",
            rows.len()
        )));
    }
    let vf = design.task_variance_factor();
    Ok(par::map_range(rows.len() / nt, |i| {
        let (b, _, s2) = fit_one(design, |t| rows[i * nt + t]);
        t_value(b, s2, vf)
    }))
}

/// t-statistics on an analysis mask. Voxels outside it are NaN; exact fits
/// with a nonzero effect are `+inf` (or `-inf` for negative effects).
#[derive(Debug, Clone, PartialEq)]
pub struct TMap {
    pub volume: Volume3D,
    pub dof: usize,
}

impl TMap {
    /// Voxels scored by this map (non-NaN), ascending.
    pub fn population(&self) -> Vec<usize> {
        self.volume
            .data
            .iter()
            .enumerate()
            .filter_map(|(i, t)| (!t.is_nan()).then_some(i))
            .collect()
    }
}

pub fn t_map(fit: &GlmFit) -> TMap {
    let data = fit
        .beta_task
        .iter()
        .zip(&fit.residual_variance)
        .map(|(&b, &s2)| t_value(b, s2, fit.variance_factor))
        .collect();
    TMap {
        volume: Volume3D {
            grid: fit.grid,
            data,
        },
        dof: fit.dof,
    }
}

/// Restricts a map to `mask` (NaN elsewhere).
pub fn mask_tmap(tmap: &TMap, mask: &Mask) -> Result<TMap> {
    if mask.grid.dims != tmap.volume.grid.dims {
        return Err(Error::Shape("mask and t-map grids differ".into()));
    }
    let mut out = tmap.clone();
    for (t, &m) in out.volume.data.iter_mut().zip(&mask.voxels) {
        if !m {
            *t = f64::NAN;
        }
    }
    Ok(out)
}

pub fn threshold_fixed(tmap: &TMap, t0: f64) -> Vec<bool> {
    tmap.volume.data.iter().map(|&t| !t.is_nan() && t >= t0).collect()
}

/// Benjamini-Hochberg step-up on two-sided p-values over the map's population.
pub fn threshold_fdr(tmap: &TMap, q: f64) -> Result<Vec<bool>> {
    let pop = tmap.population();
    let p: Vec<f64> = pop
        .iter()
        .map(|&v| t_two_sided_p(tmap.volume.data[v], tmap.dof as f64))
        .collect();
    let reject = bh_reject(&p, q)?;
    let mut out = vec![false; tmap.volume.data.len()];
    for (&v, r) in pop.iter().zip(reject) {
        out[v] = r;
    }
    Ok(out)
}

/// Rejection set of the Benjamini-Hochberg procedure at level `q`.
pub fn bh_reject(p: &[f64], q: f64) -> Result<Vec<bool>> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("FDR level {q} outside (0, 1)")));
    }
    let m = p.len();
    let mut sorted: Vec<f64> = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cutoff = (1..=m)
        .rev()
        .find(|&k| sorted[k - 1] <= k as f64 * q / m as f64)
        .map(|k| sorted[k - 1]);
    Ok(match cutoff {
        Some(c) => p.iter().map(|&x| x <= c).collect(),
        None => vec![false; m],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

impl RocCurve {
    fn from_points(fpr: Vec<f64>, tpr: Vec<f64>) -> Self {
        let auc = trapezoid(&fpr, &tpr);
        RocCurve { fpr, tpr, auc }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("fpr,tpr\n");
        for (f, t) in self.fpr.iter().zip(&self.tpr) {
            s.push_str(&format!("{f},{t}\n"));
        }
        s
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) / 2.0)
        .sum()
}

/// Multi-threshold ROC over the map's population.
///
/// Thresholds are the map values at ranks `ceil(M^(j / (n - 1)))`,
/// `j = 0..n`, of the `M` finite values sorted in descending order, so the
/// low-FPR end is sampled densely. A voxel is detected when `t >= threshold`.
/// The curve starts at (0, 0) and ends at (1, 1).
pub fn roc_curve(tmap: &TMap, truth: &[bool], n_thresholds: usize) -> Result<RocCurve> {
    if truth.len() != tmap.volume.data.len() {
        return Err(Error::Shape("ground truth and t-map sizes differ".into()));
    }
    if n_thresholds < 2 {
        return Err(Error::Domain("need at least 2 thresholds".into()));
    }
    let mut scored: Vec<(f64, bool)> = tmap
        .population()
        .into_iter()
        .map(|v| (tmap.volume.data[v], truth[v]))
        .collect();
    let n_pos = scored.iter().filter(|s| s.1).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateRoc(format!(
            "{n_pos} positive and {n_neg} negative voxels"
        )));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    // cumulative true/false positives among the first k voxels
    let mut cum_tp = Vec::with_capacity(scored.len() + 1);
    cum_tp.push(0usize);
    for s in &scored {
        cum_tp.push(cum_tp.last().unwrap() + s.1 as usize);
    }
    let finite: Vec<f64> = scored.iter().map(|s| s.0).filter(|t| t.is_finite()).collect();
    let m = finite.len();
    let mut ranks: Vec<usize> = (0..n_thresholds)
        .map(|j| {
            let r = (m as f64).powf(j as f64 / (n_thresholds - 1) as f64).ceil() as usize;
            r.clamp(1, m.max(1))
        })
        .collect();
    ranks.dedup();

    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let mut push = |k: usize| {
        let tp = cum_tp[k];
        let fp = k - tp;
        let point = (fp as f64 / n_neg as f64, tp as f64 / n_pos as f64);
        if (fpr.last().copied(), tpr.last().copied()) != (Some(point.0), Some(point.1)) {
            fpr.push(point.0);
            tpr.push(point.1);
        }
    };
    // exact fits with t = +inf form their own operating point
    let n_inf = scored.partition_point(|s| s.0 == f64::INFINITY);
    if n_inf > 0 {
        push(n_inf);
    }
    if m > 0 {
        for r in ranks {
            let thr = finite[r - 1];
            // number of voxels with t >= thr
            let k = scored.partition_point(|s| s.0 >= thr);
            push(k);
        }
    }
    push(scored.len());
    Ok(RocCurve::from_points(fpr, tpr))
}

/// Mean of several curves after resampling each onto a 1001-point FPR grid.
pub fn average_roc(curves: &[RocCurve]) -> Result<RocCurve> {
    if curves.is_empty() {
        return Err(Error::Domain("no ROC curves to average".into()));
    }
    let n = AVERAGE_GRID_POINTS;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut mean = vec![0.0; n];
    for c in curves {
        for (m, &g) in mean.iter_mut().zip(&grid) {
            *m += interpolate_tpr(c, g);
        }
    }
    mean.iter_mut().for_each(|m| *m /= curves.len() as f64);
    let (mut fpr, mut tpr) = (grid, mean);
    if tpr[0] > 0.0 {
        fpr.insert(0, 0.0);
        tpr.insert(0, 0.0);
    }
    Ok(RocCurve::from_points(fpr, tpr))
}

/// TPR at false-positive rate `g`: linear between the last point with
/// `fpr <= g` (the highest one on a vertical run) and the next point.
pub fn interpolate_tpr(curve: &RocCurve, g: f64) -> f64 {
    let j = curve.fpr.partition_point(|&f| f <= g);
    if j == 0 {
        return 0.0;
    }
    let j = j - 1;
    if curve.fpr[j] == g || j + 1 == curve.fpr.len() {
        return curve.tpr[j];
    }
    let (f0, f1) = (curve.fpr[j], curve.fpr[j + 1]);
    let (t0, t1) = (curve.tpr[j], curve.tpr[j + 1]);
    t0 + (t1 - t0) * (g - f0) / (f1 - f0)
}
