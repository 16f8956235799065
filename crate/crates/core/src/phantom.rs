//! Semi-synthetic activation phantoms.
//!
//! A phantom picks streamlines, spreads an activation along each one from
//! a random start point, combines the per-streamline patterns into one
//! ground-truth amplitude map and modulates it with a block-design
//! regressor plus white Gaussian noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::rng::CounterRng;
use crate::streamline::{arc_lengths, closest_arc, point_at, StreamlineSet};
use crate::volume::{Grid, Volume3D, Volume4D};

const SELECT_STREAM: u64 = 1;
const START_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Shape of the activation as a function of arc-length distance `d` from
/// the start point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ActivationProfile {
    /// `exp(-d^2 / (2 sigma^2))`
    #[default]
    Gaussian,
    /// `exp(-|d| / sigma)`
    Exponential,
}

impl ActivationProfile {
    #[inline]
    pub fn eval(self, d: f64, sigma: f64) -> f64 {
        match self {
            ActivationProfile::Gaussian => libm::exp(-(d * d) / (2.0 * sigma * sigma)),
            ActivationProfile::Exponential => libm::exp(-d.abs() / sigma),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationPattern {
    /// Amplitudes in `[0, 1]`.
    pub amplitude: Volume3D,
    /// `amplitude > floor`.
    pub ground_truth: Vec<bool>,
    pub floor: f64,
}

impl ActivationPattern {
    pub fn from_amplitude(amplitude: Volume3D, floor: f64) -> Result<Self> {
        if let Some(a) = amplitude.data.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Invariant(format!("amplitude {a} outside [0, 1]")));
        }
        let ground_truth = amplitude.data.iter().map(|&a| a > floor).collect();
        Ok(ActivationPattern {
            amplitude,
            ground_truth,
            floor,
        })
    }

    pub fn grid(&self) -> Grid {
        self.amplitude.grid
    }
}

/// Rasterised activation of one streamline.
///
/// The start point is drawn at arc length `start_fraction * length` and
/// then moved to the streamline point closest to the centre of its voxel,
/// so distances are measured from that voxel. The polyline is sampled at
/// steps of the smallest voxel size anchored at the start point, plus both
/// endpoints; each sample goes to its nearest voxel, which keeps the
/// maximum profile value it receives.
pub fn streamline_activation(
    line: &[[f64; 3]],
    grid: &Grid,
    sigma_mm: f64,
    profile: ActivationProfile,
    start_fraction: f64,
    floor: f64,
) -> Result<ActivationPattern> {
    if line.len() < 2 {
        return Err(Error::Domain("streamline needs at least 2 points".into()));
    }
    if !(sigma_mm > 0.0) {
        return Err(Error::Domain(format!("diffusion sigma must be > 0, got {sigma_mm}")));
    }
    let arcs = arc_lengths(line);
    let total = *arcs.last().unwrap();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Domain("streamline has zero length".into()));
    }
    let drawn = start_fraction.clamp(0.0, 1.0) * total;
    let s0 = match grid.nearest_voxel(point_at(line, &arcs, drawn)) {
        Some(v) => {
            let c = grid.coords(v);
            let centre = [0, 1, 2].map(|a| c[a] as f64 * grid.voxel_size_mm[a]);
            closest_arc(line, &arcs, centre)
        }
        None => drawn,
    };
    let step = grid
        .voxel_size_mm
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let mut amp = Volume3D::zeros(*grid);
    let mut deposit = |s: f64| {
        if let Some(v) = grid.nearest_voxel(point_at(line, &arcs, s)) {
            let a = profile.eval(s - s0, sigma_mm);
            if a > amp.data[v] {
                amp.data[v] = a;
            }
        }
    };
    let k_lo = -((s0 / step).floor() as i64);
    let k_hi = ((total - s0) / step).floor() as i64;
    for k in k_lo..=k_hi {
        deposit(s0 + k as f64 * step);
    }
    deposit(0.0);
    deposit(total);
    ActivationPattern::from_amplitude(amp, floor)
}

/// Voxelwise maximum of patterns on a shared grid.
pub fn combine_patterns(patterns: &[ActivationPattern], floor: f64) -> Result<ActivationPattern> {
    let first = patterns
        .first()
        .ok_or_else(|| Error::Domain("no patterns to combine".into()))?;
    let grid = first.grid();
    let mut data = first.amplitude.data.clone();
    for p in &patterns[1..] {
        if p.grid() != grid {
            return Err(Error::Shape("patterns are on different grids".into()));
        }
        for (d, &a) in data.iter_mut().zip(&p.amplitude.data) {
            *d = d.max(a);
        }
    }
    ActivationPattern::from_amplitude(Volume3D::new(grid, data)?, floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockParadigm {
    pub n_frames: usize,
    pub tr_seconds: f64,
    pub block_off_frames: usize,
    pub block_on_frames: usize,
    pub amplitude_scale: f64,
}

impl Default for BlockParadigm {
    fn default() -> Self {
        BlockParadigm {
            n_frames: 200,
            tr_seconds: 1.0,
            block_off_frames: 10,
            block_on_frames: 10,
            amplitude_scale: 1.0,
        }
    }
}

impl BlockParadigm {
    pub fn validate(&self) -> Result<()> {
        if self.block_on_frames < 1 || self.block_off_frames < 1 {
            return Err(Error::Domain("on and off blocks need at least one frame".into()));
        }
        if self.n_frames < 2 * (self.block_on_frames + self.block_off_frames) {
            return Err(Error::Domain(format!(
                "{} frames cannot hold two on/off cycles",
                self.n_frames
            )));
        }
        if !(self.tr_seconds > 0.0) {
            return Err(Error::Domain("TR must be positive".into()));
        }
        if !self.amplitude_scale.is_finite() {
            return Err(Error::Domain("amplitude scale must be finite".into()));
        }
        Ok(())
    }
}

/// Off/on boxcar starting with an off block, scaled by `amplitude_scale`.
pub fn block_regressor(paradigm: &BlockParadigm) -> Result<Vec<f64>> {
    paradigm.validate()?;
    let period = paradigm.block_off_frames + paradigm.block_on_frames;
    Ok((0..paradigm.n_frames)
        .map(|t| {
            if t % period < paradigm.block_off_frames {
                0.0
            } else {
                paradigm.amplitude_scale
            }
        })
        .collect())
}

/// Unit-height boxcar of the paradigm, the task column of the analysis
/// design. Fitting a phantom against it recovers `amplitude * amplitude_scale`.
pub fn design_regressor(paradigm: &BlockParadigm) -> Result<Vec<f64>> {
    block_regressor(&BlockParadigm {
        amplitude_scale: 1.0,
        ..*paradigm
    })
}

/// Regressor with its mean removed, for use as a GLM column.
pub fn centered(regressor: &[f64]) -> Vec<f64> {
    let mean = regressor.iter().sum::<f64>() / regressor.len() as f64;
    regressor.iter().map(|x| x - mean).collect()
}

/// `y_v(t) = amplitude_v * x(t) + noise_sigma * z(v, t)`, with `z` drawn
/// from the counter-based generator (stream 3, counter `v * n_frames + t`).
pub fn synthesize_timeseries(
    pattern: &ActivationPattern,
    regressor: &[f64],
    tr_seconds: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<Volume4D> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let grid = pattern.grid();
    let nvox = grid.n_voxels();
    let nt = regressor.len();
    let rng = CounterRng::new(seed, NOISE_STREAM);
    let amp = &pattern.amplitude.data;
    let mut data = vec![0.0; nvox * nt];
    par::for_each_row(&mut data, nvox, |t, frame| {
        let x = regressor[t];
        for (v, y) in frame.iter_mut().enumerate() {
            *y = amp[v] * x;
            if noise_sigma > 0.0 {
                *y += noise_sigma * rng.normal((v * nt + t) as u64);
            }
        }
    });
    Volume4D::new(grid, nt, tr_seconds, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub n_streamlines: usize,
    pub diffusion_sigma_mm: f64,
    pub noise_sigma: f64,
    pub rng_seed: u64,
    pub activation_floor: f64,
    pub profile: ActivationProfile,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            n_streamlines: 100,
            diffusion_sigma_mm: 10.0,
            noise_sigma: 1.0,
            rng_seed: 0,
            activation_floor: 0.1,
            profile: ActivationProfile::Gaussian,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_streamlines < 1 {
            return Err(Error::Domain("need at least one streamline".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Domain("noise sigma must be >= 0".into()));
        }
        if !(self.diffusion_sigma_mm > 0.0) {
            return Err(Error::Domain("diffusion sigma must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub pattern: ActivationPattern,
    pub series: Volume4D,
    /// Indices into the streamline set, in selection order.
    pub selected: Vec<usize>,
}

/// Seeded choice of `n` distinct indices out of `len` (partial Fisher-Yates).
pub fn select_streamlines(len: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > len {
        return Err(Error::Domain(format!(
            "asked for {n} streamlines, only {len} available"
        )));
    }
    let rng = CounterRng::new(seed, SELECT_STREAM);
    let mut idx: Vec<usize> = (0..len).collect();
    for i in 0..n {
        let span = (len - i) as f64;
        let j = i + ((rng.uniform(i as u64) * span) as usize).min(len - i - 1);
        idx.swap(i, j);
    }
    idx.truncate(n);
    Ok(idx)
}

/// Full phantom: a pure function of its inputs.
pub fn generate_phantom(
    streamlines: &StreamlineSet,
    grid: &Grid,
    spec: &PhantomSpec,
    paradigm: &BlockParadigm,
) -> Result<Phantom> {
    spec.validate()?;
    let regressor = block_regressor(paradigm)?;
    let selected = select_streamlines(streamlines.len(), spec.n_streamlines, spec.rng_seed)?;
    let starts = CounterRng::new(spec.rng_seed, START_STREAM);
    let patterns = par::map_range(selected.len(), |i| {
        streamline_activation(
            &streamlines.streamlines[selected[i]],
            grid,
            spec.diffusion_sigma_mm,
            spec.profile,
            starts.uniform(i as u64),
            spec.activation_floor,
        )
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pattern = combine_patterns(&patterns, spec.activation_floor)?;
    let series = synthesize_timeseries(
        &pattern,
        &regressor,
        paradigm.tr_seconds,
        spec.noise_sigma,
        spec.rng_seed,
    )?;
    Ok(Phantom {
        pattern,
        series,
        selected,
    })
}
