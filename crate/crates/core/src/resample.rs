//! Interpolation by convolution on regular grids.
//!
//! A trivariate interpolant with a separable basis is evaluated one axis at a
//! time: first along `i` for every `(j, k)` row, then along `j`, then along
//! `k`. Because source and target grids share their field of view, the
//! position of a target node in source-node units is the rational number
//! `t (n_src - 1) / (n_tgt - 1)`, so interval indices and exact-node hits are
//! computed in integer arithmetic.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid3, LabelVolume, ScalarVolume};
use crate::kernels::Kernel;

/// Interval index and fractional offset of target node `t` in source-node units.
pub(crate) fn axis_position(t: usize, n_src: usize, n_tgt: usize) -> (usize, u64, u64) {
    let num = t as u64 * (n_src as u64 - 1);
    let den = n_tgt as u64 - 1;
    ((num / den) as usize, num % den, den)
}

/// Normalized weights for every output index along one axis.
#[derive(Clone, Debug)]
struct AxisWeights {
    entries: Vec<(usize, Vec<f64>)>,
}

impl AxisWeights {
    fn interpolation(kernel: &Kernel, n_src: usize, n_tgt: usize) -> Result<Self> {
        let entries = (0..n_tgt)
            .map(|t| {
                let (k, rem, den) = axis_position(t, n_src, n_tgt);
                let delta = rem as f64 / den as f64;
                let (first, raw, sum) = kernel.raw_window(n_src - 1, k, delta)?;
                Ok((first, raw.into_iter().map(|w| w / sum).collect()))
            })
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }

    /// Truncated discrete gaussian with replicated edges.
    fn gaussian_blur(n: usize, sigma: f64) -> Self {
        let radius = (3.0 * sigma).ceil() as isize;
        let taps: Vec<f64> = (-radius..=radius).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let total: f64 = taps.iter().sum();
        let entries = (0..n as isize)
            .map(|t| {
                let first = (t - radius).max(0) as usize;
                let last = (t + radius).min(n as isize - 1) as usize;
                let mut w = vec![0.0; last - first + 1];
                for (o, tap) in taps.iter().enumerate() {
                    let s = (t - radius + o as isize).clamp(0, n as isize - 1) as usize;
                    w[s - first] += tap / total;
                }
                (first, w)
            })
            .collect();
        Self { entries }
    }

    fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Contracts `data` (dims `dims`, i fastest) along `axis` with `weights`.
fn apply_axis(data: &[f64], dims: [usize; 3], axis: usize, weights: &AxisWeights) -> (Vec<f64>, [usize; 3]) {
    let inner: usize = dims[..axis].iter().product();
    let n_src = dims[axis];
    let n_tgt = weights.len();
    let mut out_dims = dims;
    out_dims[axis] = n_tgt;
    let mut out = vec![0.0; out_dims.iter().product()];
    let min_len = (4096 / inner).max(1);
    out.par_chunks_mut(inner).with_min_len(min_len).enumerate().for_each(|(c, row)| {
        let (o, t) = (c / n_tgt, c % n_tgt);
        let (first, w) = &weights.entries[t];
        let base = o * n_src * inner;
        for (s, &ws) in w.iter().enumerate() {
            let src = &data[base + (first + s) * inner..base + (first + s + 1) * inner];
            for (r, &x) in row.iter_mut().zip(src) {
                *r += ws * x;
            }
        }
    });
    (out, out_dims)
}

fn apply_separable(volume: &ScalarVolume, target: Grid3, axes: [AxisWeights; 3]) -> Result<ScalarVolume> {
    let mut data = volume.values().to_vec();
    let mut dims = volume.grid().counts();
    for (axis, w) in axes.iter().enumerate() {
        let (next, next_dims) = apply_axis(&data, dims, axis, w);
        data = next;
        dims = next_dims;
    }
    ScalarVolume::new(target, data)
}

/// Source grid, target grid and kernel of a scalar resampling.
#[derive(Clone, Debug)]
pub struct ResamplePlan {
    source: Grid3,
    target: Grid3,
    kernel: Kernel,
    axes: [AxisWeights; 3],
}

impl ResamplePlan {
    pub fn new(source: Grid3, target: Grid3, kernel: Kernel) -> Result<Self> {
        if !source.same_fov(&target) {
            return Err(Error::FovMismatch);
        }
        let (s, t) = (source.counts(), target.counts());
        let axes = [
            AxisWeights::interpolation(&kernel, s[0], t[0])?,
            AxisWeights::interpolation(&kernel, s[1], t[1])?,
            AxisWeights::interpolation(&kernel, s[2], t[2])?,
        ];
        Ok(Self { source, target, kernel, axes })
    }

    pub fn source(&self) -> &Grid3 {
        &self.source
    }

    pub fn target(&self) -> &Grid3 {
        &self.target
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn apply(&self, volume: &ScalarVolume) -> Result<ScalarVolume> {
        if !volume.grid().same_grid(&self.source) {
            return Err(Error::GridMismatch("volume is not on the plan's source grid".into()));
        }
        apply_separable(volume, self.target, self.axes.clone())
    }
}

/// Univariate interpolant of `samples` (nodes `i / N`, `i = 0..=N`) at `x`.
///
/// Only the nodes within `a` of `x` contribute; at a node the sample itself
/// is returned.
pub fn interp1d(samples: &[f64], kernel: &Kernel, x: f64) -> Result<f64> {
    let n = samples.len().saturating_sub(1);
    let a = kernel.support_radius();
    if n < 2 * a {
        return Err(Error::Domain(format!("need N >= {} intervals, got {n}", 2 * a)));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    let u = x * n as f64;
    let k = (u.floor() as usize).min(n);
    let delta = if k == n { 0.0 } else { u - k as f64 };
    interp_at(samples, kernel, k, delta)
}

/// Interpolant at `x = (k + delta) / N`, with `N = samples.len() - 1`.
pub fn interp_at(samples: &[f64], kernel: &Kernel, k: usize, delta: f64) -> Result<f64> {
    let n = samples.len().saturating_sub(1);
    let (first, raw, sum) = kernel.raw_window(n, k, delta)?;
    // offsets from the first sample make constant windows exact
    let base = samples[first];
    let num: f64 = raw.iter().zip(&samples[first..]).map(|(w, f)| w * (f - base)).sum();
    Ok(base + num / sum)
}

/// Resamples `volume` onto `target` (same field of view) with `kernel`.
pub fn resample_scalar(volume: &ScalarVolume, target: &Grid3, kernel: &Kernel) -> Result<ScalarVolume> {
    ResamplePlan::new(*volume.grid(), *target, *kernel)?.apply(volume)
}

/// Separable gaussian smoothing with standard deviation `sigma_vox` in
/// voxels, truncated at `3 sigma`, edges replicated.
pub fn gaussian_blur(volume: &ScalarVolume, sigma_vox: f64) -> Result<ScalarVolume> {
    if !(sigma_vox.is_finite() && sigma_vox > 0.0) {
        return Err(Error::Domain(format!("blur sigma must be positive, got {sigma_vox}")));
    }
    let c = volume.grid().counts();
    let axes = c.map(|n| AxisWeights::gaussian_blur(n, sigma_vox));
    apply_separable(volume, *volume.grid(), axes)
}

fn nearest_indices(n_src: usize, n_tgt: usize) -> Vec<usize> {
    (0..n_tgt)
        .map(|t| {
            let (k, rem, den) = axis_position(t, n_src, n_tgt);
            // the midpoint belongs to the lower node
            if 2 * rem > den {
                k + 1
            } else {
                k
            }
        })
        .collect()
}

/// Each target node takes the label of its nearest source node.
pub fn resample_labels_nearest(labels: &LabelVolume, target: &Grid3) -> Result<LabelVolume> {
    let source = labels.grid();
    if !source.same_fov(target) {
        return Err(Error::FovMismatch);
    }
    let (s, t) = (source.counts(), target.counts());
    let idx = [0, 1, 2].map(|d| nearest_indices(s[d], t[d]));
    let out = (0..target.len())
        .into_par_iter()
        .map(|n| {
            let [i, j, k] = target.unravel(n);
            labels.get(idx[0][i], idx[1][j], idx[2][k])
        })
        .collect();
    LabelVolume::with_label_count(*target, out, labels.n_labels())
}

/// Per-label blur, cubic resampling and voxelwise argmax.
///
/// Ties go to the smallest label. An identical target grid returns the
/// labels unchanged.
pub fn resample_labels_multilabel(labels: &LabelVolume, target: &Grid3, sigma_vox: f64) -> Result<LabelVolume> {
    let source = *labels.grid();
    if source.same_grid(target) {
        return Ok(labels.clone());
    }
    let plan = ResamplePlan::new(source, *target, Kernel::cubic())?;
    let mut best = vec![f64::NEG_INFINITY; target.len()];
    let mut winner = vec![0u32; target.len()];
    for p in 0..labels.n_labels() as u32 {
        let indicator: Vec<f64> = labels.labels().iter().map(|&l| f64::from(u8::from(l == p))).collect();
        let blurred = gaussian_blur(&ScalarVolume::new(source, indicator)?, sigma_vox)?;
        let score = plan.apply(&blurred)?;
        best.par_iter_mut().zip(winner.par_iter_mut()).zip(score.values().par_iter()).for_each(|((b, w), &s)| {
            if s > *b {
                *b = s;
                *w = p;
            }
        });
    }
    LabelVolume::with_label_count(*target, winner, labels.n_labels())
}
