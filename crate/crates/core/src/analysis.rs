//! VOI statistics, error norms, SSIM and gradient localization measures.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{LabelVolume, ScalarVolume};
use crate::morphology::{volume as mask_volume, BoolMask};

/// Multi-index `(n1, n2, n3)` of a statistical moment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MomentIndex(pub [u32; 3]);

impl MomentIndex {
    pub const MEAN: MomentIndex = MomentIndex([0, 0, 0]);
}

/// Per-VOI means indexed by label.
#[derive(Clone, Debug, PartialEq)]
pub struct VoiMeans {
    pub values: Vec<f64>,
}

impl VoiMeans {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Drops label 0.
    pub fn without_background(&self) -> VoiMeans {
        VoiMeans { values: self.values.iter().skip(1).copied().collect() }
    }
}

fn check_dims(volume: &ScalarVolume, mask: &BoolMask) -> Result<()> {
    let expected = volume.grid().counts();
    if expected != mask.dims() {
        return Err(Error::DimMismatch { expected, found: mask.dims() });
    }
    Ok(())
}

/// `F[M]`: values at true voxels, in linearization order.
pub fn restrict(volume: &ScalarVolume, mask: &BoolMask) -> Result<Vec<f64>> {
    check_dims(volume, mask)?;
    Ok(volume.values().iter().zip(mask.bits()).filter(|(_, &b)| b).map(|(&v, _)| v).collect())
}

/// Discrete moment `(1 / Vol(M)) sum x^N F` over the true voxels of `mask`,
/// using physical node coordinates.
pub fn moment(volume: &ScalarVolume, mask: &BoolMask, index: MomentIndex) -> Result<f64> {
    check_dims(volume, mask)?;
    let count = mask_volume(mask);
    if count == 0 {
        return Err(Error::EmptyVoi { label: 0 });
    }
    let grid = volume.grid();
    let [n1, n2, n3] = index.0.map(|n| n as i32);
    let sum: f64 = volume
        .values()
        .iter()
        .zip(mask.bits())
        .enumerate()
        .filter(|(_, (_, &b))| b)
        .map(|(n, (&f, _))| {
            let [i, j, k] = grid.unravel(n);
            let [x, y, z] = grid.node(i, j, k);
            x.powi(n1) * y.powi(n2) * z.powi(n3) * f
        })
        .sum();
    Ok(sum / count as f64)
}

/// Mean per label, `None` for labels without voxels.
pub fn voi_means_partial(volume: &ScalarVolume, labels: &LabelVolume) -> Result<Vec<Option<f64>>> {
    if !volume.grid().same_grid(labels.grid()) {
        return Err(Error::GridMismatch("image and segmentation must be sampled on the same grid".into()));
    }
    let n = labels.n_labels();
    // fixed chunks reduced in order keep the result independent of scheduling
    const CHUNK: usize = 1 << 16;
    let partials: Vec<(Vec<f64>, Vec<usize>)> = volume
        .values()
        .par_chunks(CHUNK)
        .zip(labels.labels().par_chunks(CHUNK))
        .map(|(vs, ls)| {
            let (mut s, mut c) = (vec![0.0; n], vec![0usize; n]);
            for (&v, &l) in vs.iter().zip(ls) {
                s[l as usize] += v;
                c[l as usize] += 1;
            }
            (s, c)
        })
        .collect();
    let (mut sums, mut counts) = (vec![0.0; n], vec![0usize; n]);
    for (s, c) in partials {
        for p in 0..n {
            sums[p] += s[p];
            counts[p] += c[p];
        }
    }
    Ok(sums.into_iter().zip(counts).map(|(s, c)| (c > 0).then(|| s / c as f64)).collect())
}

/// Mean of `volume` over every VOI, background included, ordered by label.
pub fn voi_means(volume: &ScalarVolume, labels: &LabelVolume) -> Result<VoiMeans> {
    let values = voi_means_partial(volume, labels)?
        .into_iter()
        .enumerate()
        .map(|(label, m)| m.ok_or(Error::EmptyVoi { label }))
        .collect::<Result<_>>()?;
    Ok(VoiMeans { values })
}

/// `||v - v'||_2 / ||v||_2`.
pub fn rel_err(v: &VoiMeans, v_approx: &VoiMeans) -> Result<f64> {
    if v.len() != v_approx.len() {
        return Err(Error::LengthMismatch { left: v.len(), right: v_approx.len() });
    }
    let norm = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let diff = v.values.iter().zip(&v_approx.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(diff / norm)
}

/// `E = |I - F+|` voxelwise.
pub fn voxelwise_error(reference: &ScalarVolume, oversampled: &ScalarVolume) -> Result<ScalarVolume> {
    if !reference.grid().same_grid(oversampled.grid()) {
        return Err(Error::GridMismatch("voxelwise error needs identical grids".into()));
    }
    let values = reference.values().iter().zip(oversampled.values()).map(|(a, b)| (a - b).abs()).collect();
    ScalarVolume::new(*reference.grid(), values)
}

/// Single-window SSIM of two value lists with population statistics and
/// `c1 = (0.01 L)^2`, `c2 = (0.03 L)^2`.
pub fn ssim(a: &[f64], b: &[f64], data_range: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::TooSmall(format!("SSIM needs at least 2 values, got {}", a.len())));
    }
    if !(data_range.is_finite() && data_range > 0.0) {
        return Err(Error::Domain(format!("data range must be positive, got {data_range}")));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        var_a += dx * dx;
        var_b += dy * dy;
        cov += dx * dy;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    let c1 = (0.01 * data_range).powi(2);
    let c2 = (0.03 * data_range).powi(2);
    Ok((2.0 * mean_a * mean_b + c1) * (2.0 * cov + c2)
        / ((mean_a * mean_a + mean_b * mean_b + c1) * (var_a + var_b + c2)))
}

pub fn dssim(a: &[f64], b: &[f64], data_range: f64) -> Result<f64> {
    Ok(1.0 - ssim(a, b, data_range)?)
}

/// Global and border DSSIM and the share of the border in percent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BorderDssim {
    pub global: f64,
    pub border: f64,
    /// `100 * border / global`; `None` when the global DSSIM is zero.
    pub percent: Option<f64>,
}

/// DSSIM over all voxels and over the border restriction; the data range is
/// `max - min` of the reference.
pub fn dssim_at_border(reference: &ScalarVolume, oversampled: &ScalarVolume, border: &BoolMask) -> Result<BorderDssim> {
    if !reference.grid().same_grid(oversampled.grid()) {
        return Err(Error::GridMismatch("DSSIM needs identical grids".into()));
    }
    if mask_volume(border) == 0 {
        return Err(Error::EmptyVoi { label: 0 });
    }
    let (lo, hi) = reference.min_max();
    let range = hi - lo;
    let global = dssim(reference.values(), oversampled.values(), range)?;
    let border_dssim = dssim(&restrict(reference, border)?, &restrict(oversampled, border)?, range)?;
    let percent = (global != 0.0).then(|| 100.0 * border_dssim / global);
    Ok(BorderDssim { global, border: border_dssim, percent })
}

/// 3-tap pass along `axis` with replicated edges.
fn three_tap(data: &[f64], dims: [usize; 3], axis: usize, taps: [f64; 3]) -> Vec<f64> {
    let stride: usize = dims[..axis].iter().product();
    let n = dims[axis];
    let mut out = vec![0.0; data.len()];
    out.par_iter_mut().enumerate().for_each(|(idx, o)| {
        let c = (idx / stride) % n;
        let lo = if c == 0 { idx } else { idx - stride };
        let hi = if c + 1 == n { idx } else { idx + stride };
        *o = taps[0] * data[lo] + taps[1] * data[idx] + taps[2] * data[hi];
    });
    out
}

/// Per-axis Sobel derivatives (difference `(1, 0, -1)`, smoothing
/// `(1, 2, 1) / 4` on the two other axes, replicated edges) combined into a
/// voxelwise 2-norm.
pub fn gradient_norm(volume: &ScalarVolume) -> Result<ScalarVolume> {
    let dims = volume.grid().counts();
    if dims.iter().any(|&n| n < 3) {
        return Err(Error::TooSmall(format!("Sobel needs at least 3 nodes per axis, got {dims:?}")));
    }
    const DIFF: [f64; 3] = [-1.0, 0.0, 1.0];
    const SMOOTH: [f64; 3] = [0.25, 0.5, 0.25];
    let mut sq = vec![0.0; volume.values().len()];
    for axis in 0..3 {
        let mut d = volume.values().to_vec();
        for pass in 0..3 {
            let taps = if pass == axis { DIFF } else { SMOOTH };
            d = three_tap(&d, dims, pass, taps);
        }
        sq.par_iter_mut().zip(&d).for_each(|(s, g)| *s += g * g);
    }
    ScalarVolume::new(*volume.grid(), sq.into_iter().map(f64::sqrt).collect())
}

/// `100 * ||grad[border]||_1 / ||grad||_1`.
pub fn gradient_ratio(grad: &ScalarVolume, border: &BoolMask) -> Result<f64> {
    check_dims(grad, border)?;
    let total: f64 = grad.values().iter().map(|g| g.abs()).sum();
    if total == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let inside: f64 = restrict(grad, border)?.iter().map(|g| g.abs()).sum();
    Ok(100.0 * inside / total)
}

/// `100 * Vol(border) / (I J K)`.
pub fn volume_ratio(border: &BoolMask) -> f64 {
    100.0 * mask_volume(border) as f64 / border.len() as f64
}
