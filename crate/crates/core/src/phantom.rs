//! Analytic 3D Shepp-Logan phantom.
//!
//! The phantom is a sum of ellipsoid indicator functions, each weighted by an
//! additive intensity. Sampling evaluates the analytic function at every
//! node, so coarse and fine images are both exact samples.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid3, LabelVolume, ScalarVolume};

/// Values closer than this are the same intensity level.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

/// Upper bound on distinct levels accepted by [`segment_phantom`].
pub const MAX_LEVELS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    /// Rotation about the z axis, radians.
    pub angle: f64,
    pub intensity: f64,
}

impl Ellipsoid {
    pub fn new(center: [f64; 3], semi_axes: [f64; 3], angle: f64, intensity: f64) -> Result<Self> {
        if semi_axes.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::Domain(format!("semi-axes must be positive, got {semi_axes:?}")));
        }
        Ok(Self { center, semi_axes, angle, intensity })
    }

    /// Boundary points count as inside.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let [dx, dy, dz] = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
        let (s, c) = self.angle.sin_cos();
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        let [a, b, cz] = self.semi_axes;
        (u / a).powi(2) + (v / b).powi(2) + (dz / cz).powi(2) <= 1.0
    }

    /// Distance from the origin beyond which no point is inside.
    pub fn extent(&self) -> f64 {
        self.center.iter().map(|c| c * c).sum::<f64>().sqrt() + self.semi_axes.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    ellipsoids: Vec<Ellipsoid>,
}

impl PhantomSpec {
    pub fn new(ellipsoids: Vec<Ellipsoid>) -> Result<Self> {
        if ellipsoids.is_empty() {
            return Err(Error::Domain("a phantom needs at least one ellipsoid".into()));
        }
        Ok(Self { ellipsoids })
    }

    /// The ten-ellipsoid 3D Shepp-Logan phantom in the Kak-Slaney variant,
    /// defined on `[-1, 1]^3`.
    pub fn shepp_logan() -> Self {
        // center, semi-axes, rotation (degrees), intensity
        const TABLE: [([f64; 3], [f64; 3], f64, f64); 10] = [
            ([0.0, 0.0, 0.0], [0.69, 0.92, 0.9], 0.0, 2.0),
            ([0.0, 0.0, 0.0], [0.6624, 0.874, 0.88], 0.0, -0.98),
            ([-0.22, 0.0, -0.25], [0.41, 0.16, 0.21], 108.0, -0.02),
            ([0.22, 0.0, -0.25], [0.31, 0.11, 0.22], 72.0, -0.02),
            ([0.0, 0.35, -0.25], [0.21, 0.25, 0.5], 0.0, 0.02),
            ([0.0, 0.1, -0.25], [0.046, 0.046, 0.046], 0.0, 0.02),
            ([-0.08, -0.65, -0.25], [0.046, 0.023, 0.02], 0.0, 0.01),
            ([0.06, -0.65, -0.25], [0.046, 0.023, 0.02], 90.0, 0.01),
            ([0.06, -0.105, 0.625], [0.056, 0.04, 0.1], 90.0, 0.02),
            ([0.0, 0.1, 0.625], [0.056, 0.056, 0.1], 0.0, -0.02),
        ];
        Self {
            ellipsoids: TABLE
                .iter()
                .map(|&(center, semi_axes, deg, intensity)| Ellipsoid {
                    center,
                    semi_axes,
                    angle: deg.to_radians(),
                    intensity,
                })
                .collect(),
        }
    }

    pub fn ellipsoids(&self) -> &[Ellipsoid] {
        &self.ellipsoids
    }

    pub fn extent(&self) -> f64 {
        self.ellipsoids.iter().map(Ellipsoid::extent).fold(0.0, f64::max)
    }
}

/// Sum of the intensities of the ellipsoids containing `point`.
pub fn phantom_value(spec: &PhantomSpec, point: [f64; 3]) -> f64 {
    spec.ellipsoids.iter().filter(|e| e.contains(point)).map(|e| e.intensity).sum()
}

/// Analytic sampling of the phantom at every node of `grid`.
pub fn sample_phantom(spec: &PhantomSpec, grid: &Grid3) -> ScalarVolume {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|n| {
            let [i, j, k] = grid.unravel(n);
            phantom_value(spec, grid.node(i, j, k))
        })
        .collect();
    ScalarVolume::new(*grid, values).expect("phantom values are finite")
}

/// Groups voxels of equal intensity into VOIs.
///
/// The zero-intensity group, when present, is label 0; the other groups are
/// numbered by ascending intensity.
pub fn segment_phantom(volume: &ScalarVolume) -> Result<LabelVolume> {
    let mut sorted = volume.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    // representative (smallest member) of each cluster of nearby values
    let mut levels: Vec<f64> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for v in sorted {
        if levels.is_empty() || v - last > LEVEL_TOLERANCE {
            levels.push(v);
            if levels.len() > MAX_LEVELS {
                return Err(Error::NotPiecewiseConstant { limit: MAX_LEVELS });
            }
        }
        last = v;
    }
    let zero = levels.iter().position(|l| l.abs() <= LEVEL_TOLERANCE);
    let label_of_level: Vec<u32> = (0..levels.len())
        .map(|q| match zero {
            Some(z) if q == z => 0,
            Some(z) if q < z => q as u32 + 1,
            _ => q as u32,
        })
        .collect();
    let labels = volume
        .values()
        .par_iter()
        .map(|&v| {
            // last level whose representative is <= v
            let q = levels.partition_point(|&l| l <= v + 0.5 * LEVEL_TOLERANCE).max(1) - 1;
            label_of_level[q]
        })
        .collect();
    LabelVolume::new(*volume.grid(), labels)
}
