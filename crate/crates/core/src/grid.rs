//! Vertex-centered sampling lattices and the volumes that live on them.
//!
//! Node `i` along an axis with `n` nodes over `[lo, hi]` sits at
//! `(hi - lo) * i / (n - 1) + lo`, so the first and last nodes lie on the
//! boundary of the field of view. Arrays are linearized with `i` fastest,
//! then `j`, then `k`.

use crate::error::{Error, Result};

/// Rectangular field of view `[lo_0, hi_0] x [lo_1, hi_1] x [lo_2, hi_2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fov {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Fov {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            let (a, b) = (lo[axis], hi[axis]);
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidFov { axis, lo: a, hi: b });
            }
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[lo, hi]^3`.
    pub fn cube(lo: f64, hi: f64) -> Result<Self> {
        Self::new([lo; 3], [hi; 3])
    }

    pub fn lo(&self) -> [f64; 3] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 3] {
        self.hi
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Bitwise equality of all six bounds.
    pub fn same_as(&self, other: &Fov) -> bool {
        (0..3).all(|d| self.lo[d].to_bits() == other.lo[d].to_bits() && self.hi[d].to_bits() == other.hi[d].to_bits())
    }
}

/// Regular equispaced lattice of `counts[0] x counts[1] x counts[2]` nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3 {
    fov: Fov,
    counts: [usize; 3],
}

impl Grid3 {
    pub fn new(fov: Fov, counts: [usize; 3]) -> Result<Self> {
        if let Some(axis) = counts.iter().position(|&c| c < 2) {
            return Err(Error::InvalidGrid(format!("axis {axis} has {} nodes, at least 2 are required", counts[axis])));
        }
        counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .ok_or_else(|| Error::InvalidGrid(format!("node count overflows: {counts:?}")))?;
        Ok(Self { fov, counts })
    }

    /// Same field of view with `floor(count / factor)` nodes per axis.
    pub fn coarse(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidGrid("undersampling factor must be positive".into()));
        }
        Self::new(self.fov, self.counts.map(|c| c / factor))
    }

    pub fn fov(&self) -> &Fov {
        &self.fov
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `h_d = (b_d - a_d) / (count_d - 1)`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.fov.extent(axis) / (self.counts[axis] - 1) as f64
    }

    /// Physical coordinate of zero-based node `index` along `axis`. The last
    /// node returns the upper bound exactly.
    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        let n = self.counts[axis];
        debug_assert!(index < n);
        if index == n - 1 {
            return self.fov.hi[axis];
        }
        self.fov.extent(axis) * index as f64 / (n - 1) as f64 + self.fov.lo[axis]
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    /// Linear index with `i` varying fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.counts[0] * (j + self.counts[1] * k)
    }

    #[inline]
    pub fn unravel(&self, index: usize) -> [usize; 3] {
        let [ni, nj, _] = self.counts;
        [index % ni, (index / ni) % nj, index / (ni * nj)]
    }

    pub fn same_fov(&self, other: &Grid3) -> bool {
        self.fov.same_as(&other.fov)
    }

    pub fn same_grid(&self, other: &Grid3) -> bool {
        self.counts == other.counts && self.same_fov(other)
    }
}

pub fn make_grid(fov: Fov, counts: [usize; 3]) -> Result<Grid3> {
    Grid3::new(fov, counts)
}

pub fn coarse_grid(grid: &Grid3, factor: usize) -> Result<Grid3> {
    grid.coarse(factor)
}

/// Real-valued raster image on a [`Grid3`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVolume {
    grid: Grid3,
    values: Vec<f64>,
}

impl ScalarVolume {
    pub fn new(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { left: grid.len(), right: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid3, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|n| {
                let [i, j, k] = grid.unravel(n);
                f(grid.node(i, j, k))
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Segmentation image: one VOI label per node, 0 being the background.
///
/// `n_labels` is the size of the label space `{0, .., n_labels - 1}`. A
/// freshly segmented volume uses every label; resampled volumes keep the
/// label space of their source even when a small VOI disappears.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVolume {
    grid: Grid3,
    labels: Vec<u32>,
    n_labels: usize,
}

impl LabelVolume {
    /// Builds a segmentation whose labels must be exactly `{0, .., n}`.
    pub fn new(grid: Grid3, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::LengthMismatch { left: grid.len(), right: labels.len() });
        }
        let n_labels = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut seen = vec![false; n_labels];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidLabels(format!("label {gap} is missing from 0..{n_labels}")));
        }
        Ok(Self { grid, labels, n_labels })
    }

    /// Builds a label volume over an explicit label space; absent labels are allowed.
    pub fn with_label_count(grid: Grid3, labels: Vec<u32>, n_labels: usize) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::LengthMismatch { left: grid.len(), right: labels.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= n_labels) {
            return Err(Error::InvalidLabels(format!("label {bad} outside the label space 0..{n_labels}")));
        }
        Ok(Self { grid, labels, n_labels })
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> u32 {
        self.labels[self.grid.index(i, j, k)]
    }

    /// Voxel count per label.
    pub fn histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_labels];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Applies `perm[old] = new` to every voxel.
    pub fn relabel(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.n_labels {
            return Err(Error::LengthMismatch { left: self.n_labels, right: perm.len() });
        }
        let labels = self.labels.iter().map(|&l| perm[l as usize]).collect();
        Self::with_label_count(self.grid, labels, self.n_labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Fov {
        Fov::cube(0.0, 1.0).unwrap()
    }

    #[test]
    fn corners_of_two_node_grid() {
        let g = make_grid(unit(), [2, 2, 2]).unwrap();
        let mut corners: Vec<[f64; 3]> = (0..8)
            .map(|n| {
                let [i, j, k] = g.unravel(n);
                g.node(i, j, k)
            })
            .collect();
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    expected.push([x, y, z]);
                }
            }
        }
        assert_eq!(corners, expected);
    }

    #[test]
    fn midpoint_of_three_node_grid() {
        let g = make_grid(unit(), [3, 3, 3]).unwrap();
        assert_eq!(g.node(1, 1, 1), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn anisotropic_spacing() {
        let fov = Fov::new([-1.0, 0.0, 0.0], [1.0, 2.0, 1.0]).unwrap();
        let g = make_grid(fov, [5, 3, 2]).unwrap();
        assert_eq!([g.spacing(0), g.spacing(1), g.spacing(2)], [0.5, 1.0, 1.0]);
    }

    #[test]
    fn rejects_bad_counts_and_fov() {
        assert!(matches!(make_grid(unit(), [1, 4, 4]), Err(Error::InvalidGrid(_))));
        assert!(matches!(Fov::new([0.0; 3], [1.0, 0.0, 1.0]), Err(Error::InvalidFov { axis: 1, .. })));
    }

    #[test]
    fn coarse_grid_counts() {
        let g = make_grid(unit(), [256, 256, 256]).unwrap();
        let c = coarse_grid(&g, 2).unwrap();
        assert_eq!(c.counts(), [128, 128, 128]);
        assert!(c.fov().same_as(g.fov()));
        assert_eq!(coarse_grid(&g, 1).unwrap(), g);
        let small = make_grid(unit(), [5, 5, 5]).unwrap();
        assert_eq!(coarse_grid(&small, 2).unwrap().counts(), [2, 2, 2]);
        let tiny = make_grid(unit(), [3, 5, 5]).unwrap();
        assert!(matches!(coarse_grid(&tiny, 2), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn linearization_is_i_fastest() {
        let g = make_grid(unit(), [3, 4, 5]).unwrap();
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index(0, 0, 1), 12);
        assert_eq!(g.unravel(g.index(2, 3, 4)), [2, 3, 4]);
    }

    #[test]
    fn label_volume_rejects_gaps() {
        let g = make_grid(unit(), [2, 2, 2]).unwrap();
        assert!(LabelVolume::new(g, vec![0, 2, 0, 0, 0, 0, 0, 0]).is_err());
        let lv = LabelVolume::new(g, vec![0, 1, 1, 0, 0, 0, 0, 2]).unwrap();
        assert_eq!(lv.n_labels(), 3);
        assert_eq!(lv.histogram(), vec![5, 2, 1]);
    }

    #[test]
    fn scalar_volume_rejects_non_finite() {
        let g = make_grid(unit(), [2, 2, 2]).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(ScalarVolume::new(g, v), Err(Error::NonFinite { index: 3 })));
    }

    proptest::proptest! {
        #[test]
        fn consecutive_nodes_differ_by_spacing(
            lo in -100.0f64..100.0, ext in 0.01f64..50.0, n in 2usize..300,
        ) {
            let g = make_grid(Fov::cube(lo, lo + ext).unwrap(), [n, 2, 2]).unwrap();
            let h = g.spacing(0);
            let scale = lo.abs().max((lo + ext).abs());
            for i in 1..n {
                let d = g.coord(0, i) - g.coord(0, i - 1);
                proptest::prop_assert!((d - h).abs() <= 4.0 * f64::EPSILON * scale.max(h));
            }
            proptest::prop_assert_eq!(g.coord(0, n - 1), lo + ext);
        }
    }
}
