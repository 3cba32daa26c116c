//! Boolean images, binary dilation/erosion and VOI borders.
//!
//! Everything outside the array is background for both operators, so
//! erosion peels the array's outer shell while dilation of a full mask is a
//! fixed point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::LabelVolume;

/// Boolean image over `dims`, linearized with `i` fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolMask {
    dims: [usize; 3],
    bits: Vec<bool>,
}

impl BoolMask {
    pub fn new(dims: [usize; 3], bits: Vec<bool>) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        if bits.len() != n {
            return Err(Error::LengthMismatch { left: n, right: bits.len() });
        }
        Ok(Self { dims, bits })
    }

    pub fn filled(dims: [usize; 3], value: bool) -> Self {
        Self { dims, bits: vec![value; dims.iter().product()] }
    }

    /// Mask of the voxels carrying `label`.
    pub fn from_label(labels: &LabelVolume, label: u32) -> Self {
        Self { dims: labels.grid().counts(), bits: labels.labels().iter().map(|&l| l == label).collect() }
    }

    /// True on voxels whose index lies in `lo..hi` along every axis.
    pub fn block(dims: [usize; 3], lo: [usize; 3], hi: [usize; 3]) -> Self {
        let mut m = Self::filled(dims, false);
        for k in lo[2]..hi[2].min(dims[2]) {
            for j in lo[1]..hi[1].min(dims[1]) {
                for i in lo[0]..hi[0].min(dims[0]) {
                    let n = m.index(i, j, k);
                    m.bits[n] = true;
                }
            }
        }
        m
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.bits[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let n = self.index(i, j, k);
        self.bits[n] = value;
    }

    /// Index representation: the true voxels in linearization order.
    pub fn indices(&self) -> Vec<[usize; 3]> {
        let [ni, nj, _] = self.dims;
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(n, _)| [n % ni, (n / ni) % nj, n / (ni * nj)]).collect()
    }

    fn zip_with(&self, other: &BoolMask, f: impl Fn(bool, bool) -> bool) -> Result<BoolMask> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch { expected: self.dims, found: other.dims });
        }
        Ok(BoolMask { dims: self.dims, bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect() })
    }

    pub fn or(&self, other: &BoolMask) -> Result<BoolMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and(&self, other: &BoolMask) -> Result<BoolMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn xor(&self, other: &BoolMask) -> Result<BoolMask> {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn not(&self) -> BoolMask {
        BoolMask { dims: self.dims, bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn is_subset_of(&self, other: &BoolMask) -> bool {
        self.dims == other.dims && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Offsets of a structuring element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<[isize; 3]>,
}

impl StructuringElement {
    pub fn new(offsets: Vec<[isize; 3]>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::Domain("structuring element must not be empty".into()));
        }
        Ok(Self { offsets })
    }

    /// Center plus the six face neighbours.
    pub fn cross() -> Self {
        Self { offsets: vec![[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]] }
    }

    pub fn offsets(&self) -> &[[isize; 3]] {
        &self.offsets
    }
}

/// `Vol(M)`: number of true voxels.
pub fn volume(mask: &BoolMask) -> usize {
    mask.bits.iter().filter(|&&b| b).count()
}

#[inline]
fn shifted(dims: [usize; 3], at: [usize; 3], by: [isize; 3]) -> Option<usize> {
    let mut p = [0usize; 3];
    for d in 0..3 {
        let c = at[d] as isize + by[d];
        if c < 0 || c >= dims[d] as isize {
            return None;
        }
        p[d] = c as usize;
    }
    Some(p[0] + dims[0] * (p[1] + dims[1] * p[2]))
}

fn dilate_once(mask: &BoolMask, h: &StructuringElement) -> BoolMask {
    let dims = mask.dims;
    let bits = (0..mask.len())
        .into_par_iter()
        .map(|n| {
            let at = [n % dims[0], (n / dims[0]) % dims[1], n / (dims[0] * dims[1])];
            // v is in the shift I_h iff v - h is in I
            h.offsets.iter().any(|o| shifted(dims, at, [-o[0], -o[1], -o[2]]).is_some_and(|s| mask.bits[s]))
        })
        .collect();
    BoolMask { dims, bits }
}

fn erode_once(mask: &BoolMask, h: &StructuringElement) -> BoolMask {
    let dims = mask.dims;
    let bits = (0..mask.len())
        .into_par_iter()
        .map(|n| {
            let at = [n % dims[0], (n / dims[0]) % dims[1], n / (dims[0] * dims[1])];
            // v is in the shift I_{-h} iff v + h is in I
            h.offsets.iter().all(|&o| shifted(dims, at, o).is_some_and(|s| mask.bits[s]))
        })
        .collect();
    BoolMask { dims, bits }
}

/// `n`-fold dilation by `h`.
pub fn dilate(mask: &BoolMask, h: &StructuringElement, n: usize) -> BoolMask {
    (0..n).fold(mask.clone(), |m, _| dilate_once(&m, h))
}

/// `n`-fold erosion by `h`.
pub fn erode(mask: &BoolMask, h: &StructuringElement, n: usize) -> BoolMask {
    (0..n).fold(mask.clone(), |m, _| erode_once(&m, h))
}

/// Union over all VOIs (background included) of
/// `dilate(M_p, n) xor erode(M_p, n)` with the cross element.
pub fn voi_border(labels: &LabelVolume, n: usize) -> BoolMask {
    let h = StructuringElement::cross();
    let dims = labels.grid().counts();
    let mut border = BoolMask::filled(dims, false);
    for p in 0..labels.n_labels() as u32 {
        let m = BoolMask::from_label(labels, p);
        let d = dilate(&m, &h, n);
        let e = erode(&m, &h, n);
        for ((b, &x), &y) in border.bits.iter_mut().zip(&d.bits).zip(&e.bits) {
            *b |= x != y;
        }
    }
    border
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Fov};
    use proptest::prelude::*;

    fn labels_from(dims: [usize; 3], f: impl Fn(usize, usize, usize) -> u32) -> LabelVolume {
        let g = make_grid(Fov::cube(0.0, 1.0).unwrap(), dims).unwrap();
        let labels = (0..g.len())
            .map(|n| {
                let [i, j, k] = g.unravel(n);
                f(i, j, k)
            })
            .collect();
        LabelVolume::new(g, labels).unwrap()
    }

    fn shell_depth(dims: [usize; 3], i: usize, j: usize, k: usize) -> usize {
        [i, j, k].iter().zip(dims).map(|(&c, n)| c.min(n - 1 - c)).min().unwrap()
    }

    #[test]
    fn volume_counts() {
        assert_eq!(volume(&BoolMask::filled([3, 3, 3], false)), 0);
        assert_eq!(volume(&BoolMask::filled([4, 4, 4], true)), 64);
        assert_eq!(volume(&BoolMask::block([5, 5, 5], [1, 1, 2], [3, 4, 3])), 6);
    }

    #[test]
    fn dilate_single_voxel() {
        let mut m = BoolMask::filled([11, 11, 11], false);
        m.set(5, 5, 5, true);
        let d = dilate(&m, &StructuringElement::cross(), 1);
        assert_eq!(volume(&d), 7);
        for (i, j, k) in [(4, 5, 5), (6, 5, 5), (5, 4, 5), (5, 6, 5), (5, 5, 4), (5, 5, 6), (5, 5, 5)] {
            assert!(d.get(i, j, k));
        }
        assert!(!d.get(4, 4, 5));
        assert_eq!(volume(&erode(&m, &StructuringElement::cross(), 1)), 0);
    }

    #[test]
    fn fixed_points() {
        let h = StructuringElement::cross();
        let empty = BoolMask::filled([6, 5, 4], false);
        let full = BoolMask::filled([6, 5, 4], true);
        assert_eq!(dilate(&empty, &h, 2), empty);
        assert_eq!(erode(&empty, &h, 2), empty);
        assert_eq!(dilate(&full, &h, 2), full);
    }

    #[test]
    fn erosion_peels_outer_shell() {
        let dims = [6, 5, 7];
        let e = erode(&BoolMask::filled(dims, true), &StructuringElement::cross(), 1);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    assert_eq!(e.get(i, j, k), shell_depth(dims, i, j, k) >= 1);
                }
            }
        }
    }

    #[test]
    fn border_of_single_voi_is_three_deep_shell() {
        let dims = [10, 9, 11];
        let lv = labels_from(dims, |_, _, _| 0);
        let b = voi_border(&lv, 3);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    assert_eq!(b.get(i, j, k), shell_depth(dims, i, j, k) < 3);
                }
            }
        }
    }

    #[test]
    fn border_of_two_half_spaces() {
        let dims = [16, 12, 12];
        let lv = labels_from(dims, |i, _, _| u32::from(i >= 8));
        let b = voi_border(&lv, 3);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let slab = (5..11).contains(&i);
                    let expected = slab || shell_depth(dims, i, j, k) < 3;
                    assert_eq!(b.get(i, j, k), expected, "({i},{j},{k})");
                }
            }
        }
    }

    #[test]
    fn border_contains_every_voi_boundary() {
        let lv = labels_from([9, 9, 9], |i, j, k| u32::from((i + 2 * j + k) % 7 < 3));
        let b = voi_border(&lv, 3);
        let h = StructuringElement::cross();
        for p in 0..2 {
            let m = BoolMask::from_label(&lv, p);
            let inner = erode(&m, &h, 1);
            let boundary = m.xor(&inner).unwrap();
            assert!(boundary.is_subset_of(&b));
        }
    }

    #[test]
    fn border_ignores_relabeling() {
        let lv = labels_from([10, 10, 10], |i, j, k| ((i / 3 + j / 4 + k / 5) % 3) as u32);
        let permuted = lv.relabel(&[2, 0, 1]).unwrap();
        assert_eq!(voi_border(&lv, 3), voi_border(&permuted, 3));
    }

    fn mask_strategy() -> impl Strategy<Value = BoolMask> {
        proptest::collection::vec(proptest::bool::weighted(0.6), 6 * 7 * 5)
            .prop_map(|bits| BoolMask::new([6, 7, 5], bits).unwrap())
    }

    proptest! {
        #[test]
        fn extensive_and_anti_extensive(m in mask_strategy(), n in 1usize..3) {
            let h = StructuringElement::cross();
            prop_assert!(erode(&m, &h, n).is_subset_of(&m));
            prop_assert!(m.is_subset_of(&dilate(&m, &h, n)));
        }

        #[test]
        fn duality_on_inner_voxels(m in mask_strategy(), n in 1usize..3) {
            let h = StructuringElement::cross();
            let lhs = dilate(&m.not(), &h, n);
            let rhs = erode(&m, &h, n).not();
            let dims = m.dims();
            for k in 0..dims[2] {
                for j in 0..dims[1] {
                    for i in 0..dims[0] {
                        if shell_depth(dims, i, j, k) > n {
                            prop_assert_eq!(lhs.get(i, j, k), rhs.get(i, j, k));
                        }
                    }
                }
            }
        }

        #[test]
        fn monotone(a in mask_strategy(), extra in mask_strategy()) {
            let h = StructuringElement::cross();
            let b = a.or(&extra).unwrap();
            prop_assert!(dilate(&a, &h, 1).is_subset_of(&dilate(&b, &h, 1)));
            prop_assert!(erode(&a, &h, 1).is_subset_of(&erode(&b, &h, 1)));
        }
    }
}
