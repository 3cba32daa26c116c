//! Numerical checks of the pointwise interpolation error bound and of the
//! ringing behaviour near a jump.
//!
//! Univariate signals live on `[0, 1]` and are sampled at `x_i = i / N`. An
//! evaluation point is addressed by its interval `k` and offset `delta`, so
//! `x = (k + delta) / N`. The bound
//!
//! ```text
//! |P f(x) - f(x)| <= (M_w / m_w) * sum_{i in window} |f(x) - f(x_i)|
//! ```
//!
//! is only claimed where the window `k + 1 - a ..= k + a` is not clipped by
//! the domain ends and `a <= k <= N - a`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid3, ScalarVolume};
use crate::kernels::{Kernel, KernelConstants};
use crate::resample::interp_at;

/// Slack allowed on `bound - error` before a point counts as a violation.
pub const BOUND_SLACK: f64 = 1e-12;

type Branch = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `f(t) = left(t)` for `t <= breakpoint`, `right(t)` otherwise.
#[derive(Clone)]
pub struct PiecewiseSignal {
    breakpoint: f64,
    left: Branch,
    right: Branch,
    tag: String,
}

impl fmt::Debug for PiecewiseSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseSignal").field("tag", &self.tag).field("breakpoint", &self.breakpoint).finish()
    }
}

impl PiecewiseSignal {
    pub fn new(
        tag: impl Into<String>,
        breakpoint: f64,
        left: impl Fn(f64) -> f64 + Send + Sync + 'static,
        right: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(breakpoint > 0.0 && breakpoint < 1.0) {
            return Err(Error::Domain(format!("breakpoint must lie in (0, 1), got {breakpoint}")));
        }
        Ok(Self { breakpoint, left: Arc::new(left), right: Arc::new(right), tag: tag.into() })
    }

    /// 0 up to and including `xi`, 1 after.
    pub fn heaviside(xi: f64) -> Result<Self> {
        Self::new("heaviside", xi, |_| 0.0, |_| 1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new("constant", 0.5, move |_| c, move |_| c).expect("valid breakpoint")
    }

    /// A continuous signal; the breakpoint is nominal.
    pub fn smooth(tag: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f: Branch = Arc::new(f);
        Self { breakpoint: 0.5, left: f.clone(), right: f, tag: tag.into() }
    }

    /// `sin(2 pi x)`.
    pub fn sine() -> Self {
        Self::smooth("sine", |t| (2.0 * std::f64::consts::PI * t).sin())
    }

    /// Two affine pieces `l0 + l1 t` and `r0 + r1 t` meeting at `xi`.
    pub fn piecewise_linear(xi: f64, left: (f64, f64), right: (f64, f64)) -> Result<Self> {
        Self::new("piecewise-linear", xi, move |t| left.0 + left.1 * t, move |t| right.0 + right.1 * t)
    }

    /// Random one-jump piecewise-linear signal with the jump in `(0.1, 0.9)`.
    pub fn random_one_jump(rng: &mut impl Rng) -> Self {
        let xi = rng.gen_range(0.1..0.9);
        let mut piece = || (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0));
        let (l, r) = (piece(), piece());
        Self::piecewise_linear(xi, l, r).expect("breakpoint inside (0, 1)")
    }

    /// Adds a constant to both branches.
    pub fn shifted(&self, c: f64) -> Self {
        let (l, r) = (self.left.clone(), self.right.clone());
        Self {
            breakpoint: self.breakpoint,
            left: Arc::new(move |t| l(t) + c),
            right: Arc::new(move |t| r(t) + c),
            tag: format!("{}+{c}", self.tag),
        }
    }

    pub fn breakpoint(&self) -> f64 {
        self.breakpoint
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.breakpoint {
            (self.left)(t)
        } else {
            (self.right)(t)
        }
    }

    /// `|f(xi-) - f(xi+)|`.
    pub fn jump(&self) -> f64 {
        ((self.left)(self.breakpoint) - (self.right)(self.breakpoint)).abs()
    }

    /// Samples at `i / n`, `i = 0..=n`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|i| self.value(i as f64 / n as f64)).collect()
    }

    /// Interval of `n` that holds the jump: `xi` in `(x_k, x_{k+1}]`, or the
    /// interval starting at `xi` when it is a node.
    pub fn jump_interval(&self, n: usize) -> usize {
        ((self.breakpoint * n as f64).floor() as usize).min(n - 1)
    }
}

/// One evaluation point of a bound check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub x: f64,
    pub k: usize,
    /// Interval offset of the jump relative to `k`.
    pub p: i64,
    pub error: f64,
    /// `None` when the point lies outside the bound's scope.
    pub bound: Option<f64>,
}

impl BoundReport {
    pub fn violated(&self) -> bool {
        self.bound.is_some_and(|b| b - self.error < -BOUND_SLACK)
    }
}

/// Whether interval `k` of `n` has an unclipped window and satisfies
/// `a <= k <= n - a`.
pub fn in_bound_scope(k: usize, n: usize, a: usize) -> bool {
    k >= a && k + a <= n
}

/// `(M_w / m_w) * sum |f(x) - f(x_i)|` over the window of interval `k`.
pub fn pointwise_bound(
    samples: &[f64],
    kernel: &Kernel,
    constants: &KernelConstants,
    k: usize,
    f_x: f64,
) -> Result<f64> {
    let n = samples.len().saturating_sub(1);
    let a = kernel.support_radius();
    if !in_bound_scope(k, n, a) {
        return Err(Error::OutOfScope { k, n, a });
    }
    let ratio = constants.ratio()?;
    let spread: f64 = samples[k + 1 - a..=k + a].iter().map(|fi| (f_x - fi).abs()).sum();
    Ok(ratio * spread)
}

/// `|P^N f(x) - f(x)|` for `x = (k + delta) / n`.
fn error_at(signal: &PiecewiseSignal, samples: &[f64], kernel: &Kernel, k: usize, delta: f64) -> Result<(f64, f64)> {
    let n = samples.len() - 1;
    let x = (k as f64 + delta) / n as f64;
    let fx = signal.value(x);
    Ok(((interp_at(samples, kernel, k, delta)? - fx).abs(), fx))
}

/// Interpolation error at an arbitrary `x` in `[0, 1]`.
pub fn interpolation_error(signal: &PiecewiseSignal, kernel: &Kernel, n: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    let samples = signal.samples(n);
    let u = x * n as f64;
    let k = (u.floor() as usize).min(n);
    let delta = if k == n { 0.0 } else { u - k as f64 };
    Ok((interp_at(&samples, kernel, k, delta)? - signal.value(x)).abs())
}

/// Evaluates `points_per_interval` stratified points in every interval and
/// compares the error with the pointwise bound where it applies.
pub fn verify_pointwise_bound(
    signal: &PiecewiseSignal,
    kernel: &Kernel,
    n: usize,
    points_per_interval: usize,
) -> Result<Vec<BoundReport>> {
    let a = kernel.support_radius();
    if n < 4 * a {
        return Err(Error::Domain(format!("need N >= {}, got {n}", 4 * a)));
    }
    let constants = kernel.constants();
    let samples = signal.samples(n);
    let jump_k = signal.jump_interval(n) as i64;
    let mut out = Vec::with_capacity(n * points_per_interval);
    for k in 0..n {
        for j in 0..points_per_interval {
            let delta = (j as f64 + 0.5) / points_per_interval as f64;
            let (error, fx) = error_at(signal, &samples, kernel, k, delta)?;
            let bound = if in_bound_scope(k, n, a) {
                Some(pointwise_bound(&samples, kernel, &constants, k, fx)?)
            } else {
                None
            };
            out.push(BoundReport { n, x: (k as f64 + delta) / n as f64, k, p: jump_k - k as i64, error, bound });
        }
    }
    Ok(out)
}

/// Error at a fixed continuity point for each `N`.
pub fn convergence_study(signal: &PiecewiseSignal, kernel: &Kernel, x: f64, ns: &[usize]) -> Result<Vec<(usize, f64)>> {
    ns.iter().map(|&n| Ok((n, interpolation_error(signal, kernel, n, x)?))).collect()
}

/// Maximum absolute error per interval offset `p` to the jump.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsProfile {
    pub n: usize,
    pub max_error: BTreeMap<i64, f64>,
}

impl GibbsProfile {
    /// Maximum over `p` and `-p` for `|p| = 0, 1, ..`.
    pub fn by_distance(&self) -> Vec<f64> {
        let reach = self.max_error.keys().map(|p| p.unsigned_abs() as usize).max().unwrap_or(0);
        let mut out = vec![0.0f64; reach + 1];
        for (&p, &e) in &self.max_error {
            let d = p.unsigned_abs() as usize;
            out[d] = out[d].max(e);
        }
        out
    }
}

/// Per-offset maximum error, computed on interior intervals only.
pub fn gibbs_profile(
    signal: &PiecewiseSignal,
    kernel: &Kernel,
    n: usize,
    points_per_interval: usize,
) -> Result<GibbsProfile> {
    let a = kernel.support_radius();
    if n < 8 * a {
        return Err(Error::Domain(format!("need N >= {}, got {n}", 8 * a)));
    }
    let samples = signal.samples(n);
    let jump_k = signal.jump_interval(n) as i64;
    let mut max_error = BTreeMap::new();
    for k in 0..n {
        if !in_bound_scope(k, n, a) {
            continue;
        }
        let p = jump_k - k as i64;
        let entry = max_error.entry(p).or_insert(0.0f64);
        for j in 0..points_per_interval {
            let delta = (j as f64 + 0.5) / points_per_interval as f64;
            let (e, _) = error_at(signal, &samples, kernel, k, delta)?;
            *entry = entry.max(e);
        }
    }
    Ok(GibbsProfile { n, max_error })
}

/// One trivariate evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrivariateReport {
    pub point: [f64; 3],
    pub error: f64,
    pub bound: f64,
}

impl TrivariateReport {
    pub fn violated(&self) -> bool {
        self.bound - self.error < -BOUND_SLACK
    }
}

/// Compares `|P f(x) - f(x)|` with `(M_w / m_w)^3 * sum |f(x) - f(x_ijk)|`
/// at `n_points` random points whose windows are not clipped on any axis.
pub fn verify_trivariate_bound(
    f: impl Fn([f64; 3]) -> f64 + Sync,
    grid: &Grid3,
    kernel: &Kernel,
    n_points: usize,
    seed: u64,
) -> Result<Vec<TrivariateReport>> {
    let a = kernel.support_radius();
    let counts = grid.counts();
    if counts.iter().any(|&c| c - 1 < 2 * a) {
        return Err(Error::TooSmall(format!("need at least {} nodes per axis", 2 * a + 1)));
    }
    let ratio = kernel.constants().ratio()?;
    let ratio3 = ratio * ratio * ratio;
    let volume = ScalarVolume::from_fn(*grid, &f)?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    // node-unit positions with a <= k <= N - a on every axis
    let positions: Vec<[f64; 3]> =
        (0..n_points).map(|_| counts.map(|c| rng.gen_range(a as f64..(c - a) as f64))).collect();
    positions
        .par_iter()
        .map(|u| {
            let mut windows = Vec::with_capacity(3);
            let mut point = [0.0; 3];
            for d in 0..3 {
                let k = u[d].floor() as usize;
                let delta = u[d] - k as f64;
                windows.push(kernel.window_weights(counts[d] - 1, k, delta)?);
                point[d] = grid.fov().lo()[d] + grid.spacing(d) * u[d];
            }
            let fx = f(point);
            // weights sum to one, so the error is the weighted sum of sample deviations
            let (mut deviation, mut spread) = (0.0, 0.0);
            for &(k, wk) in &windows[2] {
                for &(j, wj) in &windows[1] {
                    for &(i, wi) in &windows[0] {
                        let d = volume.get(i, j, k) - fx;
                        deviation += wi * wj * wk * d;
                        spread += d.abs();
                    }
                }
            }
            Ok(TrivariateReport { point, error: deviation.abs(), bound: ratio3 * spread })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernels() -> Vec<Kernel> {
        vec![Kernel::linear(), Kernel::cubic(), Kernel::lanczos2(), Kernel::gaussian(2.0).unwrap()]
    }

    #[test]
    fn constant_signal_has_no_error_and_no_bound() {
        let s = PiecewiseSignal::constant(1.7);
        for kernel in kernels() {
            for r in verify_pointwise_bound(&s, &kernel, 32, 4).unwrap() {
                assert!(r.error < 1e-14);
                if let Some(b) = r.bound {
                    assert_eq!(b, 0.0);
                }
            }
        }
    }

    #[test]
    fn heaviside_cubic_bound_dominates_overshoot() {
        let n = 16;
        let s = PiecewiseSignal::heaviside(7.5 / n as f64).unwrap();
        let samples = s.samples(n);
        let kernel = Kernel::cubic();
        let c = kernel.constants();
        // interval 8, right of the jump: of the window nodes 7..=10 only node 7 is on the other side
        let (error, fx) = error_at(&s, &samples, &kernel, 8, 0.25).unwrap();
        assert!((error - 0.140625).abs() < 1e-15);
        let bound = pointwise_bound(&samples, &kernel, &c, 8, fx).unwrap();
        assert!((bound - c.ratio().unwrap()).abs() < 1e-12);
        // interval 7 holds the jump; x right of it sees nodes 6 and 7 on the other side
        let (error, fx) = error_at(&s, &samples, &kernel, 7, 0.75).unwrap();
        assert_eq!(fx, 1.0);
        let bound = pointwise_bound(&samples, &kernel, &c, 7, fx).unwrap();
        assert!((bound - 2.0 * c.ratio().unwrap()).abs() < 1e-12);
        assert!(bound >= error);
    }

    #[test]
    fn out_of_scope_intervals_are_flagged() {
        let samples = vec![0.0; 17];
        let k = Kernel::cubic();
        let c = k.constants();
        assert!(matches!(pointwise_bound(&samples, &k, &c, 1, 0.0), Err(Error::OutOfScope { .. })));
        assert!(matches!(pointwise_bound(&samples, &k, &c, 15, 0.0), Err(Error::OutOfScope { .. })));
        assert!(pointwise_bound(&samples, &k, &c, 14, 0.0).is_ok());
    }

    #[test]
    fn smooth_signal_respects_bound() {
        let s = PiecewiseSignal::sine();
        for kernel in kernels() {
            let reports = verify_pointwise_bound(&s, &kernel, 64, 16).unwrap();
            assert!(reports.iter().all(|r| !r.violated()), "{kernel}");
        }
    }

    #[test]
    fn linear_on_heaviside_peaks_at_half() {
        let n = 32;
        let s = PiecewiseSignal::heaviside(0.5 + 0.5 / n as f64).unwrap();
        let reports = verify_pointwise_bound(&s, &Kernel::linear(), n, 16).unwrap();
        let max = reports.iter().map(|r| r.error).fold(0.0, f64::max);
        assert!(max <= 0.5);
        // midpoint of the jump interval
        assert_eq!(interpolation_error(&s, &Kernel::linear(), n, 0.5 + 0.5 / n as f64).unwrap(), 0.5);
    }

    #[test]
    fn nodes_are_exact() {
        let s = PiecewiseSignal::piecewise_linear(0.43, (0.3, 1.0), (-1.0, 2.0)).unwrap();
        for kernel in kernels() {
            for i in 0..=32 {
                assert_eq!(interpolation_error(&s, &kernel, 32, i as f64 / 32.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn constant_convergence() {
        let s = PiecewiseSignal::constant(-2.0);
        for (_, e) in convergence_study(&s, &Kernel::cubic(), 0.37, &[16, 32, 64]).unwrap() {
            assert!(e < 1e-15);
        }
    }

    #[test]
    fn heaviside_profiles_vanish_beyond_support() {
        let s = PiecewiseSignal::heaviside(0.5 + 0.3 / 64.0).unwrap();
        let cubic = gibbs_profile(&s, &Kernel::cubic(), 64, 16).unwrap();
        for (&p, &e) in &cubic.max_error {
            if p.abs() >= 2 {
                assert_eq!(e, 0.0, "p = {p}");
            }
        }
        assert!(cubic.max_error[&0] > 0.0 && cubic.max_error[&-1] > 0.0);
        let linear = gibbs_profile(&s, &Kernel::linear(), 64, 16).unwrap();
        for (&p, &e) in &linear.max_error {
            assert_eq!(e > 0.0, p == 0, "p = {p}");
        }
    }

    #[test]
    fn profile_ignores_added_constant() {
        let s = PiecewiseSignal::heaviside(0.41).unwrap();
        for kernel in kernels() {
            let a = gibbs_profile(&s, &kernel, 64, 8).unwrap();
            let b = gibbs_profile(&s.shifted(3.5), &kernel, 64, 8).unwrap();
            for (p, e) in &a.max_error {
                assert!((e - b.max_error[p]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn locality_of_window() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for kernel in kernels() {
            let a = kernel.support_radius();
            for _ in 0..200 {
                let n = 40;
                let samples: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let k = rng.gen_range(0..n);
                let delta = rng.gen_range(0.0..1.0);
                let base = interp_at(&samples, &kernel, k, delta).unwrap();
                let mut perturbed = samples.clone();
                for (i, v) in perturbed.iter_mut().enumerate() {
                    let far_left = i + a < k + 1;
                    let far_right = i > k + a;
                    if far_left || far_right {
                        *v += 100.0;
                    }
                }
                assert_eq!(interp_at(&perturbed, &kernel, k, delta).unwrap(), base);
            }
        }
    }

    #[test]
    fn trivariate_constant_and_nodes() {
        let g = crate::grid::make_grid(crate::grid::Fov::cube(0.0, 1.0).unwrap(), [12, 12, 12]).unwrap();
        for r in verify_trivariate_bound(|_| 2.0, &g, &Kernel::cubic(), 200, 3).unwrap() {
            assert!(r.error < 1e-14 && r.bound == 0.0);
        }
    }

    #[test]
    fn preconditions() {
        let s = PiecewiseSignal::heaviside(0.5).unwrap();
        assert!(verify_pointwise_bound(&s, &Kernel::cubic(), 7, 4).is_err());
        assert!(gibbs_profile(&s, &Kernel::cubic(), 15, 4).is_err());
        assert!(PiecewiseSignal::heaviside(1.0).is_err());
    }
}
