//! Compactly supported radial profiles `omega_a` and the normalized
//! univariate basis built from them.
//!
//! Every profile satisfies `omega(0) = 1`, `omega(k) = 0` for integers
//! `k >= 1` and `omega(r) = 0` for `r >= a`. Weights are obtained by dividing
//! the profile values of the nodes around an evaluation point by their sum,
//! which also acts as the boundary policy when the window is clipped.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Denominators below this are treated as a vanished window.
pub const DEGENERATE_SUM: f64 = 1e-12;

/// Number of samples of the dense scan used by [`Kernel::constants`].
pub const CONSTANT_SCAN_SAMPLES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Nearest,
    Linear,
    Cubic,
    Lanczos2,
    Gaussian,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Nearest,
        KernelFamily::Linear,
        KernelFamily::Cubic,
        KernelFamily::Lanczos2,
        KernelFamily::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Nearest => "nearest",
            KernelFamily::Linear => "linear",
            KernelFamily::Cubic => "cubic",
            KernelFamily::Lanczos2 => "lanczos2",
            KernelFamily::Gaussian => "gaussian",
        }
    }
}

/// A radial profile together with its shape parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    epsilon: f64,
}

impl Kernel {
    pub const DEFAULT_EPSILON: f64 = 2.0;

    pub fn new(family: KernelFamily, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain(format!("gaussian shape must be positive, got {epsilon}")));
        }
        Ok(Self { family, epsilon })
    }

    pub fn nearest() -> Self {
        Self { family: KernelFamily::Nearest, epsilon: Self::DEFAULT_EPSILON }
    }

    pub fn linear() -> Self {
        Self { family: KernelFamily::Linear, epsilon: Self::DEFAULT_EPSILON }
    }

    pub fn cubic() -> Self {
        Self { family: KernelFamily::Cubic, epsilon: Self::DEFAULT_EPSILON }
    }

    pub fn lanczos2() -> Self {
        Self { family: KernelFamily::Lanczos2, epsilon: Self::DEFAULT_EPSILON }
    }

    pub fn gaussian(epsilon: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, epsilon)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Shape parameter; only meaningful for the gaussian family.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Support radius `a`.
    pub fn support_radius(&self) -> usize {
        match self.family {
            KernelFamily::Nearest | KernelFamily::Linear | KernelFamily::Gaussian => 1,
            KernelFamily::Cubic | KernelFamily::Lanczos2 => 2,
        }
    }

    /// `omega_a(r)` for `r >= 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::Domain(format!("kernel argument must be non-negative, got {r}")));
        }
        Ok(self.omega(r))
    }

    #[inline]
    pub(crate) fn omega(&self, r: f64) -> f64 {
        if r >= self.support_radius() as f64 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Nearest => {
                if r < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Linear => 1.0 - r,
            KernelFamily::Cubic => {
                if r < 1.0 {
                    (r - 2.0) * r * r + 1.0
                } else {
                    ((-r + 5.0) * r - 8.0) * r + 4.0
                }
            }
            KernelFamily::Lanczos2 => {
                if r > 0.0 && r.fract() == 0.0 {
                    0.0
                } else {
                    sinc(r) * sinc(0.5 * r)
                }
            }
            KernelFamily::Gaussian => (-(self.epsilon * self.epsilon) * r * r).exp(),
        }
    }

    /// Profile value for a node on the left (`x_i <= x`) or right side of the
    /// evaluation point. Only differs from [`Kernel::eval`] for the nearest
    /// profile at `r = 1/2`, where the left node takes the point.
    #[inline]
    pub(crate) fn omega_sided(&self, r: f64, left: bool) -> f64 {
        if left && self.family == KernelFamily::Nearest && r == 0.5 {
            1.0
        } else {
            self.omega(r)
        }
    }

    /// Unnormalized profile values of the window around `x = (k + delta) / n`
    /// on the nodes `0..=n`. Returns the first node index, the values and
    /// their sum. An exact node (`delta == 0`) yields a single unit value.
    pub(crate) fn raw_window(&self, n: usize, k: usize, delta: f64) -> Result<(usize, Vec<f64>, f64)> {
        if n == 0 {
            return Err(Error::Domain("at least two nodes are required".into()));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::Domain(format!("window offset must lie in [0, 1), got {delta}")));
        }
        if k > n || (k == n && delta != 0.0) {
            return Err(Error::Domain(format!("interval {k} outside 0..{n}")));
        }
        if delta == 0.0 {
            return Ok((k, vec![1.0], 1.0));
        }
        let a = self.support_radius();
        let first = (k + 1).saturating_sub(a);
        let last = (k + a).min(n);
        let mut values = Vec::with_capacity(last - first + 1);
        let mut sum = 0.0;
        for i in first..=last {
            let w = if i <= k {
                self.omega_sided((k - i) as f64 + delta, true)
            } else {
                self.omega_sided((i - k) as f64 - delta, false)
            };
            sum += w;
            values.push(w);
        }
        if sum.abs() < DEGENERATE_SUM {
            return Err(Error::DegenerateWindow { sum });
        }
        Ok((first, values, sum))
    }

    /// Normalized weights of the nodes within `a` of `x = (k + delta) / n`.
    ///
    /// `delta = 0` is the exact-node case and returns the unit weight at `k`.
    pub fn window_weights(&self, n: usize, k: usize, delta: f64) -> Result<Vec<(usize, f64)>> {
        let (first, values, sum) = self.raw_window(n, k, delta)?;
        Ok(values.into_iter().enumerate().map(|(o, w)| (first + o, w / sum)).collect())
    }

    /// `m_w` and `M_w` by dense scan with local refinement. Results are
    /// memoized per family and shape parameter.
    pub fn constants(&self) -> KernelConstants {
        static CACHE: OnceLock<Mutex<HashMap<(KernelFamily, u64), KernelConstants>>> = OnceLock::new();
        let key = (self.family, self.epsilon.to_bits());
        let cache = CACHE.get_or_init(Default::default);
        if let Some(c) = cache.lock().expect("constants cache poisoned").get(&key) {
            return *c;
        }
        let c = self.scan_constants();
        cache.lock().expect("constants cache poisoned").insert(key, c);
        c
    }

    fn scan_constants(&self) -> KernelConstants {
        let a = self.support_radius() as f64;
        let max_w = scan_extremum(0.0, a, |t| self.omega(t).abs(), true);
        let pair_sum = |t: f64| -> f64 {
            (0..self.support_radius())
                .map(|p| {
                    let p = p as f64;
                    self.omega_sided(t + p, true) + self.omega_sided(1.0 - t + p, false)
                })
                .sum::<f64>()
                .abs()
        };
        let m_w = scan_extremum(0.0, 1.0, pair_sum, false);
        KernelConstants { m_w, max_w }
    }

    /// Constants as commonly tabulated for this family, for reporting next
    /// to the computed ones.
    pub fn tabulated_constants(&self) -> KernelConstants {
        let m_w = match self.family {
            KernelFamily::Nearest | KernelFamily::Linear => 1.0,
            KernelFamily::Cubic => 0.75,
            KernelFamily::Lanczos2 => 1.0 + 2.0 * sinc(1.5) * sinc(0.75),
            KernelFamily::Gaussian => 2.0 * (-(self.epsilon * self.epsilon) / 4.0).exp(),
        };
        KernelConstants { m_w, max_w: 1.0 }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let family = KernelFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Domain(format!("unknown kernel '{s}'")))?;
        Ok(Self { family, epsilon: Self::DEFAULT_EPSILON })
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Constants bounding the normalized weights: `|w| <= M_w / m_w` away from
/// the domain ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConstants {
    /// Minimum of the window sum, `m_w`.
    pub m_w: f64,
    /// Maximum of the profile magnitude, `M_w`.
    pub max_w: f64,
}

impl KernelConstants {
    pub fn is_degenerate(&self) -> bool {
        self.m_w < DEGENERATE_SUM
    }

    /// `M_w / m_w`.
    pub fn ratio(&self) -> Result<f64> {
        if self.is_degenerate() {
            Err(Error::DegenerateKernel { m_w: self.m_w })
        } else {
            Ok(self.max_w / self.m_w)
        }
    }
}

fn scan_extremum(lo: f64, hi: f64, f: impl Fn(f64) -> f64, maximize: bool) -> f64 {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let steps = CONSTANT_SCAN_SAMPLES;
    let h = (hi - lo) / steps as f64;
    let mut best_t = lo;
    let mut best = f(lo);
    for s in 1..=steps {
        let t = if s == steps { hi } else { lo + h * s as f64 };
        let v = f(t);
        if better(v, best) {
            best = v;
            best_t = t;
        }
    }
    // golden-section refinement inside the bracketing cells
    let (mut a, mut b) = ((best_t - h).max(lo), (best_t + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        let (fc, fd) = (f(c), f(d));
        if better(fc, best) {
            best = fc;
        }
        if better(fd, best) {
            best = fd;
        }
        if better(fc, fd) || fc == fd {
            b = d;
        } else {
            a = c;
        }
    }
    best
}
