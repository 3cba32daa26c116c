use gibbslab_core::gibbs::{
    gibbs_profile, interpolation_error, verify_pointwise_bound, verify_trivariate_bound, PiecewiseSignal,
};
use gibbslab_core::grid::make_grid;
use gibbslab_core::{Fov, Kernel};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn kernels() -> Vec<Kernel> {
    vec![Kernel::linear(), Kernel::cubic(), Kernel::lanczos2(), Kernel::gaussian(2.0).unwrap()]
}

#[test]
fn random_jumps_respect_pointwise_bound() {
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..50 {
        let s = PiecewiseSignal::random_one_jump(&mut rng);
        for kernel in kernels() {
            for n in [16, 64] {
                let reports = verify_pointwise_bound(&s, &kernel, n, 8).unwrap();
                assert!(reports.iter().all(|r| !r.violated()), "{kernel} N={n} {s:?}");
            }
        }
    }
}

#[test]
fn profile_ignores_constant_offsets() {
    let s = PiecewiseSignal::heaviside(0.4321).unwrap();
    let shifted = s.shifted(7.25);
    for kernel in kernels() {
        let a = gibbs_profile(&s, &kernel, 64, 16).unwrap();
        let b = gibbs_profile(&shifted, &kernel, 64, 16).unwrap();
        for (p, e) in &a.max_error {
            assert!((e - b.max_error[p]).abs() < 1e-12, "{kernel} p={p}");
        }
    }
}

#[test]
fn jump_error_does_not_vanish() {
    let s = PiecewiseSignal::heaviside(0.5).unwrap();
    for n in [16, 64, 256, 1024] {
        let e = interpolation_error(&s, &Kernel::linear(), n, 0.5 + 0.5 / n as f64).unwrap();
        assert!(e > 0.1, "N={n}: {e}");
    }
}

#[test]
fn trivariate_constant_has_zero_sides() {
    let grid = make_grid(Fov::cube(0.0, 1.0).unwrap(), [12, 12, 12]).unwrap();
    for kernel in kernels() {
        for r in verify_trivariate_bound(|_| 2.5, &grid, &kernel, 200, 3).unwrap() {
            assert_eq!((r.error, r.bound), (0.0, 0.0), "{kernel}");
        }
    }
}

#[test]
fn trivariate_separable_step() {
    let grid = make_grid(Fov::cube(0.0, 1.0).unwrap(), [32, 32, 32]).unwrap();
    let f = |p: [f64; 3]| if p[0] > 0.47 { (std::f64::consts::PI * p[1]).sin() } else { 0.0 };
    for kernel in kernels() {
        let reports = verify_trivariate_bound(f, &grid, &kernel, 2000, 5).unwrap();
        assert!(reports.iter().all(|r| !r.violated()), "{kernel}");
    }
}
