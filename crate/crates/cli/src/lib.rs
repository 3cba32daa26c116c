//! Experiment pipelines behind the `gibbslab` binary.
//!
//! Every command has an in-memory entry point returning typed rows and a
//! thin wrapper that writes CSV files. CSV output carries no timestamps, so
//! identical inputs give byte-identical files.

use std::path::{Path, PathBuf};

use gibbslab_core::analysis::{
    dssim_at_border, gradient_norm, gradient_ratio, rel_err, voi_means, voi_means_partial, volume_ratio, VoiMeans,
};
use gibbslab_core::gibbs::{
    convergence_study, gibbs_profile, verify_pointwise_bound, verify_trivariate_bound, BoundReport, PiecewiseSignal,
    TrivariateReport,
};
use gibbslab_core::grid::{coarse_grid, make_grid};
use gibbslab_core::io::{fmt_sig6, read_labels, read_scalar, write_labels, write_scalar, CsvTable};
use gibbslab_core::morphology::voi_border;
use gibbslab_core::phantom::{sample_phantom, segment_phantom, PhantomSpec};
use gibbslab_core::resample::{resample_labels_multilabel, resample_labels_nearest, resample_scalar};
use gibbslab_core::{Fov, Grid3, Kernel, KernelFamily, LabelVolume, ScalarVolume};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

pub const COMPARE_COLUMNS: [&str; 4] = ["sampling", "method", "rel_err", "flag"];
pub const LOCATE_COLUMNS: [&str; 6] = ["kernel", "dssim", "dssim_border", "percent", "grad_percent", "vol_percent"];
pub const GIBBS_COLUMNS: [&str; 8] = ["N", "kernel", "x", "k", "p", "error", "bound", "violated"];
pub const CONVERGENCE_COLUMNS: [&str; 4] = ["N", "kernel", "x", "error"];
pub const PROFILE_COLUMNS: [&str; 4] = ["N", "kernel", "p", "max_error"];
pub const BOUNDS3D_COLUMNS: [&str; 6] = ["x", "y", "z", "error", "bound", "violated"];

pub const REFERENCE_FILE: &str = "reference";
pub const FUNCTIONAL_FILE: &str = "functional";
pub const LABELS_FILE: &str = "labels";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] gibbslab_core::Error),
    #[error("invariant violation: {0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Violation(_) => EXIT_VIOLATION,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `"linear,cubic"`; `epsilon` applies to gaussian entries.
pub fn parse_kernels(list: &str, epsilon: f64) -> CliResult<Vec<Kernel>> {
    let kernels = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|name| {
            let k: Kernel = name.parse().map_err(|e: gibbslab_core::Error| CliError::Usage(e.to_string()))?;
            if k.family() == KernelFamily::Gaussian {
                Kernel::gaussian(epsilon).map_err(|e| CliError::Usage(e.to_string()))
            } else {
                Ok(k)
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    if kernels.is_empty() {
        return Err(CliError::Usage("kernel list is empty".into()));
    }
    Ok(kernels)
}

pub fn default_oversamplers(epsilon: f64) -> Vec<Kernel> {
    vec![Kernel::linear(), Kernel::gaussian(epsilon).expect("positive epsilon"), Kernel::lanczos2(), Kernel::cubic()]
}

/// Protocol parameters shared by `phantom`, `compare` and `locate`.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub size: usize,
    pub factor: usize,
    pub kernels: Vec<Kernel>,
    pub multilabel_sigma: f64,
    pub border_reps: usize,
    pub out: PathBuf,
    pub include_background: bool,
    pub fov: Fov,
}

impl ExperimentConfig {
    pub fn new(size: usize, out: impl Into<PathBuf>) -> Self {
        Self {
            size,
            factor: 2,
            kernels: default_oversamplers(Kernel::DEFAULT_EPSILON),
            multilabel_sigma: 0.5,
            border_reps: 3,
            out: out.into(),
            include_background: true,
            fov: Fov::cube(-1.0, 1.0).expect("valid cube"),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.factor < 2 {
            return Err(CliError::Usage(format!("factor must be at least 2, got {}", self.factor)));
        }
        if self.kernels.is_empty() {
            return Err(CliError::Usage("kernel list is empty".into()));
        }
        if !(self.multilabel_sigma.is_finite() && self.multilabel_sigma > 0.0) {
            return Err(CliError::Usage(format!("multilabel sigma must be positive, got {}", self.multilabel_sigma)));
        }
        if self.size / self.factor < 2 {
            return Err(CliError::Usage(format!(
                "size {} with factor {} leaves fewer than 2 coarse nodes; the smallest legal size is {}",
                self.size,
                self.factor,
                2 * self.factor
            )));
        }
        Ok(())
    }
}

/// High-resolution image `I`, analytic coarse image `F` and segmentation `M`.
#[derive(Clone, Debug)]
pub struct PhantomSet {
    pub reference: ScalarVolume,
    pub functional: ScalarVolume,
    pub labels: LabelVolume,
}

/// Samples the phantom on the fine grid and analytically on the coarse grid.
pub fn build_phantom(spec: &PhantomSpec, fov: Fov, size: usize, factor: usize) -> CliResult<PhantomSet> {
    let fine = make_grid(fov, [size; 3])?;
    let coarse = coarse_grid(&fine, factor)?;
    let reference = sample_phantom(spec, &fine);
    let functional = sample_phantom(spec, &coarse);
    let labels = segment_phantom(&reference)?;
    Ok(PhantomSet { reference, functional, labels })
}

pub fn cmd_phantom(config: &ExperimentConfig) -> CliResult<PhantomSet> {
    config.validate()?;
    let set = build_phantom(&PhantomSpec::shepp_logan(), config.fov, config.size, config.factor)?;
    write_phantom_set(&config.out, &set)?;
    Ok(set)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|source| CliError::Data(gibbslab_core::Error::Io { path: dir.to_path_buf(), source }))
}

pub fn write_phantom_set(dir: &Path, set: &PhantomSet) -> CliResult<()> {
    create_dir(dir)?;
    write_scalar(&dir.join(REFERENCE_FILE), &set.reference)?;
    write_scalar(&dir.join(FUNCTIONAL_FILE), &set.functional)?;
    write_labels(&dir.join(LABELS_FILE), &set.labels)?;
    Ok(())
}

pub fn read_phantom_set(dir: &Path) -> CliResult<PhantomSet> {
    let set = PhantomSet {
        reference: read_scalar(&dir.join(REFERENCE_FILE))?,
        functional: read_scalar(&dir.join(FUNCTIONAL_FILE))?,
        labels: read_labels(&dir.join(LABELS_FILE))?,
    };
    if !set.reference.grid().same_grid(set.labels.grid()) {
        return Err(gibbslab_core::Error::GridMismatch("reference and labels differ in grid".into()).into());
    }
    if !set.reference.grid().same_fov(set.functional.grid()) {
        return Err(gibbslab_core::Error::FovMismatch.into());
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Under,
    Over,
}

impl Sampling {
    pub fn name(self) -> &'static str {
        match self {
            Sampling::Under => "under",
            Sampling::Over => "over",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub sampling: Sampling,
    pub method: String,
    /// `None` when a VOI vanished after undersampling.
    pub rel_err: Option<f64>,
    pub empty_labels: Vec<usize>,
    pub is_min: bool,
}

impl CompareRow {
    fn flag(&self) -> String {
        let mut parts = Vec::new();
        if self.is_min {
            parts.push("min".to_string());
        }
        if !self.empty_labels.is_empty() {
            let ids: Vec<String> = self.empty_labels.iter().map(|l| l.to_string()).collect();
            parts.push(format!("empty_voi:{}", ids.join(";")));
        }
        parts.join(" ")
    }
}

fn select(v: VoiMeans, include_background: bool) -> VoiMeans {
    if include_background {
        v
    } else {
        v.without_background()
    }
}

/// Mean-value errors for label undersampling (nearest, multilabel) and for
/// scalar oversampling with each configured kernel.
pub fn compare_rows(set: &PhantomSet, config: &ExperimentConfig) -> CliResult<Vec<CompareRow>> {
    let v = select(voi_means(&set.reference, &set.labels)?, config.include_background);
    let coarse = *set.functional.grid();
    let mut rows = Vec::new();

    let under: [(&str, LabelVolume); 2] = [
        ("nearest", resample_labels_nearest(&set.labels, &coarse)?),
        ("multilabel", resample_labels_multilabel(&set.labels, &coarse, config.multilabel_sigma)?),
    ];
    for (method, m_minus) in under {
        let partial = voi_means_partial(&set.functional, &m_minus)?;
        let empty: Vec<usize> = partial
            .iter()
            .enumerate()
            .filter(|(l, m)| m.is_none() && (config.include_background || *l != 0))
            .map(|(l, _)| l)
            .collect();
        let rel = if empty.is_empty() {
            let values = partial.into_iter().map(|m| m.expect("non-empty")).collect();
            Some(rel_err(&v, &select(VoiMeans { values }, config.include_background))?)
        } else {
            None
        };
        rows.push(CompareRow {
            sampling: Sampling::Under,
            method: method.into(),
            rel_err: rel,
            empty_labels: empty,
            is_min: false,
        });
    }

    for kernel in &config.kernels {
        let f_plus = resample_scalar(&set.functional, set.reference.grid(), kernel)?;
        let v_plus = select(voi_means(&f_plus, &set.labels)?, config.include_background);
        rows.push(CompareRow {
            sampling: Sampling::Over,
            method: kernel.to_string(),
            rel_err: Some(rel_err(&v, &v_plus)?),
            empty_labels: Vec::new(),
            is_min: false,
        });
    }

    for sampling in [Sampling::Under, Sampling::Over] {
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.sampling == sampling)
            .filter_map(|(i, r)| r.rel_err.map(|e| (i, e)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, _)) = best {
            rows[i].is_min = true;
        }
    }
    Ok(rows)
}

pub fn compare_table(rows: &[CompareRow]) -> CsvTable {
    let mut t = CsvTable::new(&COMPARE_COLUMNS);
    for r in rows {
        t.push(vec![
            r.sampling.name().into(),
            r.method.clone(),
            r.rel_err.map_or_else(|| "nan".into(), fmt_sig6),
            r.flag(),
        ]);
    }
    t
}

pub fn cmd_compare(config: &ExperimentConfig) -> CliResult<Vec<CompareRow>> {
    let set = read_phantom_set(&config.out)?;
    let rows = compare_rows(&set, config)?;
    compare_table(&rows).write(&config.out.join("compare.csv"))?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocateRow {
    pub kernel: String,
    pub dssim: f64,
    pub dssim_border: f64,
    pub percent: Option<f64>,
    pub grad_percent: f64,
    pub vol_percent: f64,
}

/// DSSIM of `F+` against `I` globally and on the border, plus the
/// kernel-independent gradient and volume shares of the border.
pub fn locate_rows(set: &PhantomSet, config: &ExperimentConfig) -> CliResult<Vec<LocateRow>> {
    let border = voi_border(&set.labels, config.border_reps);
    let grad_percent = gradient_ratio(&gradient_norm(&set.reference)?, &border)?;
    let vol_percent = volume_ratio(&border);
    config
        .kernels
        .iter()
        .map(|kernel| {
            let f_plus = resample_scalar(&set.functional, set.reference.grid(), kernel)?;
            let d = dssim_at_border(&set.reference, &f_plus, &border)?;
            Ok(LocateRow {
                kernel: kernel.to_string(),
                dssim: d.global,
                dssim_border: d.border,
                percent: d.percent,
                grad_percent,
                vol_percent,
            })
        })
        .collect()
}

pub fn locate_table(rows: &[LocateRow]) -> CsvTable {
    let mut t = CsvTable::new(&LOCATE_COLUMNS);
    for r in rows {
        t.push(vec![
            r.kernel.clone(),
            fmt_sig6(r.dssim),
            fmt_sig6(r.dssim_border),
            r.percent.map_or_else(|| "nan".into(), fmt_sig6),
            fmt_sig6(r.grad_percent),
            fmt_sig6(r.vol_percent),
        ]);
    }
    t
}

pub fn cmd_locate(config: &ExperimentConfig) -> CliResult<Vec<LocateRow>> {
    let set = read_phantom_set(&config.out)?;
    let rows = locate_rows(&set, config)?;
    locate_table(&rows).write(&config.out.join("locate.csv"))?;
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SignalKind {
    Heaviside { xi: f64 },
    Sine,
    Constant(f64),
}

impl SignalKind {
    pub fn build(self) -> CliResult<PiecewiseSignal> {
        Ok(match self {
            SignalKind::Heaviside { xi } => PiecewiseSignal::heaviside(xi)?,
            SignalKind::Sine => PiecewiseSignal::sine(),
            SignalKind::Constant(c) => PiecewiseSignal::constant(c),
        })
    }
}

#[derive(Clone, Debug)]
pub struct GibbsConfig {
    pub kernels: Vec<Kernel>,
    pub ns: Vec<usize>,
    pub signal: SignalKind,
    pub points_per_interval: usize,
    /// Continuity point for the convergence table.
    pub probe_x: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GibbsOutput {
    pub points: CsvTable,
    pub convergence: CsvTable,
    pub profile: CsvTable,
    pub violations: usize,
}

/// Point-wise bound check, convergence at `probe_x` and per-offset profile
/// for every kernel and `N`. Profiles are skipped where `N < 8a`.
pub fn run_gibbs(config: &GibbsConfig) -> CliResult<GibbsOutput> {
    let signal = config.signal.build()?;
    let mut out = GibbsOutput {
        points: CsvTable::new(&GIBBS_COLUMNS),
        convergence: CsvTable::new(&CONVERGENCE_COLUMNS),
        profile: CsvTable::new(&PROFILE_COLUMNS),
        violations: 0,
    };
    for kernel in &config.kernels {
        let name = kernel.to_string();
        for &n in &config.ns {
            let reports: Vec<BoundReport> = verify_pointwise_bound(&signal, kernel, n, config.points_per_interval)?;
            for r in &reports {
                out.violations += usize::from(r.violated());
                out.points.push(vec![
                    n.to_string(),
                    name.clone(),
                    fmt_sig6(r.x),
                    r.k.to_string(),
                    r.p.to_string(),
                    fmt_sig6(r.error),
                    r.bound.map_or_else(String::new, fmt_sig6),
                    u8::from(r.violated()).to_string(),
                ]);
            }
            if n >= 8 * kernel.support_radius() {
                let profile = gibbs_profile(&signal, kernel, n, config.points_per_interval)?;
                for (p, e) in profile.max_error {
                    out.profile.push(vec![n.to_string(), name.clone(), p.to_string(), fmt_sig6(e)]);
                }
            }
        }
        for (n, e) in convergence_study(&signal, kernel, config.probe_x, &config.ns)? {
            out.convergence.push(vec![n.to_string(), name.clone(), fmt_sig6(config.probe_x), fmt_sig6(e)]);
        }
    }
    Ok(out)
}

pub fn cmd_gibbs(config: &GibbsConfig, out_dir: &Path) -> CliResult<GibbsOutput> {
    let out = run_gibbs(config)?;
    create_dir(out_dir)?;
    out.points.write(&out_dir.join("gibbs.csv"))?;
    out.convergence.write(&out_dir.join("gibbs_convergence.csv"))?;
    out.profile.write(&out_dir.join("gibbs_profile.csv"))?;
    if out.violations > 0 {
        return Err(CliError::Violation(format!("{} points exceed the pointwise bound", out.violations)));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelMethod {
    Nearest,
    Multilabel,
}

/// Target grid: same FOV, `size` nodes per axis or source counts divided by `factor`.
pub fn target_grid(source: &Grid3, size: Option<usize>, factor: Option<usize>) -> CliResult<Grid3> {
    match (size, factor) {
        (Some(s), None) => Ok(Grid3::new(*source.fov(), [s; 3])?),
        (None, Some(f)) => Ok(coarse_grid(source, f)?),
        _ => Err(CliError::Usage("give exactly one of --size and --factor".into())),
    }
}

pub fn resample_scalar_file(
    input: &Path,
    output: &Path,
    target: impl Fn(&Grid3) -> CliResult<Grid3>,
    kernel: &Kernel,
) -> CliResult<()> {
    let v = read_scalar(input)?;
    let out = resample_scalar(&v, &target(v.grid())?, kernel)?;
    write_scalar(output, &out)?;
    Ok(())
}

pub fn resample_labels_file(
    input: &Path,
    output: &Path,
    target: impl Fn(&Grid3) -> CliResult<Grid3>,
    method: LabelMethod,
    sigma: f64,
) -> CliResult<()> {
    let l = read_labels(input)?;
    let t = target(l.grid())?;
    let out = match method {
        LabelMethod::Nearest => resample_labels_nearest(&l, &t)?,
        LabelMethod::Multilabel => resample_labels_multilabel(&l, &t, sigma)?,
    };
    write_labels(output, &out)?;
    Ok(())
}

/// `H(x - xi) * sin(pi y)` on `[0, 1]^3`.
pub fn separable_step(xi: f64) -> impl Fn([f64; 3]) -> f64 + Sync {
    move |p: [f64; 3]| if p[0] >= xi { (std::f64::consts::PI * p[1]).sin() } else { 0.0 }
}

#[derive(Clone, Debug)]
pub struct Bounds3dConfig {
    pub size: usize,
    pub kernel: Kernel,
    pub points: usize,
    pub seed: u64,
    pub xi: f64,
}

pub fn run_bounds3d(config: &Bounds3dConfig) -> CliResult<Vec<TrivariateReport>> {
    let grid = make_grid(Fov::cube(0.0, 1.0)?, [config.size; 3])?;
    Ok(verify_trivariate_bound(separable_step(config.xi), &grid, &config.kernel, config.points, config.seed)?)
}

pub fn bounds3d_table(reports: &[TrivariateReport]) -> CsvTable {
    let mut t = CsvTable::new(&BOUNDS3D_COLUMNS);
    for r in reports {
        t.push(vec![
            fmt_sig6(r.point[0]),
            fmt_sig6(r.point[1]),
            fmt_sig6(r.point[2]),
            fmt_sig6(r.error),
            fmt_sig6(r.bound),
            u8::from(r.violated()).to_string(),
        ]);
    }
    t
}

pub fn cmd_bounds3d(config: &Bounds3dConfig, out_dir: &Path) -> CliResult<Vec<TrivariateReport>> {
    let reports = run_bounds3d(config)?;
    create_dir(out_dir)?;
    bounds3d_table(&reports).write(&out_dir.join("bounds3d.csv"))?;
    let violations = reports.iter().filter(|r| r.violated()).count();
    if violations > 0 {
        return Err(CliError::Violation(format!("{violations} points exceed the trivariate bound")));
    }
    Ok(reports)
}

/// Caps the global rayon pool from `GIBBSLAB_THREADS`.
pub fn init_threads_from_env() -> CliResult<()> {
    let Ok(raw) = std::env::var("GIBBSLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GIBBSLAB_THREADS must be a positive integer, got '{raw}'")))?;
    // a pool already built by an earlier call is left as is
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_lists() {
        let ks = parse_kernels("linear, gaussian", 3.0).unwrap();
        assert_eq!(ks[1].epsilon(), 3.0);
        assert!(matches!(parse_kernels("", 2.0), Err(CliError::Usage(_))));
        assert!(matches!(parse_kernels("bspline", 2.0), Err(CliError::Usage(_))));
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new(4, "/tmp/x");
        assert!(c.validate().is_ok());
        c.size = 3;
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        c.size = 8;
        c.factor = 1;
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Data(gibbslab_core::Error::ZeroNorm).exit_code(), 2);
        assert_eq!(CliError::Violation(String::new()).exit_code(), 3);
    }

    #[test]
    fn identical_grids_give_zero_errors() {
        let set = build_phantom(&PhantomSpec::shepp_logan(), Fov::cube(-1.0, 1.0).unwrap(), 24, 1).unwrap();
        let config = ExperimentConfig::new(24, "/unused");
        for row in compare_rows(&set, &config).unwrap() {
            assert_eq!(row.rel_err, Some(0.0), "{}", row.method);
        }
    }

    #[test]
    fn injected_reference_gives_zero_dssim() {
        let mut set = build_phantom(&PhantomSpec::shepp_logan(), Fov::cube(-1.0, 1.0).unwrap(), 24, 1).unwrap();
        set.functional = set.reference.clone();
        let rows = locate_rows(&set, &ExperimentConfig::new(24, "/unused")).unwrap();
        for r in rows {
            assert_eq!((r.dssim, r.dssim_border, r.percent), (0.0, 0.0, None));
            assert!(r.vol_percent > 0.0 && r.vol_percent < 100.0);
        }
    }

    #[test]
    fn constant_signal_has_zero_error() {
        let out = run_gibbs(&GibbsConfig {
            kernels: default_oversamplers(2.0),
            ns: vec![16, 32],
            signal: SignalKind::Constant(3.0),
            points_per_interval: 4,
            probe_x: 0.37,
        })
        .unwrap();
        assert!(out.points.column("error").unwrap().iter().all(|e| *e == "0"));
        assert_eq!(out.violations, 0);
    }
}
