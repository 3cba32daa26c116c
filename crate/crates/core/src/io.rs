//! Sidecar-JSON + raw volume files and CSV reports.
//!
//! A volume stored at `path` is written as `path.json` (header) and
//! `path.raw` (little-endian samples, `i` fastest). Scalars are stored as
//! `f32`, labels as `u16` and masks as `u8` holding 0 or 1.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fov, Grid3, LabelVolume, ScalarVolume};
use crate::morphology::BoolMask;

pub const FORMAT_VERSION: u32 = 1;
pub const LAYOUT: &str = "i-fastest";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    U16,
    U8,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::U16 => 2,
            DType::U8 => 1,
        }
    }
}

/// Contents of the `.json` sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    /// `[[lo, hi]; 3]` per axis.
    pub fov: [[f64; 2]; 3],
    pub dtype: String,
    pub layout: String,
    pub version: u32,
    /// Size of the label space, label payloads only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_labels: Option<usize>,
}

impl VolumeHeader {
    fn for_grid(grid: &Grid3, dtype: DType, n_labels: Option<usize>) -> Self {
        let (lo, hi) = (grid.fov().lo(), grid.fov().hi());
        Self {
            dims: grid.counts(),
            fov: [[lo[0], hi[0]], [lo[1], hi[1]], [lo[2], hi[2]]],
            dtype: dtype_tag(dtype).to_string(),
            layout: LAYOUT.to_string(),
            version: FORMAT_VERSION,
            n_labels,
        }
    }
}

fn dtype_tag(d: DType) -> &'static str {
    match d {
        DType::F32 => "f32",
        DType::U16 => "u16",
        DType::U8 => "u8",
    }
}

/// Any of the three storable kinds.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Scalar(ScalarVolume),
    Labels(LabelVolume),
    Mask { grid: Grid3, mask: BoolMask },
}

impl Payload {
    pub fn grid(&self) -> &Grid3 {
        match self {
            Payload::Scalar(v) => v.grid(),
            Payload::Labels(l) => l.grid(),
            Payload::Mask { grid, .. } => grid,
        }
    }
}

fn with_ext(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Writes `path.json` and `path.raw`.
pub fn write_volume(path: &Path, payload: &Payload) -> Result<()> {
    let (header, raw) = match payload {
        Payload::Scalar(v) => {
            let mut raw = Vec::with_capacity(v.values().len() * 4);
            for &x in v.values() {
                raw.extend_from_slice(&(x as f32).to_le_bytes());
            }
            (VolumeHeader::for_grid(v.grid(), DType::F32, None), raw)
        }
        Payload::Labels(l) => {
            let mut raw = Vec::with_capacity(l.labels().len() * 2);
            for &x in l.labels() {
                let x = u16::try_from(x).map_err(|_| Error::LabelOverflow { label: x })?;
                raw.extend_from_slice(&x.to_le_bytes());
            }
            (VolumeHeader::for_grid(l.grid(), DType::U16, Some(l.n_labels())), raw)
        }
        Payload::Mask { grid, mask } => {
            if grid.counts() != mask.dims() {
                return Err(Error::DimMismatch { expected: grid.counts(), found: mask.dims() });
            }
            let raw = mask.bits().iter().map(|&b| u8::from(b)).collect();
            (VolumeHeader::for_grid(grid, DType::U8, None), raw)
        }
    };
    let json_path = with_ext(path, "json");
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&json_path, json).map_err(io_err(&json_path))?;
    let raw_path = with_ext(path, "raw");
    fs::write(&raw_path, raw).map_err(io_err(&raw_path))
}

pub fn write_scalar(path: &Path, volume: &ScalarVolume) -> Result<()> {
    write_volume(path, &Payload::Scalar(volume.clone()))
}

pub fn write_labels(path: &Path, labels: &LabelVolume) -> Result<()> {
    write_volume(path, &Payload::Labels(labels.clone()))
}

pub fn write_mask(path: &Path, grid: &Grid3, mask: &BoolMask) -> Result<()> {
    write_volume(path, &Payload::Mask { grid: *grid, mask: mask.clone() })
}

pub fn read_header(path: &Path) -> Result<VolumeHeader> {
    let json_path = with_ext(path, "json");
    let text = fs::read_to_string(&json_path).map_err(io_err(&json_path))?;
    let header: VolumeHeader = serde_json::from_str(&text)
        .map_err(|e| Error::CorruptFile { path: json_path.clone(), reason: e.to_string() })?;
    if header.version != FORMAT_VERSION {
        return Err(Error::Unsupported { path: json_path, reason: format!("version {}", header.version) });
    }
    if header.layout != LAYOUT {
        return Err(Error::Unsupported { path: json_path, reason: format!("layout '{}'", header.layout) });
    }
    Ok(header)
}

/// Reads back whatever kind `path` holds.
pub fn read_volume(path: &Path) -> Result<Payload> {
    let header = read_header(path)?;
    let json_path = with_ext(path, "json");
    let dtype = match header.dtype.as_str() {
        "f32" => DType::F32,
        "u16" => DType::U16,
        "u8" => DType::U8,
        other => {
            return Err(Error::Unsupported { path: json_path, reason: format!("dtype '{other}'") });
        }
    };
    let corrupt = |reason: String| Error::CorruptFile { path: json_path.clone(), reason };
    let fov = Fov::new(
        [header.fov[0][0], header.fov[1][0], header.fov[2][0]],
        [header.fov[0][1], header.fov[1][1], header.fov[2][1]],
    )
    .map_err(|e| corrupt(e.to_string()))?;
    let grid = Grid3::new(fov, header.dims).map_err(|e| corrupt(e.to_string()))?;

    let raw_path = with_ext(path, "raw");
    let raw = fs::read(&raw_path).map_err(io_err(&raw_path))?;
    let expected = grid.len() * dtype.size();
    if raw.len() != expected {
        return Err(Error::CorruptFile {
            path: raw_path,
            reason: format!("expected {expected} bytes, found {}", raw.len()),
        });
    }
    let corrupt_raw = |e: Error| Error::CorruptFile { path: raw_path.clone(), reason: e.to_string() };
    match dtype {
        DType::F32 => {
            let values = raw.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))).collect();
            Ok(Payload::Scalar(ScalarVolume::new(grid, values).map_err(corrupt_raw)?))
        }
        DType::U16 => {
            let labels: Vec<u32> = raw.chunks_exact(2).map(|c| u32::from(u16::from_le_bytes([c[0], c[1]]))).collect();
            let n_labels = header.n_labels.unwrap_or_else(|| labels.iter().max().map_or(1, |&m| m as usize + 1));
            Ok(Payload::Labels(LabelVolume::with_label_count(grid, labels, n_labels).map_err(corrupt_raw)?))
        }
        DType::U8 => {
            let bits = raw
                .iter()
                .map(|&b| match b {
                    0 => Ok(false),
                    1 => Ok(true),
                    other => Err(Error::CorruptFile {
                        path: raw_path.clone(),
                        reason: format!("mask byte {other} is not 0 or 1"),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            let mask = BoolMask::new(grid.counts(), bits).map_err(corrupt_raw)?;
            Ok(Payload::Mask { grid, mask })
        }
    }
}

pub fn read_scalar(path: &Path) -> Result<ScalarVolume> {
    match read_volume(path)? {
        Payload::Scalar(v) => Ok(v),
        _ => Err(Error::Unsupported { path: path.to_path_buf(), reason: "expected an f32 volume".into() }),
    }
}

pub fn read_labels(path: &Path) -> Result<LabelVolume> {
    match read_volume(path)? {
        Payload::Labels(l) => Ok(l),
        _ => Err(Error::Unsupported { path: path.to_path_buf(), reason: "expected a u16 label volume".into() }),
    }
}

/// `%.6g`-style formatting: 6 significant digits, trailing zeros trimmed.
pub fn fmt_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (5 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV report with a frozen header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].as_str()).collect())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(io_err(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn grid(n: [usize; 3]) -> Grid3 {
        make_grid(Fov::new([-1.0, 0.0, 2.0], [1.0, 0.5, 3.0]).unwrap(), n).unwrap()
    }

    #[test]
    fn sizes_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vol");
        write_scalar(&p, &ScalarVolume::constant(grid([2, 2, 2]), 1.5).unwrap()).unwrap();
        assert_eq!(fs::read(dir.path().join("vol.raw")).unwrap().len(), 32);
        let m = dir.path().join("mask");
        write_mask(&m, &grid([4, 4, 4]), &BoolMask::filled([4, 4, 4], false)).unwrap();
        assert_eq!(fs::read(dir.path().join("mask.raw")).unwrap(), vec![0u8; 64]);
        let header: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("vol.json")).unwrap()).unwrap();
        assert_eq!(header["dtype"], "f32");
        assert_eq!(header["layout"], "i-fastest");
        assert_eq!(header["version"], 1);
        assert_eq!(header["dims"], serde_json::json!([2, 2, 2]));
        assert_eq!(header["fov"], serde_json::json!([[-1.0, 1.0], [0.0, 0.5], [2.0, 3.0]]));
    }

    #[test]
    fn truncated_raw_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v");
        write_scalar(&p, &ScalarVolume::constant(grid([2, 2, 2]), 0.0).unwrap()).unwrap();
        fs::write(dir.path().join("v.raw"), [0u8; 31]).unwrap();
        assert!(matches!(read_volume(&p), Err(Error::CorruptFile { .. })));
    }

    #[test]
    fn handwritten_header_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h");
        fs::write(
            dir.path().join("h.json"),
            r#"{"dims":[2,2,2],"fov":[[0,1],[0,1],[0,1]],"dtype":"f32","layout":"i-fastest","version":1}"#,
        )
        .unwrap();
        let mut raw = Vec::new();
        for i in 0..8 {
            raw.extend_from_slice(&(i as f32).to_le_bytes());
        }
        fs::write(dir.path().join("h.raw"), raw).unwrap();
        let v = read_scalar(&p).unwrap();
        assert_eq!(v.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn unsupported_version_and_dtype() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u");
        fs::write(dir.path().join("u.raw"), [0u8; 8]).unwrap();
        fs::write(
            dir.path().join("u.json"),
            r#"{"dims":[2,2,2],"fov":[[0,1],[0,1],[0,1]],"dtype":"u8","layout":"i-fastest","version":2}"#,
        )
        .unwrap();
        assert!(matches!(read_volume(&p), Err(Error::Unsupported { .. })));
        fs::write(
            dir.path().join("u.json"),
            r#"{"dims":[2,2,2],"fov":[[0,1],[0,1],[0,1]],"dtype":"f64","layout":"i-fastest","version":1}"#,
        )
        .unwrap();
        assert!(matches!(read_volume(&p), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn label_overflow() {
        let dir = tempfile::tempdir().unwrap();
        let g = grid([2, 2, 2]);
        let mut labels = vec![0u32; 8];
        labels[5] = 70_000;
        let lv = LabelVolume::with_label_count(g, labels, 70_001).unwrap();
        assert!(matches!(write_labels(&dir.path().join("l"), &lv), Err(Error::LabelOverflow { label: 70_000 })));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_volume(Path::new("/nonexistent/dir/vol")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/vol.json"));
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(0.140625), "0.140625");
        assert_eq!(fmt_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig6(100.0), "100");
        assert_eq!(fmt_sig6(84.242829), "84.2428");
        assert_eq!(fmt_sig6(-2.5e-7), "-2.5e-07");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig6(999999.7), "1e+06");
        assert_eq!(fmt_sig6(0.0001), "0.0001");
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_sig6(0.5)]);
        assert_eq!(t.to_csv_string(), "a,b\n1,0.5\n");
        assert_eq!(t.column("b").unwrap(), vec!["0.5"]);
    }
}
