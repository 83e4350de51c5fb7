//! Data ingestion, result persistence, and plot emission.
//!
//! Three dataset formats are read, none written: CSV (one row per object,
//! optional label column), raw little-endian f32 with an (n, d) header and
//! an optional side-car label text file, and IDX image/label tensors.
//! Parsers reject malformed input outright, naming the offending line or
//! byte offset; nothing is silently coerced.

mod artifact;
mod curves;

pub use artifact::{
    load_artifact, save_artifact, ArtifactProvenance, ClusteringArtifact, ConfidenceRecord,
    LevelRecord, ARTIFACT_SCHEMA_VERSION,
};
pub use curves::{
    curves_svg, read_curves_csv, write_curves_csv, write_curves_svg, AxisScale,
};

use crate::dataset::{Dataset, LabelAlphabet};
use crate::error::{Error, Result};
use byteorder::{BigEndian, LittleEndian, ReadBytesExt};
use std::io::Cursor;
use std::path::{Path, PathBuf};

/// IDX magic for a 3-D unsigned-byte tensor (image stacks).
const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
/// IDX magic for a 1-D unsigned-byte vector (labels).
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    RawF32,
    Idx,
}

impl DataFormat {
    /// Guesses the format from a file extension.
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(DataFormat::Csv),
            "f32" | "raw" => Some(DataFormat::RawF32),
            "idx" | "idx3-ubyte" | "idx1-ubyte" | "ubyte" => Some(DataFormat::Idx),
            _ => None,
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "raw-f32" => Ok(DataFormat::RawF32),
            "idx" => Ok(DataFormat::Idx),
            other => Err(Error::param(
                "format",
                format!("unknown format `{other}` (expected csv, raw-f32, or idx)"),
            )),
        }
    }
}

/// CSV label column selector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// Header name; requires `has_header`.
    Name(String),
    /// 1-based column index.
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<usize>() {
            Ok(idx) => Ok(LabelColumn::Index(idx)),
            Err(_) => Ok(LabelColumn::Name(s.to_string())),
        }
    }
}

/// Everything needed to ingest one dataset file.
#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub format: DataFormat,
    /// CSV only: which column holds the class label.
    pub label_column: Option<LabelColumn>,
    /// raw-f32: side-car text file of n integer labels;
    /// IDX: a label tensor file.
    pub label_file: Option<PathBuf>,
    /// CSV only: treat the first row as a header.
    pub has_header: bool,
    /// Divide every feature vector by its sum (sum-to-one normalization).
    /// Never applied implicitly.
    pub normalize: bool,
}

impl DatasetFile {
    pub fn new(path: impl Into<PathBuf>, format: DataFormat) -> Self {
        Self {
            path: path.into(),
            format,
            label_column: None,
            label_file: None,
            has_header: false,
            normalize: false,
        }
    }
}

fn parse_error(path: &Path, location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        location: location.into(),
        message: message.into(),
    }
}

/// Loads a dataset according to the declared format.
pub fn load_dataset(file: &DatasetFile) -> Result<Dataset> {
    let dataset = match file.format {
        DataFormat::Csv => load_csv(file)?,
        DataFormat::RawF32 => load_raw_f32(file)?,
        DataFormat::Idx => load_idx(file)?,
    };
    if file.normalize {
        normalize_rows(dataset)
    } else {
        Ok(dataset)
    }
}

/// Divides each feature vector by its sum; all-zero rows stay zero.
fn normalize_rows(dataset: Dataset) -> Result<Dataset> {
    let n = dataset.len();
    let d = dataset.dim();
    let mut features = Vec::with_capacity(n * d);
    for i in 0..n {
        let row = dataset.row(i);
        let sum: f64 = row.iter().sum();
        if sum != 0.0 {
            features.extend(row.iter().map(|v| v / sum));
        } else {
            features.extend_from_slice(row);
        }
    }
    let labels = dataset.labels().cloned();
    let mut out = Dataset::from_flat(n, d, features)?;
    if let Some(l) = labels {
        out = out.with_labels(l.values, l.alphabet)?;
    }
    Ok(out)
}

fn load_csv(file: &DatasetFile) -> Result<Dataset> {
    let path = &file.path;
    let needs_header = matches!(file.label_column, Some(LabelColumn::Name(_)));
    if needs_header && !file.has_header {
        return Err(Error::param(
            "label_column",
            "a named label column requires a header row",
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(file.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| parse_error(path, "open", e.to_string()))?;

    let label_index: Option<usize> = match &file.label_column {
        None => None,
        Some(LabelColumn::Index(idx)) => {
            if *idx == 0 {
                return Err(Error::param("label_column", "column indices are 1-based"));
            }
            Some(idx - 1)
        }
        Some(LabelColumn::Name(name)) => {
            let headers = reader
                .headers()
                .map_err(|e| parse_error(path, "header", e.to_string()))?;
            Some(headers.iter().position(|h| h == name).ok_or_else(|| {
                parse_error(path, "header", format!("no column named `{name}`"))
            })?)
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, "record", e.to_string()))?;
        let line = record
            .position()
            .map(|p| format!("line {}", p.line()))
            .unwrap_or_else(|| "unknown line".into());
        if let Some(idx) = label_index {
            if idx >= record.len() {
                return Err(parse_error(
                    path,
                    line,
                    format!("label column {} missing ({} fields)", idx + 1, record.len()),
                ));
            }
        }
        let mut row = Vec::with_capacity(record.len().saturating_sub(1));
        for (col, field) in record.iter().enumerate() {
            if Some(col) == label_index {
                label_names.push(field.to_string());
                continue;
            }
            let value: f64 = field.trim().parse().map_err(|_| {
                parse_error(
                    path,
                    line.clone(),
                    format!("non-numeric cell `{field}` in column {}", col + 1),
                )
            })?;
            row.push(value);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_error(
                    path,
                    line,
                    format!("row has {} feature columns, expected {w}", row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(path, "end of file", "no data rows"));
    }

    let dataset = Dataset::from_rows(rows)?;
    if label_index.is_some() {
        let mut alphabet = LabelAlphabet::new();
        let values: Vec<u32> = label_names.iter().map(|s| alphabet.intern(s)).collect();
        dataset.with_labels(values, alphabet)
    } else {
        Ok(dataset)
    }
}

fn load_raw_f32(file: &DatasetFile) -> Result<Dataset> {
    let path = &file.path;
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let offset = |cur: &Cursor<&[u8]>| format!("byte {}", cur.position());

    let n = cur
        .read_u64::<LittleEndian>()
        .map_err(|_| parse_error(path, offset(&cur), "truncated header (expected n)"))?;
    let d = cur
        .read_u64::<LittleEndian>()
        .map_err(|_| parse_error(path, offset(&cur), "truncated header (expected d)"))?;
    let count = (n as usize)
        .checked_mul(d as usize)
        .ok_or_else(|| parse_error(path, "header", "n * d overflows"))?;

    let mut features = Vec::with_capacity(count);
    for _ in 0..count {
        let v = cur
            .read_f32::<LittleEndian>()
            .map_err(|_| parse_error(path, offset(&cur), "truncated feature data"))?;
        features.push(v as f64);
    }
    if cur.position() != bytes.len() as u64 {
        return Err(parse_error(
            path,
            offset(&cur),
            format!("{} trailing bytes", bytes.len() as u64 - cur.position()),
        ));
    }
    let dataset = Dataset::from_flat(n as usize, d as usize, features)?;

    match &file.label_file {
        None => Ok(dataset),
        Some(label_path) => {
            let text = std::fs::read_to_string(label_path)?;
            let mut alphabet = LabelAlphabet::new();
            let mut values = Vec::new();
            for (lineno, token) in text.split_whitespace().enumerate() {
                if token.parse::<i64>().is_err() {
                    return Err(parse_error(
                        label_path,
                        format!("token {}", lineno + 1),
                        format!("label `{token}` is not an integer"),
                    ));
                }
                values.push(alphabet.intern(token));
            }
            if values.len() != n as usize {
                return Err(parse_error(
                    label_path,
                    "end of file",
                    format!("{} labels for {n} objects", values.len()),
                ));
            }
            dataset.with_labels(values, alphabet)
        }
    }
}

fn load_idx(file: &DatasetFile) -> Result<Dataset> {
    let path = &file.path;
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| parse_error(path, "byte 0", "file too short for magic number"))?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(parse_error(
            path,
            "byte 0",
            format!("bad magic number {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x} (image tensor)"),
        ));
    }
    let count = cur
        .read_u32::<BigEndian>()
        .map_err(|_| parse_error(path, "byte 4", "truncated dimension header"))?
        as usize;
    let rows = cur
        .read_u32::<BigEndian>()
        .map_err(|_| parse_error(path, "byte 8", "truncated dimension header"))?
        as usize;
    let cols = cur
        .read_u32::<BigEndian>()
        .map_err(|_| parse_error(path, "byte 12", "truncated dimension header"))?
        as usize;
    let d = rows * cols;
    let expected = 16 + count * d;
    if bytes.len() != expected {
        return Err(parse_error(
            path,
            format!("byte {}", bytes.len().min(expected)),
            format!("file holds {} bytes, expected {expected}", bytes.len()),
        ));
    }
    // Image bytes scale to [0, 1]; flattening is row-major.
    let features: Vec<f64> = bytes[16..].iter().map(|&b| b as f64 / 255.0).collect();
    let dataset = Dataset::from_flat(count, d, features)?;

    match &file.label_file {
        None => Ok(dataset),
        Some(label_path) => {
            let labels = load_idx_labels(label_path)?;
            if labels.len() != count {
                return Err(parse_error(
                    label_path,
                    "header",
                    format!("{} labels for {count} images", labels.len()),
                ));
            }
            let mut alphabet = LabelAlphabet::new();
            let values: Vec<u32> = labels
                .iter()
                .map(|b| alphabet.intern(&b.to_string()))
                .collect();
            dataset.with_labels(values, alphabet)
        }
    }
}

/// Reads an IDX label vector (magic 0x00000801).
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| parse_error(path, "byte 0", "file too short for magic number"))?;
    if magic != IDX_LABELS_MAGIC {
        return Err(parse_error(
            path,
            "byte 0",
            format!("bad magic number {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x} (label vector)"),
        ));
    }
    let count = cur
        .read_u32::<BigEndian>()
        .map_err(|_| parse_error(path, "byte 4", "truncated count"))?
        as usize;
    if bytes.len() != 8 + count {
        return Err(parse_error(
            path,
            format!("byte {}", bytes.len().min(8 + count)),
            format!("file holds {} bytes, expected {}", bytes.len(), 8 + count),
        ));
    }
    Ok(bytes[8..].to_vec())
}

/// Character-grid preview of a feature vector, available when the dimension
/// is a perfect square (pixel data). Used by the interactive oracle.
pub fn ascii_grid(features: &[f64]) -> Option<String> {
    let d = features.len();
    let side = (d as f64).sqrt().round() as usize;
    if side < 2 || side * side != d {
        return None;
    }
    let max = features.iter().copied().fold(0.0f64, f64::max);
    let ramp: &[u8] = b" .:-=+*#%@";
    let mut out = String::with_capacity(d + side);
    for r in 0..side {
        for c in 0..side {
            let v = features[r * side + c];
            let level = if max > 0.0 {
                ((v / max) * (ramp.len() - 1) as f64).round() as usize
            } else {
                0
            };
            out.push(ramp[level.min(ramp.len() - 1)] as char);
        }
        if r + 1 < side {
            out.push('\n');
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &[u8], ext: &str) -> tempfile::TempPath {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(content).unwrap();
        f.into_temp_path()
    }

    #[test]
    fn csv_with_label_index() {
        let path = write_temp(b"1,2,A\n3,4,B\n", ".csv");
        let mut spec = DatasetFile::new(&*path, DataFormat::Csv);
        spec.label_column = Some(LabelColumn::Index(3));
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        let labels = ds.labels().unwrap();
        assert_eq!(labels.values, vec![0, 1]);
        assert_eq!(labels.alphabet.names(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn csv_with_named_label_column() {
        let path = write_temp(b"x,y,class\n0.5,1.5,pos\n2.5,3.5,neg\n1.0,1.0,pos\n", ".csv");
        let mut spec = DatasetFile::new(&*path, DataFormat::Csv);
        spec.label_column = Some(LabelColumn::Name("class".into()));
        spec.has_header = true;
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.label_values().unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn csv_rejects_bad_cells_with_line() {
        let path = write_temp(b"1,2\n3,oops\n", ".csv");
        let spec = DatasetFile::new(&*path, DataFormat::Csv);
        match load_dataset(&spec) {
            Err(Error::Parse { location, message, .. }) => {
                assert_eq!(location, "line 2");
                assert!(message.contains("oops"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let path = write_temp(b"1,2\n3\n", ".csv");
        let spec = DatasetFile::new(&*path, DataFormat::Csv);
        assert!(matches!(load_dataset(&spec), Err(Error::Parse { .. })));
    }

    fn raw_f32_bytes(n: u64, d: u64, values: &[f32]) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&n.to_le_bytes());
        bytes.extend_from_slice(&d.to_le_bytes());
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    #[test]
    fn raw_f32_round_trip() {
        let path = write_temp(&raw_f32_bytes(2, 2, &[1.0, 2.0, 3.0, 4.0]), ".f32");
        let spec = DatasetFile::new(&*path, DataFormat::RawF32);
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn raw_f32_with_sidecar_labels() {
        let data = write_temp(&raw_f32_bytes(3, 1, &[0.0, 1.0, 2.0]), ".f32");
        let labels = write_temp(b"7\n2\n7\n", ".labels");
        let mut spec = DatasetFile::new(&*data, DataFormat::RawF32);
        spec.label_file = Some(labels.to_path_buf());
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.label_values().unwrap(), &[0, 1, 0]);
        assert_eq!(ds.labels().unwrap().alphabet.name(0), "7");
    }

    #[test]
    fn raw_f32_rejects_truncation_and_trailing() {
        let mut bytes = raw_f32_bytes(2, 2, &[1.0, 2.0, 3.0]);
        let path = write_temp(&bytes, ".f32");
        let spec = DatasetFile::new(&*path, DataFormat::RawF32);
        assert!(matches!(load_dataset(&spec), Err(Error::Parse { .. })));

        bytes = raw_f32_bytes(1, 2, &[1.0, 2.0]);
        bytes.push(0);
        let path = write_temp(&bytes, ".f32");
        let spec = DatasetFile::new(&*path, DataFormat::RawF32);
        match load_dataset(&spec) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("trailing")),
            other => panic!("expected trailing-byte error, got {other:?}"),
        }
    }

    fn idx_image_bytes(images: &[[u8; 4]]) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        for img in images {
            bytes.extend_from_slice(img);
        }
        bytes
    }

    #[test]
    fn idx_images_and_labels() {
        let images = idx_image_bytes(&[[0, 51, 102, 255], [255, 204, 153, 0]]);
        let image_path = write_temp(&images, ".idx");

        let mut label_bytes = Vec::new();
        label_bytes.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        label_bytes.extend_from_slice(&3u32.to_be_bytes());
        label_bytes.extend_from_slice(&[7, 2, 1]);
        let label_path = write_temp(&label_bytes, ".idx");
        assert_eq!(load_idx_labels(&label_path).unwrap(), vec![7, 2, 1]);

        let mut spec = DatasetFile::new(&*image_path, DataFormat::Idx);
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.row(0)[1], 51.0 / 255.0);

        // Sum-to-one normalization on request.
        spec.normalize = true;
        let ds = load_dataset(&spec).unwrap();
        let sum: f64 = ds.row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);

        // Label count mismatch is rejected.
        spec.label_file = Some(label_path.to_path_buf());
        assert!(matches!(load_dataset(&spec), Err(Error::Parse { .. })));
    }

    #[test]
    fn idx_bad_magic_names_offset() {
        let path = write_temp(&[0, 0, 8, 9, 0, 0, 0, 0], ".idx");
        let spec = DatasetFile::new(&*path, DataFormat::Idx);
        match load_dataset(&spec) {
            Err(Error::Parse { location, message, .. }) => {
                assert_eq!(location, "byte 0");
                assert!(message.contains("magic"));
            }
            other => panic!("expected magic error, got {other:?}"),
        }
    }

    #[test]
    fn ascii_preview_for_square_dimensions() {
        let grid = ascii_grid(&[0.0, 0.5, 1.0, 0.0]).unwrap();
        assert_eq!(grid.lines().count(), 2);
        assert_eq!(grid.lines().next().unwrap().len(), 2);
        assert!(ascii_grid(&[1.0, 2.0, 3.0]).is_none());
    }
}
