//! Loading and binarizing image datasets.
//!
//! Three on-disk formats are understood: IDX image files (MNIST), the
//! whitespace-separated Semeion text format, and a plain CSV of 0/1 cells.

use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grayscale threshold for IDX images: pixels strictly above it become 1.
pub const DEFAULT_THRESHOLD: u8 = 127;

const IDX_MAGIC: u32 = 0x0000_0803;
const SEMEION_PIXELS: usize = 256;
const SEMEION_FIELDS: usize = SEMEION_PIXELS + 10;

/// Binary images stored one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    images: Array2<f64>,
    width: usize,
    height: usize,
    name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Idx,
    Semeion,
    Csv,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idx" | "mnist" => Ok(DataFormat::Idx),
            "semeion" => Ok(DataFormat::Semeion),
            "csv" => Ok(DataFormat::Csv),
            _ => Err(Error::Config(format!("unknown dataset format `{s}`"))),
        }
    }
}

impl std::fmt::Display for DataFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DataFormat::Idx => "idx",
            DataFormat::Semeion => "semeion",
            DataFormat::Csv => "csv",
        })
    }
}

impl BinaryDataset {
    /// Checks that every cell is 0 or 1 and that `width·height` matches.
    pub fn new(
        images: Array2<f64>,
        width: usize,
        height: usize,
        name: impl Into<String>,
    ) -> Result<Self> {
        if images.nrows() == 0 {
            return Err(Error::EmptyData);
        }
        if images.ncols() != width * height {
            return Err(Error::Dimension(format!(
                "{} columns for a {width}x{height} image",
                images.ncols()
            )));
        }
        if let Some(((r, c), v)) = images
            .indexed_iter()
            .find(|(_, v)| **v != 0.0 && **v != 1.0)
        {
            return Err(Error::Contract(format!(
                "non-binary value {v} at row {r}, column {c}"
            )));
        }
        Ok(Self {
            images,
            width,
            height,
            name: name.into(),
        })
    }

    pub fn images(&self) -> &Array2<f64> {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixels per image.
    pub fn dims(&self) -> usize {
        self.images.ncols()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize], name: impl Into<String>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyData);
        }
        Ok(Self {
            images: self.images.select(Axis(0), indices),
            width: self.width,
            height: self.height,
            name: name.into(),
        })
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

/// Parses an IDX image file. Pixels above `threshold` become 1.
pub fn parse_idx(bytes: &[u8], threshold: u8, name: &str) -> Result<BinaryDataset> {
    let word = |offset: usize| -> Result<u32> {
        bytes
            .get(offset..offset + 4)
            .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
            .ok_or_else(|| Error::parse(name, format!("truncated header at byte offset {offset}")))
    };
    let magic = word(0)?;
    if magic != IDX_MAGIC {
        return Err(Error::parse(
            name,
            format!("bad magic 0x{magic:08x} at byte offset 0 (expected 0x{IDX_MAGIC:08x})"),
        ));
    }
    let (n, rows, cols) = (word(4)? as usize, word(8)? as usize, word(12)? as usize);
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let pixels = rows * cols;
    let expected = n
        .checked_mul(pixels)
        .ok_or_else(|| Error::parse(name, "image dimensions overflow"))?;
    let payload = &bytes[16..];
    if payload.len() < expected {
        return Err(Error::parse(
            name,
            format!(
                "truncated payload at byte offset {} (expected {expected} pixel bytes)",
                16 + payload.len()
            ),
        ));
    }
    let data = payload[..expected]
        .iter()
        .map(|&p| if p > threshold { 1.0 } else { 0.0 })
        .collect();
    let images = Array2::from_shape_vec((n, pixels), data).expect("length checked");
    BinaryDataset::new(images, cols, rows, name)
}

pub fn load_idx(path: &Path) -> Result<BinaryDataset> {
    load_idx_with_threshold(path, DEFAULT_THRESHOLD)
}

pub fn load_idx_with_threshold(path: &Path, threshold: u8) -> Result<BinaryDataset> {
    parse_idx(&read(path)?, threshold, &source_name(path))
}

/// Parses Semeion text: 256 pixel fields then 10 label fields per line.
/// Labels are discarded; blank lines are skipped.
pub fn parse_semeion(text: &str, name: &str) -> Result<BinaryDataset> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != SEMEION_FIELDS {
            return Err(Error::parse(
                name,
                format!(
                    "line {}: expected {SEMEION_FIELDS} fields, found {}",
                    lineno + 1,
                    fields.len()
                ),
            ));
        }
        for (col, field) in fields[..SEMEION_PIXELS].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(
                    name,
                    format!(
                        "line {}, field {}: `{field}` is not a number",
                        lineno + 1,
                        col + 1
                    ),
                )
            })?;
            data.push(if v >= 0.5 { 1.0 } else { 0.0 });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyData);
    }
    BinaryDataset::new(
        Array2::from_shape_vec((rows, SEMEION_PIXELS), data).expect("row-wise fill"),
        16,
        16,
        name,
    )
}

pub fn load_semeion(path: &Path) -> Result<BinaryDataset> {
    let bytes = read(path)?;
    let text =
        String::from_utf8(bytes).map_err(|e| Error::parse(source_name(path), e.to_string()))?;
    parse_semeion(&text, &source_name(path))
}

/// Reads headerless CSV rows of `width·height` cells, each `0` or `1`.
pub fn read_csv_binary<R: std::io::Read>(
    reader: R,
    width: usize,
    height: usize,
    name: &str,
) -> Result<BinaryDataset> {
    let m = width * height;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != m {
            return Err(Error::parse(
                name,
                format!("row {}: expected {m} values, found {}", r + 1, record.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            data.push(match cell.trim() {
                "0" | "0.0" => 0.0,
                "1" | "1.0" => 1.0,
                other => {
                    return Err(Error::parse(
                        name,
                        format!("row {}, column {}: `{other}` is not 0 or 1", r + 1, c + 1),
                    ))
                }
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyData);
    }
    BinaryDataset::new(
        Array2::from_shape_vec((rows, m), data).expect("row-wise fill"),
        width,
        height,
        name,
    )
}

pub fn load_csv_binary(path: &Path, width: usize, height: usize) -> Result<BinaryDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_binary(file, width, height, &source_name(path))
}

/// Writes one image per row as `0`/`1` cells.
pub fn write_csv<W: std::io::Write>(ds: &BinaryDataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for row in ds.images.rows() {
        w.write_record(row.iter().map(|&v| if v == 1.0 { "1" } else { "0" }))?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(ds: &BinaryDataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, file)
}

/// Loads `path` in the given format; `width`/`height` are only used for CSV.
pub fn load(
    format: DataFormat,
    path: &Path,
    width: usize,
    height: usize,
    threshold: u8,
) -> Result<BinaryDataset> {
    match format {
        DataFormat::Idx => load_idx_with_threshold(path, threshold),
        DataFormat::Semeion => load_semeion(path),
        DataFormat::Csv => load_csv_binary(path, width, height),
    }
}

/// Shuffles the rows and puts the first `⌈fraction·N⌉` into the training set.
pub fn split_train_test<R: Rng + ?Sized>(
    ds: &BinaryDataset,
    train_fraction: f64,
    rng: &mut R,
) -> Result<(BinaryDataset, BinaryDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let n = ds.len();
    let n_train = (train_fraction * n as f64).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} of {n} images leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    Ok((
        ds.select(&idx[..n_train], format!("{}[train]", ds.name))?,
        ds.select(&idx[n_train..], format!("{}[test]", ds.name))?,
    ))
}

/// `count` distinct rows drawn uniformly, in random order.
pub fn subsample<R: Rng + ?Sized>(
    ds: &BinaryDataset,
    count: usize,
    rng: &mut R,
) -> Result<BinaryDataset> {
    if count == 0 {
        return Err(Error::Config("subsample count must be at least 1".into()));
    }
    if count > ds.len() {
        return Err(Error::Config(format!(
            "cannot draw {count} images from {}",
            ds.len()
        )));
    }
    let idx = rand::seq::index::sample(rng, ds.len(), count).into_vec();
    ds.select(&idx, ds.name.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use ndarray::array;

    fn idx_bytes(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for w in [IDX_MAGIC, n, rows, cols] {
            b.extend_from_slice(&w.to_be_bytes());
        }
        b.extend_from_slice(pixels);
        b
    }

    #[test]
    fn idx_threshold_rule() {
        let ds = parse_idx(
            &idx_bytes(2, 2, 2, &[0, 255, 128, 127, 255, 0, 0, 255]),
            127,
            "t",
        )
        .unwrap();
        assert_eq!(
            ds.images(),
            &array![[0.0, 1.0, 1.0, 0.0], [1.0, 0.0, 0.0, 1.0]]
        );
        assert_eq!((ds.width(), ds.height(), ds.len()), (2, 2, 2));
    }

    #[test]
    fn idx_errors() {
        assert!(matches!(
            parse_idx(&idx_bytes(0, 28, 28, &[]), 127, "t"),
            Err(Error::EmptyData)
        ));
        let mut bad = idx_bytes(1, 1, 1, &[0]);
        bad[3] = 0x01;
        assert!(parse_idx(&bad, 127, "t")
            .unwrap_err()
            .to_string()
            .contains("byte offset 0"));
        let short = parse_idx(&idx_bytes(2, 2, 2, &[1, 2, 3]), 127, "t")
            .unwrap_err()
            .to_string();
        assert!(short.contains("byte offset 19"), "{short}");
        assert!(parse_idx(&[0, 0, 8], 127, "t").is_err());
    }

    #[test]
    fn semeion_parsing() {
        let mut line = vec!["1.0000"; 256].join(" ");
        line.push_str(" 0 0 0 1 0 0 0 0 0 0");
        let text = format!("{line}\n{}\n\n\n", line.replace("1.0000", "0.0000"));
        let ds = parse_semeion(&text, "s").unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds.images().row(0).iter().all(|&v| v == 1.0));
        assert!(ds.images().row(1).iter().all(|&v| v == 0.0));
        assert_eq!((ds.width(), ds.height()), (16, 16));

        let err = parse_semeion(&format!("{line}\n1 0 1\n"), "s")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let zeros = vec!["0"; 784].join(",");
        let ds = read_csv_binary(zeros.as_bytes(), 28, 28, "c").unwrap();
        assert_eq!(ds.len(), 1);
        assert!(ds.images().iter().all(|&v| v == 0.0));

        let bad = read_csv_binary("0,1,2,0\n".as_bytes(), 2, 2, "c")
            .unwrap_err()
            .to_string();
        assert!(bad.contains("row 1, column 3"), "{bad}");
        assert!(read_csv_binary("0,1,0,0\n0,1\n".as_bytes(), 2, 2, "c").is_err());

        let mut rng = rng_from_seed(1);
        let images =
            Array2::from_shape_fn((5, 6), |_| if rng.random::<bool>() { 1.0 } else { 0.0 });
        let ds = BinaryDataset::new(images, 3, 2, "r").unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv_binary(buf.as_slice(), 3, 2, "r").unwrap();
        assert_eq!(back.images(), ds.images());
    }

    fn numbered(n: usize) -> BinaryDataset {
        // Row i encodes i in binary so rows are distinguishable.
        let images = Array2::from_shape_fn((n, 8), |(r, c)| ((r >> c) & 1) as f64);
        BinaryDataset::new(images, 8, 1, "n").unwrap()
    }

    fn row_ids(ds: &BinaryDataset) -> Vec<usize> {
        ds.images()
            .rows()
            .into_iter()
            .map(|r| r.iter().enumerate().map(|(c, v)| (*v as usize) << c).sum())
            .collect()
    }

    #[test]
    fn split_is_a_deterministic_partition() {
        let ds = numbered(100);
        let (train, test) = split_train_test(&ds, 0.02, &mut rng_from_seed(3)).unwrap();
        assert_eq!((train.len(), test.len()), (2, 98));
        let (train2, _) = split_train_test(&ds, 0.02, &mut rng_from_seed(3)).unwrap();
        assert_eq!(train, train2);
        let mut all: Vec<usize> = row_ids(&train).into_iter().chain(row_ids(&test)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(split_train_test(&ds, 0.0, &mut rng_from_seed(3)).is_err());
        assert!(split_train_test(&numbered(1), 0.5, &mut rng_from_seed(3)).is_err());
    }

    #[test]
    fn subsample_without_replacement() {
        let ds = numbered(50);
        let mut rng = rng_from_seed(4);
        let full = subsample(&ds, 50, &mut rng).unwrap();
        let mut ids = row_ids(&full);
        ids.sort_unstable();
        assert_eq!(ids, (0..50).collect::<Vec<_>>());
        let part = subsample(&ds, 12, &mut rng).unwrap();
        let mut ids = row_ids(&part);
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 12);
        assert!(subsample(&ds, 0, &mut rng).is_err());
        assert!(subsample(&ds, 51, &mut rng).is_err());
    }

    #[test]
    fn non_binary_images_are_rejected() {
        assert!(BinaryDataset::new(array![[0.0, 0.5]], 2, 1, "x").is_err());
        assert!(BinaryDataset::new(array![[0.0, 1.0]], 3, 1, "x").is_err());
    }
}
