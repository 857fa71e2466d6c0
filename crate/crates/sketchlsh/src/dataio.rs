//! Dataset ingestion (CSV and fvecs), synthetic Gaussian data, and results
//! output as CSV or JSON-lines.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hashcore::MasterSeed;

/// n points of uniform dimension d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    data: Vec<f64>,
    n: usize,
    d: usize,
    source: String,
}

impl Dataset {
    /// Wraps row-major flat storage; all values must be finite.
    pub fn from_flat(data: Vec<f64>, n: usize, d: usize, source: &str) -> Result<Self> {
        if n == 0 || d == 0 || data.len() != n * d {
            return Err(Error::EmptyDataset);
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { line: pos / d + 1 });
        }
        Ok(Dataset {
            data,
            n,
            d,
            source: source.to_string(),
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, source: &str) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::RaggedRow {
                    line: i + 1,
                    expected: d,
                    got: row.len(),
                });
            }
            data.extend_from_slice(&row);
        }
        Dataset::from_flat(data, n, d, source)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Splits off the last `q` rows as the query set.
    pub fn split_tail(&self, q: usize) -> Result<(Dataset, Dataset)> {
        if q == 0 || q >= self.n {
            return Err(Error::BadSplit { q, n: self.n });
        }
        let cut = (self.n - q) * self.d;
        let base = Dataset {
            data: self.data[..cut].to_vec(),
            n: self.n - q,
            d: self.d,
            source: format!("{} [head]", self.source),
        };
        let queries = Dataset {
            data: self.data[cut..].to_vec(),
            n: q,
            d: self.d,
            source: format!("{} [tail {q}]", self.source),
        };
        Ok((base, queries))
    }

    /// Splits off `q` rows chosen uniformly without replacement as queries;
    /// both sides preserve the original row order.
    pub fn split_random(&self, q: usize, seed: MasterSeed) -> Result<(Dataset, Dataset)> {
        if q == 0 || q >= self.n {
            return Err(Error::BadSplit { q, n: self.n });
        }
        // Seeded Fisher-Yates over row indices; first q are the queries.
        let mut rng = seed.rng();
        let mut idx: Vec<usize> = (0..self.n).collect();
        for i in 0..q {
            let j = rng.random_range(i..self.n);
            idx.swap(i, j);
        }
        let mut is_query = vec![false; self.n];
        for &i in &idx[..q] {
            is_query[i] = true;
        }
        let mut base_data = Vec::with_capacity((self.n - q) * self.d);
        let mut query_data = Vec::with_capacity(q * self.d);
        for i in 0..self.n {
            let row = self.row(i);
            if is_query[i] {
                query_data.extend_from_slice(row);
            } else {
                base_data.extend_from_slice(row);
            }
        }
        Ok((
            Dataset {
                data: base_data,
                n: self.n - q,
                d: self.d,
                source: format!("{} [random base]", self.source),
            },
            Dataset {
                data: query_data,
                n: q,
                d: self.d,
                source: format!("{} [random {q}]", self.source),
            },
        ))
    }
}

/// Loads a CSV of one vector per line (comma-separated decimal reals). A
/// non-numeric first row is treated as a header and skipped.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    load_csv_reader(BufReader::new(file), &path.as_ref().display().to_string())
}

/// [`load_csv`] over any reader (the `source` string is provenance only).
pub fn load_csv_reader(reader: impl Read, source: &str) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut data = Vec::new();
    let mut d = 0usize;
    let mut n = 0usize;
    let mut first_record = true;
    for (rec_idx, record) in csv.records().enumerate() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rec_idx + 1);
        let header_candidate = first_record;
        first_record = false;
        let mut row = Vec::with_capacity(record.len());
        let mut non_numeric = false;
        for field in record.iter() {
            match f64::from_str(field.trim()) {
                Ok(v) => row.push(v),
                Err(e) => {
                    if header_candidate {
                        non_numeric = true;
                        break;
                    }
                    return Err(Error::Parse {
                        line,
                        msg: format!("'{}': {e}", field.trim()),
                    });
                }
            }
        }
        if non_numeric {
            // Header row detected by a non-numeric field in the first record.
            continue;
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite value in column {}", col + 1),
            });
        }
        if n == 0 {
            d = row.len();
        } else if row.len() != d {
            return Err(Error::RaggedRow {
                line,
                expected: d,
                got: row.len(),
            });
        }
        data.extend_from_slice(&row);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    Dataset::from_flat(data, n, d, source)
}

/// Loads an fvecs file: records of a little-endian 32-bit integer d followed
/// by d little-endian 32-bit floats, all records sharing one d. Floats widen
/// exactly to 64-bit.
pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut bytes = Vec::new();
    File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    load_fvecs_bytes(&bytes, &path.as_ref().display().to_string())
}

/// [`load_fvecs`] over an in-memory byte buffer.
pub fn load_fvecs_bytes(bytes: &[u8], source: &str) -> Result<Dataset> {
    if bytes.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut data = Vec::new();
    let mut d = 0usize;
    let mut n = 0usize;
    let mut off = 0usize;
    while off < bytes.len() {
        let record = n + 1;
        if off + 4 > bytes.len() {
            return Err(Error::BadRecord {
                record,
                msg: "truncated dimension field".into(),
            });
        }
        let dim = i32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        off += 4;
        if dim <= 0 {
            return Err(Error::BadRecord {
                record,
                msg: format!("nonpositive dimension {dim}"),
            });
        }
        let dim = dim as usize;
        if n == 0 {
            d = dim;
        } else if dim != d {
            return Err(Error::BadRecord {
                record,
                msg: format!("dimension {dim} differs from first record's {d}"),
            });
        }
        if off + 4 * dim > bytes.len() {
            return Err(Error::BadRecord {
                record,
                msg: format!(
                    "truncated payload: need {} bytes, have {}",
                    4 * dim,
                    bytes.len() - off
                ),
            });
        }
        for c in 0..dim {
            let v = f32::from_le_bytes(bytes[off + 4 * c..off + 4 * c + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::BadRecord {
                    record,
                    msg: format!("non-finite value in column {}", c + 1),
                });
            }
            data.push(v as f64);
        }
        off += 4 * dim;
        n += 1;
    }
    Dataset::from_flat(data, n, d, source)
}

/// Writes a dataset in fvecs layout (values narrowed to 32-bit floats).
pub fn write_fvecs(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in dataset.rows() {
        out.write_all(&(dataset.dim() as i32).to_le_bytes())?;
        for &v in row {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// n i.i.d. standard-normal d-vectors from the seeded stream.
pub fn synth_gaussian(n: usize, d: usize, seed: MasterSeed) -> Dataset {
    assert!(n >= 1 && d >= 1, "dataset shape must be nonempty");
    let mut rng = seed.rng();
    let data: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    Dataset {
        data,
        n,
        d,
        source: format!("synth-gaussian(n={n},d={d},seed={})", seed.value()),
    }
}

/// Streams the same dataset as [`synth_gaussian`] in row batches of at most
/// `batch_rows`; concatenating the batches reproduces the one-shot dataset
/// bit-for-bit.
pub fn synth_gaussian_batches(
    n: usize,
    d: usize,
    seed: MasterSeed,
    batch_rows: usize,
) -> GaussianBatches {
    assert!(n >= 1 && d >= 1, "dataset shape must be nonempty");
    assert!(batch_rows >= 1, "batch must hold at least one row");
    GaussianBatches {
        rng: seed.rng(),
        seed,
        remaining: n,
        produced: 0,
        d,
        batch_rows,
    }
}

pub struct GaussianBatches {
    rng: ChaCha12Rng,
    seed: MasterSeed,
    remaining: usize,
    produced: usize,
    d: usize,
    batch_rows: usize,
}

impl Iterator for GaussianBatches {
    type Item = Dataset;

    fn next(&mut self) -> Option<Dataset> {
        if self.remaining == 0 {
            return None;
        }
        let rows = self.remaining.min(self.batch_rows);
        let data: Vec<f64> = (0..rows * self.d)
            .map(|_| self.rng.sample(StandardNormal))
            .collect();
        let first = self.produced;
        self.remaining -= rows;
        self.produced += rows;
        Some(Dataset {
            data,
            n: rows,
            d: self.d,
            source: format!(
                "synth-gaussian(rows {first}..{}, d={}, seed={})",
                first + rows,
                self.d,
                self.seed.value()
            ),
        })
    }
}

/// One benchmark measurement: a (scheme, L, seed) cell of the recall sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResultsRow {
    pub scheme: String,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub k: usize,
    pub seed: u64,
    pub mean_recall: f64,
    pub total_query_time_ms: f64,
    pub build_time_ms: f64,
    pub stored_values: u64,
    pub d: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json-lines" | "ndjson" => Ok(OutputFormat::JsonLines),
            other => Err(Error::Parse {
                line: 0,
                msg: format!("unknown output format '{other}' (expected csv or jsonl)"),
            }),
        }
    }
}

/// Writes rows as CSV (header first) or JSON-lines. Numeric formatting is
/// locale-independent with '.' as the decimal separator.
pub fn write_results(rows: &[ResultsRow], out: impl Write, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                // Header-only output for an empty row set.
                w.write_record([
                    "scheme",
                    "m",
                    "L",
                    "k",
                    "seed",
                    "mean_recall",
                    "total_query_time_ms",
                    "build_time_ms",
                    "stored_values",
                    "d",
                    "n",
                ])?;
            }
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        OutputFormat::JsonLines => {
            let mut out = out;
            for row in rows {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

pub fn write_results_file(
    rows: &[ResultsRow],
    path: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<()> {
    write_results(rows, BufWriter::new(File::create(path)?), format)
}

/// Parses rows back from results CSV, skipping '#' comment lines (such as a
/// manifest preamble).
pub fn read_results_csv(reader: impl Read) -> Result<Vec<ResultsRow>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for record in csv.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultsRow> {
        vec![
            ResultsRow {
                scheme: "e2lsh".into(),
                m: 8,
                l: 1,
                k: 50,
                seed: 42,
                mean_recall: 0.75,
                total_query_time_ms: 12.5,
                build_time_ms: 3.25,
                stored_values: 80_000,
                d: 100,
                n: 1000,
            },
            ResultsRow {
                scheme: "cs-srp".into(),
                m: 8,
                l: 2,
                k: 50,
                seed: 43,
                mean_recall: 0.8125,
                total_query_time_ms: 0.125,
                build_time_ms: 0.0625,
                stored_values: 200,
                d: 100,
                n: 1000,
            },
        ]
    }

    #[test]
    fn csv_basic_and_header_detection() {
        let ds = load_csv_reader("1.0,2.0\n3.0,4.0".as_bytes(), "test").unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 2));
        assert_eq!(ds.row(1), &[3.0, 4.0]);

        let ds = load_csv_reader("x,y\n1.5,2.5".as_bytes(), "test").unwrap();
        assert_eq!((ds.len(), ds.dim()), (1, 2));
        assert_eq!(ds.row(0), &[1.5, 2.5]);
    }

    #[test]
    fn csv_rejects_ragged_and_nonfinite() {
        let err = load_csv_reader("1.0,2.0\n3.0\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, Error::RaggedRow { line: 2, expected: 2, got: 1 }));

        let err = load_csv_reader("nan,1.0".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));

        let err = load_csv_reader("1.0\ninf\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));

        // A non-numeric row past the first is a parse error, not a header.
        let err = load_csv_reader("1.0\noops\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));

        // Only the first physical record may act as a header.
        let err = load_csv_reader("x,y\noops,1\n2,3\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn csv_empty_is_an_error() {
        assert!(matches!(
            load_csv_reader("".as_bytes(), "test"),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            load_csv_reader("x,y\n".as_bytes(), "test"),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn fvecs_round_trip() {
        let mut bytes = Vec::new();
        for row in [[1.5f32, -2.25, 0.5], [3.0, 4.0, -0.125]] {
            bytes.extend_from_slice(&3i32.to_le_bytes());
            for v in row {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let ds = load_fvecs_bytes(&bytes, "test").unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 3));
        assert_eq!(ds.row(0), &[1.5, -2.25, 0.5]);
        assert_eq!(ds.row(1), &[3.0, 4.0, -0.125]);
    }

    #[test]
    fn fvecs_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.fvecs");
        let ds = synth_gaussian(5, 7, MasterSeed(3));
        write_fvecs(&ds, &path).unwrap();
        let back = load_fvecs(&path).unwrap();
        assert_eq!((back.len(), back.dim()), (5, 7));
        for i in 0..5 {
            for c in 0..7 {
                // Values survive the f64 -> f32 -> f64 trip as exact f32s.
                assert_eq!(back.row(i)[c], ds.row(i)[c] as f32 as f64);
            }
        }
    }

    #[test]
    fn fvecs_rejects_malformed_input() {
        assert!(matches!(
            load_fvecs_bytes(&[], "test"),
            Err(Error::EmptyDataset)
        ));

        let mut bytes = Vec::new();
        bytes.extend_from_slice(&2i32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        let err = load_fvecs_bytes(&bytes, "test").unwrap_err();
        assert!(matches!(err, Error::BadRecord { record: 1, .. }));

        let mut bytes = Vec::new();
        bytes.extend_from_slice(&1i32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&2i32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&2.0f32.to_le_bytes());
        let err = load_fvecs_bytes(&bytes, "test").unwrap_err();
        assert!(matches!(err, Error::BadRecord { record: 2, .. }));

        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(-1i32).to_le_bytes());
        let err = load_fvecs_bytes(&bytes, "test").unwrap_err();
        assert!(matches!(err, Error::BadRecord { record: 1, .. }));
    }

    #[test]
    fn synth_is_deterministic_with_zero_mean() {
        let a = synth_gaussian(200, 50, MasterSeed(7));
        let b = synth_gaussian(200, 50, MasterSeed(7));
        assert_eq!(a, b);
        let total: f64 = a.rows().flat_map(|r| r.iter()).sum();
        let count = (a.len() * a.dim()) as f64;
        assert!((total / count).abs() < 3.0 / count.sqrt());
    }

    #[test]
    fn synth_batches_concatenate_to_the_full_dataset() {
        let full = synth_gaussian(25, 4, MasterSeed(9));
        let mut rows = Vec::new();
        for batch in synth_gaussian_batches(25, 4, MasterSeed(9), 7) {
            assert_eq!(batch.dim(), 4);
            for r in batch.rows() {
                rows.push(r.to_vec());
            }
        }
        let glued = Dataset::from_rows(rows, "glued").unwrap();
        assert_eq!(glued.len(), full.len());
        for i in 0..full.len() {
            assert_eq!(glued.row(i), full.row(i));
        }
    }

    #[test]
    fn split_tail_takes_last_rows() {
        let ds = Dataset::from_rows(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            "test",
        )
        .unwrap();
        let (base, queries) = ds.split_tail(1).unwrap();
        assert_eq!(base.len(), 3);
        assert_eq!(queries.len(), 1);
        assert_eq!(queries.row(0), &[4.0]);
        assert!(matches!(ds.split_tail(4), Err(Error::BadSplit { .. })));
        assert!(matches!(ds.split_tail(0), Err(Error::BadSplit { .. })));
    }

    #[test]
    fn split_random_partitions_without_loss() {
        let ds = synth_gaussian(40, 3, MasterSeed(11));
        let (base, queries) = ds.split_random(10, MasterSeed(12)).unwrap();
        assert_eq!(base.len(), 30);
        assert_eq!(queries.len(), 10);
        let (base2, queries2) = ds.split_random(10, MasterSeed(12)).unwrap();
        assert_eq!(base, base2);
        assert_eq!(queries, queries2);
        // Every original row lands on exactly one side.
        let mut seen: Vec<Vec<u64>> = Vec::new();
        for part in [&base, &queries] {
            for r in part.rows() {
                seen.push(r.iter().map(|v| v.to_bits()).collect());
            }
        }
        seen.sort();
        let mut original: Vec<Vec<u64>> = ds
            .rows()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        original.sort();
        assert_eq!(seen, original);
    }

    #[test]
    fn results_csv_round_trip() {
        let rows = sample_rows();
        let mut buf = Vec::new();
        write_results(&rows, &mut buf, OutputFormat::Csv).unwrap();
        let back = read_results_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn results_csv_skips_comment_preamble() {
        let rows = sample_rows();
        let mut buf = b"# manifest line one\n# manifest line two\n".to_vec();
        write_results(&rows, &mut buf, OutputFormat::Csv).unwrap();
        let back = read_results_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn empty_rows_write_header_only_csv() {
        let mut buf = Vec::new();
        write_results(&[], &mut buf, OutputFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.trim_end(),
            "scheme,m,L,k,seed,mean_recall,total_query_time_ms,build_time_ms,stored_values,d,n"
        );
    }

    #[test]
    fn jsonl_rows_parse_as_standalone_objects() {
        let rows = sample_rows();
        let mut buf = Vec::new();
        write_results(&rows, &mut buf, OutputFormat::JsonLines).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: Vec<ResultsRow> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn output_format_parses() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert_eq!(
            "jsonl".parse::<OutputFormat>().unwrap(),
            OutputFormat::JsonLines
        );
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
