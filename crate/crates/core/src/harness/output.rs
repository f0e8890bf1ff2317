//! CSV schemas for experiment output. Floats are written with 17
//! significant digits so every carrier value reparses bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use csv::StringRecord;

use crate::error::{Error, Result};

/// `{:.16e}`; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn field<'r>(rec: &'r StringRecord, i: usize) -> Result<&'r str> {
    rec.get(i).ok_or_else(|| Error::Parse(format!("missing column {i}")))
}

fn parse_num<T: std::str::FromStr>(rec: &StringRecord, i: usize) -> Result<T> {
    let s = field(rec, i)?;
    s.parse().map_err(|_| Error::Parse(format!("bad value {s:?} in column {i}")))
}

fn parse_opt<T: std::str::FromStr>(rec: &StringRecord, i: usize) -> Result<Option<T>> {
    if field(rec, i)?.is_empty() {
        Ok(None)
    } else {
        parse_num(rec, i).map(Some)
    }
}

pub trait CsvRow: Sized {
    const HEADER: &'static [&'static str];
    fn to_record(&self) -> Vec<String>;
    fn from_record(rec: &StringRecord) -> Result<Self>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub experiment: String,
    pub fmt: String,
    pub n_or_big_n: u64,
    pub x_num: Option<i64>,
    pub x_den: Option<u64>,
    pub sample_index: usize,
    /// `SR` or `RN`.
    pub mode: String,
    pub value: f64,
    pub reference: f64,
    pub rel_error: f64,
}

impl CsvRow for SampleRow {
    const HEADER: &'static [&'static str] =
        &["experiment", "fmt", "n_or_N", "x_num", "x_den", "sample_index", "mode", "value", "reference", "rel_error"];

    fn to_record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.fmt.clone(),
            self.n_or_big_n.to_string(),
            fmt_opt(&self.x_num),
            fmt_opt(&self.x_den),
            self.sample_index.to_string(),
            self.mode.clone(),
            fmt_f64(self.value),
            fmt_f64(self.reference),
            fmt_f64(self.rel_error),
        ]
    }

    fn from_record(rec: &StringRecord) -> Result<Self> {
        Ok(SampleRow {
            experiment: field(rec, 0)?.to_string(),
            fmt: field(rec, 1)?.to_string(),
            n_or_big_n: parse_num(rec, 2)?,
            x_num: parse_opt(rec, 3)?,
            x_den: parse_opt(rec, 4)?,
            sample_index: parse_num(rec, 5)?,
            mode: field(rec, 6)?.to_string(),
            value: parse_num(rec, 7)?,
            reference: parse_num(rec, 8)?,
            rel_error: parse_num(rec, 9)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub experiment: String,
    pub fmt: String,
    pub n_or_big_n: u64,
    pub x_num: Option<i64>,
    pub x_den: Option<u64>,
    pub kind: String,
    /// Empty for deterministic kinds.
    pub lambda: Option<f64>,
    pub k1: f64,
    pub bound_value: f64,
}

impl CsvRow for BoundRow {
    const HEADER: &'static [&'static str] =
        &["experiment", "fmt", "n_or_N", "x_num", "x_den", "kind", "lambda", "k1", "bound_value"];

    fn to_record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.fmt.clone(),
            self.n_or_big_n.to_string(),
            fmt_opt(&self.x_num),
            fmt_opt(&self.x_den),
            self.kind.clone(),
            self.lambda.map(fmt_f64).unwrap_or_default(),
            fmt_f64(self.k1),
            fmt_f64(self.bound_value),
        ]
    }

    fn from_record(rec: &StringRecord) -> Result<Self> {
        Ok(BoundRow {
            experiment: field(rec, 0)?.to_string(),
            fmt: field(rec, 1)?.to_string(),
            n_or_big_n: parse_num(rec, 2)?,
            x_num: parse_opt(rec, 3)?,
            x_den: parse_opt(rec, 4)?,
            kind: field(rec, 5)?.to_string(),
            lambda: parse_opt(rec, 6)?,
            k1: parse_num(rec, 7)?,
            bound_value: parse_num(rec, 8)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub experiment: String,
    pub fmt: String,
    pub n_or_big_n: u64,
    pub x_num: Option<i64>,
    pub x_den: Option<u64>,
    pub mean_value: f64,
    pub mean_of_samples_rel_error: f64,
    pub rn_rel_error: f64,
    pub empirical_variance: f64,
    pub variance_bound: f64,
    pub coverage_kind: String,
    pub coverage_lambda: f64,
    pub coverage_rate: f64,
}

impl CsvRow for StatsRow {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "fmt",
        "n_or_N",
        "x_num",
        "x_den",
        "mean_value",
        "mean_of_samples_rel_error",
        "rn_rel_error",
        "empirical_variance",
        "variance_bound",
        "coverage_kind",
        "coverage_lambda",
        "coverage_rate",
    ];

    fn to_record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.fmt.clone(),
            self.n_or_big_n.to_string(),
            fmt_opt(&self.x_num),
            fmt_opt(&self.x_den),
            fmt_f64(self.mean_value),
            fmt_f64(self.mean_of_samples_rel_error),
            fmt_f64(self.rn_rel_error),
            fmt_f64(self.empirical_variance),
            fmt_f64(self.variance_bound),
            self.coverage_kind.clone(),
            fmt_f64(self.coverage_lambda),
            fmt_f64(self.coverage_rate),
        ]
    }

    fn from_record(rec: &StringRecord) -> Result<Self> {
        Ok(StatsRow {
            experiment: field(rec, 0)?.to_string(),
            fmt: field(rec, 1)?.to_string(),
            n_or_big_n: parse_num(rec, 2)?,
            x_num: parse_opt(rec, 3)?,
            x_den: parse_opt(rec, 4)?,
            mean_value: parse_num(rec, 5)?,
            mean_of_samples_rel_error: parse_num(rec, 6)?,
            rn_rel_error: parse_num(rec, 7)?,
            empirical_variance: parse_num(rec, 8)?,
            variance_bound: parse_num(rec, 9)?,
            coverage_kind: field(rec, 10)?.to_string(),
            coverage_lambda: parse_num(rec, 11)?,
            coverage_rate: parse_num(rec, 12)?,
        })
    }
}

/// Writes `#`-prefixed comment lines, the header, then the rows.
pub fn write_csv<R: CsvRow, W: Write>(out: W, comments: &[String], rows: &[R]) -> Result<()> {
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::HEADER)?;
    for r in rows {
        w.write_record(r.to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv<R: CsvRow>(rows: &[R], comments: &[String], path: &Path) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), comments, rows)
}

/// Parses rows, skipping comment lines and checking the header.
pub fn read_csv<R: CsvRow, Rd: Read>(input: Rd) -> Result<Vec<R>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(true).from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(R::HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {:?}", header)));
    }
    rd.records().map(|rec| R::from_record(&rec?)).collect()
}

pub fn parse_csv<R: CsvRow>(path: &Path) -> Result<Vec<R>> {
    read_csv(File::open(path)?)
}
