//! Failure-time ingestion, cumulative growth curves and train/test partitioning.
//!
//! Two on-disk formats are understood:
//!
//! * **Format A**: one failure time per line. Blank lines and lines starting
//!   with `#` are ignored.
//! * **Format B**: CSV with the header `time,count`, giving an already
//!   cumulative curve. Counts must be strictly increasing.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending failure timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureTimes {
    times: Vec<f64>,
    /// Set when the input was not already in ascending order.
    pub was_sorted: bool,
}

impl FailureTimes {
    /// Builds from raw times, sorting if needed and rejecting negative or
    /// non-finite entries.
    pub fn new(mut times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::data("no failure times"));
        }
        if let Some((i, t)) = times.iter().enumerate().find(|(_, t)| !t.is_finite() || **t < 0.0) {
            return Err(Error::data(format!("invalid failure time {t} at position {}", i + 1)));
        }
        let was_sorted = !times.windows(2).all(|w| w[0] <= w[1]);
        if was_sorted {
            times.sort_by(f64::total_cmp);
        }
        Ok(FailureTimes { times, was_sorted })
    }

    /// A realization with no events (only produced by simulation).
    pub fn empty() -> Self {
        FailureTimes {
            times: Vec::new(),
            was_sorted: false,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Reads format A from a text stream.
pub fn load_failure_times<R: BufRead>(source: R) -> Result<FailureTimes> {
    let mut times = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::DataAtLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let t: f64 = trimmed.parse().map_err(|_| Error::DataAtLine {
            line: line_no,
            message: format!("not a number: {trimmed:?}"),
        })?;
        if !t.is_finite() {
            return Err(Error::DataAtLine {
                line: line_no,
                message: format!("non-finite time {trimmed:?}"),
            });
        }
        if t < 0.0 {
            return Err(Error::DataAtLine {
                line: line_no,
                message: format!("negative time {t}"),
            });
        }
        times.push(t);
    }
    if times.is_empty() {
        return Err(Error::data("input contains no failure times"));
    }
    FailureTimes::new(times)
}

/// Writes format A. The output reloads to the same times.
pub fn write_failure_times<W: Write>(mut out: W, ft: &FailureTimes, header: Option<&str>) -> std::io::Result<()> {
    if let Some(h) = header {
        for line in h.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    for t in ft.times() {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

/// One point of a growth curve: time and cumulative defect count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub count: f64,
}

/// Time-ordered cumulative defect counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCurve {
    points: Vec<CurvePoint>,
}

impl GrowthCurve {
    /// Validates ordering: times nondecreasing, counts nondecreasing, all
    /// finite and nonnegative.
    pub fn new(points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::data("empty growth curve"));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.t.is_finite() || p.t < 0.0 || !p.count.is_finite() || p.count < 0.0 {
                return Err(Error::data(format!("invalid point {} at index {i}", fmt_point(p))));
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].t < w[0].t {
                return Err(Error::data(format!("times decrease at index {}", i + 1)));
            }
            if w[1].count < w[0].count {
                return Err(Error::data(format!("counts decrease at index {}", i + 1)));
            }
        }
        Ok(GrowthCurve { points })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(t, count)| CurvePoint { t, count }).collect())
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.count).collect()
    }

    /// Contiguous sub-curve over `range` of point indices.
    pub fn slice(&self, range: std::ops::Range<usize>) -> GrowthCurve {
        GrowthCurve {
            points: self.points[range].to_vec(),
        }
    }
}

fn fmt_point(p: &CurvePoint) -> String {
    format!("({}, {})", p.t, p.count)
}

/// Point i (1-based) is `(times[i], i)`.
pub fn to_growth_curve(ft: &FailureTimes) -> Result<GrowthCurve> {
    if ft.is_empty() {
        return Err(Error::data("no failure times"));
    }
    let points = ft
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| CurvePoint { t, count: (i + 1) as f64 })
        .collect();
    Ok(GrowthCurve { points })
}

#[derive(Debug, serde::Deserialize)]
struct CurveRow {
    time: f64,
    count: f64,
}

/// Reads format B (`time,count` CSV).
pub fn load_growth_csv<R: Read>(source: R) -> Result<GrowthCurve> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("cannot read CSV header: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "count" {
        return Err(Error::DataAtLine {
            line: 1,
            message: "expected header `time,count`".into(),
        });
    }
    let mut points: Vec<CurvePoint> = Vec::new();
    for (idx, row) in reader.deserialize::<CurveRow>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| Error::DataAtLine {
            line,
            message: e.to_string(),
        })?;
        if !row.time.is_finite() || row.time < 0.0 || !row.count.is_finite() || row.count < 0.0 {
            return Err(Error::DataAtLine {
                line,
                message: "time and count must be finite and nonnegative".into(),
            });
        }
        if let Some(prev) = points.last() {
            if row.count <= prev.count {
                return Err(Error::DataAtLine {
                    line,
                    message: format!("count {} is not strictly increasing", row.count),
                });
            }
            if row.time < prev.t {
                return Err(Error::DataAtLine {
                    line,
                    message: format!("time {} decreases", row.time),
                });
            }
        }
        points.push(CurvePoint { t: row.time, count: row.count });
    }
    GrowthCurve::new(points)
}

/// Writes format B.
pub fn write_growth_csv<W: Write>(out: W, curve: &GrowthCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::data(e.to_string());
    w.write_record(["time", "count"]).map_err(io)?;
    for p in curve.points() {
        w.write_record([p.t.to_string(), p.count.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::data(e.to_string()))?;
    Ok(())
}

/// Loads either format, detected by the first meaningful line.
pub fn load_curve_auto(text: &str) -> Result<(GrowthCurve, Option<FailureTimes>)> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    match first {
        Some(l) if l.replace(' ', "") == "time,count" => {
            let body: String = text
                .lines()
                .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
                .map(|l| format!("{l}\n"))
                .collect();
            Ok((load_growth_csv(body.as_bytes())?, None))
        }
        _ => {
            let ft = load_failure_times(text.as_bytes())?;
            Ok((to_growth_curve(&ft)?, Some(ft)))
        }
    }
}

/// How the test partition length was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SplitPolicy {
    /// Explicit number of trailing points.
    Length { test_len: usize },
    /// Fraction of the curve, rounded to the nearest point count.
    Fraction { fraction: f64, test_len: usize },
    /// Test length equal to the window size.
    WindowSize { test_len: usize },
}

impl SplitPolicy {
    pub fn test_len(&self) -> usize {
        match *self {
            SplitPolicy::Length { test_len }
            | SplitPolicy::Fraction { test_len, .. }
            | SplitPolicy::WindowSize { test_len } => test_len,
        }
    }
}

/// A curve partitioned into a training prefix and a test suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCurve {
    pub train: GrowthCurve,
    pub test: GrowthCurve,
    pub policy: SplitPolicy,
}

/// The last `test_len` points become the test partition.
pub fn split(curve: &GrowthCurve, test_len: usize) -> Result<SplitCurve> {
    split_with_policy(curve, SplitPolicy::Length { test_len })
}

pub fn split_with_policy(curve: &GrowthCurve, policy: SplitPolicy) -> Result<SplitCurve> {
    let test_len = policy.test_len();
    let n = curve.len();
    if test_len == 0 || test_len >= n {
        return Err(Error::usage(format!(
            "test length {test_len} must lie strictly between 0 and the curve length {n}"
        )));
    }
    let cut = n - test_len;
    Ok(SplitCurve {
        train: curve.slice(0..cut),
        test: curve.slice(cut..n),
        policy,
    })
}

/// Converts a test fraction into a trailing point count.
pub fn fraction_policy(curve: &GrowthCurve, fraction: f64) -> Result<SplitPolicy> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::usage(format!("test fraction {fraction} must lie in (0, 1)")));
    }
    let test_len = ((curve.len() as f64) * fraction).round() as usize;
    Ok(SplitPolicy::Fraction {
        fraction,
        test_len: test_len.max(1),
    })
}
