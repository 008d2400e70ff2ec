//! File formats: traces, rate series, motion intervals, evaluation reports
//! and synthesis scenarios.
//!
//! A trace is a directory holding `manifest.toml` and `data.csv`. The data
//! file has one record per (sample, stream), sorted by time, with header
//! `timestamp_s,stream,value` for real traces or `timestamp_s,stream,re,im`
//! for complex ones. Numbers are written in shortest round-trip form, so
//! reading back a written file reproduces it exactly.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{RateEstimate, RateMethod, RateSeries, ESTIMATION_TICK};
use crate::evaluate::EvalReport;
use crate::synth::SynthScenario;
use crate::trace::{RawTrace, Technology, TechnologyProfile, TraceValues, ValueKind, CSI_LINKS};

/// Version written to and accepted in trace manifests.
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const DATA_FILE: &str = "data.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceManifest {
    pub format_version: u32,
    pub technology: Technology,
    pub fs_nominal: f64,
    pub stream_count: usize,
    pub stream_labels: Vec<String>,
    pub value_kind: ValueKind,
    /// Timestamp of the first sample (0 for an empty trace).
    pub start_time: f64,
}

/// Default stream names for a profile.
pub fn default_stream_labels(profile: &TechnologyProfile) -> Vec<String> {
    let n = profile.stream_count;
    match profile.tech {
        Technology::Cir => (0..n).map(|i| format!("tap{i:02}")).collect(),
        Technology::Csi if n % CSI_LINKS == 0 => {
            let per_link = n / CSI_LINKS;
            (0..n)
                .map(|i| {
                    let link = i / per_link;
                    format!("tx{}rx{}_sc{:03}", link / 2, link % 2, i % per_link)
                })
                .collect()
        }
        Technology::Poly if n == 4 => ["chest", "abdomen", "thermocouple", "nasal_pressure"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        Technology::Sub if n == 1 => vec!["rss".into()],
        _ => (0..n).map(|i| format!("s{i:02}")).collect(),
    }
}

impl TraceManifest {
    pub fn for_trace(trace: &RawTrace) -> Self {
        let p = trace.profile();
        Self {
            format_version: FORMAT_VERSION,
            technology: p.tech,
            fs_nominal: p.fs_nominal,
            stream_count: p.stream_count,
            stream_labels: default_stream_labels(p),
            value_kind: p.value_kind,
            start_time: trace.t0(),
        }
    }

    fn profile(&self) -> Result<TechnologyProfile> {
        TechnologyProfile::new(self.technology, self.fs_nominal, self.stream_count, self.value_kind)
            .map_err(|e| Error::Schema(e.to_string()))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        msg: msg.into(),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(path, line, e.to_string())
}

fn field<'r>(rec: &'r csv::StringRecord, i: usize, name: &str, path: &Path, line: u64) -> Result<&'r str> {
    rec.get(i)
        .ok_or_else(|| parse_err(path, line, format!("missing field `{name}`")))
}

fn number(rec: &csv::StringRecord, i: usize, name: &str, path: &Path, line: u64) -> Result<f64> {
    let s = field(rec, i, name, path, line)?;
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("`{name}` is not a number: `{s}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("`{name}` is not finite: `{s}`")));
    }
    Ok(v)
}

fn check_header(rec: &csv::StringRecord, want: &[&str], path: &Path) -> Result<()> {
    let got: Vec<&str> = rec.iter().collect();
    if got != want {
        return Err(parse_err(
            path,
            1,
            format!("header `{}`, expected `{}`", got.join(","), want.join(",")),
        ));
    }
    Ok(())
}

const REAL_HEADER: [&str; 3] = ["timestamp_s", "stream", "value"];
const COMPLEX_HEADER: [&str; 4] = ["timestamp_s", "stream", "re", "im"];

/// Writes `trace` as a manifest and data file under directory `dir`.
pub fn write_trace(trace: &RawTrace, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = TraceManifest::for_trace(trace);
    let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    write_text(&dir.join(MANIFEST_FILE), &text)?;

    let n = trace.stream_count();
    let mut out = String::with_capacity(trace.len() * n * 24);
    let header: &[&str] = match trace.values() {
        TraceValues::Real(_) => &REAL_HEADER,
        TraceValues::Complex(_) => &COMPLEX_HEADER,
    };
    out.push_str(&header.join(","));
    out.push('\n');
    use std::fmt::Write as _;
    for (i, t) in trace.timestamps().iter().enumerate() {
        match trace.values() {
            TraceValues::Real(v) => {
                for s in 0..n {
                    let _ = writeln!(out, "{t},{s},{}", v[i * n + s]);
                }
            }
            TraceValues::Complex(v) => {
                for s in 0..n {
                    let c = v[i * n + s];
                    let _ = writeln!(out, "{t},{s},{},{}", c.re, c.im);
                }
            }
        }
    }
    write_text(&dir.join(DATA_FILE), &out)
}

/// Reads a trace directory written by [`write_trace`] (or converted to the
/// same format). Timestamps are returned as stored; the pipeline maps them
/// onto the nominal grid when it runs.
pub fn read_trace(dir: &Path) -> Result<RawTrace> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: TraceManifest = toml::from_str(&read_text(&manifest_path)?)
        .map_err(|e| Error::Schema(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    if manifest.stream_labels.len() != manifest.stream_count {
        return Err(Error::Schema(format!(
            "{} stream labels for {} streams",
            manifest.stream_labels.len(),
            manifest.stream_count
        )));
    }
    let profile = manifest.profile()?;
    let complex = profile.value_kind == ValueKind::Complex;

    let path = dir.join(DATA_FILE);
    let text = read_text(&path)?;
    let mut rdr = csv_reader(&text);
    let header = rdr.headers().map_err(|e| csv_err(&path, e))?.clone();
    check_header(&header, if complex { &COMPLEX_HEADER } else { &REAL_HEADER }, &path)?;

    let n = profile.stream_count;
    let mut timestamps = Vec::new();
    let mut real = Vec::new();
    let mut cplx = Vec::new();
    let mut expect_stream = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(&path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let width = if complex { 4 } else { 3 };
        if rec.len() > width {
            return Err(parse_err(&path, line, format!("{} fields, expected {width}", rec.len())));
        }
        let t = number(&rec, 0, "timestamp_s", &path, line)?;
        let s_text = field(&rec, 1, "stream", &path, line)?;
        let s: usize = s_text
            .parse()
            .map_err(|_| parse_err(&path, line, format!("stream index `{s_text}` is not an integer")))?;
        if s >= n {
            return Err(Error::Schema(format!(
                "{}:{line}: stream {s} but the manifest declares {n} streams",
                path.display()
            )));
        }
        if s != expect_stream {
            return Err(Error::Schema(format!(
                "{}:{line}: stream {s} where stream {expect_stream} was expected",
                path.display()
            )));
        }
        if s == 0 {
            if timestamps.last().is_some_and(|&last| t < last) {
                return Err(parse_err(&path, line, "records are not sorted by time"));
            }
            timestamps.push(t);
        } else if timestamps.last() != Some(&t) {
            return Err(Error::Schema(format!(
                "{}:{line}: stream {s} has a different timestamp than stream 0 of its sample",
                path.display()
            )));
        }
        if complex {
            let re = number(&rec, 2, "re", &path, line)?;
            let im = number(&rec, 3, "im", &path, line)?;
            cplx.push(Complex64::new(re, im));
        } else {
            let v = number(&rec, 2, "value", &path, line)?;
            if profile.value_kind == ValueKind::Integer && v.fract() != 0.0 {
                return Err(parse_err(&path, line, format!("integer trace holds `{v}`")));
            }
            real.push(v);
        }
        expect_stream = (s + 1) % n;
    }
    if expect_stream != 0 {
        return Err(Error::Schema(format!(
            "{}: last sample has {expect_stream} of {n} streams",
            path.display()
        )));
    }
    if let Some(&first) = timestamps.first() {
        if first != manifest.start_time {
            return Err(Error::Schema(format!(
                "manifest start_time {} but the first record is at {first}",
                manifest.start_time
            )));
        }
    }
    let values = if complex {
        TraceValues::Complex(cplx)
    } else {
        TraceValues::Real(real)
    };
    RawTrace::new(profile, timestamps, values).map_err(|e| Error::Schema(e.to_string()))
}

const RATE_HEADER: [&str; 3] = ["t_s", "f_hat_hz", "suppressed"];

/// Writes a rate series. Absent estimates leave `f_hat_hz` empty.
pub fn write_rate_series(series: &RateSeries, path: &Path) -> Result<()> {
    write_text(path, &format_rate_series(series)?)
}

/// The rate-series file contents.
pub fn format_rate_series(series: &RateSeries) -> Result<String> {
    let method = series.estimates.first().map_or(RateMethod::Psd, |e| e.method);
    if series.estimates.iter().any(|e| e.method != method) {
        return Err(Error::Usage("rate series mixes estimation methods".into()));
    }
    let mut out = format!(
        "# method: {method}\n# tick_s: {}\n{}\n",
        series.tick,
        RATE_HEADER.join(",")
    );
    for e in &series.estimates {
        let f = e.f_hat.map(|f| f.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{f},{}\n", e.t, u8::from(e.suppressed_by_motion)));
    }
    Ok(out)
}

pub fn read_rate_series(path: &Path) -> Result<RateSeries> {
    let text = read_text(path)?;
    let mut method = RateMethod::Psd;
    let mut tick = ESTIMATION_TICK;
    for (i, line) in text.lines().enumerate() {
        let Some(meta) = line.trim().strip_prefix('#') else {
            break;
        };
        let line_no = i as u64 + 1;
        if let Some((key, value)) = meta.split_once(':') {
            let value = value.trim();
            match key.trim() {
                "method" => method = value.parse().map_err(|e: Error| parse_err(path, line_no, e.to_string()))?,
                "tick_s" => {
                    tick = value
                        .parse()
                        .map_err(|_| parse_err(path, line_no, format!("tick `{value}` is not a number")))?
                }
                _ => {}
            }
        }
    }
    let mut rdr = csv_reader(&text);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let first_data_line = text.lines().take_while(|l| l.trim_start().starts_with('#')).count() as u64 + 1;
    check_header(&header, &RATE_HEADER, path).map_err(|e| match e {
        Error::Parse { path, msg, .. } => Error::Parse {
            path,
            line: first_data_line as usize,
            msg,
        },
        other => other,
    })?;
    let mut estimates = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(parse_err(path, line, format!("{} fields, expected 3", rec.len())));
        }
        let t = number(&rec, 0, "t_s", path, line)?;
        let f_hat = match field(&rec, 1, "f_hat_hz", path, line)? {
            "" => None,
            _ => Some(number(&rec, 1, "f_hat_hz", path, line)?),
        };
        let suppressed_by_motion = match field(&rec, 2, "suppressed", path, line)? {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(path, line, format!("suppressed flag `{other}` is not 0 or 1"))),
        };
        estimates.push(RateEstimate {
            t,
            f_hat,
            method,
            suppressed_by_motion,
        });
    }
    Ok(RateSeries { estimates, tick })
}

const INTERVAL_HEADER: [&str; 2] = ["t_start", "t_end"];

/// Writes `[start, end)` intervals.
pub fn write_intervals(intervals: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut out = format!("{}\n", INTERVAL_HEADER.join(","));
    for (a, b) in intervals {
        out.push_str(&format!("{a},{b}\n"));
    }
    write_text(path, &out)
}

pub fn read_intervals(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = read_text(path)?;
    let mut rdr = csv_reader(&text);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    check_header(&header, &INTERVAL_HEADER, path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let a = number(&rec, 0, "t_start", path, line)?;
        let b = number(&rec, 1, "t_end", path, line)?;
        if rec.len() != 2 || b < a {
            return Err(parse_err(path, line, "expected `t_start,t_end` with t_start <= t_end"));
        }
        out.push((a, b));
    }
    Ok(out)
}

pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    serde_json::from_str(&read_text(path)?).map_err(|e| {
        Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        }
    })
}

/// A synthesis request: the device to imitate and the scenario to play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub technology: Technology,
    /// Also synthesize a matching polysomnograph trace.
    #[serde(default)]
    pub polysomnograph: bool,
    pub scenario: SynthScenario,
}

pub fn read_scenario(path: &Path) -> Result<ScenarioFile> {
    toml::from_str(&read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Paths of the files `synth` writes under an output directory.
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub trace: PathBuf,
    pub ground_truth: PathBuf,
    pub motion: PathBuf,
    pub polysomnograph: PathBuf,
}

impl SynthPaths {
    pub fn under(dir: &Path) -> Self {
        Self {
            trace: dir.join("trace"),
            ground_truth: dir.join("gt.csv"),
            motion: dir.join("motion.csv"),
            polysomnograph: dir.join("poly"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_trace(kind: ValueKind, values: Vec<f64>, times: Vec<f64>) -> RawTrace {
        let n = values.len() / times.len().max(1);
        let p = TechnologyProfile::new(Technology::Rss, 4.5, n.max(1), kind).unwrap();
        RawTrace::new(p, times, TraceValues::Real(values)).unwrap()
    }

    #[test]
    fn three_record_file_reads_three_samples() {
        let dir = tempfile::tempdir().unwrap();
        let t = real_trace(ValueKind::Real, vec![1.5, -2.0, 3.25], vec![0.0, 0.25, 0.5]);
        write_trace(&t, dir.path()).unwrap();
        let back = read_trace(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back, t);
    }

    #[test]
    fn missing_imaginary_part_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = TechnologyProfile::new(Technology::Cir, 18.9, 1, ValueKind::Complex).unwrap();
        let t = RawTrace::new(p, vec![0.0, 1.0], TraceValues::Complex(vec![Complex64::new(1.0, 2.0); 2])).unwrap();
        write_trace(&t, dir.path()).unwrap();
        fs::write(dir.path().join(DATA_FILE), "timestamp_s,stream,re,im\n0,0,1,2\n1,0,1\n").unwrap();
        match read_trace(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_trace_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let t = real_trace(ValueKind::Real, vec![], vec![]);
        write_trace(&t, dir.path()).unwrap();
        assert_eq!(read_trace(dir.path()).unwrap(), t);
    }

    #[test]
    fn manifest_mismatch_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let t = real_trace(ValueKind::Real, vec![1.0, 2.0], vec![0.0, 0.25]);
        write_trace(&t, dir.path()).unwrap();
        fs::write(dir.path().join(DATA_FILE), "timestamp_s,stream,value\n0,0,1\n0,1,2\n").unwrap();
        assert!(matches!(read_trace(dir.path()), Err(Error::Schema(_))));
    }

    #[test]
    fn absent_estimate_is_empty_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rr.csv");
        let s = RateSeries {
            estimates: vec![
                RateEstimate { t: 30.0, f_hat: Some(0.25), method: RateMethod::Ibi, suppressed_by_motion: false },
                RateEstimate { t: 35.0, f_hat: None, method: RateMethod::Ibi, suppressed_by_motion: true },
            ],
            tick: 5.0,
        };
        write_rate_series(&s, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\n35,,1\n"), "{text}");
        assert_eq!(read_rate_series(&path).unwrap(), s);
    }

    #[test]
    fn sub_manifest_has_one_stream() {
        let p = TechnologyProfile::canonical(Technology::Sub);
        let t = RawTrace::new(p, vec![0.0], TraceValues::Real(vec![1e-6])).unwrap();
        let m = TraceManifest::for_trace(&t);
        assert_eq!(m.stream_count, 1);
        assert_eq!(m.stream_labels, vec!["rss".to_string()]);
    }
}
