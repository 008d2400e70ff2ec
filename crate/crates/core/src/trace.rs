//! Trace, stream-matrix and window types shared by every pipeline stage.
//!
//! A [`RawTrace`] holds device measurements exactly as ingested. After
//! pre-processing every technology is reduced to a [`StreamMatrix`]: a set of
//! real, uniformly sampled streams. Estimation and motion detection look at
//! trailing [`Window`]s of such a matrix.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::RateSeries;

/// UWB channel impulse response sample rate (Hz).
pub const CIR_FS: f64 = 18.9;
/// Raw CIR taps per measurement: 5 before and 15 after the first path.
pub const CIR_TAPS: usize = 20;
/// WiFi CSI sample rate (Hz).
pub const CSI_FS: f64 = 9.9;
/// Subcarriers recorded per MIMO antenna pair.
pub const CSI_SUBCARRIERS: usize = 114;
/// Antenna pairs of the 2x2 MIMO link.
pub const CSI_LINKS: usize = 4;
/// Zigbee RSS sample rate (Hz).
pub const RSS_FS: f64 = 4.5;
/// Zigbee RSS streams.
pub const RSS_STREAMS: usize = 32;
/// Raw sub-dB RSS sample rate (Hz).
pub const SUB_FS: f64 = 487.5;
/// Polysomnograph sample rate (Hz).
pub const POLY_FS: f64 = 25.0;
/// Polysomnograph breathing channels: chest belt, abdomen belt, thermocouple, nasal pressure.
pub const POLY_STREAMS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technology {
    Cir,
    Csi,
    Rss,
    Sub,
    Poly,
}

impl Technology {
    pub const RF: [Technology; 4] = [
        Technology::Cir,
        Technology::Csi,
        Technology::Rss,
        Technology::Sub,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Technology::Cir => "cir",
            Technology::Csi => "csi",
            Technology::Rss => "rss",
            Technology::Sub => "sub",
            Technology::Poly => "poly",
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cir" => Ok(Technology::Cir),
            "csi" => Ok(Technology::Csi),
            "rss" => Ok(Technology::Rss),
            "sub" => Ok(Technology::Sub),
            "poly" => Ok(Technology::Poly),
            other => Err(Error::Usage(format!("unknown technology `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Complex,
    Real,
    Integer,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Complex => "complex",
            ValueKind::Real => "real",
            ValueKind::Integer => "integer",
        })
    }
}

/// What a device produces: technology, nominal rate, stream count and value type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechnologyProfile {
    pub tech: Technology,
    pub fs_nominal: f64,
    pub stream_count: usize,
    pub value_kind: ValueKind,
}

impl TechnologyProfile {
    pub fn new(
        tech: Technology,
        fs_nominal: f64,
        stream_count: usize,
        value_kind: ValueKind,
    ) -> Result<Self> {
        if !(fs_nominal.is_finite() && fs_nominal > 0.0) {
            return Err(Error::Usage(format!(
                "sample rate must be positive, got {fs_nominal}"
            )));
        }
        if stream_count == 0 {
            return Err(Error::Usage("stream count must be at least 1".into()));
        }
        Ok(Self {
            tech,
            fs_nominal,
            stream_count,
            value_kind,
        })
    }

    /// The profile of the device used for each technology.
    pub fn canonical(tech: Technology) -> Self {
        let (fs_nominal, stream_count, value_kind) = match tech {
            Technology::Cir => (CIR_FS, CIR_TAPS, ValueKind::Complex),
            Technology::Csi => (CSI_FS, CSI_SUBCARRIERS * CSI_LINKS, ValueKind::Complex),
            Technology::Rss => (RSS_FS, RSS_STREAMS, ValueKind::Integer),
            Technology::Sub => (SUB_FS, 1, ValueKind::Real),
            Technology::Poly => (POLY_FS, POLY_STREAMS, ValueKind::Real),
        };
        Self {
            tech,
            fs_nominal,
            stream_count,
            value_kind,
        }
    }

    /// Same profile with a different value kind (e.g. unquantized synthetic RSS).
    pub fn with_value_kind(mut self, value_kind: ValueKind) -> Self {
        self.value_kind = value_kind;
        self
    }

    pub fn with_stream_count(mut self, stream_count: usize) -> Self {
        self.stream_count = stream_count.max(1);
        self
    }
}

/// Sample values, stored row-major: `samples × stream_count`.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceValues {
    Complex(Vec<Complex64>),
    Real(Vec<f64>),
}

impl TraceValues {
    fn len(&self) -> usize {
        match self {
            TraceValues::Complex(v) => v.len(),
            TraceValues::Real(v) => v.len(),
        }
    }
}

/// Timestamped multi-stream device measurements for one technology.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrace {
    profile: TechnologyProfile,
    timestamps: Vec<f64>,
    values: TraceValues,
}

impl RawTrace {
    pub fn new(profile: TechnologyProfile, timestamps: Vec<f64>, values: TraceValues) -> Result<Self> {
        let n = profile.stream_count;
        if values.len() != timestamps.len() * n {
            return Err(Error::Format(format!(
                "{} values for {} timestamps of {} streams",
                values.len(),
                timestamps.len(),
                n
            )));
        }
        match (&values, profile.value_kind) {
            (TraceValues::Complex(v), ValueKind::Complex) => {
                if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                    return Err(Error::Format("non-finite complex value".into()));
                }
            }
            (TraceValues::Real(v), ValueKind::Real) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Format("non-finite value".into()));
                }
            }
            (TraceValues::Real(v), ValueKind::Integer) => {
                if v.iter().any(|x| !x.is_finite() || x.fract() != 0.0) {
                    return Err(Error::Format("integer trace holds a non-integer value".into()));
                }
            }
            (_, kind) => {
                return Err(Error::Format(format!(
                    "value storage does not match profile value kind `{kind}`"
                )))
            }
        }
        if timestamps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Format("non-finite timestamp".into()));
        }
        if timestamps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Format("timestamps must be nondecreasing".into()));
        }
        Ok(Self {
            profile,
            timestamps,
            values,
        })
    }

    pub fn profile(&self) -> &TechnologyProfile {
        &self.profile
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &TraceValues {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn stream_count(&self) -> usize {
        self.profile.stream_count
    }

    /// Time of the first sample, or 0 for an empty trace.
    pub fn t0(&self) -> f64 {
        self.timestamps.first().copied().unwrap_or(0.0)
    }

    pub fn real_row(&self, i: usize) -> Option<&[f64]> {
        let n = self.profile.stream_count;
        match &self.values {
            TraceValues::Real(v) => v.get(i * n..(i + 1) * n),
            TraceValues::Complex(_) => None,
        }
    }

    pub fn complex_row(&self, i: usize) -> Option<&[Complex64]> {
        let n = self.profile.stream_count;
        match &self.values {
            TraceValues::Complex(v) => v.get(i * n..(i + 1) * n),
            TraceValues::Real(_) => None,
        }
    }

    /// True when the timestamps already sit on the `t0 + i/fs` grid.
    pub fn is_regular(&self) -> bool {
        let fs = self.profile.fs_nominal;
        let t0 = self.t0();
        self.timestamps
            .iter()
            .enumerate()
            .all(|(i, &t)| t == t0 + i as f64 / fs)
    }

    /// Maps the samples onto the nominal `t0 + k/fs` grid.
    ///
    /// Each sample goes to its nearest grid slot; when several samples land on
    /// one slot the one closest to the slot time wins (earliest on ties).
    /// Empty slots hold the previous sample.
    pub fn normalized(&self) -> RawTrace {
        if self.is_empty() || self.is_regular() {
            let mut out = self.clone();
            let t0 = self.t0();
            let fs = self.profile.fs_nominal;
            for (i, t) in out.timestamps.iter_mut().enumerate() {
                *t = t0 + i as f64 / fs;
            }
            return out;
        }
        let fs = self.profile.fs_nominal;
        let t0 = self.t0();
        let last = *self.timestamps.last().unwrap();
        let slots = ((last - t0) * fs).round() as usize + 1;
        let mut owner: Vec<Option<usize>> = vec![None; slots];
        for (i, &t) in self.timestamps.iter().enumerate() {
            let k = (((t - t0) * fs).round() as usize).min(slots - 1);
            let slot_t = t0 + k as f64 / fs;
            match owner[k] {
                Some(j) if (self.timestamps[j] - slot_t).abs() <= (t - slot_t).abs() => {}
                _ => owner[k] = Some(i),
            }
        }
        let mut source = Vec::with_capacity(slots);
        let mut prev = 0;
        for slot in &owner {
            if let Some(i) = slot {
                prev = *i;
            }
            source.push(prev);
        }
        let n = self.profile.stream_count;
        let values = match &self.values {
            TraceValues::Complex(v) => TraceValues::Complex(
                source
                    .iter()
                    .flat_map(|&i| v[i * n..(i + 1) * n].iter().copied())
                    .collect(),
            ),
            TraceValues::Real(v) => TraceValues::Real(
                source
                    .iter()
                    .flat_map(|&i| v[i * n..(i + 1) * n].iter().copied())
                    .collect(),
            ),
        };
        RawTrace {
            profile: self.profile,
            timestamps: (0..slots).map(|k| t0 + k as f64 / fs).collect(),
            values,
        }
    }

    /// Real streams as a matrix (real and integer traces only).
    pub fn to_stream_matrix(&self) -> Result<StreamMatrix> {
        let n = self.profile.stream_count;
        let TraceValues::Real(v) = &self.values else {
            return Err(Error::Usage("complex trace cannot be used as real streams".into()));
        };
        let len = self.len();
        let rows = (0..n)
            .map(|s| (0..len).map(|i| v[i * n + s]).collect())
            .collect();
        StreamMatrix::new(self.t0(), self.profile.fs_nominal, rows)
    }
}

/// Uniformly sampled real streams (`streams × samples`).
#[derive(Debug, Clone, PartialEq)]
pub struct StreamMatrix {
    t0: f64,
    fs: f64,
    rows: Vec<Vec<f64>>,
}

impl StreamMatrix {
    pub fn new(t0: f64, fs: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::Usage(format!("sample rate must be positive, got {fs}")));
        }
        if rows.is_empty() {
            return Err(Error::Usage("stream matrix needs at least one stream".into()));
        }
        let len = rows[0].len();
        if rows.iter().any(|r| r.len() != len) {
            return Err(Error::Usage("streams have different lengths".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Format("stream matrix holds a non-finite value".into()));
        }
        Ok(Self { t0, fs, rows })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn stream_count(&self) -> usize {
        self.rows.len()
    }

    /// Samples per stream.
    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stream(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn streams(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.t0 + index as f64 / self.fs
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> f64 {
        self.time_of(self.len().saturating_sub(1))
    }

    /// Same time axis, new per-stream values.
    pub(crate) fn with_rows(&self, rows: Vec<Vec<f64>>) -> StreamMatrix {
        StreamMatrix {
            t0: self.t0,
            fs: self.fs,
            rows,
        }
    }
}

/// Trailing window of a [`StreamMatrix`].
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    source: &'a StreamMatrix,
    start: usize,
    len: usize,
    t_end: f64,
    duration: f64,
}

impl<'a> Window<'a> {
    pub fn source(&self) -> &'a StreamMatrix {
        self.source
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn fs(&self) -> f64 {
        self.source.fs
    }

    /// Index of the first sample in the source matrix.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Index of the last sample in the source matrix.
    pub fn end_index(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stream_count(&self) -> usize {
        self.source.stream_count()
    }

    pub fn stream(&self, i: usize) -> &'a [f64] {
        &self.source.rows[i][self.start..self.start + self.len]
    }

    /// Indices of every stream in the source.
    pub fn all_streams(&self) -> Vec<usize> {
        (0..self.stream_count()).collect()
    }
}

/// The trailing `duration` seconds of `m` ending at the sample nearest `t_end`.
///
/// The window holds `round(duration * fs)` samples.
pub fn extract_window(m: &StreamMatrix, t_end: f64, duration: f64) -> Result<Window<'_>> {
    if !(duration.is_finite() && duration > 0.0) || !t_end.is_finite() {
        return Err(Error::Range(format!(
            "invalid window t_end={t_end} duration={duration}"
        )));
    }
    let len = (duration * m.fs).round() as usize;
    if len == 0 {
        return Err(Error::Range(format!(
            "window of {duration} s holds no samples at fs = {}",
            m.fs
        )));
    }
    let end = ((t_end - m.t0) * m.fs).round();
    if end < 0.0 || end as usize >= m.len() || (end as usize) + 1 < len {
        return Err(Error::Range(format!(
            "window ({}, {}] is outside the data span [{}, {}]",
            t_end - duration,
            t_end,
            m.t0,
            m.t_end()
        )));
    }
    let end = end as usize;
    Ok(Window {
        source: m,
        start: end + 1 - len,
        len,
        t_end,
        duration,
    })
}

/// An estimate paired with the ground truth closest to it in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub t: f64,
    pub t_gt: f64,
    pub f_gt: f64,
    /// `None` when the estimate was absent (e.g. suppressed by motion).
    pub f_hat: Option<f64>,
}

impl AlignedPair {
    pub fn is_absent(&self) -> bool {
        self.f_hat.is_none()
    }
}

/// Pairs every estimate tick with the ground-truth value nearest in time.
///
/// Ground-truth ticks without a value are skipped. Ties go to the earlier
/// ground-truth tick. Returns one pair per estimate, or nothing when the
/// ground truth carries no values.
pub fn align_nearest(est: &RateSeries, gt: &RateSeries) -> Vec<AlignedPair> {
    let truth: Vec<(f64, f64)> = gt
        .estimates
        .iter()
        .filter_map(|g| g.f_hat.map(|f| (g.t, f)))
        .collect();
    if truth.is_empty() {
        return Vec::new();
    }
    est.estimates
        .iter()
        .map(|e| {
            let idx = truth.partition_point(|&(t, _)| t < e.t);
            let best = if idx == 0 {
                0
            } else if idx == truth.len() {
                idx - 1
            } else {
                let before = e.t - truth[idx - 1].0;
                let after = truth[idx].0 - e.t;
                if after < before {
                    idx
                } else {
                    idx - 1
                }
            };
            AlignedPair {
                t: e.t,
                t_gt: truth[best].0,
                f_gt: truth[best].1,
                f_hat: e.f_hat,
            }
        })
        .collect()
}
