//! Stream selection: which streams feed rate estimation and motion detection.
//!
//! Every rule works on a snapshot of per-stream moving variances taken over
//! the trailing 30 s.

use serde::{Deserialize, Serialize};

use crate::dsp::stats::{mean, percentile, percentile_sorted};
use crate::error::{Error, Result};
use crate::trace::{Technology, CSI_LINKS};

/// Variance window behind every selection (s).
pub const SELECTION_WINDOW: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamMask {
    pub keep: Vec<bool>,
}

impl StreamMask {
    pub fn all(n: usize) -> Self {
        Self { keep: vec![true; n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Self {
        Self {
            keep: (0..n).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn kept_count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn kept(&self) -> Vec<usize> {
        self.keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect()
    }

    pub fn basis_window(&self) -> f64 {
        SELECTION_WINDOW
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    #[serde(alias = "on")]
    Enabled,
    #[serde(alias = "off")]
    Bypassed,
}

/// CIR: keep streams whose variance is at most the median variance.
pub fn select_cir(var: &[f64]) -> StreamMask {
    let p50 = percentile(var, 50.0);
    StreamMask::from_fn(var.len(), |i| var[i] <= p50)
}

/// Receive-antenna group of a CSI stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsiGroup {
    A,
    B,
}

impl CsiGroup {
    fn other(self) -> Self {
        match self {
            CsiGroup::A => CsiGroup::B,
            CsiGroup::B => CsiGroup::A,
        }
    }
}

/// Receive-antenna grouping for CSI laid out link-major: the streams of
/// link `l` are contiguous, links ordered (tx0,rx0), (tx0,rx1), (tx1,rx0),
/// (tx1,rx1). Links on rx0 form group A, links on rx1 group B.
pub fn csi_receive_groups(stream_count: usize) -> Result<Vec<CsiGroup>> {
    if stream_count == 0 || stream_count % CSI_LINKS != 0 {
        return Err(Error::Usage(format!(
            "CSI stream count {stream_count} is not a multiple of {CSI_LINKS} links"
        )));
    }
    let per_link = stream_count / CSI_LINKS;
    Ok((0..stream_count)
        .map(|s| if (s / per_link) % 2 == 0 { CsiGroup::A } else { CsiGroup::B })
        .collect())
}

/// Minimum, mean, median and maximum of one group's variances.
pub fn group_statistics(values: &[f64]) -> [f64; 4] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    [
        sorted[0],
        mean(&sorted),
        percentile_sorted(&sorted, 50.0),
        sorted[sorted.len() - 1],
    ]
}

/// CSI: filter out the receive group that loses the four-statistic vote.
///
/// Each group earns a point for every statistic strictly lower than the other
/// group's. The group with fewer points is removed; on a tie the group removed
/// at the previous tick is removed again (group B on the first tick). Returns
/// the mask and the removed group.
pub fn select_csi(
    var: &[f64],
    groups: &[CsiGroup],
    prev_filtered: Option<CsiGroup>,
) -> Result<(StreamMask, CsiGroup)> {
    if var.len() != groups.len() {
        return Err(Error::Usage(format!(
            "{} variances for {} group labels",
            var.len(),
            groups.len()
        )));
    }
    let pick = |g: CsiGroup| -> Vec<f64> {
        var.iter()
            .zip(groups)
            .filter_map(|(&v, &gg)| (gg == g).then_some(v))
            .collect()
    };
    let (a, b) = (pick(CsiGroup::A), pick(CsiGroup::B));
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("CSI selection needs two nonempty receive groups".into()));
    }
    let (sa, sb) = (group_statistics(&a), group_statistics(&b));
    let points_a = sa.iter().zip(&sb).filter(|(x, y)| x < y).count();
    let points_b = sa.iter().zip(&sb).filter(|(x, y)| y < x).count();
    let filtered = match points_a.cmp(&points_b) {
        std::cmp::Ordering::Less => CsiGroup::A,
        std::cmp::Ordering::Greater => CsiGroup::B,
        std::cmp::Ordering::Equal => prev_filtered.unwrap_or(CsiGroup::B),
    };
    let keep = filtered.other();
    Ok((StreamMask::from_fn(var.len(), |i| groups[i] == keep), filtered))
}

/// RSS: keep streams with variance between the 25th and 75th percentiles.
///
/// If fewer than two streams fall in the band, the two streams closest to the
/// median variance are kept instead.
pub fn select_rss(var: &[f64]) -> StreamMask {
    let mut sorted = var.to_vec();
    sorted.sort_by(f64::total_cmp);
    let p25 = percentile_sorted(&sorted, 25.0);
    let p75 = percentile_sorted(&sorted, 75.0);
    let mask = StreamMask::from_fn(var.len(), |i| var[i] >= p25 && var[i] <= p75);
    if mask.kept_count() >= 2 || var.len() < 2 {
        return mask;
    }
    let p50 = percentile_sorted(&sorted, 50.0);
    let mut order: Vec<usize> = (0..var.len()).collect();
    order.sort_by(|&i, &j| {
        (var[i] - p50)
            .abs()
            .total_cmp(&(var[j] - p50).abs())
            .then(i.cmp(&j))
    });
    StreamMask::from_fn(var.len(), |i| order[..2].contains(&i))
}

/// Sub-dB RSS has a single stream, which is always used.
pub fn select_sub(stream_count: usize) -> Result<StreamMask> {
    if stream_count != 1 {
        return Err(Error::Usage(format!(
            "sub-dB RSS carries one stream, got {stream_count}"
        )));
    }
    Ok(StreamMask::all(1))
}

/// Per-technology selector that carries the CSI tie-break token between ticks.
#[derive(Debug, Clone)]
pub struct StreamSelector {
    tech: Technology,
    mode: SelectMode,
    csi_groups: Option<Vec<CsiGroup>>,
    prev_filtered: Option<CsiGroup>,
}

impl StreamSelector {
    pub fn new(tech: Technology, mode: SelectMode, stream_count: usize) -> Result<Self> {
        if tech == Technology::Sub {
            select_sub(stream_count)?;
        }
        let csi_groups = match (tech, mode) {
            (Technology::Csi, SelectMode::Enabled) => Some(csi_receive_groups(stream_count)?),
            _ => None,
        };
        Ok(Self {
            tech,
            mode,
            csi_groups,
            prev_filtered: None,
        })
    }

    pub fn mode(&self) -> SelectMode {
        self.mode
    }

    /// Whether [`select`](Self::select) looks at the variances at all.
    pub fn needs_variance(&self) -> bool {
        self.mode == SelectMode::Enabled
            && matches!(self.tech, Technology::Cir | Technology::Csi | Technology::Rss)
    }

    pub fn select(&mut self, var: &[f64]) -> Result<StreamMask> {
        if self.mode == SelectMode::Bypassed {
            return Ok(StreamMask::all(var.len()));
        }
        match self.tech {
            Technology::Cir => Ok(select_cir(var)),
            Technology::Rss => Ok(select_rss(var)),
            Technology::Sub => select_sub(var.len()),
            Technology::Poly => Ok(StreamMask::all(var.len())),
            Technology::Csi => {
                let groups = self.csi_groups.as_deref().unwrap_or_default();
                let (mask, filtered) = select_csi(var, groups, self.prev_filtered)?;
                self.prev_filtered = Some(filtered);
                Ok(mask)
            }
        }
    }
}
