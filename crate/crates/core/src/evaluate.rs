//! Evaluation: per-tick errors in breaths per minute, summary reports,
//! interval slicing and the Mann-Whitney U test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::estimate::RateEstimate;
use crate::trace::AlignedPair;

/// CDF resolution (bpm): one frequency-grid step.
pub const CDF_STEP_BPM: f64 = 0.12;
/// Largest `|a| * |b|` for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 64;

/// Error of one present estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    /// `60 * |f_gt - f_hat|`, breaths per minute.
    pub e: f64,
}

/// Errors of present pairs. Absent estimates produce no sample.
pub fn rr_error(pairs: &[AlignedPair]) -> Vec<ErrorSample> {
    pairs
        .iter()
        .filter_map(|p| {
            p.f_hat.map(|f| ErrorSample {
                t: p.t,
                e: 60.0 * (p.f_gt - f).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `None` when there are no samples.
    pub median_bpm: Option<f64>,
    pub p95_bpm: Option<f64>,
    /// `(bpm, fraction of samples with error <= bpm)`.
    pub cdf: Vec<(f64, f64)>,
    pub pct_removed: f64,
    pub n_samples: usize,
    pub total_ticks: usize,
    /// The error samples behind the summary, kept for later comparison.
    pub errors: Vec<f64>,
}

impl EvalReport {
    /// Fraction of samples with error at most `bpm`.
    pub fn cdf_at(&self, bpm: f64) -> f64 {
        if self.errors.is_empty() {
            return 0.0;
        }
        self.errors.iter().filter(|&&e| e <= bpm).count() as f64 / self.errors.len() as f64
    }
}

/// Summary statistics of `errors` out of `total_ticks` estimate ticks.
pub fn summarize(errors: &[ErrorSample], total_ticks: usize) -> Result<EvalReport> {
    if errors.len() > total_ticks {
        return Err(Error::Usage(format!(
            "{} error samples but only {total_ticks} ticks",
            errors.len()
        )));
    }
    let values: Vec<f64> = errors.iter().map(|s| s.e).collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let pct_removed = if total_ticks == 0 {
        0.0
    } else {
        (total_ticks - n) as f64 / total_ticks as f64
    };
    Ok(EvalReport {
        median_bpm: ecdf_quantile(&sorted, 50),
        p95_bpm: ecdf_quantile(&sorted, 95),
        cdf: empirical_cdf(&sorted),
        pct_removed,
        n_samples: n,
        total_ticks,
        errors: values,
    })
}

/// Smallest sample whose empirical CDF reaches `percent` (nearest rank).
pub fn ecdf_quantile(sorted: &[f64], percent: usize) -> Option<f64> {
    let n = sorted.len();
    let rank = (percent * n).div_ceil(100).clamp(1, n.max(1));
    sorted.get(rank - 1).copied()
}

fn empirical_cdf(sorted: &[f64]) -> Vec<(f64, f64)> {
    let Some(&max) = sorted.last() else {
        return Vec::new();
    };
    let mut bins = (max / CDF_STEP_BPM).ceil().max(0.0) as usize;
    while (bins as f64) * CDF_STEP_BPM < max {
        bins += 1;
    }
    let n = sorted.len() as f64;
    (0..=bins)
        .map(|k| {
            let x = k as f64 * CDF_STEP_BPM;
            let below = sorted.partition_point(|&e| e <= x);
            (x, below as f64 / n)
        })
        .collect()
}

/// Aligns, scores and summarizes in one step.
pub fn evaluate_pairs(pairs: &[AlignedPair]) -> Result<EvalReport> {
    summarize(&rr_error(pairs), pairs.len())
}

/// Anything carrying a timestamp that interval slicing can test.
pub trait Timed {
    fn time(&self) -> f64;
}

impl Timed for ErrorSample {
    fn time(&self) -> f64 {
        self.t
    }
}

impl Timed for RateEstimate {
    fn time(&self) -> f64 {
        self.t
    }
}

impl Timed for AlignedPair {
    fn time(&self) -> f64 {
        self.t
    }
}

/// Items whose time lies in any half-open interval `[start, end)`, in order.
pub fn slice_by_intervals<T: Timed + Clone>(items: &[T], intervals: &[(f64, f64)]) -> Vec<T> {
    items
        .iter()
        .filter(|x| {
            let t = x.time();
            intervals.iter().any(|&(a, b)| t >= a && t < b)
        })
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// The distributions differ.
    #[default]
    TwoSided,
    /// Values of `a` tend to be smaller than values of `b`.
    Less,
    /// Values of `a` tend to be larger than values of `b`.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `U` statistic of sample `a`: the number of pairs with `a_i > b_j`,
    /// ties counting one half.
    pub u: f64,
    pub p: f64,
    /// Whether `p` comes from the exact null distribution.
    pub exact: bool,
}

/// Midranks (1-based) of `values`.
fn midranks(values: &[f64]) -> (Vec<f64>, bool) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = false;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        ties |= j - i > 1;
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    (ranks, ties)
}

/// Number of group labelings giving each value of `U`, for sizes `n`, `m`.
pub fn u_null_counts(n: usize, m: usize) -> Vec<f64> {
    // counts[i][j][u] built by the last element belonging to either group.
    let max_u = n * m;
    let mut table = vec![vec![Vec::<f64>::new(); m + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=m {
            let mut c = vec![0.0; i * j + 1];
            if i == 0 || j == 0 {
                c[0] = 1.0;
            } else {
                // Largest value belongs to a: it beats all j values of b.
                for (u, &v) in table[i - 1][j].iter().enumerate() {
                    c[u + j] += v;
                }
                for (u, &v) in table[i][j - 1].iter().enumerate() {
                    c[u] += v;
                }
            }
            table[i][j] = c;
        }
    }
    let counts = std::mem::take(&mut table[n][m]);
    debug_assert_eq!(counts.len(), max_u + 1);
    counts
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Mann-Whitney U test of `a` against `b`.
///
/// Exact when `|a| * |b| <= 64` and there are no ties; otherwise the normal
/// approximation with tie and continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64], alternative: Alternative) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("Mann-Whitney U needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Usage("Mann-Whitney U needs finite samples".into()));
    }
    let (n, m) = (a.len(), b.len());
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&all);
    let rank_sum: f64 = ranks[..n].iter().sum();
    let u = rank_sum - (n * (n + 1)) as f64 / 2.0;

    if !ties && n * m <= EXACT_LIMIT {
        let counts = u_null_counts(n, m);
        let total: f64 = counts.iter().sum();
        let k = u.round() as usize;
        let le = counts[..=k].iter().sum::<f64>() / total;
        let ge = counts[k..].iter().sum::<f64>() / total;
        let p = match alternative {
            Alternative::TwoSided => (2.0 * le.min(ge)).min(1.0),
            Alternative::Less => le,
            Alternative::Greater => ge,
        };
        return Ok(MannWhitney { u, p, exact: true });
    }

    let (nf, mf) = (n as f64, m as f64);
    let big_n = nf + mf;
    let mu = nf * mf / 2.0;
    let mut sorted = all;
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = nf * mf / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if !(var > 0.0) {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let sigma = var.sqrt();
    let p = match alternative {
        Alternative::TwoSided => {
            let z = ((u - mu).abs() - 0.5).max(0.0) / sigma;
            erfc(z / std::f64::consts::SQRT_2).min(1.0)
        }
        Alternative::Less => normal_cdf((u - mu + 0.5) / sigma),
        Alternative::Greater => 1.0 - normal_cdf((u - mu - 0.5) / sigma),
    };
    Ok(MannWhitney { u, p, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(f_gt: f64, f_hat: Option<f64>) -> AlignedPair {
        AlignedPair {
            t: 0.0,
            t_gt: 0.0,
            f_gt,
            f_hat,
        }
    }

    fn samples(e: &[f64]) -> Vec<ErrorSample> {
        e.iter().map(|&e| ErrorSample { t: 0.0, e }).collect()
    }

    #[test]
    fn error_in_bpm() {
        let e = rr_error(&[pair(0.30, Some(0.25)), pair(0.3, None), pair(0.2, Some(0.2))]);
        assert_eq!(e.len(), 2);
        assert!((e[0].e - 3.0).abs() < 1e-12);
        assert_eq!(e[1].e, 0.0);
    }

    #[test]
    fn summary_median_and_removed_fraction() {
        let r = summarize(&samples(&[0.0, 1.0, 2.0, 3.0, 4.0]), 5).unwrap();
        assert_eq!(r.median_bpm, Some(2.0));
        let r = summarize(&samples(&[3.0, 0.0, 1.0, 2.0]), 4).unwrap();
        assert_eq!(r.median_bpm, Some(1.0));
        assert_eq!(r.p95_bpm, Some(3.0));
        let r = summarize(&samples(&[1.0]), 2).unwrap();
        assert_eq!(r.pct_removed, 0.5);
    }

    #[test]
    fn cdf_ends_at_one_and_is_monotone() {
        let r = summarize(&samples(&[0.05, 0.3, 0.36, 2.0]), 4).unwrap();
        assert_eq!(r.cdf.first().unwrap().0, 0.0);
        assert_eq!(r.cdf.last().unwrap().1, 1.0);
        assert!(r.cdf.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(summarize(&[], 0).unwrap().cdf.is_empty());
    }

    #[test]
    fn too_many_samples_rejected() {
        assert!(summarize(&samples(&[1.0, 2.0]), 1).is_err());
    }

    #[test]
    fn separated_triples_have_p_one_tenth() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert!((r.p - 0.10).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_have_p_one() {
        let a = [1.0, 2.0, 2.0, 3.0];
        let r = mann_whitney_u(&a, &a, Alternative::TwoSided).unwrap();
        assert_eq!(r.p, 1.0);
        assert_eq!(r.u, 8.0);
    }

    #[test]
    fn null_counts_sum_to_binomial() {
        let c = u_null_counts(3, 3);
        assert_eq!(c.iter().sum::<f64>(), 20.0);
        assert_eq!(c, vec![1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(mann_whitney_u(&[], &[1.0], Alternative::TwoSided).is_err());
    }

    #[test]
    fn half_open_slicing() {
        let s: Vec<ErrorSample> = [0.0, 5.0, 10.0, 15.0]
            .iter()
            .map(|&t| ErrorSample { t, e: 1.0 })
            .collect();
        let got = slice_by_intervals(&s, &[(5.0, 10.0)]);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].t, 5.0);
        assert!(slice_by_intervals(&s, &[]).is_empty());
        assert_eq!(slice_by_intervals(&s, &[(f64::NEG_INFINITY, f64::INFINITY)]), s);
    }
}
