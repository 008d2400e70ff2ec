//! Peak picking with prominence and minimum-distance constraints.

/// Indices of local maxima. A flat top counts once, at its middle sample;
/// the first and last samples are never peaks.
fn local_maxima(v: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    if v.len() < 3 {
        return peaks;
    }
    let mut i = 1;
    let last = v.len() - 1;
    while i < last {
        if v[i - 1] < v[i] {
            let mut ahead = i + 1;
            while ahead < last && v[ahead] == v[i] {
                ahead += 1;
            }
            if v[ahead] < v[i] {
                peaks.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

/// Height of a peak above the higher of its two bases. Each base is the
/// lowest point between the peak and the nearest higher sample on that side
/// (or the signal edge).
pub fn prominence(v: &[f64], peak: usize) -> f64 {
    let h = v[peak];
    let mut left_min = h;
    for &x in v[..peak].iter().rev() {
        if x > h {
            break;
        }
        left_min = left_min.min(x);
    }
    let mut right_min = h;
    for &x in &v[peak + 1..] {
        if x > h {
            break;
        }
        right_min = right_min.min(x);
    }
    h - left_min.max(right_min)
}

/// Peaks of `v` (sampled at `fs`) with prominence of at least
/// `min_prom * (max(v) - min(v))`, thinned so kept peaks are at least
/// `min_dist` seconds apart. Higher peaks win when thinning.
pub fn find_peaks(v: &[f64], fs: f64, min_dist: f64, min_prom: f64) -> Vec<usize> {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Vec::new();
    }
    let threshold = min_prom * range;
    let candidates: Vec<usize> = local_maxima(v)
        .into_iter()
        .filter(|&p| prominence(v, p) >= threshold)
        .collect();

    let min_gap = (min_dist.max(0.0) * fs - 1e-9).ceil().max(0.0) as usize;
    if min_gap <= 1 {
        return candidates;
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| v[candidates[b]].total_cmp(&v[candidates[a]]).then(a.cmp(&b)));
    let mut keep = vec![false; candidates.len()];
    let mut kept: Vec<usize> = Vec::new();
    for idx in order {
        let p = candidates[idx];
        if kept.iter().all(|&q| p.abs_diff(q) >= min_gap) {
            kept.push(p);
            keep[idx] = true;
        }
    }
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}
