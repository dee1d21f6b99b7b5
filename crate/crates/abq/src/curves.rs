//! Learning-curve arithmetic.

/// `out[k]` is the mean of the last `min(k + 1, window)` values, so the
/// first `window − 1` points average the available prefix.
///
/// # Panics
///
/// If `window` is zero.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for k in 0..series.len() {
        sum += series[k];
        if k >= window {
            sum -= series[k - window];
        }
        out.push(sum / (k + 1).min(window) as f64);
    }
    out
}

/// Mean of the last `window` values, or of all of them if fewer.
pub fn final_window_mean(series: &[f64], window: usize) -> Option<f64> {
    moving_average(series, window).last().copied()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Pointwise median across seeds. Index `k` uses every series that has a
/// value at `k`.
pub fn median_curve(series: &[Vec<f64>]) -> Vec<f64> {
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let column: Vec<f64> = series.iter().filter_map(|s| s.get(k).copied()).collect();
            median(&column).expect("at least one series reaches k")
        })
        .collect()
}
