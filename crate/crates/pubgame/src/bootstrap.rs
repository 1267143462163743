//! Percentile bootstrap for the mean.

use rand::Rng;

use crate::Error;

/// Confidence interval `(lower, upper)` for the mean of `samples`.
///
/// Draws `resamples` resamples with replacement, computes each mean, and
/// returns the `(1 - confidence) / 2` and `1 - (1 - confidence) / 2`
/// empirical quantiles (linear interpolation between order statistics).
pub fn bootstrap_ci<R: Rng>(
    samples: &[f64],
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<(f64, f64), Error> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("bootstrap needs at least one sample".into()));
    }
    if resamples == 0 {
        return Err(Error::InvalidInput("bootstrap needs at least one resample".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let len = samples.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let total: f64 = (0..len)
                .map(|_| samples[rng.gen_range(0..len as u64) as usize])
                .sum();
            total / len as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    Ok((quantile(&means, tail), quantile(&means, 1.0 - tail)))
}

/// Empirical quantile of sorted data with linear interpolation.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(samples: &[f64]) -> Option<f64> {
    (!samples.is_empty()).then(|| samples.iter().sum::<f64>() / samples.len() as f64)
}
