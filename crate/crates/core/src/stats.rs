//! Small statistics helpers for the experiment harness.

/// Upper 0.001 quantile of the chi-square distribution with 14 degrees of
/// freedom.
pub const CHI2_DF14_ALPHA_0_001: f64 = 36.12;

/// Upper 0.001 quantile of the chi-square distribution with `df` degrees of
/// freedom: exact for 2 and 14, Wilson-Hilferty otherwise.
pub fn chi_square_critical_0_001(df: usize) -> f64 {
    const Z: f64 = 3.090232306167813;
    match df {
        2 => -2.0 * 0.001f64.ln(),
        14 => CHI2_DF14_ALPHA_0_001,
        _ => {
            let d = df as f64;
            let h = 2.0 / (9.0 * d);
            d * (1.0 - h + Z * h.sqrt()).powi(3)
        }
    }
}

/// Pearson statistic of `observed` counts against equal cell probabilities.
pub fn chi_square_uniform(observed: &[u64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / observed.len() as f64;
    observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
