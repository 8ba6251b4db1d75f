//! Small numerical helpers shared by the utility laws and the Monte Carlo paths.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Mean of `clamp(c + s·Z, -1, 1)` for standard normal `Z`.
pub fn clamped_normal_mean(c: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return c.clamp(-1.0, 1.0);
    }
    let z = Normal::standard();
    let a = (-1.0 - c) / s;
    let b = (1.0 - c) / s;
    let (fa, fb) = (z.cdf(a), z.cdf(b));
    let mean = -fa + z.sf(b) + c * (fb - fa) + s * (z.pdf(a) - z.pdf(b));
    mean.clamp(-1.0, 1.0)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}
