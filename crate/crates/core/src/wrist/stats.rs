//! Window statistics. Degenerate inputs (empty or constant windows) map to
//! 0 rather than NaN.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Relative tolerance under which a window counts as constant.
const CONSTANT_TOL: f64 = 1e-12;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Population standard deviation.
pub fn std(x: &[f64]) -> f64 {
    if x.iter().all(|v| *v == x[0]) {
        return 0.0;
    }
    central_moment(x, mean(x), 2).sqrt()
}

fn central_moment(x: &[f64], m: f64, k: i32) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / x.len() as f64
}

pub fn is_constant(x: &[f64]) -> bool {
    let m = mean(x);
    std(x) <= CONSTANT_TOL * m.abs().max(max_abs(x)).max(f64::MIN_POSITIVE)
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn skewness(x: &[f64]) -> f64 {
    if x.len() < 2 || is_constant(x) {
        return 0.0;
    }
    let m = mean(x);
    central_moment(x, m, 3) / central_moment(x, m, 2).powf(1.5)
}

/// Excess kurtosis.
pub fn kurtosis(x: &[f64]) -> f64 {
    if x.len() < 2 || is_constant(x) {
        return 0.0;
    }
    let m = mean(x);
    let m2 = central_moment(x, m, 2);
    central_moment(x, m, 4) / (m2 * m2) - 3.0
}

pub fn mean_abs_deviation(x: &[f64]) -> f64 {
    let m = mean(x);
    mean(&x.iter().map(|v| (v - m).abs()).collect::<Vec<_>>())
}

pub fn rms(x: &[f64]) -> f64 {
    mean(&x.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()
}

/// Sign changes of the mean-removed window; exact zeros inherit the
/// previous sign.
pub fn zero_crossings(x: &[f64]) -> usize {
    if is_constant(x) {
        return 0;
    }
    let m = mean(x);
    let mut last = 0.0f64;
    let mut count = 0;
    for v in x {
        let d = v - m;
        if d == 0.0 {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            count += 1;
        }
        last = d;
    }
    count
}

/// Strict local maxima above `mean + 0.5 * std`.
pub fn peak_count(x: &[f64]) -> usize {
    if x.len() < 3 || is_constant(x) {
        return 0;
    }
    let thr = mean(x) + 0.5 * std(x);
    x.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] > thr).count()
}

pub fn autocorr_lag1(x: &[f64]) -> f64 {
    if x.len() < 2 || is_constant(x) {
        return 0.0;
    }
    let m = mean(x);
    let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / den
}

/// One-sided magnitude spectrum summary of the mean-removed window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spectrum {
    /// Sum of |X_k|^2 / n^2 over bins 1..=n/2.
    pub total_power: f64,
    /// Frequency of the largest-magnitude bin (lowest on ties), Hz.
    pub dominant_freq: f64,
    /// Shannon entropy of the normalized power over bins 1..=n/2, divided
    /// by ln(n/2).
    pub entropy: f64,
}

pub fn spectrum(x: &[f64], rate_hz: f64, planner: &mut FftPlanner<f64>) -> Spectrum {
    let n = x.len();
    let bins = n / 2;
    if bins == 0 || is_constant(x) {
        return Spectrum::default();
    }
    let m = mean(x);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[1..=bins].iter().map(|c| c.norm_sqr()).collect();
    spectrum_from_power(&power, n, rate_hz)
}

/// Shared tail of the spectral summary, also used by the direct-DFT oracle in tests.
pub(crate) fn spectrum_from_power(power: &[f64], n: usize, rate_hz: f64) -> Spectrum {
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return Spectrum::default();
    }
    let mut best = 0;
    for (k, p) in power.iter().enumerate() {
        if *p > power[best] {
            best = k;
        }
    }
    let entropy = if power.len() > 1 {
        let h: f64 = power
            .iter()
            .map(|p| p / total)
            .filter(|p| *p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        (h / (power.len() as f64).ln()).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Spectrum {
        total_power: total / (n as f64 * n as f64),
        dominant_freq: (best + 1) as f64 * rate_hz / n as f64,
        entropy,
    }
}

/// Share of mean-removed energy carried by level-1 Haar detail coefficients.
pub fn haar_detail_fraction(x: &[f64]) -> f64 {
    if x.len() < 2 || is_constant(x) {
        return 0.0;
    }
    let m = mean(x);
    let total: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let detail: f64 = x.chunks_exact(2).map(|p| (p[0] - p[1]) * (p[0] - p[1]) / 2.0).sum();
    (detail / total).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_window_is_degenerate() {
        let x = vec![2.7; 240];
        assert_eq!(std(&x), 0.0);
        assert_eq!(skewness(&x), 0.0);
        assert_eq!(kurtosis(&x), 0.0);
        assert_eq!(zero_crossings(&x), 0);
        assert_eq!(haar_detail_fraction(&x), 0.0);
        assert_eq!(spectrum(&x, 4.0, &mut FftPlanner::new()), Spectrum::default());
    }

    #[test]
    fn known_moments() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((std(&x) - 1.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(skewness(&x), 0.0);
        assert!((kurtosis(&x) - (-1.36)).abs() < 1e-12);
        assert_eq!(mean_abs_deviation(&x), 1.0);
        let mut s = x.to_vec();
        s.sort_by(f64::total_cmp);
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.25), 1.75);
    }

    #[test]
    fn pure_tone_has_zero_entropy() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 4.0 * i as f64 / n as f64).sin()).collect();
        let s = spectrum(&x, 8.0, &mut FftPlanner::new());
        assert_eq!(s.dominant_freq, 0.5);
        assert!(s.entropy < 1e-9);
        assert!(zero_crossings(&x) >= 7);
    }

    #[test]
    fn alternating_signal_is_all_detail() {
        let x: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((haar_detail_fraction(&x) - 1.0).abs() < 1e-12);
        assert!((autocorr_lag1(&x) - (-0.95)).abs() < 1e-12);
    }
}
