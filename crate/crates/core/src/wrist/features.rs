use std::collections::BTreeMap;
use std::sync::OnceLock;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::biomarkers::derive_hr_series;
use super::eda::eda_decompose;
use super::stats;
use crate::error::{Error, Result};
use crate::ingest::{ActivityClass, BiomarkerRecord};
use crate::series::{acc_magnitude, Channel, SampleSeries};
use crate::time::{secs_to_ms, Timestamp};

pub const WINDOW_LEN_S: f64 = 60.0;

/// Windows whose worst channel has less valid data than this are unusable.
pub const MIN_VALID_FRACTION: f64 = 0.8;

/// Bumped whenever the catalog below changes; stored models carry it.
pub const CATALOG_VERSION: u32 = 1;

pub const CATALOG_CHANNELS: [Channel; 9] = [
    Channel::AccX,
    Channel::AccY,
    Channel::AccZ,
    Channel::AccMag,
    Channel::Eda,
    Channel::EdaTonic,
    Channel::EdaPhasic,
    Channel::Temp,
    Channel::Hr,
];

pub const CHANNEL_FEATURES: [&str; 17] = [
    "mean",
    "std",
    "min",
    "max",
    "median",
    "iqr",
    "rms",
    "skewness",
    "kurtosis",
    "mad",
    "zero_crossings",
    "peak_count",
    "autocorr_lag1",
    "spectral_power",
    "dominant_freq",
    "spectral_entropy",
    "haar_detail_fraction",
];

/// Optional biomarker columns appended when [`FeatureConfig::append_biomarkers`] is set.
pub const BIOMARKER_FEATURES: [&str; 7] = [
    "bio.pulse_rate_bpm",
    "bio.prv_ms",
    "bio.activity_counts",
    "bio.accel_std",
    "bio.steps",
    "bio.scl_us",
    "bio.activity_moving",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    #[serde(default)]
    pub append_biomarkers: bool,
}

impl FeatureConfig {
    pub fn names(&self) -> Vec<String> {
        let mut names = catalog_names().to_vec();
        if self.append_biomarkers {
            names.extend(BIOMARKER_FEATURES.iter().map(|s| s.to_string()));
        }
        names
    }
}

/// `channel.feature` names in canonical order (153 entries).
pub fn catalog_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        CATALOG_CHANNELS
            .iter()
            .flat_map(|c| CHANNEL_FEATURES.iter().map(move |f| format!("{}.{f}", c.name())))
            .collect()
    })
}

/// FNV-1a over the newline-joined names; stable across platforms and runs.
pub fn schema_hash(names: &[String]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (i, name) in names.iter().enumerate() {
        if i > 0 {
            h ^= b'\n' as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        for b in name.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub window_start: Timestamp,
    pub window_len_s: f64,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub valid_fraction: f64,
}

impl FeatureVector {
    pub fn usable(&self) -> bool {
        self.valid_fraction >= MIN_VALID_FRACTION
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn append_biomarkers(&mut self, rec: &BiomarkerRecord) {
        let vals = [
            rec.pulse_rate_bpm.unwrap_or(0.0),
            rec.prv_ms.unwrap_or(0.0),
            rec.activity_counts.unwrap_or(0) as f64,
            rec.accel_std.unwrap_or(0.0),
            rec.steps.unwrap_or(0) as f64,
            rec.scl_microsiemens.unwrap_or(0.0),
            if rec.activity_class == Some(ActivityClass::Moving) { 1.0 } else { 0.0 },
        ];
        self.names.extend(BIOMARKER_FEATURES.iter().map(|s| s.to_string()));
        self.values.extend(vals);
    }
}

/// The nine catalog channels of one session, ready for windowing.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    series: BTreeMap<Channel, SampleSeries>,
}

impl ChannelSet {
    pub fn new(series: BTreeMap<Channel, SampleSeries>) -> Result<Self> {
        for c in CATALOG_CHANNELS {
            if !series.contains_key(&c) {
                return Err(Error::MissingChannel(c));
            }
        }
        Ok(ChannelSet { series })
    }

    pub fn get(&self, c: Channel) -> Option<&SampleSeries> {
        self.series.get(&c)
    }

    pub fn series(&self) -> &BTreeMap<Channel, SampleSeries> {
        &self.series
    }

    /// Overlap of all catalog channels, `[latest start, earliest end)`.
    pub fn common_span(&self) -> (Timestamp, Timestamp) {
        let start = CATALOG_CHANNELS.iter().map(|c| self.series[c].start).max().unwrap_or_default();
        let end = CATALOG_CHANNELS.iter().map(|c| self.series[c].end()).min().unwrap_or_default();
        (start, end.max(start))
    }
}

/// Builds the catalog channel set from raw session series: derives
/// accelerometer magnitude if needed, splits EDA, and falls back to a
/// BVP-derived heart rate when no HR file exists.
pub fn prepare_channels(raw: &BTreeMap<Channel, SampleSeries>) -> Result<ChannelSet> {
    let mut series: BTreeMap<Channel, SampleSeries> = raw.clone();
    if !series.contains_key(&Channel::AccMag) {
        if let (Some(x), Some(y), Some(z)) = (raw.get(&Channel::AccX), raw.get(&Channel::AccY), raw.get(&Channel::AccZ)) {
            series.insert(Channel::AccMag, acc_magnitude(x, y, z)?);
        }
    }
    let eda = raw.get(&Channel::Eda).ok_or(Error::MissingChannel(Channel::Eda))?;
    let (tonic, phasic) = eda_decompose(eda);
    series.insert(Channel::EdaTonic, tonic);
    series.insert(Channel::EdaPhasic, phasic);
    if !series.contains_key(&Channel::Hr) {
        let bvp = raw.get(&Channel::Bvp).ok_or(Error::MissingChannel(Channel::Hr))?;
        series.insert(Channel::Hr, derive_hr_series(bvp));
    }
    ChannelSet::new(series)
}

/// Start times of consecutive windows of `WINDOW_LEN_S` fitting inside the
/// common span, advancing by `stride_s`.
pub fn window_starts(channels: &ChannelSet, stride_s: f64) -> Vec<Timestamp> {
    let (start, end) = channels.common_span();
    let win = secs_to_ms(WINDOW_LEN_S);
    let stride = secs_to_ms(stride_s).max(1);
    let mut out = Vec::new();
    let mut t = start;
    while t.add_ms(win) <= end {
        out.push(t);
        t = t.add_ms(stride);
    }
    out
}

/// The 153-value catalog vector for the minute starting at `window_start`.
pub fn extract_window_features(channels: &ChannelSet, window_start: Timestamp) -> Result<FeatureVector> {
    let window_end = window_start.add_secs(WINDOW_LEN_S);
    let mut planner = FftPlanner::new();
    let mut values = Vec::with_capacity(catalog_names().len());
    let mut valid_fraction: f64 = 1.0;
    for c in CATALOG_CHANNELS {
        let s = channels.get(c).ok_or(Error::MissingChannel(c))?;
        if window_end > s.end() || window_start < s.start {
            return Err(Error::WindowOutOfRange {
                channel: c,
                start_ms: window_start.millis(),
                end_ms: window_end.millis(),
                channel_end_ms: s.end().millis(),
            });
        }
        let range = s.index_range(window_start, window_end);
        let expected = range.len();
        let x: Vec<f64> = range.filter(|&i| s.valid[i]).map(|i| s.values[i]).collect();
        let share = if expected == 0 { 0.0 } else { x.len() as f64 / expected as f64 };
        valid_fraction = valid_fraction.min(share);
        values.extend(channel_features(&x, s.rate.as_f64(), &mut planner));
    }
    Ok(FeatureVector {
        window_start,
        window_len_s: WINDOW_LEN_S,
        names: catalog_names().to_vec(),
        values,
        valid_fraction,
    })
}

/// The 17 per-channel features in `CHANNEL_FEATURES` order.
pub fn channel_features(x: &[f64], rate_hz: f64, planner: &mut FftPlanner<f64>) -> [f64; 17] {
    if x.is_empty() {
        return [0.0; 17];
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let constant = stats::is_constant(x);
    let std = if constant { 0.0 } else { stats::std(x) };
    let spec = stats::spectrum(x, rate_hz, planner);
    let iqr = if constant { 0.0 } else { stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25) };
    let mad = if constant { 0.0 } else { stats::mean_abs_deviation(x) };
    [
        stats::mean(x),
        std,
        min,
        max,
        stats::quantile_sorted(&sorted, 0.5),
        iqr,
        stats::rms(x),
        stats::skewness(x),
        stats::kurtosis(x),
        mad,
        stats::zero_crossings(x) as f64,
        stats::peak_count(x) as f64,
        stats::autocorr_lag1(x),
        spec.total_power,
        spec.dominant_freq,
        spec.entropy,
        stats::haar_detail_fraction(x),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Rate;
    use std::f64::consts::PI;

    fn constant_set(secs: usize) -> ChannelSet {
        let mut m = BTreeMap::new();
        for c in CATALOG_CHANNELS {
            let r = c.default_rate();
            let n = r.samples_in(secs as i64 * 1000);
            m.insert(c, SampleSeries::dense(c, r, Timestamp(0), vec![1.5; n]));
        }
        ChannelSet::new(m).unwrap()
    }

    fn idx(name: &str) -> usize {
        catalog_names().iter().position(|n| n == name).unwrap()
    }

    #[test]
    fn catalog_has_153_names() {
        assert_eq!(catalog_names().len(), 153);
        assert_eq!(catalog_names()[idx("eda_tonic.mean")], "eda_tonic.mean");
        assert_eq!(schema_hash(catalog_names()), schema_hash(&catalog_names().to_vec()));
    }

    #[test]
    fn constant_channels_degenerate() {
        let fv = extract_window_features(&constant_set(60), Timestamp(0)).unwrap();
        assert_eq!(fv.values.len(), 153);
        assert_eq!(fv.valid_fraction, 1.0);
        for c in CATALOG_CHANNELS {
            for f in ["std", "skewness", "kurtosis", "zero_crossings", "spectral_entropy", "haar_detail_fraction"] {
                assert_eq!(fv.values[idx(&format!("{}.{f}", c.name()))], 0.0, "{c}.{f}");
            }
        }
        assert!(fv.values.iter().all(|v| v.is_finite()));
    }

    /// Direct O(n^2) DFT, independent of the FFT path.
    fn dft_power(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let m = x.iter().sum::<f64>() / n as f64;
        (1..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += (v - m) * a.cos();
                    im += (v - m) * a.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn hr_sine_dominant_frequency() {
        let mut set = constant_set(60).series().clone();
        let hr: Vec<f64> = (0..60).map(|i| 60.0 + 10.0 * (2.0 * PI * 0.1 * i as f64).sin()).collect();
        let oracle = stats::spectrum_from_power(&dft_power(&hr), hr.len(), 1.0);
        set.insert(Channel::Hr, SampleSeries::dense(Channel::Hr, Rate::hz(1), Timestamp(0), hr));
        let fv = extract_window_features(&ChannelSet::new(set).unwrap(), Timestamp(0)).unwrap();
        assert!((fv.values[idx("hr.mean")] - 60.0).abs() < 1e-6);
        assert!((oracle.dominant_freq - 0.1).abs() < 1e-12);
        assert_eq!(fv.values[idx("hr.dominant_freq")], oracle.dominant_freq);
        assert!((fv.values[idx("hr.spectral_power")] - oracle.total_power).abs() < 1e-9);
        assert!((fv.values[idx("hr.spectral_entropy")] - oracle.entropy).abs() < 1e-9);
    }

    #[test]
    fn missing_channel_and_out_of_range() {
        let mut m = constant_set(60).series().clone();
        m.remove(&Channel::Temp);
        assert!(matches!(ChannelSet::new(m), Err(Error::MissingChannel(Channel::Temp))));
        assert!(matches!(
            extract_window_features(&constant_set(90), Timestamp(40_000)),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn valid_fraction_is_worst_channel() {
        let mut m = constant_set(60).series().clone();
        let eda = m.get_mut(&Channel::Eda).unwrap();
        for v in eda.valid.iter_mut().take(60) {
            *v = false;
        }
        let fv = extract_window_features(&ChannelSet::new(m).unwrap(), Timestamp(0)).unwrap();
        assert!((fv.valid_fraction - 0.75).abs() < 1e-12);
        assert!(!fv.usable());
    }

    #[test]
    fn window_starts_cover_span() {
        assert_eq!(window_starts(&constant_set(600), 60.0).len(), 10);
        assert_eq!(window_starts(&constant_set(59), 60.0).len(), 0);
    }
}
