use std::collections::BTreeMap;

use super::eda::{eda_decompose, moving_average};
use super::stats;
use crate::ingest::{ActivityClass, BiomarkerRecord};
use crate::series::{Channel, SampleSeries};
use crate::time::{Rate, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiomarkerConfig {
    /// |high-passed ACC_MAG| above this (g) counts toward activity.
    pub activity_threshold_g: f64,
    /// Activity counts strictly above this mean MOVING.
    pub moving_counts: u32,
    pub step_min_sep_s: f64,
    /// Pulse rate is the median of per-chunk peak-count estimates.
    pub pulse_chunk_s: f64,
    pub beat_min_sep_s: f64,
    pub highpass_span_s: f64,
    pub bvp_detrend_span_s: f64,
}

impl Default for BiomarkerConfig {
    fn default() -> Self {
        BiomarkerConfig {
            activity_threshold_g: 0.05,
            moving_counts: 10,
            step_min_sep_s: 0.3,
            pulse_chunk_s: 10.0,
            beat_min_sep_s: 0.33,
            highpass_span_s: 1.0,
            bvp_detrend_span_s: 1.5,
        }
    }
}

/// Subtracts a centered moving average of `span_s` seconds.
pub fn highpass(series: &SampleSeries, span_s: f64) -> SampleSeries {
    let ma = moving_average(series, span_s);
    let values = series.values.iter().zip(&ma.values).map(|(v, m)| v - m).collect();
    SampleSeries { values, ..series.clone() }
}

/// Strict local maxima above `threshold` among valid samples. Peaks
/// closer than `min_sep` samples compete and the higher one survives.
pub fn detect_peaks(x: &[f64], valid: &[bool], threshold: f64, min_sep: usize) -> Vec<usize> {
    let mut peaks: Vec<usize> = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if !(valid[i - 1] && valid[i] && valid[i + 1]) {
            continue;
        }
        if x[i] > x[i - 1] && x[i] > x[i + 1] && x[i] > threshold {
            match peaks.last() {
                Some(&last) if i - last < min_sep => {
                    if x[i] > x[last] {
                        *peaks.last_mut().unwrap() = i;
                    }
                }
                _ => peaks.push(i),
            }
        }
    }
    peaks
}

fn beat_indices(bvp: &SampleSeries, cfg: &BiomarkerConfig) -> Vec<usize> {
    let detrended = highpass(bvp, cfg.bvp_detrend_span_s);
    let min_sep = (cfg.beat_min_sep_s * bvp.rate.as_f64()).round().max(1.0) as usize;
    detect_peaks(&detrended.values, &detrended.valid, 0.0, min_sep)
}

/// Exact (unfloored) sample time in ms relative to the series start.
fn exact_offset_ms(rate: Rate, i: usize) -> f64 {
    i as f64 * rate.period_ms()
}

/// 1 Hz heart rate from BVP beats within a centered 10-s neighborhood.
pub fn derive_hr_series(bvp: &SampleSeries) -> SampleSeries {
    let cfg = BiomarkerConfig::default();
    let beats = beat_indices(bvp, &cfg);
    let times: Vec<f64> = beats.iter().map(|&i| exact_offset_ms(bvp.rate, i)).collect();
    let seconds = (bvp.end().millis() - bvp.start.millis()) / 1000;
    let mut values = Vec::with_capacity(seconds as usize);
    let mut valid = Vec::with_capacity(seconds as usize);
    for s in 0..seconds {
        let center = s as f64 * 1000.0;
        let near: Vec<f64> = times.iter().copied().filter(|t| (t - center).abs() <= 5000.0).collect();
        let ibis: Vec<f64> = near.windows(2).map(|w| w[1] - w[0]).collect();
        if ibis.is_empty() {
            values.push(0.0);
            valid.push(false);
        } else {
            values.push(60_000.0 / stats::mean(&ibis));
            valid.push(true);
        }
    }
    SampleSeries { channel: Channel::Hr, rate: Rate::hz(1), start: bvp.start, values, valid }
}

fn valid_in(s: &SampleSeries, from: Timestamp, to: Timestamp) -> (Vec<f64>, usize) {
    let r = s.index_range(from, to);
    let expected = r.len();
    (r.filter(|&i| s.valid[i]).map(|i| s.values[i]).collect(), expected)
}

/// Minute-cadence biomarkers computed from raw channels, one record per
/// full minute of the data span.
pub fn derive_biomarkers(raw: &BTreeMap<Channel, SampleSeries>) -> Vec<BiomarkerRecord> {
    derive_biomarkers_with(raw, &BiomarkerConfig::default())
}

pub fn derive_biomarkers_with(raw: &BTreeMap<Channel, SampleSeries>, cfg: &BiomarkerConfig) -> Vec<BiomarkerRecord> {
    let (Some(start), Some(end)) = (raw.values().map(|s| s.start).min(), raw.values().map(|s| s.end()).max()) else {
        return Vec::new();
    };
    let bvp = raw.get(&Channel::Bvp);
    let beats = bvp.map(|b| beat_indices(b, cfg)).unwrap_or_default();
    let hr = raw.get(&Channel::Hr);
    let acc_hp = raw.get(&Channel::AccMag).map(|m| highpass(m, cfg.highpass_span_s));
    let tonic = raw.get(&Channel::Eda).map(|e| eda_decompose(e).0);

    let mut out = Vec::new();
    let mut m_start = start;
    while m_start.add_ms(60_000) <= end {
        let m_end = m_start.add_ms(60_000);
        let mut rec = BiomarkerRecord { t: m_start, ..Default::default() };

        let mut pulse_done = false;
        if let Some(b) = bvp {
            if let Some((rate, prv)) = pulse_from_beats(b, &beats, m_start, cfg) {
                rec.pulse_rate_bpm = Some(rate);
                rec.prv_ms = prv;
                pulse_done = true;
            }
        }
        if !pulse_done {
            if let Some(h) = hr {
                let (x, _) = valid_in(h, m_start, m_end);
                if !x.is_empty() {
                    rec.pulse_rate_bpm = Some(stats::mean(&x));
                    let ibis: Vec<f64> = x.iter().filter(|v| **v > 0.0).map(|v| 60_000.0 / v).collect();
                    rec.prv_ms = (!ibis.is_empty()).then(|| stats::std(&ibis));
                }
            }
        }

        if let (Some(mag), Some(hp)) = (raw.get(&Channel::AccMag), acc_hp.as_ref()) {
            let r = mag.index_range(m_start, m_end);
            let (x, _) = valid_in(mag, m_start, m_end);
            if !x.is_empty() {
                let counts = r.clone().filter(|&i| hp.valid[i] && hp.values[i].abs() > cfg.activity_threshold_g).count() as u32;
                rec.activity_counts = Some(counts);
                rec.accel_std = Some(stats::std(&x));
                let thr = stats::mean(&x) + stats::std(&x);
                let sep = (cfg.step_min_sep_s * mag.rate.as_f64()).round().max(1.0) as usize;
                let seg = &mag.values[r.clone()];
                let seg_valid = &mag.valid[r];
                rec.steps = Some(if stats::is_constant(&x) { 0 } else { detect_peaks(seg, seg_valid, thr, sep).len() as u32 });
                rec.activity_class =
                    Some(if counts > cfg.moving_counts { ActivityClass::Moving } else { ActivityClass::Stationary });
            }
        }

        if let Some(t) = tonic.as_ref() {
            let (x, _) = valid_in(t, m_start, m_end);
            if !x.is_empty() {
                rec.scl_microsiemens = Some(stats::mean(&x).max(0.0));
            }
        }
        if let Some(t) = raw.get(&Channel::Temp) {
            let (x, _) = valid_in(t, m_start, m_end);
            if !x.is_empty() {
                rec.temp_c = Some(stats::mean(&x));
            }
        }
        let eda_mean = raw.get(&Channel::Eda).map(|e| valid_in(e, m_start, m_end).0).filter(|x| !x.is_empty()).map(|x| stats::mean(&x));
        if let (Some(temp), Some(eda)) = (rec.temp_c, eda_mean) {
            rec.wearing = Some((28.0..=40.0).contains(&temp) && eda > 0.03);
        }
        out.push(rec);
        m_start = m_end;
    }
    out
}

/// Median of per-chunk beat-count rates and the spread of inter-beat
/// intervals for the minute at `m_start`.
fn pulse_from_beats(bvp: &SampleSeries, beats: &[usize], m_start: Timestamp, cfg: &BiomarkerConfig) -> Option<(f64, Option<f64>)> {
    let chunk_ms = (cfg.pulse_chunk_s * 1000.0).round() as i64;
    let chunks = (60_000 / chunk_ms).max(1);
    let mut estimates = Vec::new();
    for k in 0..chunks {
        let from = m_start.add_ms(k * chunk_ms);
        let to = from.add_ms(chunk_ms);
        let r = bvp.index_range(from, to);
        if r.is_empty() {
            continue;
        }
        let valid = r.clone().filter(|&i| bvp.valid[i]).count();
        if (valid as f64) < 0.8 * r.len() as f64 {
            continue;
        }
        let n = beats.iter().filter(|&&b| r.contains(&b)).count();
        estimates.push(n as f64 * 60.0 / cfg.pulse_chunk_s);
    }
    if estimates.is_empty() {
        return None;
    }
    estimates.sort_by(f64::total_cmp);
    let median = stats::quantile_sorted(&estimates, 0.5);

    let minute = bvp.index_range(m_start, m_start.add_ms(60_000));
    let times: Vec<f64> = beats.iter().filter(|b| minute.contains(b)).map(|&b| exact_offset_ms(bvp.rate, b)).collect();
    let ibis: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let prv = (!ibis.is_empty()).then(|| stats::std(&ibis));
    Some((median, prv))
}
