use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{rng_for, streams, Effects, MotionStyle, ScenarioSpec};
use crate::series::{acc_magnitude, Channel, SampleSeries};
use crate::time::Rate;

/// Samples in a movement burst and its amplitude range (g).
const BURST_SAMPLES: usize = 4;
const BURST_G: (f64, f64) = (0.15, 0.4);

/// Slow drift built from a few long sinusoids with seeded phases.
struct Drift {
    terms: Vec<(f64, f64, f64)>,
}

impl Drift {
    fn new(seed: u64, salt: u64, amplitude: f64) -> Self {
        let mut rng = rng_for(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15), streams::DRIFT);
        let terms = (0..3)
            .map(|_| {
                let period = rng.random_range(900.0..2700.0);
                (amplitude / 3f64.sqrt() * rng.random_range(0.6..1.0), 2.0 * PI / period, rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        Drift { terms }
    }

    fn at(&self, t: f64) -> f64 {
        self.terms.iter().map(|(a, w, p)| a * (w * t + p).sin()).sum()
    }
}

fn hr_true(spec: &ScenarioSpec, drift: &Drift, t: f64) -> f64 {
    let r = spec.regime_at(t);
    spec.baselines.hr_bpm + drift.at(t) + spec.effects.hr_bpm * r.intensity
}

pub(crate) fn generate_channels(spec: &ScenarioSpec) -> Vec<SampleSeries> {
    let t0 = spec.t0();
    let dur = spec.duration_s;
    let hr_drift = Drift::new(spec.seed, 1, spec.baselines.hr_drift_bpm);
    let mut out = Vec::new();

    // Heart rate at 1 Hz.
    let mut rng = rng_for(spec.seed, streams::HR);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let n = (dur as usize).max(1);
    let hr: Vec<f64> = (0..n).map(|i| (hr_true(spec, &hr_drift, i as f64) + noise.sample(&mut rng)).max(30.0)).collect();
    out.push(SampleSeries::dense(Channel::Hr, Rate::hz(1), t0, hr));

    // Pulse waveform at 64 Hz with phase following the heart rate.
    let mut rng = rng_for(spec.seed, streams::BVP);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let n = (dur * 64.0) as usize;
    let mut phase = rng.random_range(0.0..2.0 * PI);
    let mut bvp = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / 64.0;
        bvp.push(phase.sin() + noise.sample(&mut rng));
        phase += 2.0 * PI * hr_true(spec, &hr_drift, t) / 60.0 / 64.0;
    }
    out.push(SampleSeries::dense(Channel::Bvp, Rate::hz(64), t0, bvp));

    // Skin conductance at 4 Hz: tonic level plus skin conductance responses.
    let mut rng = rng_for(spec.seed, streams::EDA);
    let eda_drift = Drift::new(spec.seed, 2, spec.baselines.eda_wander_us);
    let noise = Normal::new(0.0, 0.003).unwrap();
    let n = (dur * 4.0) as usize;
    let mut eda: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / 4.0;
            let r = spec.regime_at(t);
            spec.baselines.eda_us + eda_drift.at(t) + spec.effects.eda_us * r.intensity + noise.sample(&mut rng)
        })
        .collect();
    let kernel: Vec<f64> = (0..60)
        .map(|k| {
            let t = k as f64 / 4.0;
            (-t / 4.0).exp() - (-t / 0.75).exp()
        })
        .collect();
    let kmax = kernel.iter().cloned().fold(0.0, f64::max);
    // Response rate and size grow with intensity in proportion to the tonic effect.
    let k = spec.effects.eda_us / Effects::default().eda_us;
    for i in 0..n {
        let r = spec.regime_at(i as f64 / 4.0);
        let rate_per_s = (1.0 + 6.0 * k * r.intensity) / 60.0;
        if rng.random::<f64>() < rate_per_s / 4.0 {
            let amp = rng.random_range(0.05..0.25) * (1.0 + k * r.intensity);
            for (k, kv) in kernel.iter().enumerate() {
                if i + k < n {
                    eda[i + k] += amp * kv / kmax;
                }
            }
        }
    }
    for v in &mut eda {
        *v = v.max(0.05);
    }
    out.push(SampleSeries::dense(Channel::Eda, Rate::hz(4), t0, eda));

    // Skin temperature at 1 Hz.
    let mut rng = rng_for(spec.seed, streams::TEMP);
    let temp_drift = Drift::new(spec.seed, 3, 0.2);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let n = dur as usize;
    let temp = (0..n)
        .map(|i| {
            let t = i as f64;
            spec.baselines.temp_c + temp_drift.at(t) + spec.effects.temp_c * spec.regime_at(t).intensity + noise.sample(&mut rng)
        })
        .collect();
    out.push(SampleSeries::dense(Channel::Temp, Rate::hz(1), t0, temp));

    out.extend(accelerometer(spec));
    out
}

/// Three axes plus magnitude at 32 Hz. Gravity follows a slowly changing
/// wrist orientation; movement bursts act along gravity, and agitated
/// styles add a periodic component.
fn accelerometer(spec: &ScenarioSpec) -> Vec<SampleSeries> {
    let t0 = spec.t0();
    let mut rng = rng_for(spec.seed, streams::ACC);
    let tilt = Drift::new(spec.seed, 4, 0.6);
    let turn = Drift::new(spec.seed, 5, 2.0);
    let noise = Normal::new(0.0, 0.005).unwrap();
    let n = (spec.duration_s * 32.0) as usize;
    let (mut xs, mut ys, mut zs) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut burst_left = 0usize;
    let mut burst_amp = 0.0;
    for i in 0..n {
        let t = i as f64 / 32.0;
        let r = spec.regime_at(t);
        let theta = 0.5 + tilt.at(t);
        let phi = turn.at(t);
        let g = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];

        let rate_per_min = spec.baselines.bursts_per_min + spec.effects.bursts_per_min * r.intensity;
        if burst_left == 0 && rng.random::<f64>() < rate_per_min / 60.0 / 32.0 {
            burst_left = BURST_SAMPLES;
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            burst_amp = sign * rng.random_range(BURST_G.0..BURST_G.1);
        }
        let mut along = 0.0;
        if burst_left > 0 {
            along += burst_amp;
            burst_left -= 1;
        }
        let m = spec.effects.motion;
        along += match r.style {
            MotionStyle::Idle => 0.0,
            MotionStyle::Pacing => m * 0.03 * (2.0 * PI * 1.8 * t).sin(),
            MotionStyle::Flailing => m * (0.035 * (2.0 * PI * 1.3 * t).sin() + 0.015 * (2.0 * PI * 3.1 * t).sin()),
        };
        let scale = 1.0 + along;
        xs.push(g[0] * scale + noise.sample(&mut rng));
        ys.push(g[1] * scale + noise.sample(&mut rng));
        zs.push(g[2] * scale + noise.sample(&mut rng));
    }
    let rate = Rate::hz(32);
    let x = SampleSeries::dense(Channel::AccX, rate, t0, xs);
    let y = SampleSeries::dense(Channel::AccY, rate, t0, ys);
    let z = SampleSeries::dense(Channel::AccZ, rate, t0, zs);
    let mag = acc_magnitude(&x, &y, &z).expect("axes share one grid");
    vec![x, y, z, mag]
}
