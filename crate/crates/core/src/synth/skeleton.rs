use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{rng_for, streams, MotionStyle, ScenarioSpec};
use crate::ingest::{Keypoint, KeypointFrame, KEYPOINT_COUNT};
use crate::time::{Rate, Timestamp};

/// Standing skeleton in torso units, neck at the origin, y pointing down.
pub fn template_skeleton() -> [[f64; 2]; KEYPOINT_COUNT] {
    [
        [0.0, -0.45],
        [0.0, 0.0],
        [-0.35, 0.02],
        [-0.42, 0.45],
        [-0.45, 0.85],
        [0.35, 0.02],
        [0.42, 0.45],
        [0.45, 0.85],
        [-0.18, 1.0],
        [-0.2, 1.55],
        [-0.2, 2.1],
        [0.18, 1.0],
        [0.2, 1.55],
        [0.2, 2.1],
        [-0.08, -0.52],
        [0.08, -0.52],
        [-0.16, -0.48],
        [0.16, -0.48],
    ]
}

const HEAD: [usize; 5] = [0, 14, 15, 16, 17];

/// Seeded motion parameters; poses are a pure function of time given them.
#[derive(Debug, Clone)]
pub struct SkeletonAnimator {
    phase: [f64; 8],
    pace_period_s: f64,
    pace_amp_px: f64,
    gait_hz: f64,
    flail_hz: [f64; 2],
    center_px: [f64; 2],
    scale_px: f64,
}

impl SkeletonAnimator {
    pub fn new(rng: &mut impl Rng) -> Self {
        let mut phase = [0.0; 8];
        for p in &mut phase {
            *p = rng.random_range(0.0..2.0 * PI);
        }
        SkeletonAnimator {
            phase,
            pace_period_s: rng.random_range(9.0..14.0),
            pace_amp_px: rng.random_range(120.0..180.0),
            gait_hz: rng.random_range(0.8..1.0),
            flail_hz: [rng.random_range(1.3..1.8), rng.random_range(1.3..1.8)],
            center_px: [rng.random_range(280.0..360.0), rng.random_range(130.0..170.0)],
            scale_px: rng.random_range(75.0..105.0),
        }
    }

    /// Pixel skeleton at `t` seconds. `intensity` raises idle restlessness;
    /// `motion` scales the agitated styles.
    pub fn pose_at(&self, t: f64, style: MotionStyle, intensity: f64, motion: f64) -> ([[f64; 2]; KEYPOINT_COUNT], [f64; 2], f64) {
        let mut p = template_skeleton();
        let ph = &self.phase;
        let mut center = self.center_px;
        let mut scale = self.scale_px * (1.0 + 0.02 * (2.0 * PI * t / 300.0 + ph[7]).sin());

        let sway = 0.02 * (1.0 + 3.0 * intensity) * (2.0 * PI * 0.23 * t + ph[0]).sin();
        for q in p.iter_mut() {
            q[0] += sway;
        }
        let fidget = 0.05 * intensity;
        p[4][0] += fidget * (2.0 * PI * 0.7 * t + ph[1]).sin();
        p[4][1] += fidget * (2.0 * PI * 0.5 * t + ph[2]).cos();
        p[7][0] += fidget * (2.0 * PI * 0.6 * t + ph[3]).sin();

        match style {
            MotionStyle::Idle => {}
            MotionStyle::Pacing => {
                let u = (t / self.pace_period_s + ph[4] / (2.0 * PI)).fract();
                let tri = if u < 0.5 { 4.0 * u - 1.0 } else { 3.0 - 4.0 * u };
                center[0] += motion * self.pace_amp_px * tri;
                scale *= 1.0 + 0.05 * motion * tri;
                let psi = 2.0 * PI * self.gait_hz * t + ph[5];
                let (s, m) = (psi.sin(), motion);
                p[9][0] += 0.12 * m * s;
                p[10][0] += 0.25 * m * s;
                p[12][0] -= 0.12 * m * s;
                p[13][0] -= 0.25 * m * s;
                p[10][1] -= 0.08 * m * s.max(0.0);
                p[13][1] -= 0.08 * m * (-s).max(0.0);
                p[3][0] -= 0.07 * m * s;
                p[4][0] -= 0.15 * m * s;
                p[6][0] += 0.07 * m * s;
                p[7][0] += 0.15 * m * s;
                let bob = 0.02 * m * (2.0 * psi).sin();
                for q in p.iter_mut() {
                    q[1] += bob;
                }
            }
            MotionStyle::Flailing => {
                for (side, (sh, el, wr, sign)) in [(2usize, 3usize, 4usize, -1.0), (5, 6, 7, 1.0)].into_iter().enumerate() {
                    let w = 2.0 * PI * self.flail_hz[side] * t;
                    let alpha = sign * (0.25 + motion * 1.1 * (0.5 + 0.5 * (w + ph[side]).sin()));
                    let beta = alpha + sign * motion * 0.8 * (1.7 * w + ph[side + 2]).sin();
                    p[el] = [p[sh][0] + 0.43 * alpha.sin(), p[sh][1] + 0.43 * alpha.cos()];
                    p[wr] = [p[el][0] + 0.40 * beta.sin(), p[el][1] + 0.40 * beta.cos()];
                }
                let rock = 0.05 * motion * (2.0 * PI * 0.8 * t + ph[6]).sin();
                for &h in &HEAD {
                    p[h][0] += 2.0 * rock;
                }
                for q in p.iter_mut().take(8) {
                    q[0] += rock;
                }
            }
        }
        let mut px = [[0.0; 2]; KEYPOINT_COUNT];
        for (o, q) in px.iter_mut().zip(&p) {
            *o = [center[0] + scale * q[0], center[1] + scale * q[1]];
        }
        (px, center, scale)
    }
}

fn observe(px: [[f64; 2]; KEYPOINT_COUNT], scale: f64, jitter: f64, dropout: f64, rng: &mut impl Rng) -> [Keypoint; KEYPOINT_COUNT] {
    let noise = Normal::new(0.0, (jitter * scale).max(1e-12)).unwrap();
    let mut out = [Keypoint::default(); KEYPOINT_COUNT];
    for (o, q) in out.iter_mut().zip(px) {
        let x = q[0] + noise.sample(rng);
        let y = q[1] + noise.sample(rng);
        let c = if rng.random::<f64>() < dropout { 0.0 } else { rng.random_range(0.6..1.0) };
        *o = Keypoint { x, y, c };
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSpec {
    pub style: MotionStyle,
    pub intensity: f64,
    pub duration_s: f64,
    pub hz: u32,
    pub jitter: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for ClipSpec {
    fn default() -> Self {
        ClipSpec { style: MotionStyle::Idle, intensity: 0.0, duration_s: 30.0, hz: 5, jitter: 0.01, dropout: 0.05, seed: 0 }
    }
}

/// A standalone clip of one motion style starting at time zero.
pub fn pose_clip(clip: &ClipSpec, person_id: &str) -> Vec<KeypointFrame> {
    let mut rng = rng_for(clip.seed, streams::POSE);
    let anim = SkeletonAnimator::new(&mut rng);
    let rate = Rate::hz(clip.hz);
    let n = rate.samples_in((clip.duration_s * 1000.0).round() as i64);
    (0..n)
        .map(|k| {
            let t_ms = rate.offset_ms(k);
            let (px, _, scale) = anim.pose_at(t_ms as f64 / 1000.0, clip.style, clip.intensity, 1.0);
            KeypointFrame {
                t: Timestamp(t_ms),
                person_id: person_id.to_string(),
                points: observe(px, scale, clip.jitter, clip.dropout, &mut rng),
            }
        })
        .collect()
}

pub(crate) fn session_frames(spec: &ScenarioSpec) -> Vec<KeypointFrame> {
    let mut rng = rng_for(spec.seed, streams::POSE);
    let anim = SkeletonAnimator::new(&mut rng);
    let rate = Rate::hz(spec.pose.hz);
    let n = rate.samples_in((spec.duration_s * 1000.0).round() as i64);
    let t0 = spec.t0();
    (0..n)
        .map(|k| {
            let off = rate.offset_ms(k);
            let t = off as f64 / 1000.0;
            let r = spec.regime_at(t);
            let (px, _, scale) = anim.pose_at(t, r.style, r.intensity, spec.effects.motion);
            KeypointFrame {
                t: t0.add_ms(off),
                person_id: spec.pose.person_id.clone(),
                points: observe(px, scale, spec.pose.jitter, spec.pose.dropout, &mut rng),
            }
        })
        .collect()
}
