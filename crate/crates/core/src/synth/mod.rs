//! Deterministic synthetic sessions with known normal, pre-agitation and
//! agitation regimes.
//!
//! Pre-agitation is modeled as an offset linear ramp of regime intensity,
//! from [`PREA_RAMP_START`] at the start of the lead window to
//! [`PREA_RAMP_END`] just before onset; agitation runs at intensity 1.
//! The ramp shape is a modeling choice, not a measured morphology.

mod clips;
mod selftest;
mod skeleton;
mod wrist;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{write_session, Session, SessionMeta};
use crate::labels::{LabelClass, LabelInterval, LabelSource};
use crate::time::Timestamp;
use crate::wrist::derive_biomarkers;

pub use clips::{clip_dataset, clip_sequences, ClipSetSpec};
pub use selftest::{self_test, self_test_session, Check, SelfTestReport, ACTIVITY_RULE_THRESHOLD};
pub use skeleton::{pose_clip, template_skeleton, ClipSpec, SkeletonAnimator};

pub const PREA_RAMP_START: f64 = 0.15;
pub const PREA_RAMP_END: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionStyle {
    #[default]
    Idle,
    Pacing,
    Flailing,
}

impl MotionStyle {
    pub fn name(self) -> &'static str {
        match self {
            MotionStyle::Idle => "idle",
            MotionStyle::Pacing => "pacing",
            MotionStyle::Flailing => "flailing",
        }
    }
}

fn default_lead() -> f64 {
    360.0
}

fn default_agitated_style() -> MotionStyle {
    MotionStyle::Pacing
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub agitation_start_s: f64,
    pub agitation_len_s: f64,
    #[serde(default = "default_lead")]
    pub preagitation_lead_s: f64,
    #[serde(default = "default_agitated_style")]
    pub style: MotionStyle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Baselines {
    pub hr_bpm: f64,
    /// Amplitude of the slow heart-rate drift.
    pub hr_drift_bpm: f64,
    pub temp_c: f64,
    pub eda_us: f64,
    pub eda_wander_us: f64,
    /// Movement bursts per minute at rest.
    pub bursts_per_min: f64,
}

impl Default for Baselines {
    fn default() -> Self {
        Baselines { hr_bpm: 68.0, hr_drift_bpm: 4.0, temp_c: 33.5, eda_us: 2.0, eda_wander_us: 0.15, bursts_per_min: 0.5 }
    }
}

/// Changes at full intensity relative to baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Effects {
    pub hr_bpm: f64,
    pub eda_us: f64,
    pub temp_c: f64,
    pub bursts_per_min: f64,
    /// Scales the style-specific limb and body motion.
    pub motion: f64,
}

impl Default for Effects {
    fn default() -> Self {
        Effects { hr_bpm: 32.0, eda_us: 1.5, temp_c: 0.3, bursts_per_min: 25.0, motion: 1.0 }
    }
}

impl Effects {
    pub fn zero() -> Self {
        Effects { hr_bpm: 0.0, eda_us: 0.0, temp_c: 0.0, bursts_per_min: 0.0, motion: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseSynth {
    pub hz: u32,
    /// Per-point Gaussian jitter in torso lengths.
    pub jitter: f64,
    pub dropout: f64,
    pub person_id: String,
}

impl Default for PoseSynth {
    fn default() -> Self {
        PoseSynth { hz: 5, jitter: 0.01, dropout: 0.05, person_id: "p1".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub session_id: String,
    pub participant_id: String,
    pub t0_ms: i64,
    pub duration_s: f64,
    pub seed: u64,
    pub episodes: Vec<Episode>,
    pub baselines: Baselines,
    pub effects: Effects,
    pub pose: PoseSynth,
    pub wrist: bool,
    pub video: bool,
}

impl Default for ScenarioSpec {
    /// Two hours with a short pacing episode and a long flailing one. Onsets
    /// sit half a minute past a minute boundary.
    fn default() -> Self {
        ScenarioSpec {
            session_id: "synth".into(),
            participant_id: "synth-1".into(),
            t0_ms: 0,
            duration_s: 7200.0,
            seed: 42,
            episodes: vec![
                Episode { agitation_start_s: 1830.0, agitation_len_s: 120.0, preagitation_lead_s: 360.0, style: MotionStyle::Pacing },
                Episode { agitation_start_s: 4830.0, agitation_len_s: 600.0, preagitation_lead_s: 360.0, style: MotionStyle::Flailing },
            ],
            baselines: Baselines::default(),
            effects: Effects::default(),
            pose: PoseSynth::default(),
            wrist: true,
            video: true,
        }
    }
}

/// Regime at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeState {
    pub klass: LabelClass,
    /// 0 in normal, ramping in pre-agitation, 1 in agitation.
    pub intensity: f64,
    pub style: MotionStyle,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| Error::validation(format!("scenario spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario spec serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::validation("duration_s must be positive"));
        }
        if self.t0_ms < 0 {
            return Err(Error::validation("t0_ms must be non-negative"));
        }
        if self.pose.hz == 0 {
            return Err(Error::validation("pose hz must be positive"));
        }
        if !(0.0..1.0).contains(&self.pose.dropout) || self.pose.jitter < 0.0 {
            return Err(Error::validation("pose dropout must be in [0,1) and jitter non-negative"));
        }
        let mut spans: Vec<(f64, f64)> = Vec::new();
        for (i, e) in self.episodes.iter().enumerate() {
            if e.preagitation_lead_s < 0.0 {
                return Err(Error::validation(format!("episode {i}: negative lead")));
            }
            if !(e.agitation_len_s > 0.0) {
                return Err(Error::validation(format!("episode {i}: agitation_len_s must be positive")));
            }
            let from = e.agitation_start_s - e.preagitation_lead_s;
            let to = e.agitation_start_s + e.agitation_len_s;
            if from < 0.0 || to > self.duration_s {
                return Err(Error::validation(format!("episode {i}: [{from}, {to}) s outside the session")));
            }
            spans.push((from, to));
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        if spans.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::validation("episodes overlap (leads included)"));
        }
        Ok(())
    }

    pub fn t0(&self) -> Timestamp {
        Timestamp(self.t0_ms)
    }

    /// Ground-truth intervals implied by the episode list.
    pub fn truth(&self) -> Vec<LabelInterval> {
        let t0 = self.t0();
        let mut out = Vec::new();
        for e in &self.episodes {
            if e.preagitation_lead_s > 0.0 {
                out.push(LabelInterval {
                    start: t0.add_secs(e.agitation_start_s - e.preagitation_lead_s),
                    end: t0.add_secs(e.agitation_start_s),
                    klass: LabelClass::PreAgitation,
                    source: LabelSource::SynthTruth,
                });
            }
            out.push(LabelInterval {
                start: t0.add_secs(e.agitation_start_s),
                end: t0.add_secs(e.agitation_start_s + e.agitation_len_s),
                klass: LabelClass::Agitation,
                source: LabelSource::SynthTruth,
            });
        }
        out.sort_by_key(|l| l.start);
        out
    }

    /// Regime at `t_s` seconds after session start.
    pub fn regime_at(&self, t_s: f64) -> RegimeState {
        for e in &self.episodes {
            let start = e.agitation_start_s;
            if t_s >= start && t_s < start + e.agitation_len_s {
                return RegimeState { klass: LabelClass::Agitation, intensity: 1.0, style: e.style };
            }
            let lead = e.preagitation_lead_s;
            if lead > 0.0 && t_s >= start - lead && t_s < start {
                let frac = (t_s - (start - lead)) / lead;
                return RegimeState {
                    klass: LabelClass::PreAgitation,
                    intensity: PREA_RAMP_START + (PREA_RAMP_END - PREA_RAMP_START) * frac,
                    style: MotionStyle::Idle,
                };
            }
        }
        RegimeState { klass: LabelClass::Normal, intensity: 0.0, style: MotionStyle::Idle }
    }
}

/// A generated session plus its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSession {
    pub session: Session,
    pub truth: Vec<LabelInterval>,
}

impl SynthSession {
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_session(&self.session, dir)
    }
}

/// Sub-stream ids so each signal draws from its own generator.
pub(crate) mod streams {
    pub const HR: u64 = 1;
    pub const BVP: u64 = 2;
    pub const EDA: u64 = 3;
    pub const TEMP: u64 = 4;
    pub const ACC: u64 = 5;
    pub const POSE: u64 = 6;
    pub const DRIFT: u64 = 7;
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn generate(spec: &ScenarioSpec) -> Result<SynthSession> {
    spec.validate()?;
    let truth = spec.truth();
    let mut series = BTreeMap::new();
    let mut biomarkers = Vec::new();
    if spec.wrist {
        for s in wrist::generate_channels(spec) {
            series.insert(s.channel, s);
        }
        biomarkers = derive_biomarkers(&series);
    }
    let keypoints = if spec.video { skeleton::session_frames(spec) } else { Vec::new() };
    let meta = SessionMeta {
        session_id: spec.session_id.clone(),
        participant_id: spec.participant_id.clone(),
        t0: spec.t0(),
        duration_s: spec.duration_s,
        clock_offsets_ms: BTreeMap::new(),
    };
    let session = Session { meta, series, biomarkers, keypoints, labels: truth.clone() };
    Ok(SynthSession { session, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::label_windows;

    #[test]
    fn truth_from_episode() {
        let spec = ScenarioSpec {
            duration_s: 1200.0,
            episodes: vec![Episode { agitation_start_s: 600.0, agitation_len_s: 180.0, preagitation_lead_s: 360.0, style: MotionStyle::Pacing }],
            ..Default::default()
        };
        let t = spec.truth();
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].start, t[0].end, t[0].klass), (Timestamp(240_000), Timestamp(600_000), LabelClass::PreAgitation));
        assert_eq!((t[1].start, t[1].end, t[1].klass), (Timestamp(600_000), Timestamp(780_000), LabelClass::Agitation));
    }

    #[test]
    fn overlapping_episodes_rejected() {
        let mut spec = ScenarioSpec::default();
        spec.episodes[1].agitation_start_s = 1900.0;
        assert!(spec.validate().unwrap_err().is_validation());
    }

    #[test]
    fn regime_schedule_matches_window_labels() {
        let spec = ScenarioSpec::default();
        let span = (spec.t0(), spec.t0().add_secs(spec.duration_s));
        for w in label_windows(&spec.truth(), 10.0, 10.0, span).unwrap() {
            let mid = w.window_start.secs_since(spec.t0()) + 5.0;
            let r = spec.regime_at(mid);
            // 10-s windows never straddle a boundary in the default schedule.
            assert_eq!(w.klass, r.klass, "at {mid}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let spec = ScenarioSpec::default();
        assert_eq!(ScenarioSpec::from_toml(&spec.to_toml()).unwrap(), spec);
        let partial = ScenarioSpec::from_toml("duration_s = 900.0\nseed = 3\n[[episodes]]\nagitation_start_s = 500.0\nagitation_len_s = 60.0\n").unwrap();
        assert_eq!(partial.episodes[0].preagitation_lead_s, 360.0);
        assert_eq!(partial.baselines, Baselines::default());
    }

    #[test]
    fn ramp_is_monotone() {
        let spec = ScenarioSpec::default();
        let e = spec.episodes[0];
        let mut last = -1.0;
        let mut t = e.agitation_start_s - e.preagitation_lead_s;
        while t < e.agitation_start_s {
            let r = spec.regime_at(t);
            assert_eq!(r.klass, LabelClass::PreAgitation);
            assert!(r.intensity > last);
            last = r.intensity;
            t += 7.0;
        }
    }
}
