use serde::{Deserialize, Serialize};

use super::{generate, ScenarioSpec, SynthSession};
use crate::error::Result;
use crate::ingest::BiomarkerRecord;
use crate::labels::{classify_window, LabelClass};
use crate::wrist::stats;

/// Minutes with more activity counts than this are flagged by the
/// separation rule.
pub const ACTIVITY_RULE_THRESHOLD: u32 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl SelfTestReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn check(name: &str, value: f64, threshold: f64) -> Check {
    Check { name: name.to_string(), value, threshold, passed: value.is_finite() && value >= threshold || value == f64::INFINITY }
}

/// Agitation-minus-normal difference in units of the normal-regime spread.
fn effect_size(agit: &[f64], normal: &[f64]) -> f64 {
    if agit.is_empty() || normal.is_empty() {
        return 0.0;
    }
    let diff = stats::mean(agit) - stats::mean(normal);
    let sd = stats::std(normal);
    if sd > 0.0 {
        diff / sd
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Generates `spec` and checks that its biomarkers separate the regimes.
pub fn self_test(spec: &ScenarioSpec) -> Result<SelfTestReport> {
    Ok(self_test_session(&generate(spec)?))
}

pub fn self_test_session(synth: &SynthSession) -> SelfTestReport {
    let truth = &synth.truth;
    let recs = &synth.session.biomarkers;
    let klass = |r: &BiomarkerRecord| classify_window(truth, r.t, r.t.add_ms(60_000));
    let pick = |k: LabelClass, f: &dyn Fn(&BiomarkerRecord) -> Option<f64>| -> Vec<f64> {
        recs.iter().filter(|r| klass(r) == k).filter_map(f).collect()
    };
    let hr = |r: &BiomarkerRecord| r.pulse_rate_bpm;
    let counts = |r: &BiomarkerRecord| r.activity_counts.map(f64::from);
    let scl = |r: &BiomarkerRecord| r.scl_microsiemens;

    let (hr_a, hr_n) = (pick(LabelClass::Agitation, &hr), pick(LabelClass::Normal, &hr));
    let hr_diff = if hr_a.is_empty() || hr_n.is_empty() { 0.0 } else { stats::mean(&hr_a) - stats::mean(&hr_n) };

    let episodes: Vec<_> = truth.iter().filter(|l| l.klass == LabelClass::Agitation).collect();
    let hits = episodes
        .iter()
        .filter(|e| {
            recs.iter().any(|r| {
                r.t < e.end && r.t.add_ms(60_000) > e.start && r.activity_counts.is_some_and(|c| c > ACTIVITY_RULE_THRESHOLD)
            })
        })
        .count();
    let recall = if episodes.is_empty() { 0.0 } else { hits as f64 / episodes.len() as f64 };

    let checks = vec![
        check("hr_agitation_minus_normal_bpm", hr_diff, 15.0),
        check("hr_effect_size", effect_size(&hr_a, &hr_n), 1.0),
        check("activity_counts_effect_size", effect_size(&pick(LabelClass::Agitation, &counts), &pick(LabelClass::Normal, &counts)), 1.0),
        check("eda_tonic_effect_size", effect_size(&pick(LabelClass::Agitation, &scl), &pick(LabelClass::Normal, &scl)), 1.0),
        check("activity_rule_event_recall", recall, 0.9),
    ];
    let passed = checks.iter().all(|c| c.passed);
    SelfTestReport { checks, passed }
}
