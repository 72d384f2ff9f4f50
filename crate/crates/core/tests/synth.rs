use agitrack_core::ingest::load_session;
use agitrack_core::labels::{label_windows, LabelClass};
use agitrack_core::series::Channel;
use agitrack_core::synth::{generate, self_test, Effects, Episode, MotionStyle, ScenarioSpec};

fn short_spec(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        duration_s: 1800.0,
        seed,
        episodes: vec![Episode { agitation_start_s: 900.0, agitation_len_s: 300.0, preagitation_lead_s: 360.0, style: MotionStyle::Flailing }],
        ..Default::default()
    }
}

#[test]
fn default_spec_self_test_passes() {
    let report = self_test(&ScenarioSpec::default()).unwrap();
    for c in &report.checks {
        println!("{}: {:.3} (>= {})", c.name, c.value, c.threshold);
    }
    assert!(report.passed, "{:?}", report.failures());
}

#[test]
fn zero_effects_fail_separation() {
    let spec = ScenarioSpec { effects: Effects::zero(), ..short_spec(1) };
    let report = self_test(&spec).unwrap();
    assert!(!report.passed);
    assert!(report.failures().iter().any(|c| c.name == "activity_rule_event_recall"));
}

#[test]
fn heart_rate_rises_in_agitation() {
    let s = generate(&short_spec(5)).unwrap();
    let hr = &s.session.series[&Channel::Hr];
    let mean = |from: usize, to: usize| hr.values[from..to].iter().sum::<f64>() / (to - from) as f64;
    let agit = mean(900, 1200);
    let normal = (mean(0, 500) * 500.0 + mean(1200, 1800) * 600.0) / 1100.0;
    assert!(agit - normal >= 15.0, "{agit} vs {normal}");
}

#[test]
fn same_seed_same_session() {
    let a = generate(&short_spec(11)).unwrap();
    let b = generate(&short_spec(11)).unwrap();
    assert_eq!(a, b);
    let c = generate(&short_spec(12)).unwrap();
    assert_ne!(a.session.series[&Channel::Hr], c.session.series[&Channel::Hr]);
}

#[test]
fn generated_session_loads_back() {
    let spec = short_spec(3);
    let s = generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    s.write(dir.path()).unwrap();
    let loaded = load_session(dir.path()).unwrap();
    assert_eq!(loaded.labels, s.truth);
    assert_eq!(loaded.meta, s.session.meta);
    assert_eq!(loaded.keypoints.len(), s.session.keypoints.len());
    assert_eq!(loaded.biomarkers.len(), s.session.biomarkers.len());
    for (c, series) in &s.session.series {
        let l = &loaded.series[c];
        assert_eq!(l.len(), series.len(), "{c:?}");
        assert_eq!(l.rate, series.rate);
        let worst = l.values.iter().zip(&series.values).map(|(a, b)| ((a - b) / b.abs().max(1e-6)).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{c:?}: {worst}");
    }
}

#[test]
fn truth_reproduces_schedule() {
    let spec = ScenarioSpec::default();
    let s = generate(&spec).unwrap();
    let span = (spec.t0(), spec.t0().add_secs(spec.duration_s));
    let windows = label_windows(&s.truth, 30.0, 30.0, span).unwrap();
    for w in windows {
        let r = spec.regime_at(w.window_start.secs_since(spec.t0()) + 15.0);
        assert_eq!(w.klass, r.klass);
    }
    assert_eq!(s.truth.iter().filter(|l| l.klass == LabelClass::Agitation).count(), 2);
}
