//! Random operation sequences with restarts: store state must always be the
//! fold of its log, and failed operations must leave no trace.

mod common;

use agitrack_core::labels::{LabelClass, LabelInterval, LabelSource};
use agitrack_realtime::{Modality, ScorePoint};
use agitrack_service::log::read_log;
use agitrack_service::*;
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Run {
    dir: tempfile::TempDir,
    cfg: StoreConfig,
    store: Option<Store>,
    ids: Vec<String>,
    restarts: usize,
    ok: usize,
    failed: usize,
}

impl Run {
    fn store(&self) -> &Store {
        self.store.as_ref().unwrap()
    }

    fn restart(&mut self) {
        let before = self.store().snapshot();
        self.store = None;
        let s = Store::open(self.dir.path(), self.cfg).unwrap();
        assert_eq!(s.snapshot(), before, "state changed across restart");
        self.store = Some(s);
        self.restarts += 1;
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, v: &'a [String]) -> Option<&'a String> {
    (!v.is_empty()).then(|| &v[rng.random_range(0..v.len())])
}

fn step(run: &mut Run, rng: &mut ChaCha8Rng) {
    let sessions = ["s0", "s1", "s2"];
    let sess = sessions[rng.random_range(0..3)];
    let s = run.store();
    let op = rng.random_range(0..100);
    let res: Result<()> = match op {
        0..=4 => {
            let labeled = rng.random_bool(0.5);
            let labels = if rng.random_bool(0.3) {
                vec![LabelInterval::secs(100.0, 200.0, LabelClass::Agitation, LabelSource::NurseNote)]
            } else {
                vec![]
            };
            s.register_session(session(sess, labeled), labels).map(|_| ())
        }
        5..=29 => {
            let onset = rng.random_range(0..7000);
            let id = format!("ev{}", rng.random_range(0..400));
            let ev = if rng.random_bool(0.3) {
                open_event(&id, sess, onset)
            } else {
                event(&id, sess, onset, onset + rng.random_range(1..600))
            };
            let r = s.record_event(ev).map(|_| ());
            if r.is_ok() && !run.ids.contains(&id) {
                run.ids.push(id);
            }
            r
        }
        30..=44 => match pick(rng, &run.ids).cloned() {
            // resend or close a known event, sometimes with changed content
            Some(id) => {
                let cur = s.read(|st| st.events.get(&id).map(|e| e.event.clone())).unwrap();
                let mut ev = cur.clone();
                match rng.random_range(0..3) {
                    0 => {}
                    1 => {
                        let off = cur.onset.add_ms(rng.random_range(1_000..300_000));
                        ev.offset = Some(off);
                        ev.record_end = off.add_ms(300_000);
                        ev.status = agitrack_realtime::EventStatus::Closed;
                    }
                    _ => ev.peak_score = rng.random_range(0.5..1.0),
                }
                s.record_event(ev).map(|_| ())
            }
            None => Ok(()),
        },
        45..=64 => match pick(rng, &run.ids).cloned() {
            Some(id) => {
                let ev = s.read(|st| st.events[&id].event.clone());
                let d = if rng.random_bool(0.6) { Decision::Confirm } else { Decision::Reject };
                let base = ev.onset.millis() / 1000;
                let a = rng.random_bool(0.5).then(|| base + rng.random_range(-400..200));
                let b = rng.random_bool(0.5).then(|| base + rng.random_range(-100..900));
                s.submit_review(review(&id, d, a, b)).map(|_| ())
            }
            None => s.submit_review(review("missing", Decision::Confirm, None, None)).map(|_| ()),
        },
        65..=74 => {
            let n = rng.random_range(0..20);
            let t0 = rng.random_range(0..7000);
            let pts = (0..n)
                .map(|k| ScorePoint {
                    t: secs(t0 + k),
                    score: rng.random_range(0.0..1.2),
                    modality: if rng.random_bool(0.5) { Modality::Wrist } else { Modality::Video },
                })
                .collect();
            s.append_scores(sess, pts)
        }
        75..=84 => {
            let kind = if rng.random_bool(0.5) { ModelKind::Forest } else { ModelKind::Recurrent };
            s.queue_job(kind).map(|_| ())
        }
        85..=94 => {
            let jobs: Vec<String> = s.read(|st| st.jobs.keys().cloned().collect());
            match pick(rng, &jobs).cloned() {
                Some(id) => match rng.random_range(0..3) {
                    0 => s.start_job(&id),
                    1 => {
                        let kind = s.read(|st| st.jobs[&id].kind);
                        let version = s.read(|st| st.next_version(kind));
                        let m = ModelVersion {
                            kind,
                            version,
                            file: format!("{kind}-v{version}.json"),
                            auc: Some(rng.random_range(0.5..1.0)),
                            accuracy: None,
                            n_train: 1,
                            n_test: 1,
                            job_id: Some(id.clone()),
                        };
                        s.register_model(m, rng.random_bool(0.5))
                    }
                    _ => {
                        let st = if rng.random_bool(0.7) { JobStatus::Done } else { JobStatus::Failed };
                        s.finish_job(&id, JobOutcome { status: st, ..JobOutcome::failed("x") }).map(|_| ())
                    }
                },
                None => Ok(()),
            }
        }
        _ => {
            run.restart();
            return;
        }
    };
    match res {
        Ok(()) => run.ok += 1,
        Err(_) => run.failed += 1,
    }
}

/// Runs `n` random operations, checking after each failure that nothing
/// changed and after each step that the log on disk only grew.
fn run_ops(seed: u64, n: usize, cfg: StoreConfig) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), cfg).unwrap();
    let mut run = Run { dir, cfg, store: Some(store), ids: vec![], restarts: 0, ok: 0, failed: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_bytes = Vec::new();
    for _ in 0..n {
        let before = run.store().snapshot();
        let failed = run.failed;
        step(&mut run, &mut rng);
        if run.failed > failed {
            assert_eq!(run.store().snapshot(), before, "failed op changed state");
        }
        let now = std::fs::read(run.store().log_path()).unwrap();
        assert!(now.starts_with(&log_bytes), "log rewritten");
        log_bytes = now;
    }
    let entries = read_log(&run.store().log_path()).unwrap();
    assert_eq!(State::fold(&entries).unwrap(), run.store().snapshot(), "live state differs from fold");
    run
}

#[test]
fn thousand_ops_with_restarts_rebuild_identically() {
    let run = run_ops(7, 1500, StoreConfig { durable: false, snapshot_every: 41 });
    assert!(run.restarts >= 5, "{} restarts", run.restarts);
    assert!(run.ok > 300 && run.failed > 50, "ok {} failed {}", run.ok, run.failed);
    let st = run.store().snapshot();
    assert_eq!(st.events.len(), run.ids.len());
    assert!(!st.reviews.is_empty() && !st.jobs.is_empty());
    // at most one active job per kind
    for kind in [ModelKind::Forest, ModelKind::Recurrent] {
        assert!(st.jobs.values().filter(|j| j.kind == kind && j.status.is_active()).count() <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_sequences_rebuild_identically(seed in 0u64..1_000_000, snap in 0u64..60) {
        let run = run_ops(seed, 300, StoreConfig { durable: false, snapshot_every: snap });
        let reopened = Store::open(run.dir.path(), run.cfg).unwrap();
        prop_assert_eq!(reopened.snapshot(), run.store().snapshot());
    }
}
