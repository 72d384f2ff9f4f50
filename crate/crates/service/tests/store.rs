mod common;

use agitrack_core::labels::{LabelClass, LabelInterval, LabelSource};
use agitrack_realtime::EventStatus;
use agitrack_service::*;
use common::*;

fn store() -> (tempfile::TempDir, Store) {
    let dir = tempfile::tempdir().unwrap();
    let s = Store::open(dir.path(), fast_store()).unwrap();
    s.register_session(session("s1", false), vec![]).unwrap();
    (dir, s)
}

#[test]
fn new_event_is_listed() {
    let (_d, s) = store();
    let before = s.read(|st| st.list_events(None, None).len());
    let (v, change) = s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    assert_eq!(change, EventChange::New);
    assert_eq!(v.event.event_id, "e1");
    assert_eq!(s.read(|st| st.list_events(None, None).len()), before + 1);
}

#[test]
fn same_event_twice_is_stored_once() {
    let (_d, s) = store();
    s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    let seq = s.read(|st| st.last_seq);
    let (_, change) = s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    assert_eq!(change, EventChange::Unchanged);
    assert_eq!(s.read(|st| st.last_seq), seq);
    assert_eq!(s.read(|st| st.events.len()), 1);
}

#[test]
fn conflicting_duplicate_leaves_store_unchanged() {
    let (_d, s) = store();
    s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    let before = s.snapshot();
    let log_before = std::fs::read(s.log_path()).unwrap();
    let err = s.record_event(event("e1", "s1", 1000, 1300)).unwrap_err();
    assert!(matches!(err, Error::Conflict(_)), "{err:?}");
    assert_eq!(s.snapshot(), before);
    assert_eq!(std::fs::read(s.log_path()).unwrap(), log_before);
}

#[test]
fn open_event_updates_until_closed() {
    let (_d, s) = store();
    s.record_event(open_event("e1", "s1", 1000)).unwrap();
    let (_, c) = s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    assert_eq!(c, EventChange::Update);
    let v = s.read(|st| st.view("e1")).unwrap();
    assert_eq!(v.event.status, EventStatus::Closed);
    assert!(v.updated_seq > v.cursor);
    // a different onset is another event, not an update
    s.record_event(open_event("e2", "s1", 3000)).unwrap();
    assert!(matches!(s.record_event(event("e2", "s1", 3010, 3200)), Err(Error::Conflict(_))));
}

#[test]
fn events_need_a_known_session_and_sane_bounds() {
    let (_d, s) = store();
    assert!(matches!(s.record_event(event("e1", "nope", 1000, 1200)), Err(Error::Validation(_))));
    let mut bad = event("e2", "s1", 1000, 1200);
    bad.offset = Some(common::secs(900));
    assert!(matches!(s.record_event(bad), Err(Error::Validation(_))));
}

#[test]
fn confirm_with_adjusted_bounds_adds_one_agitation_interval() {
    let (_d, s) = store();
    s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    let v = s.submit_review(review("e1", Decision::Confirm, Some(950), Some(1180))).unwrap();
    assert_eq!(v.event.status, EventStatus::Confirmed);
    let labels = s.read(|st| st.effective_labels("s1"));
    let agit: Vec<_> = labels.iter().filter(|l| l.klass == LabelClass::Agitation).collect();
    assert_eq!(agit.len(), 1);
    assert_eq!((agit[0].start, agit[0].end), (secs(950), secs(1180)));
    assert_eq!(agit[0].source, LabelSource::VideoReview);
}

#[test]
fn confirm_without_adjustment_uses_event_bounds() {
    let (_d, s) = store();
    s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    s.submit_review(review("e1", Decision::Confirm, None, Some(1150))).unwrap();
    let l = s.read(|st| st.effective_labels("s1"));
    assert_eq!((l[0].start, l[0].end), (secs(1000), secs(1150)));
}

#[test]
fn reject_adds_no_agitation_interval() {
    let (_d, s) = store();
    s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    let v = s.submit_review(review("e1", Decision::Reject, None, None)).unwrap();
    assert_eq!(v.event.status, EventStatus::Rejected);
    let labels = s.read(|st| st.effective_labels("s1"));
    assert!(labels.iter().all(|l| l.klass != LabelClass::Agitation));
    assert_eq!(labels, vec![LabelInterval::new(secs(1000), secs(1200), LabelClass::Normal, LabelSource::VideoReview).unwrap()]);
}

#[test]
fn later_decision_supersedes() {
    let (_d, s) = store();
    s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    s.submit_review(review("e1", Decision::Reject, None, None)).unwrap();
    let v = s.submit_review(review("e1", Decision::Confirm, Some(1010), None)).unwrap();
    assert_eq!(v.reviews.len(), 2);
    assert_eq!(v.event.status, EventStatus::Confirmed);
    let labels = s.read(|st| st.effective_labels("s1"));
    assert_eq!(labels.len(), 1);
    assert_eq!(labels[0].klass, LabelClass::Agitation);
    assert_eq!(labels[0].start, secs(1010));
    // the engine resending its copy is still idempotent after review
    let (_, c) = s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    assert_eq!(c, EventChange::Unchanged);
}

#[test]
fn review_errors() {
    let (_d, s) = store();
    assert!(matches!(s.submit_review(review("zz", Decision::Confirm, None, None)), Err(Error::NotFound(_))));
    s.record_event(open_event("e1", "s1", 1000)).unwrap();
    assert!(matches!(s.submit_review(review("e1", Decision::Confirm, None, None)), Err(Error::InvalidState(_))));
    s.record_event(event("e2", "s1", 1000, 1200)).unwrap();
    let before = s.snapshot();
    for (a, b) in [(Some(1100), Some(1100)), (Some(1150), Some(1050)), (Some(600), None), (None, Some(1600))] {
        let err = s.submit_review(review("e2", Decision::Confirm, a, b)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{a:?} {b:?} {err:?}");
    }
    let mut r = review("e2", Decision::Confirm, None, None);
    r.reviewer = " ".into();
    assert!(matches!(s.submit_review(r), Err(Error::Validation(_))));
    assert_eq!(s.snapshot(), before);
}

#[test]
fn listing_filters_by_status_and_cursor() {
    let (_d, s) = store();
    s.record_event(event("e1", "s1", 1000, 1200)).unwrap();
    let cursor = s.read(|st| st.last_seq);
    s.record_event(event("e2", "s1", 2000, 2200)).unwrap();
    s.record_event(open_event("e3", "s1", 3000)).unwrap();
    let ids = |v: Vec<EventView>| v.into_iter().map(|v| v.event.event_id).collect::<Vec<_>>();
    assert_eq!(ids(s.read(|st| st.list_events(None, Some(cursor)))), vec!["e2", "e3"]);
    assert_eq!(ids(s.read(|st| st.list_events(Some(EventStatus::Open), None))), vec!["e3"]);
    s.submit_review(review("e1", Decision::Confirm, None, None)).unwrap();
    // a review moves the event past the cursor again
    assert_eq!(ids(s.read(|st| st.list_events(None, Some(cursor)))), vec!["e1", "e2", "e3"]);
    assert_eq!(ids(s.read(|st| st.list_events(Some(EventStatus::Confirmed), None))), vec!["e1"]);
}

#[test]
fn sessions_register_idempotently() {
    let (_d, s) = store();
    assert!(!s.register_session(session("s1", false), vec![]).unwrap());
    let l = LabelInterval::secs(10.0, 20.0, LabelClass::Agitation, LabelSource::NurseNote);
    assert!(matches!(s.register_session(session("s1", false), vec![l]), Err(Error::Conflict(_))));
    assert!(s.register_session(session("s2", true), vec![l]).unwrap());
}

#[test]
fn restart_rebuilds_state_and_drops_torn_tail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = StoreConfig { durable: true, snapshot_every: 3 };
    let before = {
        let s = Store::open(dir.path(), cfg).unwrap();
        s.register_session(session("s1", false), vec![]).unwrap();
        for i in 0..7 {
            s.record_event(event(&format!("e{i}"), "s1", 1000 * i + 100, 1000 * i + 400)).unwrap();
        }
        s.submit_review(review("e3", Decision::Confirm, None, None)).unwrap();
        s.snapshot()
    };
    assert!(dir.path().join(SNAPSHOT_FILE).exists());
    // a crash in the middle of a write leaves half a line
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new().append(true).open(dir.path().join(LOG_FILE)).unwrap();
    f.write_all(b"{\"seq\":10,\"op\":\"event_rec").unwrap();
    drop(f);
    let s = Store::open(dir.path(), cfg).unwrap();
    assert_eq!(s.snapshot(), before);
    // the log was repaired and keeps growing normally
    s.record_event(event("e9", "s1", 9000, 9100)).unwrap();
    let entries = agitrack_service::log::read_log(&s.log_path()).unwrap();
    assert_eq!(State::fold(&entries).unwrap(), s.snapshot());
    // stale or broken snapshot never wins over the log
    std::fs::write(dir.path().join(SNAPSHOT_FILE), "garbage").unwrap();
    drop(s);
    let s = Store::open(dir.path(), cfg).unwrap();
    assert_eq!(State::fold(&entries).unwrap(), s.snapshot());
}

#[test]
fn corrupt_middle_line_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    {
        let s = Store::open(dir.path(), fast_store()).unwrap();
        s.register_session(session("s1", false), vec![]).unwrap();
        s.record_event(event("e1", "s1", 100, 200)).unwrap();
    }
    let p = dir.path().join(LOG_FILE);
    let text = std::fs::read_to_string(&p).unwrap();
    std::fs::write(&p, format!("not json\n{text}")).unwrap();
    assert!(matches!(Store::open(dir.path(), fast_store()), Err(Error::Corrupt { line: 1, .. })));
}
