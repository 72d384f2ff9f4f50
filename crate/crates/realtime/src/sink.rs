use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::Result;
use crate::event::{Alert, Transition};

/// Receives engine output as it happens.
pub trait EngineSink {
    fn on_transition(&mut self, _t: &Transition) {}
    fn on_alert(&mut self, _a: &Alert) {}
}

/// Calls a closure for every alert.
pub struct CallbackSink<F: FnMut(&Alert)>(pub F);

impl<F: FnMut(&Alert)> EngineSink for CallbackSink<F> {
    fn on_alert(&mut self, a: &Alert) {
        (self.0)(a)
    }
}

/// Shared in-memory collector, handy for tests and forwarding.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    pub transitions: Arc<Mutex<Vec<Transition>>>,
    pub alerts: Arc<Mutex<Vec<Alert>>>,
}

impl EngineSink for MemorySink {
    fn on_transition(&mut self, t: &Transition) {
        self.transitions.lock().unwrap_or_else(|e| e.into_inner()).push(t.clone());
    }
    fn on_alert(&mut self, a: &Alert) {
        self.alerts.lock().unwrap_or_else(|e| e.into_inner()).push(a.clone());
    }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LogRecord<'a> {
    Transition(&'a Transition),
    Alert(&'a Alert),
}

/// Append-only line-delimited JSON log of transitions and alerts.
pub struct JsonlEventLog {
    out: BufWriter<File>,
}

impl JsonlEventLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(JsonlEventLog { out: BufWriter::new(f) })
    }

    fn write(&mut self, rec: &LogRecord) {
        let res = serde_json::to_writer(&mut self.out, rec)
            .map_err(std::io::Error::from)
            .and_then(|_| self.out.write_all(b"\n"))
            .and_then(|_| self.out.flush());
        if let Err(e) = res {
            log::warn!("event log write failed: {e}");
        }
    }
}

impl EngineSink for JsonlEventLog {
    fn on_transition(&mut self, t: &Transition) {
        self.write(&LogRecord::Transition(t));
    }
    fn on_alert(&mut self, a: &Alert) {
        self.write(&LogRecord::Alert(a));
    }
}
