use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use agitrack_forest::ForestModel;
use agitrack_seqnet::RecurrentModel;

use crate::error::{Error, Result};
use crate::retrain::{Trainer, TrainingSnapshot};
use crate::store::{Store, StoreConfig};
use crate::types::{JobOutcome, JobStatus, ModelKind, ModelVersion, RetrainJob};

pub const MODELS_DIR: &str = "models";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub store: StoreConfig,
    /// a candidate may be at most this much below the serving model's AUC
    pub swap_margin: f64,
    /// static bearer token; `None` disables the check
    pub token: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { store: StoreConfig::default(), swap_margin: 0.02, token: None }
    }
}

struct Inner {
    store: Store,
    trainer: Arc<dyn Trainer>,
    cfg: ServiceConfig,
    workers: Mutex<Vec<JoinHandle<()>>>,
}

/// Store plus background retraining. Cheap to clone.
#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

impl Service {
    /// Opens the store in `dir`. Jobs left queued or running by a previous
    /// process are marked failed.
    pub fn open(dir: impl AsRef<Path>, cfg: ServiceConfig, trainer: Arc<dyn Trainer>) -> Result<Service> {
        let store = Store::open(dir.as_ref(), cfg.store)?;
        std::fs::create_dir_all(store.dir().join(MODELS_DIR))?;
        let stale: Vec<String> =
            store.read(|s| s.jobs.values().filter(|j| j.status.is_active()).map(|j| j.job_id.clone()).collect());
        for id in stale {
            log::warn!("job {id} was interrupted");
            store.finish_job(&id, JobOutcome::failed("interrupted by restart"))?;
        }
        Ok(Service { inner: Arc::new(Inner { store, trainer, cfg, workers: Mutex::new(Vec::new()) }) })
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.cfg
    }

    pub fn models_dir(&self) -> PathBuf {
        self.store().dir().join(MODELS_DIR)
    }

    /// Installs the first model of a kind as the serving version.
    pub fn install_model(&self, kind: ModelKind, bytes: &str, auc: Option<f64>, accuracy: Option<f64>) -> Result<ModelVersion> {
        let version = self.store().read(|s| s.next_version(kind));
        let model = ModelVersion {
            kind,
            version,
            file: format!("{kind}-v{version}.json"),
            auc,
            accuracy,
            n_train: 0,
            n_test: 0,
            job_id: None,
        };
        if self.store().read(|s| s.serving.contains_key(&kind)) {
            return Err(Error::Conflict(format!("a {kind} model is already serving")));
        }
        std::fs::write(self.models_dir().join(&model.file), bytes)?;
        self.store().register_model(model.clone(), true)?;
        Ok(model)
    }

    pub fn serving_forest(&self) -> Result<Option<ForestModel>> {
        match self.store().read(|s| s.serving_model(ModelKind::Forest).cloned()) {
            Some(m) => Ok(Some(ForestModel::load(&self.models_dir().join(m.file))?)),
            None => Ok(None),
        }
    }

    pub fn serving_recurrent(&self) -> Result<Option<RecurrentModel>> {
        match self.store().read(|s| s.serving_model(ModelKind::Recurrent).cloned()) {
            Some(m) => Ok(Some(RecurrentModel::load(self.models_dir().join(m.file))?)),
            None => Ok(None),
        }
    }

    /// Queues a job and trains in a background thread.
    pub fn trigger_retrain(&self, kind: ModelKind) -> Result<RetrainJob> {
        let (job, snap) = self.store().queue_job(kind)?;
        let svc = self.clone();
        let id = job.job_id.clone();
        let handle = std::thread::Builder::new().name(format!("retrain-{id}")).spawn(move || {
            if let Err(e) = svc.run_job(&id, &snap) {
                log::error!("job {id}: {e}");
                let _ = svc.store().finish_job(&id, JobOutcome::failed(e.to_string()));
            }
        })?;
        let mut w = self.inner.workers.lock().unwrap_or_else(|e| e.into_inner());
        w.retain(|h| !h.is_finished());
        w.push(handle);
        Ok(job)
    }

    fn run_job(&self, job_id: &str, snap: &TrainingSnapshot) -> Result<()> {
        let store = self.store();
        store.start_job(job_id)?;
        let kind = store.read(|s| s.jobs[job_id].kind);
        let trained = match self.inner.trainer.train(kind, snap) {
            Ok(t) => t,
            Err(e) => {
                store.finish_job(job_id, JobOutcome::failed(e.to_string()))?;
                return Ok(());
            }
        };
        let (version, current_auc) = store.read(|s| (s.next_version(kind), s.serving_model(kind).and_then(|m| m.auc)));
        let margin = self.inner.cfg.swap_margin;
        let withheld = match (current_auc, trained.auc) {
            (Some(c), Some(a)) => a < c - margin,
            (Some(_), None) => true,
            (None, _) => false,
        };
        let file = format!("{kind}-v{version}.json");
        std::fs::write(self.models_dir().join(&file), &trained.bytes)?;
        let model = ModelVersion {
            kind,
            version,
            file,
            auc: trained.auc,
            accuracy: trained.accuracy,
            n_train: trained.n_train,
            n_test: trained.n_test,
            job_id: Some(job_id.to_string()),
        };
        store.register_model(model, !withheld)?;
        let fmt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.4}"));
        let message = withheld.then(|| {
            format!("swap withheld: candidate AUC {} below serving {} minus {margin}", fmt(trained.auc), fmt(current_auc))
        });
        store.finish_job(
            job_id,
            JobOutcome {
                status: JobStatus::Done,
                model_version: Some(version),
                snapshot_rows: Some(trained.rows),
                auc: trained.auc,
                current_auc,
                swapped: !withheld,
                swap_withheld: withheld,
                message,
            },
        )?;
        Ok(())
    }

    pub fn job(&self, job_id: &str) -> Result<RetrainJob> {
        self.store().read(|s| s.jobs.get(job_id).cloned()).ok_or_else(|| Error::NotFound(format!("job {job_id}")))
    }

    /// Polls until the job has ended.
    pub fn wait_job(&self, job_id: &str, timeout: Duration) -> Result<RetrainJob> {
        let start = Instant::now();
        loop {
            let j = self.job(job_id)?;
            if !j.status.is_active() {
                return Ok(j);
            }
            if start.elapsed() > timeout {
                return Err(Error::Busy(format!("job {job_id} still {:?} after {timeout:?}", j.status)));
            }
            std::thread::sleep(Duration::from_millis(10));
        }
    }

    /// Waits for every background job thread.
    pub fn join_workers(&self) {
        let handles: Vec<_> = std::mem::take(&mut *self.inner.workers.lock().unwrap_or_else(|e| e.into_inner()));
        for h in handles {
            let _ = h.join();
        }
    }
}
