use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use gazecode_core::log::{
    extract_labels, labels_to_csv, parse_session, EntryRecord, LogError, LogWriter, Meta, Record, SessionLog,
    TimestampNs, VoidRecord,
};
use gazecode_core::protocol::{
    plan_trial, verify_entry, Code, DeviceGeometry, GateTracker, SessionConfig, TrialSpec,
};
use gazecode_core::rng::{split_seed, Domain};
use serde::{Deserialize, Serialize};

use crate::config::GatePolicy;
use crate::error::ServiceError;

pub const LOG_FILE: &str = "session.log";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Issued,
    EventsReceived,
    Entered,
    Voided,
}

impl TrialStatus {
    pub fn is_pending(self) -> bool {
        matches!(self, TrialStatus::Issued | TrialStatus::EventsReceived)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateStatus {
    pub passed: bool,
    pub holding: bool,
    pub lost_after_pass: bool,
}

impl From<&GateTracker> for GateStatus {
    fn from(g: &GateTracker) -> Self {
        GateStatus { passed: g.passed, holding: g.holding(), lost_after_pass: g.lost_after_pass }
    }
}

#[derive(Debug, Clone)]
struct TrialState {
    spec: TrialSpec,
    status: TrialStatus,
    gate: GateTracker,
    accepted: Option<bool>,
}

/// Contents of `meta.json` next to each session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetaFile {
    pub meta: Meta,
    pub seed: u64,
    pub config: SessionConfig,
    pub gate_policy: GatePolicy,
    pub finalized: bool,
}

/// What a client needs to run a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub created_utc: String,
    pub seed: u64,
    pub config: SessionConfig,
    pub geometry: DeviceGeometry,
    pub gate_policy: GatePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial_id: u64,
    pub status: TrialStatus,
    pub gate: GateStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub finalized: bool,
    pub records: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub voided: usize,
    pub trials: Vec<TrialSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsAck {
    pub trial_id: u64,
    /// Records appended, by record type.
    pub counts: BTreeMap<String, usize>,
    pub gate: GateStatus,
    pub status: TrialStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryAck {
    pub trial_id: u64,
    pub accepted: bool,
}

fn storage(e: LogError) -> ServiceError {
    ServiceError::Storage(e.to_string())
}

fn write_meta_file(dir: &Path, file: &SessionMetaFile) -> Result<(), ServiceError> {
    let text = serde_json::to_string_pretty(file).map_err(|e| ServiceError::Storage(e.to_string()))?;
    let tmp = dir.join(format!("{META_FILE}.tmp"));
    fs::write(&tmp, text)?;
    fs::rename(tmp, dir.join(META_FILE))?;
    Ok(())
}

/// One live session: its issued trials, their protocol state and the log writer.
///
/// Every mutation checks the protocol order first and touches the log only
/// once the request is known to be valid.
#[derive(Debug)]
pub struct SessionState {
    dir: PathBuf,
    file: SessionMetaFile,
    trials: Vec<TrialState>,
    writer: LogWriter<BufWriter<File>>,
}

impl SessionState {
    /// Create `dir` (which must not exist) and write the meta record.
    pub fn create(dir: PathBuf, file: SessionMetaFile) -> Result<Self, ServiceError> {
        fs::create_dir(&dir).map_err(|e| match e.kind() {
            std::io::ErrorKind::AlreadyExists => {
                ServiceError::Conflict(format!("session {} already exists", file.meta.session_id))
            }
            _ => e.into(),
        })?;
        write_meta_file(&dir, &file)?;
        let out = BufWriter::new(File::create(dir.join(LOG_FILE))?);
        let writer = LogWriter::create(out, &file.meta).map_err(storage)?;
        Ok(SessionState { dir, file, trials: Vec::new(), writer })
    }

    /// Reload a session from disk by replaying its log.
    pub fn open(dir: PathBuf) -> Result<Self, ServiceError> {
        let text = fs::read_to_string(dir.join(META_FILE))?;
        let file: SessionMetaFile = serde_json::from_str(&text).map_err(|e| ServiceError::Storage(e.to_string()))?;
        let bytes = fs::read(dir.join(LOG_FILE))?;
        let log = parse_session(&bytes).map_err(|e| ServiceError::Storage(e.to_string()))?;

        let mut trials: Vec<TrialState> = Vec::new();
        for r in &log.records {
            match r {
                Record::Trial(spec) => trials.push(TrialState {
                    gate: GateTracker::with_window(spec.required_orientation, file.config.gate_window),
                    spec: (**spec).clone(),
                    status: TrialStatus::Issued,
                    accepted: None,
                }),
                Record::Entry(e) => {
                    if let Some(t) = trials.get_mut(e.trial as usize) {
                        t.status = TrialStatus::Entered;
                        t.accepted = Some(e.accepted);
                    }
                }
                Record::Void(v) => {
                    if let Some(t) = trials.get_mut(v.trial as usize) {
                        t.status = TrialStatus::Voided;
                    }
                }
                other => {
                    if let Some(t) = trials.last_mut() {
                        if t.status == TrialStatus::Issued {
                            t.status = TrialStatus::EventsReceived;
                        }
                        if let Record::Orient(o) = other {
                            t.gate.observe(o.mode);
                        }
                    }
                }
            }
        }

        let out = BufWriter::new(OpenOptions::new().append(true).open(dir.join(LOG_FILE))?);
        let mut writer = LogWriter::resume(out, &log.records).map_err(storage)?;
        if file.finalized {
            writer.finalize().map_err(storage)?;
        }
        Ok(SessionState { dir, file, trials, writer })
    }

    pub fn id(&self) -> &str {
        &self.file.meta.session_id
    }

    pub fn descriptor(&self) -> SessionDescriptor {
        SessionDescriptor {
            session_id: self.file.meta.session_id.clone(),
            created_utc: self.file.meta.created_utc.clone(),
            seed: self.file.seed,
            config: self.file.config.clone(),
            geometry: self.file.meta.geometry,
            gate_policy: self.file.gate_policy,
        }
    }

    pub fn summary(&self) -> SessionSummary {
        let count = |f: &dyn Fn(&TrialState) -> bool| self.trials.iter().filter(|t| f(t)).count();
        SessionSummary {
            session_id: self.id().to_string(),
            finalized: self.file.finalized,
            records: self.writer.records_written(),
            accepted: count(&|t| t.accepted == Some(true)),
            rejected: count(&|t| t.accepted == Some(false)),
            voided: count(&|t| t.status == TrialStatus::Voided),
            trials: self
                .trials
                .iter()
                .map(|t| TrialSummary {
                    trial_id: t.spec.trial_id,
                    status: t.status,
                    gate: (&t.gate).into(),
                    accepted: t.accepted,
                })
                .collect(),
        }
    }

    fn ensure_open(&self) -> Result<(), ServiceError> {
        if self.file.finalized {
            return Err(ServiceError::Conflict(format!("session {} is finalized", self.id())));
        }
        Ok(())
    }

    fn pending_trial(&mut self, trial_id: u64) -> Result<&mut TrialState, ServiceError> {
        self.ensure_open()?;
        let id = self.id().to_string();
        let t = self
            .trials
            .get_mut(trial_id as usize)
            .ok_or_else(|| ServiceError::NotFound(format!("trial {trial_id} was not issued in session {id}")))?;
        if !t.status.is_pending() {
            let status = serde_json::to_value(t.status).unwrap_or_default();
            return Err(ServiceError::Conflict(format!("trial {trial_id} is already {}", status.as_str().unwrap_or("closed"))));
        }
        Ok(t)
    }

    pub fn next_trial(&mut self) -> Result<TrialSpec, ServiceError> {
        self.ensure_open()?;
        if let Some(t) = self.trials.last() {
            if t.status.is_pending() {
                return Err(ServiceError::Conflict(format!(
                    "trial {} is still pending; submit its entry or void it first",
                    t.spec.trial_id
                )));
            }
        }
        let k = self.trials.len() as u64;
        let cfg = &self.file.config;
        let block = cfg.block_for_trial(k);
        let spec = plan_trial(cfg, &block, &self.file.meta.geometry, k, split_seed(self.file.seed, Domain::TrialPlan, k))
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        self.writer.append(&Record::Trial(Box::new(spec.clone()))).map_err(storage)?;
        self.trials.push(TrialState {
            gate: GateTracker::with_window(spec.required_orientation, cfg.gate_window),
            spec: spec.clone(),
            status: TrialStatus::Issued,
            accepted: None,
        });
        Ok(spec)
    }

    /// Append client sensor and stimulus records for a pending trial.
    ///
    /// The batch is all-or-nothing: a record of a server-owned type, a target
    /// for another trial, or a per-stream timestamp regression rejects the
    /// whole batch with the offending index.
    pub fn submit_events(&mut self, trial_id: u64, records: Vec<Record>) -> Result<EventsAck, ServiceError> {
        self.pending_trial(trial_id)?;
        for (i, r) in records.iter().enumerate() {
            match r {
                Record::Trial(_) | Record::Entry(_) | Record::Void(_) => {
                    return Err(ServiceError::unprocessable_at(i, format!("'{}' records are written by the service", r.kind())));
                }
                Record::Target(t) if t.trial != trial_id => {
                    return Err(ServiceError::unprocessable_at(
                        i,
                        format!("target for trial {} posted to trial {trial_id}", t.trial),
                    ));
                }
                _ => {}
            }
        }
        self.writer.clock().check_batch(&records).map_err(|(i, e)| ServiceError::unprocessable_at(i, e.to_string()))?;
        self.writer.append_batch(&records).map_err(|(_, e)| storage(e))?;

        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let t = &mut self.trials[trial_id as usize];
        for r in &records {
            *counts.entry(r.kind().to_string()).or_default() += 1;
            if let Record::Orient(o) = r {
                t.gate.observe(o.mode);
            }
        }
        if !records.is_empty() {
            t.status = TrialStatus::EventsReceived;
        }
        if self.file.gate_policy == GatePolicy::Void && t.gate.lost_after_pass {
            let void = VoidRecord { trial: trial_id, reason: Some("required orientation lost".into()) };
            self.writer.append(&Record::Void(void)).map_err(storage)?;
            t.status = TrialStatus::Voided;
        }
        Ok(EventsAck { trial_id, counts, gate: (&t.gate).into(), status: t.status })
    }

    pub fn submit_entry(
        &mut self,
        trial_id: u64,
        entered: Code,
        ts: TimestampNs,
        taps: Option<Vec<TimestampNs>>,
    ) -> Result<EntryAck, ServiceError> {
        let t = self.pending_trial(trial_id)?;
        let accepted = verify_entry(&t.spec.code, &entered).accepted;
        let record = Record::Entry(EntryRecord { trial: trial_id, entered, ts, accepted, taps });
        self.writer.clock().check(&record).map_err(|e| ServiceError::unprocessable_at(0, e.to_string()))?;
        self.writer.append(&record).map_err(storage)?;
        let t = &mut self.trials[trial_id as usize];
        t.status = TrialStatus::Entered;
        t.accepted = Some(accepted);
        Ok(EntryAck { trial_id, accepted })
    }

    pub fn void_trial(&mut self, trial_id: u64, reason: Option<String>) -> Result<TrialSummary, ServiceError> {
        self.pending_trial(trial_id)?;
        self.writer.append(&Record::Void(VoidRecord { trial: trial_id, reason })).map_err(storage)?;
        let t = &mut self.trials[trial_id as usize];
        t.status = TrialStatus::Voided;
        Ok(TrialSummary { trial_id, status: t.status, gate: (&t.gate).into(), accepted: None })
    }

    /// Close the log. Repeating the call returns the same summary.
    pub fn finalize(&mut self) -> Result<SessionSummary, ServiceError> {
        if !self.file.finalized {
            if let Some(t) = self.trials.iter().find(|t| t.status.is_pending()) {
                return Err(ServiceError::Conflict(format!(
                    "trial {} is still pending; submit its entry or void it first",
                    t.spec.trial_id
                )));
            }
            self.writer.finalize().map_err(storage)?;
            self.file.finalized = true;
            write_meta_file(&self.dir, &self.file)?;
        }
        Ok(self.summary())
    }

    fn require_finalized(&self) -> Result<(), ServiceError> {
        if !self.file.finalized {
            return Err(ServiceError::Conflict(format!("session {} is not finalized", self.id())));
        }
        Ok(())
    }

    /// The session log exactly as stored.
    pub fn export(&self) -> Result<Vec<u8>, ServiceError> {
        self.require_finalized()?;
        Ok(fs::read(self.dir.join(LOG_FILE))?)
    }

    pub fn exported_log(&self) -> Result<SessionLog, ServiceError> {
        parse_session(&self.export()?).map_err(|e| ServiceError::Storage(e.to_string()))
    }

    pub fn labels_csv(&self) -> Result<String, ServiceError> {
        Ok(labels_to_csv(&extract_labels(&self.exported_log()?).pairs))
    }
}
