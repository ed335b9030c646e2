use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gazecode_core::log::Meta;
use gazecode_core::protocol::{DeviceGeometry, SessionConfig};
use parking_lot::{Mutex, RwLock};
use serde::Deserialize;

use crate::config::{GatePolicy, ServiceConfig};
use crate::error::ServiceError;
use crate::session::{SessionMetaFile, SessionState};

/// Body of `POST /sessions`. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub geometry: Option<DeviceGeometry>,
    /// Field-wise overrides of the service's default session config.
    pub config: Option<serde_json::Map<String, serde_json::Value>>,
    /// Fixes trial planning; drawn at random when absent.
    pub seed: Option<u64>,
    /// Wall-clock anchor written to meta; the current time when absent.
    pub created_utc: Option<String>,
    pub gate_policy: Option<GatePolicy>,
}

pub type SessionHandle = Arc<Mutex<SessionState>>;

/// All sessions under one data directory.
///
/// Each session has its own lock, so requests for different sessions never
/// wait on each other and writes within a session are serialized.
#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    defaults: ServiceConfig,
    sessions: RwLock<HashMap<String, SessionHandle>>,
    next_id: Mutex<u64>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn id_number(name: &str) -> Option<u64> {
    name.strip_prefix("s-")?.parse().ok()
}

impl SessionStore {
    /// Open (creating if needed) the data directory. Session ids continue after
    /// the highest existing one.
    pub fn open(defaults: ServiceConfig) -> Result<Self, ServiceError> {
        let root = defaults.data_dir.clone();
        std::fs::create_dir_all(&root)?;
        let mut max = 0;
        for entry in std::fs::read_dir(&root)? {
            if let Some(n) = entry?.file_name().to_str().and_then(id_number) {
                max = max.max(n);
            }
        }
        Ok(SessionStore { root, defaults, sessions: RwLock::new(HashMap::new()), next_id: Mutex::new(max + 1) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn defaults(&self) -> &ServiceConfig {
        &self.defaults
    }

    fn effective_config(&self, overrides: Option<serde_json::Map<String, serde_json::Value>>) -> Result<SessionConfig, ServiceError> {
        let mut value = serde_json::to_value(&self.defaults.session).map_err(|e| ServiceError::Storage(e.to_string()))?;
        if let (Some(over), Some(obj)) = (overrides, value.as_object_mut()) {
            for (k, v) in over {
                if !obj.contains_key(&k) {
                    return Err(ServiceError::BadRequest(format!("unknown config field '{k}'")));
                }
                obj.insert(k, v);
            }
        }
        let cfg: SessionConfig =
            serde_json::from_value(value).map_err(|e| ServiceError::BadRequest(format!("invalid config: {e}")))?;
        cfg.validate().map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        Ok(cfg)
    }

    pub fn create(&self, req: CreateSessionRequest) -> Result<SessionHandle, ServiceError> {
        let geometry = req.geometry.unwrap_or(self.defaults.geometry);
        geometry.validate().map_err(|e| ServiceError::BadRequest(format!("invalid geometry: {e}")))?;
        let config = self.effective_config(req.config)?;
        let seed = req.seed.unwrap_or_else(rand::random);
        let created_utc = req
            .created_utc
            .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true));
        let gate_policy = req.gate_policy.unwrap_or(self.defaults.gate_policy);

        let (id, dir) = {
            let mut next = self.next_id.lock();
            loop {
                let id = format!("s-{:06}", *next);
                *next += 1;
                let dir = self.root.join(&id);
                if !dir.exists() {
                    break (id, dir);
                }
            }
        };
        let snapshot = serde_json::json!({ "session": config, "seed": seed, "gate_policy": gate_policy });
        let file = SessionMetaFile {
            meta: Meta::new(&id, created_utc, geometry, snapshot),
            seed,
            config,
            gate_policy,
            finalized: false,
        };
        let handle = Arc::new(Mutex::new(SessionState::create(dir, file)?));
        self.sessions.write().insert(id, handle.clone());
        Ok(handle)
    }

    /// Look a session up, loading it from disk after a restart.
    pub fn get(&self, id: &str) -> Result<SessionHandle, ServiceError> {
        if let Some(h) = self.sessions.read().get(id) {
            return Ok(h.clone());
        }
        let not_found = || ServiceError::NotFound(format!("no session {id}"));
        if !valid_id(id) {
            return Err(not_found());
        }
        let dir = self.root.join(id);
        if !dir.is_dir() {
            return Err(not_found());
        }
        let mut sessions = self.sessions.write();
        if let Some(h) = sessions.get(id) {
            return Ok(h.clone());
        }
        let handle = Arc::new(Mutex::new(SessionState::open(dir)?));
        sessions.insert(id.to_string(), handle.clone());
        Ok(handle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids() {
        assert!(valid_id("s-000001"));
        assert!(!valid_id("../etc"));
        assert!(!valid_id(""));
        assert_eq!(id_number("s-000042"), Some(42));
        assert_eq!(id_number("other"), None);
    }
}
