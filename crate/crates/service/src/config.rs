use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gazecode_core::protocol::{DeviceGeometry, SessionConfig};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

/// What happens when a trial's required orientation is lost after the gate passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatePolicy {
    /// Keep the trial; the loss is visible in its gate status and the orient stream.
    #[default]
    Warn,
    /// Void the trial as soon as the loss is observed.
    Void,
}

impl fmt::Display for GatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GatePolicy::Warn => "warn",
            GatePolicy::Void => "void",
        })
    }
}

impl FromStr for GatePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "warn" => Ok(GatePolicy::Warn),
            "void" => Ok(GatePolicy::Void),
            other => Err(format!("unknown gate policy {other:?}, expected warn or void")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// One sub-directory per session lives here.
    pub data_dir: PathBuf,
    pub bind: String,
    /// Defaults for sessions; requests override individual fields.
    pub session: SessionConfig,
    pub geometry: DeviceGeometry,
    pub gate_policy: GatePolicy,
    /// Built capture client served at `/` when set.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("gazecode-data"),
            bind: "127.0.0.1:8080".into(),
            session: SessionConfig::default(),
            geometry: DeviceGeometry::default(),
            gate_policy: GatePolicy::Warn,
            static_dir: None,
        }
    }
}

pub const ENV_CONFIG: &str = "GAZECODE_CONFIG";
pub const ENV_DATA_DIR: &str = "GAZECODE_DATA_DIR";
pub const ENV_BIND: &str = "GAZECODE_BIND";
pub const ENV_STATIC_DIR: &str = "GAZECODE_STATIC_DIR";
pub const ENV_GATE_POLICY: &str = "GAZECODE_GATE_POLICY";

impl ServiceConfig {
    /// Read a JSON config file; missing fields take their defaults.
    pub fn from_file(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let cfg: ServiceConfig =
            serde_json::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults, then the file named by `GAZECODE_CONFIG`, then the other `GAZECODE_*` variables.
    pub fn from_env() -> Result<Self, ServiceError> {
        let vars = |k: &str| std::env::var(k).ok();
        Self::from_lookup(vars)
    }

    pub(crate) fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ServiceError> {
        let mut cfg = match get(ENV_CONFIG) {
            Some(path) => Self::from_file(Path::new(&path))?,
            None => ServiceConfig::default(),
        };
        if let Some(v) = get(ENV_DATA_DIR) {
            cfg.data_dir = v.into();
        }
        if let Some(v) = get(ENV_BIND) {
            cfg.bind = v;
        }
        if let Some(v) = get(ENV_STATIC_DIR) {
            cfg.static_dir = Some(v.into());
        }
        if let Some(v) = get(ENV_GATE_POLICY) {
            cfg.gate_policy = v.parse().map_err(ServiceError::Config)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        self.session.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        self.geometry.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        Ok(())
    }
}
