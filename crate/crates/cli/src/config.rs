use std::path::Path;

use csisense_core::learn::{LabelKind, Protocol};
use csisense_core::pipeline::{PipelineConfig, Resolution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{fsutil, CliError};

/// Everything `run` needs besides the data. Stored as TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub target: LabelKind,
    pub seed: u64,
    pub protocol: Protocol,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn preset(name: &str, resolution: Resolution, protocol: Protocol) -> Result<Self, CliError> {
        Ok(RunConfig {
            target: LabelKind::Action,
            seed: 0,
            protocol,
            pipeline: PipelineConfig::preset(name, resolution)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        toml::from_str(&fsutil::read_string(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// SHA-256 over the canonical JSON form of the config.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_vec(self).expect("run config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Parses a protocol name.
///
/// `kfold[:k]` (10 folds by default), `leave-one-{room,location,person}-out`,
/// `two-stage[:k]` and `scaling[:group]`. Scaling sizes are left empty and
/// filled from the data.
pub fn parse_protocol(name: &str) -> Result<Protocol, CliError> {
    let usage = || CliError::Usage(format!("unknown protocol {name:?}"));
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let k = |default: usize| -> Result<usize, CliError> {
        arg.map_or(Ok(default), |a| a.parse().map_err(|_| usage()))
    };
    match head {
        "" => Err(CliError::Usage("empty protocol name".into())),
        "kfold" => Ok(Protocol::KFold { k: k(10)? }),
        "two-stage" => Ok(Protocol::TwoStage { k: k(10)? }),
        "scaling" => {
            let group = arg.unwrap_or("room").parse().map_err(|_| usage())?;
            Ok(Protocol::TrainSubsetScaling { group, sizes: Vec::new() })
        }
        _ if arg.is_none() => {
            let group = head
                .strip_prefix("leave-one-")
                .and_then(|g| g.strip_suffix("-out"))
                .ok_or_else(usage)?
                .parse()
                .map_err(|_| usage())?;
            Ok(Protocol::LeaveGroupOut { group })
        }
        _ => Err(usage()),
    }
}
