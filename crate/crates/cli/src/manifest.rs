use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{fsutil, CliError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory unless absolute.
    pub trace_path: String,
    pub action_label: String,
    pub person_label: String,
    pub room_label: String,
    pub location_label: String,
    #[serde(default)]
    pub split_tags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        DatasetManifest { format_version: FORMAT_VERSION, entries }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.format_version != FORMAT_VERSION {
            return Err(format!("unsupported manifest version {}", self.format_version));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.trace_path.as_str()) {
                return Err(format!("duplicate trace path {:?}", e.trace_path));
            }
            let labels = [&e.action_label, &e.person_label, &e.room_label, &e.location_label];
            if e.trace_path.is_empty() || labels.iter().any(|l| l.is_empty()) {
                return Err(format!("entry {:?} has an empty field", e.trace_path));
            }
        }
        Ok(())
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s.into_bytes()
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let m: DatasetManifest = serde_json::from_str(&fsutil::read_string(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        m.validate().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fsutil::write_atomic(path, &self.to_bytes())
    }

    /// Count of entries per value of each label.
    pub fn label_counts(&self) -> BTreeMap<&'static str, BTreeMap<String, usize>> {
        let mut out: BTreeMap<&'static str, BTreeMap<String, usize>> = BTreeMap::new();
        for e in &self.entries {
            for (k, v) in [
                ("action", &e.action_label),
                ("person", &e.person_label),
                ("room", &e.room_label),
                ("location", &e.location_label),
            ] {
                *out.entry(k).or_default().entry(v.clone()).or_default() += 1;
            }
        }
        out
    }
}

pub fn resolve(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
    let p = Path::new(&entry.trace_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}
