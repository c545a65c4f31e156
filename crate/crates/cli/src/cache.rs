//! On-disk cache of per-trace descriptors, enabled by `CSISENSE_CACHE`.
//!
//! Keys hash the trace bytes together with every setting that influences
//! extraction, so a stale entry can never be hit.

use std::path::PathBuf;

use csisense_core::learn::PairDescriptor;
use csisense_core::pipeline::PipelineConfig;
use sha2::{Digest, Sha256};

use crate::{fsutil, CliError};

pub const ENV_VAR: &str = "CSISENSE_CACHE";

pub struct FeatureCache {
    pub dir: PathBuf,
}

impl FeatureCache {
    pub fn from_env() -> Option<Self> {
        std::env::var_os(ENV_VAR).filter(|v| !v.is_empty()).map(|d| FeatureCache { dir: d.into() })
    }

    pub fn key(trace_bytes: &[u8], cfg: &PipelineConfig) -> String {
        let relevant = serde_json::to_vec(&(&cfg.preprocess, &cfg.denoise, cfg.image_height, cfg.image_width, &cfg.features))
            .expect("config serializes");
        let mut h = Sha256::new();
        h.update(Sha256::digest(trace_bytes));
        h.update(Sha256::digest(&relevant));
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A missing or unreadable entry is a miss.
    pub fn get(&self, key: &str) -> Option<Vec<PairDescriptor>> {
        let text = std::fs::read_to_string(self.path(key)).ok()?;
        match serde_json::from_str(&text) {
            Ok(d) => Some(d),
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {key}: {e}");
                None
            }
        }
    }

    pub fn put(&self, key: &str, descs: &[PairDescriptor]) -> Result<(), CliError> {
        let json = serde_json::to_vec(descs).expect("descriptors serialize");
        fsutil::write_atomic(&self.path(key), &json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use csisense_core::pipeline::Resolution;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache { dir: dir.path().to_path_buf() };
        let d = vec![PairDescriptor::Vector(vec![0.1, 1.0 / 3.0, -2e-300]), PairDescriptor::Bag(vec![vec![1.5]])];
        cache.put("k", &d).unwrap();
        assert_eq!(cache.get("k"), Some(d));
        assert_eq!(cache.get("missing"), None);
        std::fs::write(dir.path().join("bad.json"), "{").unwrap();
        assert_eq!(cache.get("bad"), None);
    }

    #[test]
    fn key_depends_on_trace_and_extraction_settings() {
        let a = PipelineConfig::preset("svd120-1svm", Resolution::Fast).unwrap();
        let b = PipelineConfig::preset("none-1svm", Resolution::Fast).unwrap();
        let mut c = a.clone();
        c.fusion.svm.reg_c = 5.0;
        assert_ne!(FeatureCache::key(b"x", &a), FeatureCache::key(b"y", &a));
        assert_ne!(FeatureCache::key(b"x", &a), FeatureCache::key(b"x", &b));
        // classifier settings do not affect descriptors
        assert_eq!(FeatureCache::key(b"x", &a), FeatureCache::key(b"x", &c));
    }
}
