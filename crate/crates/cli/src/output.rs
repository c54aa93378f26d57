//! Output plumbing: every file a run produces embeds the resolved config
//! hash, the seed and the artifact version, and the resolved config itself
//! is written next to the results so any run can be reproduced from its own
//! output directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
}

impl RunMeta {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            seed: cfg.seed(),
        }
    }

    pub fn csv_header(&self) -> String {
        format!(
            "# config_hash={}\n# seed={}\n# version={}\n",
            self.config_hash, self.seed, VERSION
        )
    }

    pub fn json_fields(&self) -> serde_json::Map<String, serde_json::Value> {
        let mut map = serde_json::Map::new();
        map.insert("config_hash".into(), self.config_hash.clone().into());
        map.insert("seed".into(), self.seed.into());
        map.insert("version".into(), VERSION.into());
        map
    }

    pub fn svg_comment(&self) -> String {
        format!(
            "<!-- config_hash={} seed={} version={} -->\n",
            self.config_hash, self.seed, VERSION
        )
    }
}

/// Write `text` to `<stem><ext>`.
pub fn write_file(stem: &str, ext: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = PathBuf::from(format!("{stem}{ext}"));
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    let mut file = std::fs::File::create(&path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Write the resolved config next to the results.
pub fn write_resolved_config(cfg: &ExperimentConfig, stem: &str) -> Result<PathBuf, CliError> {
    write_file(stem, ".config.toml", &cfg.to_toml())
}

/// Render a float with the shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}
