//! TOML configuration file shared by every subcommand. Command-line flags
//! override file values; the merged result is written next to outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use nludiag::{CorruptionSetting, Split, Task, WordClass};

/// Environment variable naming the directory that holds `data/` and `results.jsonl`.
pub const ROOT_ENV: &str = "NLUDIAG_ROOT";
pub const ECHO_FILE: &str = "nludiag-config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Png,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub task: Vec<Task>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub word_class: Vec<WordClass>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub setting: Vec<CorruptionSetting>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub split: Vec<Split>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_root: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tagger: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_matches: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictor: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask_token: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_bound: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; vec: $($v:ident),*; opt: $($o:ident),*) => {
        $(if !$top.$v.is_empty() { $base.$v = $top.$v; })*
        $(if $top.$o.is_some() { $base.$o = $top.$o; })*
    };
}

impl Settings {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `self` with every value set in `flags` replaced.
    pub fn merged(mut self, flags: Settings) -> Self {
        overlay!(self, flags;
            vec: task, word_class, setting, split;
            opt: backend, seed, epochs, batch_size, learning_rate, baseline, data_root, store, out,
                 format, tagger, lexicon, identity_matches, predictor, mask_token, scale_bound);
        self
    }

    pub fn root() -> PathBuf {
        std::env::var_os(ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn data_root(&self) -> PathBuf {
        self.data_root.clone().unwrap_or_else(|| Self::root().join("data"))
    }

    pub fn store(&self) -> PathBuf {
        self.store.clone().unwrap_or_else(|| Self::root().join("results.jsonl"))
    }

    /// Writes the settings as TOML into `dir`, creating it if needed.
    pub fn echo_into(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let body = toml::to_string_pretty(self)?;
        fs::write(dir.join(ECHO_FILE), body).with_context(|| format!("writing config into {}", dir.display()))
    }
}
