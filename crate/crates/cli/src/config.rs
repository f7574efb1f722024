//! Run configuration: a JSON file merged with command-line flags, flags
//! winning. Dataset-relative paths resolve against `dataset` when it is set.

use std::fs;
use std::path::{Path, PathBuf};

use attrikit::backends::Density;
use attrikit::prompt::{AblationMode, DEFAULT_TOP_K, DEFAULT_TOP_N};
use attrikit::SkdConfig;
use serde::{Deserialize, Serialize};

use crate::args::{BackendArg, CommonArgs};
use crate::error::{config, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSettings {
    pub timeout_ms: u64,
    pub retries: u32,
    pub max_in_flight: usize,
    pub poll_interval_ms: u64,
}

impl Default for RemoteSettings {
    fn default() -> Self {
        Self {
            timeout_ms: 60_000,
            retries: 2,
            max_in_flight: 8,
            poll_interval_ms: 500,
        }
    }
}

/// Attribute words to start from instead of generating them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconOverride {
    pub shapes: Vec<String>,
    pub colors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub count: usize,
    pub size: u32,
    pub objects: usize,
    pub density: Density,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            count: 20,
            size: 224,
            objects: 16,
            density: Density::Sparse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TileSettings {
    pub tile: u32,
    pub per_image: u32,
    pub crop: u32,
}

impl Default for TileSettings {
    fn default() -> Self {
        Self {
            tile: 256,
            per_image: 16,
            crop: 224,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub images: PathBuf,
    pub truth: Option<PathBuf>,
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub remote: RemoteSettings,
    pub seed: u64,
    pub out: PathBuf,
    pub nouns: Vec<String>,
    pub lexicon: Option<LexiconOverride>,
    pub augment: bool,
    pub top_k: usize,
    pub top_n: usize,
    pub ablation: AblationMode,
    pub skd: SkdConfig,
    pub synth: SynthSettings,
    pub tile: TileSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            images: PathBuf::from("images.json"),
            truth: None,
            backend: BackendKind::Mock,
            endpoint: None,
            remote: RemoteSettings::default(),
            seed: 0,
            out: PathBuf::from("out"),
            nouns: vec!["nuclei".into()],
            lexicon: None,
            augment: true,
            top_k: DEFAULT_TOP_K,
            top_n: DEFAULT_TOP_N,
            ablation: AblationMode::Full,
            skd: SkdConfig::default(),
            synth: SynthSettings::default(),
            tile: TileSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))
    }

    /// The config file (if any) with every given flag applied on top.
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(b) = args.backend {
            cfg.backend = match b {
                BackendArg::Mock => BackendKind::Mock,
                BackendArg::Remote => BackendKind::Remote,
            };
        }
        if let Some(e) = &args.endpoint {
            cfg.endpoint = Some(e.clone());
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(o) = &args.out {
            cfg.out = o.clone();
        }
        if let Some(d) = &args.dataset {
            cfg.dataset = Some(d.clone());
        }
        if let Some(i) = &args.images {
            cfg.images = i.clone();
        }
        if let Some(t) = &args.truth {
            cfg.truth = Some(t.clone());
        }
        if let Some(n) = args.top_n {
            cfg.top_n = n;
        }
        if let Some(a) = args.alpha {
            cfg.skd.alpha = a;
        }
        if let Some(r) = args.rounds {
            cfg.skd.rounds = r;
        }
        if let Some(c) = args.cap {
            cfg.skd.cap = c;
        }
        if let Some(t) = args.score_threshold {
            cfg.skd.score_threshold = t;
        }
        Ok(cfg)
    }

    /// Checks that do not touch the filesystem.
    pub fn validate(&self) -> CliResult<()> {
        self.skd.validate().map_err(|e| config(e.to_string()))?;
        if self.top_n == 0 {
            return Err(config("top_n must be at least 1"));
        }
        if self.top_k == 0 {
            return Err(config("top_k must be at least 1"));
        }
        if self.nouns.is_empty() || self.nouns.iter().any(|n| n.trim().is_empty()) {
            return Err(config("nouns must be a non-empty list of non-empty phrases"));
        }
        if self.backend == BackendKind::Remote && self.endpoint.is_none() {
            return Err(config("the remote backend needs --endpoint or ATTRIKIT_ENDPOINT"));
        }
        Ok(())
    }

    pub fn dataset_root(&self) -> CliResult<&Path> {
        let root = self
            .dataset
            .as_deref()
            .ok_or_else(|| config("no dataset given (--dataset)"))?;
        if !root.is_dir() {
            return Err(config(format!("dataset directory {} does not exist", root.display())));
        }
        Ok(root)
    }

    fn under_root(&self, p: &Path) -> PathBuf {
        match &self.dataset {
            Some(root) => root.join(p),
            None => p.to_path_buf(),
        }
    }

    pub fn images_path(&self) -> CliResult<PathBuf> {
        let p = self.under_root(&self.images);
        existing(p, "image list")
    }

    pub fn truth_path(&self) -> CliResult<Option<PathBuf>> {
        self.truth
            .as_ref()
            .map(|t| existing(self.under_root(t), "ground truth"))
            .transpose()
    }
}

fn existing(p: PathBuf, what: &str) -> CliResult<PathBuf> {
    if p.is_file() {
        Ok(p)
    } else {
        Err(config(format!("{what} {} does not exist", p.display())))
    }
}
