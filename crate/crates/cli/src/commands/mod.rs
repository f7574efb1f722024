mod detect;
mod distill;
mod eval;
mod prompt;
mod synth;
mod tile;

use std::fs;
use std::path::{Path, PathBuf};

use attrikit::backends::{load_training_images, SceneIndex, TrainingImage};
use attrikit::labels::load_coco;
use attrikit::{canonical, Dataset, Error};
use serde::Serialize;

use crate::args::{Cli, Command};
use crate::config::RunConfig;
use crate::error::{config, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cli.common)?;
    cfg.validate()?;
    match cli.command {
        Command::Prompt => prompt::run(&cfg),
        Command::Detect(a) => detect::run(&cfg, &a),
        Command::Distill(a) => distill::run(&cfg, &a),
        Command::Eval(a) => eval::run(&cfg, &a),
        Command::Synth(a) => synth::run(&cfg, &a),
        Command::Tile(a) => tile::run(&cfg, &a),
    }
}

/// The images a command works on, their pixels and the optional truth.
pub struct Workspace {
    pub reference: Dataset,
    pub images: Vec<TrainingImage>,
    pub truth: Option<Dataset>,
}

impl Workspace {
    pub fn load(cfg: &RunConfig) -> CliResult<Self> {
        let root = cfg.dataset_root()?;
        let images_path = cfg.images_path()?;
        let truth_path = cfg.truth_path()?;
        let reference = load_coco(&images_path)?.without_boxes();
        if reference.images.is_empty() {
            return Err(Error::Validation(format!("{} lists no images", images_path.display())).into());
        }
        let truth = truth_path.map(|p| load_coco(&p)).transpose()?;
        if let Some(t) = &truth {
            if let Some(img) = reference.images.iter().find(|i| t.get(i.image_id).is_none()) {
                return Err(Error::Validation(format!("image {} has no ground-truth entry", img.image_id)).into());
            }
        }
        let images = load_training_images(&reference, root, &SceneIndex::load(root)?)?;
        Ok(Self {
            reference,
            images,
            truth,
        })
    }

    /// Truth restricted to the listed images.
    pub fn truth_subset(&self) -> Option<Dataset> {
        self.truth.as_ref().map(|t| Dataset {
            images: self
                .reference
                .images
                .iter()
                .filter_map(|i| t.get(i.image_id).cloned())
                .collect(),
        })
    }
}

pub fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::Io {
        path: cfg.out.clone(),
        source: e,
    })?;
    Ok(&cfg.out)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = canonical::to_string(value).map_err(|e| Error::Validation(e.to_string()))?;
    write_text(path, &text)
}

/// `given`, or `default` under the output directory; it must exist.
pub fn input_file(given: Option<&PathBuf>, cfg: &RunConfig, default: &str, what: &str) -> CliResult<PathBuf> {
    let p = given.cloned().unwrap_or_else(|| cfg.out.join(default));
    if !p.is_file() {
        return Err(config(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}
