//! On-disk image sets: PNG files next to a COCO file, plus an optional
//! `scenes.json` holding the scene description of each synthetic image.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::{SceneMeta, SyntheticScene};
use super::TrainingImage;
use crate::error::{Error, Result};
use crate::labels::{canonical_dataset, save_coco, AnnotatedImage, Dataset, MIN_VISIBLE_AREA};

pub const SCENES_FILE: &str = "scenes.json";

/// Scene descriptions keyed by image file name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneIndex {
    pub scenes: BTreeMap<String, SceneMeta>,
}

impl SceneIndex {
    /// Reads `root/scenes.json`; a missing file is an empty index.
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(SCENES_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Parse {
                record: path.display().to_string(),
                message: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let path = root.join(SCENES_FILE);
        let text = crate::canonical::to_string(self).map_err(|e| Error::Validation(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }
}

/// Writes `images/NNNNNN.png`, the ground truth as `truth.json` and the scene
/// index under `root`. Image ids are assigned from 1 in input order; the
/// returned dataset is the ground truth exactly as it reads back.
pub fn save_scene_dataset(scenes: &[SyntheticScene], root: &Path) -> Result<Dataset> {
    let images_dir = root.join("images");
    fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
    let mut index = SceneIndex::default();
    let mut entries = Vec::with_capacity(scenes.len());
    for (i, scene) in scenes.iter().enumerate() {
        let id = i as u64 + 1;
        let file_name = format!("images/{id:06}.png");
        let path = root.join(&file_name);
        scene.raster.save(&path).map_err(|e| Error::Image {
            path: path.clone(),
            message: e.to_string(),
        })?;
        entries.push(AnnotatedImage::new(id, file_name.clone(), scene.meta.size).with_boxes(scene.meta.truth_boxes()));
        index.scenes.insert(file_name, scene.meta.clone());
    }
    let dataset = Dataset::new(entries)?;
    save_coco(&dataset, &root.join("truth.json"))?;
    index.save(root)?;
    canonical_dataset(&dataset)
}

fn load_one(img: &AnnotatedImage, root: &Path, scenes: &SceneIndex) -> Result<TrainingImage> {
    let path = root.join(&img.file_name);
    let decoded = image::open(&path).map_err(|e| Error::Image {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let mut raster = decoded.to_rgb8();
    let mut scene = scenes.scenes.get(&img.file_name).cloned();

    if let Some(c) = img.crop {
        if c.x + c.width > raster.width() || c.y + c.height > raster.height() {
            return Err(Error::Image {
                path,
                message: format!(
                    "crop {}x{}+{}+{} exceeds {}x{}",
                    c.width,
                    c.height,
                    c.x,
                    c.y,
                    raster.width(),
                    raster.height()
                ),
            });
        }
        raster = image::imageops::crop_imm(&raster, c.x, c.y, c.width, c.height).to_image();
        scene = scene.map(|s| s.crop(c.x, c.y, img.size, MIN_VISIBLE_AREA));
    }
    if raster.width() != img.size.width || raster.height() != img.size.height {
        return Err(Error::Image {
            path,
            message: format!(
                "pixels are {}x{} but the record says {}x{}",
                raster.width(),
                raster.height(),
                img.size.width,
                img.size.height
            ),
        });
    }
    Ok(TrainingImage {
        image_id: img.image_id,
        raster: Arc::new(raster),
        scene: scene.map(Arc::new),
        path: Some(path),
    })
}

/// Loads the pixels of every image in `dataset` (relative to `root`),
/// applying crop windows and attaching scene metadata where available.
pub fn load_training_images(dataset: &Dataset, root: &Path, scenes: &SceneIndex) -> Result<Vec<TrainingImage>> {
    dataset
        .images
        .par_iter()
        .map(|img| load_one(img, root, scenes))
        .collect()
}
