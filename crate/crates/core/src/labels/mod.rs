//! Ground-truth and pseudo-label datasets: COCO ingestion and emission,
//! score filtering with the per-image cap, patch tiling and the
//! nearest-IoU quality diagnostic.

mod coco;
mod filter;
mod quality;
mod tiling;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, ImageSize};

pub use coco::{
    canonical_dataset, dataset_from_coco_str, dataset_to_coco_string, load_coco, load_coco_results, save_coco,
    CATEGORY_ID, CATEGORY_NAME,
};
pub use filter::{filter_and_cap, DEFAULT_CAP, DEFAULT_SCORE_THRESHOLD};
pub use quality::{miou_nearest, miou_nearest_dataset};
pub use tiling::{tile_dataset, TileSpec, MIN_VISIBLE_AREA};

/// Pixel window of a source image that an entry refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropWindow {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedImage {
    pub image_id: u64,
    /// Path relative to the dataset root.
    pub file_name: String,
    pub size: ImageSize,
    pub boxes: Vec<BBox>,
    /// Set when the entry is a patch of `file_name` rather than the whole file.
    pub crop: Option<CropWindow>,
}

impl AnnotatedImage {
    pub fn new(image_id: u64, file_name: impl Into<String>, size: ImageSize) -> Self {
        Self {
            image_id,
            file_name: file_name.into(),
            size,
            boxes: Vec::new(),
            crop: None,
        }
    }

    pub fn with_boxes(mut self, boxes: Vec<BBox>) -> Self {
        self.boxes = boxes;
        self
    }
}

/// An ordered set of images with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub images: Vec<AnnotatedImage>,
}

impl Dataset {
    pub fn new(images: Vec<AnnotatedImage>) -> Result<Self> {
        let ds = Self { images };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for img in &self.images {
            if !seen.insert(img.image_id) {
                return Err(Error::Validation(format!("duplicate image id {}", img.image_id)));
            }
            for b in &img.boxes {
                b.validate()
                    .map_err(|e| Error::Validation(format!("image {}: {e}", img.image_id)))?;
            }
        }
        Ok(())
    }

    pub fn get(&self, image_id: u64) -> Option<&AnnotatedImage> {
        self.images.iter().find(|i| i.image_id == image_id)
    }

    pub fn box_count(&self) -> usize {
        self.images.iter().map(|i| i.boxes.len()).sum()
    }

    /// Same images with every box list emptied.
    pub fn without_boxes(&self) -> Dataset {
        Dataset {
            images: self
                .images
                .iter()
                .map(|i| AnnotatedImage {
                    boxes: Vec::new(),
                    ..i.clone()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Teacher,
    Student,
}

/// Per-image training targets for one self-training round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    pub dataset: Dataset,
    pub round_index: usize,
    pub source: LabelSource,
}

impl PseudoLabelSet {
    pub fn new(dataset: Dataset, round_index: usize, source: LabelSource, cap: usize) -> Result<Self> {
        let set = Self {
            dataset,
            round_index,
            source,
        };
        set.validate(cap)?;
        Ok(set)
    }

    pub fn validate(&self, cap: usize) -> Result<()> {
        self.dataset.validate()?;
        if (self.round_index == 0) != (self.source == LabelSource::Teacher) {
            return Err(Error::Validation(format!(
                "round {} cannot carry {:?} labels",
                self.round_index, self.source
            )));
        }
        if let Some(img) = self.dataset.images.iter().find(|i| i.boxes.len() > cap) {
            return Err(Error::Validation(format!(
                "image {} has {} pseudo labels, cap is {cap}",
                img.image_id,
                img.boxes.len()
            )));
        }
        Ok(())
    }

    pub fn images(&self) -> &[AnnotatedImage] {
        &self.dataset.images
    }

    pub fn box_count(&self) -> usize {
        self.dataset.box_count()
    }
}
