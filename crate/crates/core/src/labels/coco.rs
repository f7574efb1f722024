use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AnnotatedImage, CropWindow, Dataset};
use crate::canonical;
use crate::error::{Error, Result};
use crate::geometry::{BBox, ImageSize};

pub const CATEGORY_ID: u64 = 1;
pub const CATEGORY_NAME: &str = "nucleus";

#[derive(Debug, Serialize, Deserialize)]
struct CocoImage {
    id: u64,
    file_name: String,
    width: u32,
    height: u32,
    /// `[x, y, w, h]` window inside `file_name`; absent for whole files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crop: Option<[u32; 4]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CocoAnnotation {
    id: u64,
    image_id: u64,
    #[serde(default = "default_category")]
    category_id: u64,
    bbox: [f64; 4],
    #[serde(default)]
    area: f64,
    #[serde(default)]
    iscrowd: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CocoResult {
    image_id: u64,
    #[serde(default = "default_category")]
    category_id: u64,
    bbox: [f64; 4],
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CocoCategory {
    id: u64,
    name: String,
}

#[derive(Debug, Serialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory>,
}

fn default_category() -> u64 {
    CATEGORY_ID
}

fn parse_record<T: DeserializeOwned>(value: &Value, record: impl Fn() -> String) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| Error::Parse {
        record: record(),
        message: e.to_string(),
    })
}

fn bbox_from_coco(xywh: [f64; 4], score: Option<f64>, record: impl Fn() -> String) -> Result<BBox> {
    let [x, y, w, h] = xywh;
    if w < 0.0 || h < 0.0 {
        return Err(Error::Parse {
            record: record(),
            message: format!("negative box extent {xywh:?}"),
        });
    }
    let b = BBox::from_xywh(x, y, w, h).with_score(score);
    b.validate().map_err(|e| Error::Parse {
        record: record(),
        message: e.to_string(),
    })?;
    Ok(b)
}

fn parse_images(images: &[Value], source: &str) -> Result<Vec<AnnotatedImage>> {
    images
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let rec = || format!("{source}: images[{i}]");
            let raw: CocoImage = parse_record(v, rec)?;
            let size = ImageSize::new(raw.width, raw.height).map_err(|e| Error::Parse {
                record: rec(),
                message: e.to_string(),
            })?;
            let mut img = AnnotatedImage::new(raw.id, raw.file_name, size);
            img.crop = raw.crop.map(|[x, y, width, height]| CropWindow { x, y, width, height });
            Ok(img)
        })
        .collect()
}

fn index_of(images: &[AnnotatedImage], source: &str) -> Result<HashMap<u64, usize>> {
    let mut index = HashMap::new();
    for (pos, img) in images.iter().enumerate() {
        if index.insert(img.image_id, pos).is_some() {
            return Err(Error::Parse {
                record: format!("{source}: image id {}", img.image_id),
                message: "duplicate image id".into(),
            });
        }
    }
    Ok(index)
}

/// Parses a COCO detection document. Annotation `score` fields, when
/// present, are carried onto the boxes.
pub fn dataset_from_coco_str(text: &str, source: &str) -> Result<Dataset> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        record: source.to_string(),
        message: e.to_string(),
    })?;
    let images = root
        .get("images")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse {
            record: source.to_string(),
            message: "missing \"images\" array".into(),
        })?;
    let mut images = parse_images(images, source)?;
    let index = index_of(&images, source)?;

    let empty = Vec::new();
    let annotations = match root.get("annotations") {
        None => &empty,
        Some(v) => v.as_array().ok_or_else(|| Error::Parse {
            record: source.to_string(),
            message: "\"annotations\" is not an array".into(),
        })?,
    };
    for (i, v) in annotations.iter().enumerate() {
        let rec = || format!("{source}: annotations[{i}]");
        let ann: CocoAnnotation = parse_record(v, rec)?;
        let rec = || format!("{source}: annotation id {}", ann.id);
        let pos = *index.get(&ann.image_id).ok_or_else(|| Error::Parse {
            record: rec(),
            message: format!("references unknown image_id {}", ann.image_id),
        })?;
        let b = bbox_from_coco(ann.bbox, ann.score, rec)?;
        images[pos].boxes.push(b);
    }
    Ok(Dataset { images })
}

pub fn load_coco(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dataset_from_coco_str(&text, &path.display().to_string())
}

/// Loads a COCO results array (`[{image_id, bbox, score}, ...]`) onto the
/// images of `reference`. A full dataset document is accepted as well.
pub fn load_coco_results(path: &Path, reference: &Dataset) -> Result<Dataset> {
    let source = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        record: source.clone(),
        message: e.to_string(),
    })?;
    let Some(results) = root.as_array() else {
        return dataset_from_coco_str(&text, &source);
    };
    let mut out = reference.without_boxes();
    let index = index_of(&out.images, &source)?;
    for (i, v) in results.iter().enumerate() {
        let rec = || format!("{source}: results[{i}]");
        let r: CocoResult = parse_record(v, rec)?;
        let pos = *index.get(&r.image_id).ok_or_else(|| Error::Parse {
            record: rec(),
            message: format!("references unknown image_id {}", r.image_id),
        })?;
        let b = bbox_from_coco(r.bbox, Some(r.score), rec)?;
        out.images[pos].boxes.push(b);
    }
    Ok(out)
}

/// Canonical COCO text for a dataset: annotation ids are assigned
/// sequentially in image order, then box order.
pub fn dataset_to_coco_string(dataset: &Dataset) -> Result<String> {
    let mut annotations = Vec::with_capacity(dataset.box_count());
    let mut next_id = 1;
    for img in &dataset.images {
        for b in &img.boxes {
            // area from the extents as written, so a reload reproduces it
            let bbox = b.to_xywh().map(canonical::round_sig);
            annotations.push(CocoAnnotation {
                id: next_id,
                image_id: img.image_id,
                category_id: CATEGORY_ID,
                bbox,
                area: bbox[2] * bbox[3],
                iscrowd: 0,
                score: b.score,
            });
            next_id += 1;
        }
    }
    let file = CocoFile {
        images: dataset
            .images
            .iter()
            .map(|i| CocoImage {
                id: i.image_id,
                file_name: i.file_name.clone(),
                width: i.size.width,
                height: i.size.height,
                crop: i.crop.map(|c| [c.x, c.y, c.width, c.height]),
            })
            .collect(),
        annotations,
        categories: vec![CocoCategory {
            id: CATEGORY_ID,
            name: CATEGORY_NAME.into(),
        }],
    };
    canonical::to_string(&file).map_err(|e| Error::Validation(e.to_string()))
}

/// The dataset exactly as it reads back from its canonical COCO text. This is
/// a fixed point: persisting and reloading the result changes nothing.
pub fn canonical_dataset(dataset: &Dataset) -> Result<Dataset> {
    dataset_from_coco_str(&dataset_to_coco_string(dataset)?, "canonical form")
}

pub fn save_coco(dataset: &Dataset, path: &Path) -> Result<()> {
    let text = dataset_to_coco_string(dataset)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
