//! Axis-aligned boxes and the primitives every other module builds on:
//! IoU, greedy non-maximum suppression and clipping to an image frame.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An axis-aligned box in continuous corner coordinates (image frame).
///
/// Ground truth carries no score; detections and pseudo labels do. Zero-area
/// boxes are legal values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
            score: None,
        }
    }

    pub fn scored(x_min: f64, y_min: f64, x_max: f64, y_max: f64, score: f64) -> Self {
        Self {
            score: Some(score),
            ..Self::new(x_min, y_min, x_max, y_max)
        }
    }

    /// Builds a box from the COCO `[x, y, w, h]` layout.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self::new(x, y, x + w, y + h)
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.width(), self.height()]
    }

    pub fn with_score(mut self, score: Option<f64>) -> Self {
        self.score = score;
        self
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.corners().iter().all(|v| v.is_finite());
        if !finite || self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::Validation(format!("invalid box corners {:?}", self.corners())));
        }
        if let Some(s) = self.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Validation(format!("score {s} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        w.max(0.0) * h.max(0.0)
    }

    /// IoU without validation, for hot loops over boxes already checked.
    pub(crate) fn iou_unchecked(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub fn contains(&self, other: &BBox) -> bool {
        other.x_min >= self.x_min && other.y_min >= self.y_min && other.x_max <= self.x_max && other.y_max <= self.y_max
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
            score: self.score,
        }
    }
}

/// Image dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation(format!(
                "image size must be positive, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn frame(&self) -> BBox {
        BBox::new(0.0, 0.0, self.width as f64, self.height as f64)
    }

    pub fn fits_within(&self, other: &ImageSize) -> bool {
        self.width <= other.width && self.height <= other.height
    }
}

/// Intersection over union; 0 when both boxes are degenerate.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(a.iou_unchecked(b))
}

/// Orders scored boxes by descending score, keeping input order on ties.
pub(crate) fn score_order(boxes: &[BBox]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&i, &j| {
        let si = boxes[i].score.unwrap_or(0.0);
        let sj = boxes[j].score.unwrap_or(0.0);
        sj.partial_cmp(&si).unwrap_or(Ordering::Equal)
    });
    order
}

/// Greedy score-descending non-maximum suppression.
///
/// A box is suppressed when its IoU with an already kept box exceeds
/// `iou_threshold`. Equal scores keep the lower input index first.
pub fn nms(boxes: &[BBox], iou_threshold: f64) -> Result<Vec<BBox>> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::Validation(format!(
            "nms threshold {iou_threshold} outside [0, 1]"
        )));
    }
    for b in boxes {
        b.validate()?;
        if b.score.is_none() {
            return Err(Error::Validation("nms requires scored boxes".into()));
        }
    }

    let mut kept: Vec<BBox> = Vec::new();
    for i in score_order(boxes) {
        let candidate = boxes[i];
        if kept.iter().all(|k| k.iou_unchecked(&candidate) <= iou_threshold) {
            kept.push(candidate);
        }
    }
    Ok(kept)
}

/// Clamps a box to the image rectangle.
///
/// Fails when nothing of the box remains inside the frame, which includes
/// boxes that only touch the border.
pub fn clip_and_crop_rect(bbox: &BBox, image: ImageSize) -> Result<BBox> {
    bbox.validate()?;
    let (w, h) = (image.width as f64, image.height as f64);
    let clipped = BBox {
        x_min: bbox.x_min.clamp(0.0, w),
        y_min: bbox.y_min.clamp(0.0, h),
        x_max: bbox.x_max.clamp(0.0, w),
        y_max: bbox.y_max.clamp(0.0, h),
        score: bbox.score,
    };
    if clipped.area() <= 0.0 {
        return Err(Error::EmptyRegion(bbox.corners()));
    }
    Ok(clipped)
}
