use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnnotatedImage, CropWindow, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{BBox, ImageSize};

/// Clipped fragments smaller than this (px²) are dropped.
pub const MIN_VISIBLE_AREA: f64 = 4.0;

/// Overlapped grid tiling followed by one random crop per tile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileSpec {
    pub tile: ImageSize,
    /// Must be a perfect square; tiles form a `g × g` grid with equal overlap.
    pub tiles_per_image: u32,
    pub crop: ImageSize,
    pub seed: u64,
}

impl Default for TileSpec {
    fn default() -> Self {
        Self {
            tile: ImageSize {
                width: 256,
                height: 256,
            },
            tiles_per_image: 16,
            crop: ImageSize {
                width: 224,
                height: 224,
            },
            seed: 0,
        }
    }
}

fn grid_side(tiles: u32) -> Result<u32> {
    let g = (tiles as f64).sqrt().round() as u32;
    if g == 0 || g * g != tiles {
        return Err(Error::Validation(format!(
            "tiles_per_image must be a positive perfect square, got {tiles}"
        )));
    }
    Ok(g)
}

/// Evenly spaced tile origins covering `[0, len]` with `g` tiles of `tile`.
fn grid_offsets(len: u32, tile: u32, g: u32) -> Vec<u32> {
    if g == 1 {
        return vec![0];
    }
    let span = (len - tile) as f64;
    (0..g)
        .map(|k| (k as f64 * span / (g - 1) as f64).round() as u32)
        .collect()
}

fn crop_boxes(boxes: &[BBox], window: &BBox) -> Vec<BBox> {
    boxes
        .iter()
        .filter_map(|b| {
            let clipped = BBox {
                x_min: b.x_min.max(window.x_min),
                y_min: b.y_min.max(window.y_min),
                x_max: b.x_max.min(window.x_max),
                y_max: b.y_max.min(window.y_max),
                score: b.score,
            };
            (clipped.width() > 0.0 && clipped.height() > 0.0 && clipped.area() >= MIN_VISIBLE_AREA)
                .then(|| clipped.translate(-window.x_min, -window.y_min))
        })
        .collect()
}

/// Splits every image into an overlapped grid of tiles and takes one seeded
/// random crop from each. Output ids run from 1 in image, row, column order.
pub fn tile_dataset(dataset: &Dataset, spec: &TileSpec) -> Result<Dataset> {
    let g = grid_side(spec.tiles_per_image)?;
    if !spec.crop.fits_within(&spec.tile) {
        return Err(Error::Validation(format!(
            "crop {}x{} larger than tile {}x{}",
            spec.crop.width, spec.crop.height, spec.tile.width, spec.tile.height
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(dataset.images.len() * spec.tiles_per_image as usize);
    let mut next_id = 1;

    for img in &dataset.images {
        if !spec.tile.fits_within(&img.size) {
            return Err(Error::Validation(format!(
                "tile {}x{} larger than image {} ({}x{})",
                spec.tile.width, spec.tile.height, img.image_id, img.size.width, img.size.height
            )));
        }
        let xs = grid_offsets(img.size.width, spec.tile.width, g);
        let ys = grid_offsets(img.size.height, spec.tile.height, g);
        let (base_x, base_y) = img.crop.map(|c| (c.x, c.y)).unwrap_or((0, 0));

        for &ty in &ys {
            for &tx in &xs {
                let cx = tx + rng.random_range(0..=spec.tile.width - spec.crop.width);
                let cy = ty + rng.random_range(0..=spec.tile.height - spec.crop.height);
                let window = BBox::new(
                    cx as f64,
                    cy as f64,
                    (cx + spec.crop.width) as f64,
                    (cy + spec.crop.height) as f64,
                );
                out.push(AnnotatedImage {
                    image_id: next_id,
                    file_name: img.file_name.clone(),
                    size: spec.crop,
                    boxes: crop_boxes(&img.boxes, &window),
                    crop: Some(CropWindow {
                        x: base_x + cx,
                        y: base_y + cy,
                        width: spec.crop.width,
                        height: spec.crop.height,
                    }),
                });
                next_id += 1;
            }
        }
    }
    Ok(Dataset { images: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(w: u32, h: u32) -> ImageSize {
        ImageSize::new(w, h).unwrap()
    }

    fn source(w: u32, h: u32, boxes: Vec<BBox>) -> Dataset {
        Dataset::new(vec![AnnotatedImage::new(1, "src.png", size(w, h)).with_boxes(boxes)]).unwrap()
    }

    #[test]
    fn monuseg_layout_is_four_by_four() {
        let ds = source(1000, 1000, vec![]);
        let out = tile_dataset(&ds, &TileSpec::default()).unwrap();
        assert_eq!(out.images.len(), 16);
        assert_eq!(grid_offsets(1000, 256, 4), vec![0, 248, 496, 744]);
        for img in &out.images {
            assert_eq!(img.size, size(224, 224));
            let c = img.crop.unwrap();
            assert!(c.x + c.width <= 1000 && c.y + c.height <= 1000);
        }
    }

    #[test]
    fn interior_box_is_translated() {
        let spec = TileSpec {
            tile: size(50, 50),
            tiles_per_image: 4,
            crop: size(50, 50),
            seed: 3,
        };
        let ds = source(100, 100, vec![BBox::new(60., 10., 70., 20.)]);
        let out = tile_dataset(&ds, &spec).unwrap();
        // grid origin (50, 0) is the second tile in row-major order
        assert_eq!(out.images[1].boxes, vec![BBox::new(10., 10., 20., 20.)]);
        assert_eq!(out.box_count(), 1);
    }

    #[test]
    fn slivers_are_dropped() {
        let spec = TileSpec {
            tile: size(50, 50),
            tiles_per_image: 4,
            crop: size(50, 50),
            seed: 0,
        };
        // the first box leaves a 1x10 strip in the right-hand tile; the second
        // splits into four 1x1 corners, all below the minimum area
        let ds = source(
            100,
            100,
            vec![BBox::new(40., 10., 51., 20.), BBox::new(49., 49., 51., 51.)],
        );
        let out = tile_dataset(&ds, &spec).unwrap();
        assert_eq!(out.images[0].boxes, vec![BBox::new(40., 10., 50., 20.)]);
        assert_eq!(out.images[1].boxes, vec![BBox::new(0., 10., 1., 20.)]);
        assert!(out.images[2].boxes.is_empty());
        assert!(out.images[3].boxes.is_empty());
    }

    #[test]
    fn same_seed_same_output() {
        let ds = source(400, 300, vec![BBox::new(10., 10., 30., 30.)]);
        let spec = TileSpec {
            tile: size(128, 128),
            tiles_per_image: 9,
            crop: size(100, 100),
            seed: 11,
        };
        assert_eq!(tile_dataset(&ds, &spec).unwrap(), tile_dataset(&ds, &spec).unwrap());
        let other = TileSpec { seed: 12, ..spec };
        assert_ne!(tile_dataset(&ds, &spec).unwrap(), tile_dataset(&ds, &other).unwrap());
    }

    #[test]
    fn validation_errors() {
        let ds = source(100, 100, vec![]);
        let too_big = TileSpec {
            tile: size(256, 256),
            ..TileSpec::default()
        };
        assert!(tile_dataset(&ds, &too_big).is_err());
        let bad_grid = TileSpec {
            tile: size(50, 50),
            tiles_per_image: 5,
            crop: size(40, 40),
            seed: 0,
        };
        assert!(tile_dataset(&ds, &bad_grid).is_err());
        let bad_crop = TileSpec {
            tile: size(50, 50),
            tiles_per_image: 4,
            crop: size(60, 40),
            seed: 0,
        };
        assert!(tile_dataset(&ds, &bad_crop).is_err());
    }
}
