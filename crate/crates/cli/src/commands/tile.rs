use attrikit::labels::{load_coco, save_coco, tile_dataset, TileSpec};
use attrikit::ImageSize;

use crate::args::TileArgs;
use crate::config::RunConfig;
use crate::error::{config, CliResult};

/// Tiled lists live in the dataset root because their file names are
/// relative to it.
pub const TILED_IMAGES: &str = "tiles_images.json";
pub const TILED_TRUTH: &str = "tiles_truth.json";

pub fn run(cfg: &RunConfig, args: &TileArgs) -> CliResult<()> {
    let root = cfg.dataset_root()?;
    let t = &cfg.tile;
    let side = |v: u32| ImageSize::new(v, v).map_err(|e| config(e.to_string()));
    let spec = TileSpec {
        tile: side(args.tile.unwrap_or(t.tile))?,
        tiles_per_image: args.per_image.unwrap_or(t.per_image),
        crop: side(args.crop.unwrap_or(t.crop))?,
        seed: cfg.seed,
    };
    let (source, with_truth) = match cfg.truth_path()? {
        Some(p) => (p, true),
        None => (cfg.images_path()?, false),
    };
    let tiles = tile_dataset(&load_coco(&source)?, &spec)?;
    save_coco(&tiles.without_boxes(), &root.join(TILED_IMAGES))?;
    if with_truth {
        save_coco(&tiles, &root.join(TILED_TRUTH))?;
    }
    eprintln!(
        "wrote {} tiles to {}",
        tiles.images.len(),
        root.join(TILED_IMAGES).display()
    );
    Ok(())
}
