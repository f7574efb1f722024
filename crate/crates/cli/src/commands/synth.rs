use attrikit::backends::{generate_scenes, save_scene_dataset, SceneParams};
use attrikit::labels::save_coco;
use attrikit::ImageSize;

use super::out_dir;
use crate::args::SynthArgs;
use crate::config::RunConfig;
use crate::error::{config, CliResult};

pub fn run(cfg: &RunConfig, args: &SynthArgs) -> CliResult<()> {
    let mut s = cfg.synth.clone();
    if let Some(c) = args.count {
        s.count = c;
    }
    if let Some(z) = args.size {
        s.size = z;
    }
    if let Some(o) = args.objects {
        s.objects = o;
    }
    if let Some(d) = &args.density {
        s.density = d.parse().map_err(|e: attrikit::Error| config(e.to_string()))?;
    }
    if s.count == 0 {
        return Err(config("count must be at least 1"));
    }
    let size = ImageSize::new(s.size, s.size).map_err(|e| config(e.to_string()))?;
    let params = SceneParams::new(size, s.objects, s.density);
    let scenes = generate_scenes(cfg.seed, s.count, &params).map_err(|e| config(e.to_string()))?;

    let out = out_dir(cfg)?;
    let truth = save_scene_dataset(&scenes, out)?;
    save_coco(&truth.without_boxes(), &out.join(&cfg.images))?;
    eprintln!(
        "wrote {} scenes ({} nuclei) to {}",
        truth.images.len(),
        truth.box_count(),
        out.display()
    );
    Ok(())
}
