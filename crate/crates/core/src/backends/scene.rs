//! Desk-scale stand-in for H&E patches: purple-family ellipses ("nuclei")
//! on a textured pink background, with the attribute labels each object
//! would be described by.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, ImageSize};

pub const NOUN: &str = "nuclei";

const BACKGROUND: [f64; 3] = [232.0, 196.0, 214.0];
const MAX_PLACEMENT_ATTEMPTS: usize = 400;

/// Shape degrees for round objects, with sampling weights, and the axis ratio
/// (minor / major) each one renders with.
const SHAPE_DEGREES: [(&str, f64, f64); 3] = [
    ("slightly", 0.5, 0.78),
    ("moderately", 0.3, 0.87),
    ("mostly", 0.2, 0.95),
];
/// Color degrees within the purple family, with sampling weights and RGB.
const COLOR_DEGREES: [(&str, f64, [u8; 3]); 3] = [
    ("dark", 0.5, [85, 35, 115]),
    ("rich", 0.3, [118, 38, 158]),
    ("vibrant", 0.2, [150, 70, 205]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// Objects never overlap.
    Sparse,
    /// Objects are placed independently and may overlap.
    Dense,
}

impl std::str::FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(Density::Sparse),
            "dense" => Ok(Density::Dense),
            other => Err(Error::Validation(format!("unknown density {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub size: ImageSize,
    pub n_objects: usize,
    pub density: Density,
    /// Share of objects drawn elongated instead of round.
    pub elongated_fraction: f64,
    /// Semi-major axis range in pixels.
    pub radius: (f64, f64),
}

impl SceneParams {
    pub fn new(size: ImageSize, n_objects: usize, density: Density) -> Self {
        Self {
            size,
            n_objects,
            density,
            elongated_fraction: 0.1,
            radius: (6.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub bbox: BBox,
    pub center: (f64, f64),
    /// Semi-major and semi-minor axes.
    pub axes: (f64, f64),
    /// Rotation of the major axis, radians.
    pub angle: f64,
    pub rgb: [u8; 3],
    pub shape: String,
    pub shape_degree: Option<String>,
    pub color: String,
    pub color_degree: Option<String>,
}

impl SceneObject {
    /// Attribute phrases that describe this object, noun first.
    pub fn labels(&self, noun: &str) -> Vec<String> {
        let mut out = vec![noun.to_string(), self.shape.clone(), self.color.clone()];
        if let Some(d) = &self.shape_degree {
            out.push(format!("{d} {}", self.shape));
        }
        if let Some(d) = &self.color_degree {
            out.push(format!("{d} {}", self.color));
        }
        out
    }

    /// Individual words across all labels, deduplicated in order.
    pub fn label_words(&self, noun: &str) -> Vec<String> {
        let mut words: Vec<String> = Vec::new();
        for label in self.labels(noun) {
            for w in label.split_whitespace() {
                if !words.iter().any(|x| x == w) {
                    words.push(w.to_string());
                }
            }
        }
        words
    }

    fn covers(&self, px: f64, py: f64) -> bool {
        let (dx, dy) = (px - self.center.0, py - self.center.1);
        let (s, c) = self.angle.sin_cos();
        let u = (dx * c + dy * s) / self.axes.0;
        let v = (-dx * s + dy * c) / self.axes.1;
        u * u + v * v <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub seed: u64,
    pub size: ImageSize,
    pub noun: String,
    pub objects: Vec<SceneObject>,
}

impl SceneMeta {
    pub fn truth_boxes(&self) -> Vec<BBox> {
        self.objects.iter().map(|o| o.bbox).collect()
    }

    /// The scene as seen through a pixel window: objects are clipped and
    /// shifted into window coordinates, and slivers below `min_area` dropped.
    pub fn crop(&self, x: u32, y: u32, size: ImageSize, min_area: f64) -> SceneMeta {
        let window = BBox::new(x as f64, y as f64, (x + size.width) as f64, (y + size.height) as f64);
        let objects = self
            .objects
            .iter()
            .filter_map(|o| {
                let b = BBox::new(
                    o.bbox.x_min.max(window.x_min),
                    o.bbox.y_min.max(window.y_min),
                    o.bbox.x_max.min(window.x_max),
                    o.bbox.y_max.min(window.y_max),
                );
                if b.width() <= 0.0 || b.height() <= 0.0 || b.area() < min_area {
                    return None;
                }
                Some(SceneObject {
                    bbox: b.translate(-window.x_min, -window.y_min),
                    center: (o.center.0 - window.x_min, o.center.1 - window.y_min),
                    ..o.clone()
                })
            })
            .collect();
        SceneMeta {
            seed: mix_seed(self.seed, &[0xC809, x as u64, y as u64]),
            size,
            noun: self.noun.clone(),
            objects,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub meta: SceneMeta,
    pub raster: RgbImage,
}

/// Deterministic 64-bit mix of a seed with stream identifiers (splitmix64).
pub(crate) fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(p).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, table: &'a [(&'a str, f64, T)]) -> &'a (&'a str, f64, T) {
    let total: f64 = table.iter().map(|e| e.1).sum();
    let mut u = rng.random::<f64>() * total;
    for entry in table {
        if u < entry.1 {
            return entry;
        }
        u -= entry.1;
    }
    &table[table.len() - 1]
}

fn sample_object(rng: &mut ChaCha8Rng, params: &SceneParams) -> SceneObject {
    let major = rng.random_range(params.radius.0..=params.radius.1);
    let elongated = rng.random::<f64>() < params.elongated_fraction;
    let (shape, shape_degree, ratio) = if elongated {
        ("elongated", None, rng.random_range(0.42..0.55))
    } else {
        let (d, _, r) = *pick(rng, &SHAPE_DEGREES);
        ("round", Some(d.to_string()), r)
    };
    let (color_degree, _, rgb) = *pick(rng, &COLOR_DEGREES);
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    let minor = major * ratio;

    let (s, c) = angle.sin_cos();
    let half_w = ((major * c).powi(2) + (minor * s).powi(2)).sqrt();
    let half_h = ((major * s).powi(2) + (minor * c).powi(2)).sqrt();
    let (w, h) = (params.size.width as f64, params.size.height as f64);
    let cx = rng.random_range(half_w..=(w - half_w));
    let cy = rng.random_range(half_h..=(h - half_h));

    SceneObject {
        bbox: BBox::new(cx - half_w, cy - half_h, cx + half_w, cy + half_h),
        center: (cx, cy),
        axes: (major, minor),
        angle,
        rgb,
        shape: shape.into(),
        shape_degree,
        color: "purple".into(),
        color_degree: Some(color_degree.into()),
    }
}

fn render(meta: &SceneMeta, rng: &mut ChaCha8Rng) -> RgbImage {
    let (w, h) = (meta.size.width, meta.size.height);
    let phase: (f64, f64) = (rng.random_range(0.0..6.3), rng.random_range(0.0..6.3));
    let mut img = RgbImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let texture = 6.0 * ((px / 9.0 + phase.0).sin() * (py / 13.0 + phase.1).cos());
            let noise = rng.random_range(-6.0..6.0);
            let base = match meta.objects.iter().rev().find(|o| o.covers(px, py)) {
                Some(o) => o.rgb.map(|v| v as f64),
                None => BACKGROUND.map(|v| v + texture),
            };
            let pixel = base.map(|v| (v + noise).round().clamp(0.0, 255.0) as u8);
            img.put_pixel(x, y, Rgb(pixel));
        }
    }
    img
}

pub fn generate_scene(seed: u64, n_objects: usize, size: ImageSize, density: Density) -> Result<SyntheticScene> {
    generate_scene_with(seed, &SceneParams::new(size, n_objects, density))
}

/// `count` scenes whose seeds derive from `seed` and their position, so a
/// set is reproducible and any prefix of it is stable.
pub fn generate_scenes(seed: u64, count: usize, params: &SceneParams) -> Result<Vec<SyntheticScene>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| generate_scene_with(mix_seed(seed, &[0x5E75, i]), params))
        .collect()
}

pub fn generate_scene_with(seed: u64, params: &SceneParams) -> Result<SyntheticScene> {
    if params.n_objects == 0 {
        return Err(Error::Validation("a scene needs at least one object".into()));
    }
    let diameter = 2.0 * params.radius.1;
    if diameter > params.size.width as f64 || diameter > params.size.height as f64 {
        return Err(Error::Validation(format!(
            "objects of radius {} do not fit a {}x{} image",
            params.radius.1, params.size.width, params.size.height
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[0x5CE7E]));
    let mut objects: Vec<SceneObject> = Vec::with_capacity(params.n_objects);
    for i in 0..params.n_objects {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let candidate = sample_object(&mut rng, params);
            let clear = params.density == Density::Dense
                || objects.iter().all(|o| o.bbox.intersection_area(&candidate.bbox) == 0.0);
            if clear {
                placed = Some(candidate);
                break;
            }
        }
        let obj = placed.ok_or_else(|| {
            Error::Validation(format!(
                "could not place object {} of {} without overlap",
                i + 1,
                params.n_objects
            ))
        })?;
        objects.push(obj);
    }
    let meta = SceneMeta {
        seed,
        size: params.size,
        noun: NOUN.into(),
        objects,
    };
    let raster = render(&meta, &mut rng);
    Ok(SyntheticScene { meta, raster })
}
