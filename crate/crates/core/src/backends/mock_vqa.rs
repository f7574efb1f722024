use image::RgbImage;

use super::CaptionVqaBackend;
use crate::error::BackendError;

/// Eccentricity at or above which a blob is answered as "elongated".
pub const ECCENTRICITY_SPLIT: f64 = 0.8;
/// Pixels darker than this luminance count as stained foreground.
const INK_LUMA: f64 = 170.0;
/// Below this share of foreground pixels the patch is treated as background.
const MIN_INK_SHARE: f64 = 0.03;

/// Answers color and shape questions from patch pixels: the dominant hue of
/// the stained pixels names the color, the eccentricity of their second
/// moments names the shape.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockVqa;

fn luma(p: &[u8; 3]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

fn hue_word(rgb: [f64; 3]) -> &'static str {
    let [r, g, b] = rgb.map(|v| v / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    if max == 0.0 || chroma / max < 0.12 {
        return if max > 0.8 {
            "white"
        } else if max < 0.2 {
            "black"
        } else {
            "gray"
        };
    }
    let hue = if max == r {
        60.0 * ((g - b) / chroma)
    } else if max == g {
        60.0 * ((b - r) / chroma) + 120.0
    } else {
        60.0 * ((r - g) / chroma) + 240.0
    }
    .rem_euclid(360.0);
    match hue {
        h if !(20.0..345.0).contains(&h) => "red",
        h if h < 45.0 => "orange",
        h if h < 70.0 => "yellow",
        h if h < 170.0 => "green",
        h if h < 255.0 => "blue",
        h if h < 300.0 => "purple",
        _ => "pink",
    }
}

struct Foreground {
    mean_rgb: [f64; 3],
    share: f64,
    eccentricity: f64,
}

fn foreground(patch: &RgbImage) -> Foreground {
    let total = (patch.width() as usize * patch.height() as usize).max(1);
    let mut n = 0.0;
    let mut rgb = [0.0; 3];
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y, p) in patch.enumerate_pixels() {
        if luma(&p.0) >= INK_LUMA {
            continue;
        }
        let (fx, fy) = (x as f64, y as f64);
        n += 1.0;
        for (sum, v) in rgb.iter_mut().zip(p.0) {
            *sum += v as f64;
        }
        sx += fx;
        sy += fy;
        sxx += fx * fx;
        syy += fy * fy;
        sxy += fx * fy;
    }
    if n == 0.0 {
        return Foreground {
            mean_rgb: [0.0; 3],
            share: 0.0,
            eccentricity: 0.0,
        };
    }
    let (mx, my) = (sx / n, sy / n);
    let cxx = sxx / n - mx * mx;
    let cyy = syy / n - my * my;
    let cxy = sxy / n - mx * my;
    let half_trace = 0.5 * (cxx + cyy);
    let disc = (0.25 * (cxx - cyy).powi(2) + cxy * cxy).sqrt();
    let (l1, l2) = (half_trace + disc, (half_trace - disc).max(0.0));
    Foreground {
        mean_rgb: rgb.map(|v| v / n),
        share: n / total as f64,
        eccentricity: if l1 > 0.0 { (1.0 - l2 / l1).sqrt() } else { 0.0 },
    }
}

fn mean_rgb(patch: &RgbImage) -> [f64; 3] {
    let n = (patch.width() as usize * patch.height() as usize).max(1) as f64;
    let mut acc = [0.0; 3];
    for p in patch.pixels() {
        for (sum, v) in acc.iter_mut().zip(p.0) {
            *sum += v as f64;
        }
    }
    acc.map(|v| v / n)
}

impl CaptionVqaBackend for MockVqa {
    fn answer(&self, patch: &RgbImage, question: &str) -> Result<String, BackendError> {
        let q = question.to_lowercase();
        let fg = foreground(patch);
        let has_ink = fg.share >= MIN_INK_SHARE;
        let answer = if q.contains("color") || q.contains("colour") {
            hue_word(if has_ink { fg.mean_rgb } else { mean_rgb(patch) })
        } else if q.contains("shape") {
            if !has_ink {
                "irregular"
            } else if fg.eccentricity >= ECCENTRICITY_SPLIT {
                "elongated"
            } else {
                "round"
            }
        } else {
            "unknown"
        };
        Ok(answer.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn ellipse_patch(a: f64, b: f64, ink: [u8; 3]) -> RgbImage {
        RgbImage::from_fn(40, 40, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - 20.0, y as f64 + 0.5 - 20.0);
            if (dx / a).powi(2) + (dy / b).powi(2) <= 1.0 {
                Rgb(ink)
            } else {
                Rgb([232, 196, 214])
            }
        })
    }

    const COLOR_Q: &str = "what is the color of the nuclei";
    const SHAPE_Q: &str = "what is the shape of the nuclei";

    #[test]
    fn purple_patch_is_purple() {
        let patch = ellipse_patch(12.0, 11.0, [85, 35, 115]);
        assert_eq!(MockVqa.answer(&patch, COLOR_Q).unwrap(), "purple");
        assert_eq!(MockVqa.answer(&patch, SHAPE_Q).unwrap(), "round");
    }

    #[test]
    fn stretched_blob_is_elongated() {
        let patch = ellipse_patch(16.0, 6.0, [118, 38, 158]);
        assert_eq!(MockVqa.answer(&patch, SHAPE_Q).unwrap(), "elongated");
    }

    #[test]
    fn background_only_patch() {
        let patch = RgbImage::from_pixel(10, 10, Rgb([232, 196, 214]));
        assert_eq!(MockVqa.answer(&patch, COLOR_Q).unwrap(), "pink");
        assert_eq!(MockVqa.answer(&patch, SHAPE_Q).unwrap(), "irregular");
    }

    #[test]
    fn deterministic() {
        let patch = ellipse_patch(9.0, 7.0, [150, 70, 205]);
        let first = MockVqa.answer(&patch, COLOR_Q).unwrap();
        assert_eq!(first, MockVqa.answer(&patch, COLOR_Q).unwrap());
    }

    #[test]
    fn hue_buckets() {
        assert_eq!(hue_word([200.0, 30.0, 30.0]), "red");
        assert_eq!(hue_word([30.0, 30.0, 200.0]), "blue");
        assert_eq!(hue_word([30.0, 200.0, 30.0]), "green");
        assert_eq!(hue_word([128.0, 128.0, 128.0]), "gray");
    }
}
