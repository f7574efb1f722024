//! Box overlays: green true positives, red false positives and yellow
//! missed truths at IoU 0.5. Without truth every prediction is cyan.

use attrikit::metrics::match_greedy;
use attrikit::BBox;
use image::{Rgb, RgbImage};

pub const TP: Rgb<u8> = Rgb([0, 200, 0]);
pub const FP: Rgb<u8> = Rgb([220, 0, 0]);
pub const FN: Rgb<u8> = Rgb([240, 220, 0]);
pub const UNVERIFIED: Rgb<u8> = Rgb([0, 200, 220]);

const MATCH_IOU: f64 = 0.5;
const STROKE: i64 = 2;

fn draw_rect(img: &mut RgbImage, b: &BBox, color: Rgb<u8>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    if w == 0 || h == 0 {
        return;
    }
    let x0 = (b.x_min.floor() as i64).clamp(0, w - 1);
    let y0 = (b.y_min.floor() as i64).clamp(0, h - 1);
    let x1 = ((b.x_max.ceil() as i64) - 1).clamp(0, w - 1);
    let y1 = ((b.y_max.ceil() as i64) - 1).clamp(0, h - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let edge = x - x0 < STROKE || x1 - x < STROKE || y - y0 < STROKE || y1 - y < STROKE;
            if edge {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

pub fn render(base: &RgbImage, preds: &[BBox], truth: Option<&[BBox]>) -> RgbImage {
    let mut img = base.clone();
    match truth {
        None => preds.iter().for_each(|b| draw_rect(&mut img, b, UNVERIFIED)),
        Some(truths) => {
            let m = match_greedy(preds, truths, MATCH_IOU);
            for (b, hit) in preds.iter().zip(&m.pred_to_truth) {
                draw_rect(&mut img, b, if hit.is_some() { TP } else { FP });
            }
            for (t, hit) in truths.iter().zip(&m.truth_to_pred) {
                if hit.is_none() {
                    draw_rect(&mut img, t, FN);
                }
            }
        }
    }
    img
}
