//! Debug overlay: tinted mask, contact crosshair and direction arrow.

use image::{Rgb, RgbImage};
use manipkit_core::raster::{BinaryMask, PixelCoord};
use nalgebra::Vector3;

const MASK_TINT: Rgb<u8> = Rgb([255, 200, 0]);
const CONTACT: Rgb<u8> = Rgb([255, 0, 0]);
const ARROW: Rgb<u8> = Rgb([0, 255, 255]);

/// Arrow length in pixels for a direction lying in the image plane.
const ARROW_LEN: f64 = 24.0;

fn blend(a: Rgb<u8>, b: Rgb<u8>) -> Rgb<u8> {
    Rgb([0, 1, 2].map(|i| ((a[i] as u16 + b[i] as u16) / 2) as u8))
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn line(img: &mut RgbImage, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb<u8>) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x0, y0, c);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Draw onto `base`. `direction` is in the camera frame; its `(x, y)` part
/// is drawn as an arrow from the contact. A direction along the optical
/// axis is drawn as a small ring.
pub fn draw(mut base: RgbImage, mask: &BinaryMask, contact: PixelCoord, direction: &Vector3<f64>) -> RgbImage {
    for p in mask.foreground() {
        let px = *base.get_pixel(p.x as u32, p.y as u32);
        base.put_pixel(p.x as u32, p.y as u32, blend(px, MASK_TINT));
    }
    let (cx, cy) = (contact.x as i64, contact.y as i64);
    line(&mut base, (cx - 5, cy), (cx + 5, cy), CONTACT);
    line(&mut base, (cx, cy - 5), (cx, cy + 5), CONTACT);

    let planar = (direction.x * direction.x + direction.y * direction.y).sqrt();
    if planar < 0.05 {
        for k in 0..16 {
            let a = k as f64 * std::f64::consts::TAU / 16.0;
            put(&mut base, cx + (3.0 * a.cos()).round() as i64, cy + (3.0 * a.sin()).round() as i64, ARROW);
        }
        return base;
    }
    let (ux, uy) = (direction.x / planar, direction.y / planar);
    let len = ARROW_LEN * planar.max(0.3);
    let tip = (cx + (ux * len).round() as i64, cy + (uy * len).round() as i64);
    line(&mut base, (cx, cy), tip, ARROW);
    for side in [-1.0, 1.0] {
        let (c, s) = (0.8_f64.cos(), side * 0.8_f64.sin());
        let (bx, by) = (-(ux * c - uy * s), -(ux * s + uy * c));
        line(&mut base, tip, (tip.0 + (bx * 6.0).round() as i64, tip.1 + (by * 6.0).round() as i64), ARROW);
    }
    base
}
