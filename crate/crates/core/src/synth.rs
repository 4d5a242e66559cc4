//! Seeded synthetic colour scenes with natural-image-like statistics: smooth
//! shading, soft-edged shapes and correlated colour planes.

use crate::image::Image;
use crate::stream::{KeyStream, RandomStream};

struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    amp: f64,
}

struct Disc {
    cx: f64,
    cy: f64,
    r: f64,
    level: f64,
    tint: [f64; 3],
}

/// A `width` x `height` scene determined by `seed`.
pub fn scene(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = RandomStream::derived(&[0x5CE7E, seed]);
    let scale = width.max(height) as f64;
    let waves: Vec<Wave> = (0..5)
        .map(|i| {
            let angle = rng.unit() * std::f64::consts::TAU;
            let freq = (1.0 + rng.unit() * 3.0 * (i + 1) as f64) / scale;
            Wave {
                fx: angle.cos() * freq * std::f64::consts::TAU,
                fy: angle.sin() * freq * std::f64::consts::TAU,
                phase: rng.unit() * std::f64::consts::TAU,
                amp: 40.0 / (i + 1) as f64,
            }
        })
        .collect();
    let discs: Vec<Disc> = (0..6)
        .map(|_| Disc {
            cx: rng.unit() * width as f64,
            cy: rng.unit() * height as f64,
            r: (0.08 + rng.unit() * 0.25) * scale,
            level: rng.unit() * 90.0 - 45.0,
            tint: [rng.unit() * 30.0 - 15.0, rng.unit() * 30.0 - 15.0, rng.unit() * 30.0 - 15.0],
        })
        .collect();
    let gain = [0.9 + rng.unit() * 0.2, 0.9 + rng.unit() * 0.2, 0.8 + rng.unit() * 0.2];
    let offset = [rng.unit() * 40.0 - 20.0, rng.unit() * 40.0 - 20.0, rng.unit() * 40.0 - 20.0];
    let tilt = (rng.unit() - 0.5) * 80.0 / scale;

    Image::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut lum = 120.0 + tilt * (yf - xf);
        for w in &waves {
            lum += w.amp * (w.fx * xf + w.fy * yf + w.phase).sin();
        }
        let mut tint = [0.0; 3];
        for d in &discs {
            let dist = ((xf - d.cx).powi(2) + (yf - d.cy).powi(2)).sqrt();
            let t = 1.0 / (1.0 + ((dist - d.r) / 1.5).exp());
            lum += d.level * t;
            for c in 0..3 {
                tint[c] += d.tint[c] * t;
            }
        }
        std::array::from_fn(|c| (gain[c] * lum + offset[c] + tint[c]).round().clamp(0.0, 255.0) as u8)
    })
}
