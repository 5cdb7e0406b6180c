//! Procedurally rendered digit glyphs, so training and tests can run without
//! the MNIST files.
//!
//! Each class is a fixed set of polylines in a unit box. Per sample the glyph
//! is scaled, sheared, its control points jittered, then translated by up to
//! ±3 px and stroked with a radius between 1 and 3 px.

use super::{Dataset, IMAGE_PIXELS, IMAGE_SIDE, NUM_CLASSES};
use crate::rng::SplitMix64;

type Stroke = &'static [(f64, f64)];

const ZERO: &[Stroke] = &[&[
    (0.5, 0.0),
    (0.8, 0.12),
    (0.9, 0.5),
    (0.8, 0.88),
    (0.5, 1.0),
    (0.2, 0.88),
    (0.1, 0.5),
    (0.2, 0.12),
    (0.5, 0.0),
]];
const ONE: &[Stroke] = &[&[(0.3, 0.2), (0.55, 0.0), (0.55, 1.0)]];
const TWO: &[Stroke] = &[&[
    (0.15, 0.2),
    (0.35, 0.0),
    (0.7, 0.0),
    (0.85, 0.2),
    (0.8, 0.42),
    (0.15, 1.0),
    (0.9, 1.0),
]];
const THREE: &[Stroke] = &[&[
    (0.15, 0.05),
    (0.8, 0.05),
    (0.45, 0.45),
    (0.8, 0.6),
    (0.82, 0.85),
    (0.55, 1.0),
    (0.15, 0.92),
]];
const FOUR: &[Stroke] = &[&[(0.7, 1.0), (0.7, 0.0), (0.1, 0.65), (0.9, 0.65)]];
const FIVE: &[Stroke] = &[&[
    (0.85, 0.0),
    (0.2, 0.0),
    (0.15, 0.45),
    (0.6, 0.4),
    (0.85, 0.6),
    (0.8, 0.9),
    (0.5, 1.0),
    (0.15, 0.9),
]];
const SIX: &[Stroke] = &[&[
    (0.75, 0.0),
    (0.3, 0.3),
    (0.15, 0.7),
    (0.3, 1.0),
    (0.7, 1.0),
    (0.85, 0.75),
    (0.65, 0.5),
    (0.3, 0.55),
    (0.18, 0.7),
]];
const SEVEN: &[Stroke] = &[&[(0.1, 0.0), (0.9, 0.0), (0.4, 1.0)]];
const EIGHT: &[Stroke] = &[
    &[
        (0.5, 0.0),
        (0.78, 0.12),
        (0.72, 0.36),
        (0.5, 0.46),
        (0.28, 0.36),
        (0.22, 0.12),
        (0.5, 0.0),
    ],
    &[
        (0.5, 0.46),
        (0.85, 0.62),
        (0.8, 0.9),
        (0.5, 1.0),
        (0.2, 0.9),
        (0.15, 0.62),
        (0.5, 0.46),
    ],
];
const NINE: &[Stroke] = &[
    &[
        (0.82, 0.3),
        (0.7, 0.05),
        (0.45, 0.0),
        (0.2, 0.12),
        (0.2, 0.4),
        (0.45, 0.52),
        (0.82, 0.3),
    ],
    &[(0.82, 0.3), (0.72, 1.0)],
];

const GLYPHS: [&[Stroke]; NUM_CLASSES] =
    [ZERO, ONE, TWO, THREE, FOUR, FIVE, SIX, SEVEN, EIGHT, NINE];

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (cx * cx + cy * cy).sqrt()
}

fn render(label: usize, rng: &mut SplitMix64, out: &mut [u8]) {
    let box_side = 18.0 * (0.85 + 0.25 * rng.next_f64());
    let aspect = 0.75 + 0.35 * rng.next_f64();
    let shear = (rng.next_f64() - 0.5) * 0.4;
    let shift_x = rng.below(7) as f64 - 3.0;
    let shift_y = rng.below(7) as f64 - 3.0;
    let radius = 1.0 + 2.0 * rng.next_f64();
    let (ox, oy) = (14.0 + shift_x, 14.0 + shift_y);

    let strokes: Vec<Vec<(f64, f64)>> = GLYPHS[label]
        .iter()
        .map(|s| {
            s.iter()
                .map(|&(u, v)| {
                    let u = u + (rng.next_f64() - 0.5) * 0.08;
                    let v = v + (rng.next_f64() - 0.5) * 0.08;
                    let y = (v - 0.5) * box_side;
                    let x = (u - 0.5) * box_side * aspect - shear * y;
                    (ox + x, oy + y)
                })
                .collect()
        })
        .collect();

    for py in 0..IMAGE_SIDE {
        for px in 0..IMAGE_SIDE {
            let p = (px as f64 + 0.5, py as f64 + 0.5);
            let d = strokes
                .iter()
                .flat_map(|s| s.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
                .fold(f64::INFINITY, f64::min);
            let level = (radius + 0.5 - d).clamp(0.0, 1.0);
            out[py * IMAGE_SIDE + px] = (level * 255.0).round() as u8;
        }
    }
}

/// `n` glyphs with labels cycling 0..9, so every class gets `n/10` (±1).
pub fn synthetic_digits(n: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let mut images = vec![0u8; n * IMAGE_PIXELS];
    let mut labels = Vec::with_capacity(n);
    for (i, img) in images.chunks_exact_mut(IMAGE_PIXELS).enumerate() {
        let label = i % NUM_CLASSES;
        render(label, &mut rng, img);
        labels.push(label as u8);
    }
    Dataset::new(format!("synthetic[{n}@{seed}]"), images, labels).expect("labels are digits")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_classes() {
        assert_eq!(synthetic_digits(100, 5).class_counts(), [10; 10]);
    }

    #[test]
    fn deterministic() {
        assert_eq!(synthetic_digits(30, 5), synthetic_digits(30, 5));
        assert_ne!(
            synthetic_digits(30, 5).images(),
            synthetic_digits(30, 6).images()
        );
    }

    #[test]
    fn glyphs_have_ink_inside_the_frame() {
        let d = synthetic_digits(50, 11);
        for i in 0..d.len() {
            let ink = d.image(i).iter().filter(|&&p| p > 128).count();
            assert!(ink > 20 && ink < 400, "sample {i} has {ink} inked pixels");
        }
    }
}
