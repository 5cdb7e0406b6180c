//! The fixed bank of 41 general-purpose 3×3 image-processing kernels that
//! replaces the learned first convolution layer.
//!
//! Bank order: 32 compass operators (Roberts, Prewitt, Sobel, Frei-Chen, each
//! in 8 orientations), then the DCT basis, two Laplacians, three sharpen
//! kernels, emboss, and two blurs.
//!
//! All filtering here is cross-correlation: the kernel is not flipped.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const BANK_SIZE: usize = 41;

/// Clockwise ring of border cells, starting top-left.
pub const RING: [(usize, usize); 8] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (1, 2),
    (2, 2),
    (2, 1),
    (2, 0),
    (1, 0),
];

pub type Coeffs = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Sharpen,
    Emboss,
    Blur,
    Roberts,
    Prewitt,
    Sobel,
    FreiChen,
    SecondOrder,
    #[serde(rename = "DCT")]
    Dct,
}

impl Family {
    /// Families whose coefficients sum to zero; the rest sum to one.
    pub fn is_zero_sum(self) -> bool {
        !matches!(self, Family::Sharpen | Family::Emboss | Family::Blur)
    }

    pub fn is_compass(self) -> bool {
        matches!(
            self,
            Family::Roberts | Family::Prewitt | Family::Sobel | Family::FreiChen
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Sharpen => "Sharpen",
            Family::Emboss => "Emboss",
            Family::Blur => "Blur",
            Family::Roberts => "Roberts",
            Family::Prewitt => "Prewitt",
            Family::Sobel => "Sobel",
            Family::FreiChen => "FreiChen",
            Family::SecondOrder => "SecondOrder",
            Family::Dct => "DCT",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub name: String,
    pub family: Family,
    pub coeffs: Coeffs,
}

impl Kernel {
    pub fn new(name: impl Into<String>, family: Family, coeffs: Coeffs) -> Self {
        Self {
            name: name.into(),
            family,
            coeffs,
        }
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().flatten().sum()
    }

    pub fn min(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KernelBank {
    pub kernels: Vec<Kernel>,
}

impl KernelBank {
    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Kernel> {
        self.kernels.iter()
    }

    pub fn get(&self, name: &str) -> Option<&Kernel> {
        self.kernels.iter().find(|k| k.name == name)
    }

    pub fn family_count(&self, family: Family) -> usize {
        self.kernels.iter().filter(|k| k.family == family).count()
    }

    /// Coefficients in bank order, flattened row-major per kernel
    /// (`41 × 1 × 3 × 3` conv-weight layout).
    pub fn flat_coeffs(&self) -> Vec<f64> {
        self.kernels
            .iter()
            .flat_map(|k| k.coeffs.iter().flatten().copied())
            .collect()
    }

    /// CRC-32 over the little-endian single-precision coefficients, i.e. the
    /// values the network actually convolves with.
    pub fn checksum(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        for v in self.flat_coeffs() {
            h.update(&(v as f32).to_le_bytes());
        }
        h.finalize()
    }

    /// Checks the structural invariants of the canonical bank.
    pub fn validate(&self) -> Result<()> {
        if self.kernels.len() != BANK_SIZE {
            return Err(Error::Data(format!(
                "bank has {} kernels, expected {BANK_SIZE}",
                self.kernels.len()
            )));
        }
        for (family, want) in FAMILY_COUNTS {
            let got = self.family_count(family);
            if got != want {
                return Err(Error::Data(format!(
                    "bank has {got} {family} kernels, expected {want}"
                )));
            }
        }
        for k in &self.kernels {
            let target = if k.family.is_zero_sum() { 0.0 } else { 1.0 };
            if (k.sum() - target).abs() > 1e-9 {
                return Err(Error::Data(format!(
                    "kernel {} sums to {}, expected {target}",
                    k.name,
                    k.sum()
                )));
            }
        }
        let mut names: Vec<&str> = self.kernels.iter().map(|k| k.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Data(format!("duplicate kernel name {}", w[0])));
        }
        Ok(())
    }
}

pub const FAMILY_COUNTS: [(Family, usize); 9] = [
    (Family::Sharpen, 3),
    (Family::Emboss, 1),
    (Family::Blur, 2),
    (Family::Roberts, 8),
    (Family::Prewitt, 8),
    (Family::Sobel, 8),
    (Family::FreiChen, 8),
    (Family::SecondOrder, 2),
    (Family::Dct, 1),
];

pub const ROBERTS_BASE: Coeffs = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
pub const PREWITT_BASE: Coeffs = [[-1.0, -1.0, -1.0], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]];
pub const SOBEL_BASE: Coeffs = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

pub fn frei_chen_base() -> Coeffs {
    let r2 = std::f64::consts::SQRT_2;
    [[-1.0, -r2, -1.0], [0.0, 0.0, 0.0], [1.0, r2, 1.0]]
}

/// The (1, 1) basis function of the 3×3 two-dimensional DCT-II.
pub fn dct_basis(u: usize, v: usize) -> Coeffs {
    let mut c = [[0.0; 3]; 3];
    for (m, row) in c.iter_mut().enumerate() {
        for (n, cell) in row.iter_mut().enumerate() {
            let a = std::f64::consts::PI * (2 * m + 1) as f64 * u as f64 / 6.0;
            let b = std::f64::consts::PI * (2 * n + 1) as f64 * v as f64 / 6.0;
            *cell = a.cos() * b.cos();
        }
    }
    c
}

/// Rotates the eight border cells clockwise by `steps` × 45°; the center is
/// fixed. Negative steps rotate counter-clockwise.
pub fn rotate_ring(k: &Kernel, steps: i64) -> Kernel {
    Kernel {
        name: k.name.clone(),
        family: k.family,
        coeffs: rotate_coeffs(&k.coeffs, steps),
    }
}

pub fn rotate_coeffs(c: &Coeffs, steps: i64) -> Coeffs {
    let s = steps.rem_euclid(8) as usize;
    let mut out = *c;
    for (i, &(r, col)) in RING.iter().enumerate() {
        let (nr, nc) = RING[(i + s) % 8];
        out[nr][nc] = c[r][col];
    }
    out
}

fn compass(prefix: &str, family: Family, base: Coeffs) -> impl Iterator<Item = Kernel> + '_ {
    (0..8).map(move |s| Kernel::new(format!("{prefix}_{s}"), family, rotate_coeffs(&base, s)))
}

/// The canonical 41-kernel bank.
pub fn build_bank() -> KernelBank {
    let mut kernels = Vec::with_capacity(BANK_SIZE);
    kernels.extend(compass("roberts", Family::Roberts, ROBERTS_BASE));
    kernels.extend(compass("prewitt", Family::Prewitt, PREWITT_BASE));
    kernels.extend(compass("sobel", Family::Sobel, SOBEL_BASE));
    kernels.extend(compass("frei_chen", Family::FreiChen, frei_chen_base()));

    kernels.push(Kernel::new("dct_1_1", Family::Dct, dct_basis(1, 1)));

    kernels.push(Kernel::new(
        "laplacian_4",
        Family::SecondOrder,
        [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]],
    ));
    kernels.push(Kernel::new(
        "laplacian_8",
        Family::SecondOrder,
        [[1.0, 1.0, 1.0], [1.0, -8.0, 1.0], [1.0, 1.0, 1.0]],
    ));

    kernels.push(Kernel::new(
        "sharpen_cross",
        Family::Sharpen,
        [[0.0, -1.0, 0.0], [-1.0, 5.0, -1.0], [0.0, -1.0, 0.0]],
    ));
    kernels.push(Kernel::new(
        "sharpen_full",
        Family::Sharpen,
        [[-1.0, -1.0, -1.0], [-1.0, 9.0, -1.0], [-1.0, -1.0, -1.0]],
    ));
    kernels.push(Kernel::new(
        "sharpen_checker",
        Family::Sharpen,
        [[1.0, -2.0, 1.0], [-2.0, 5.0, -2.0], [1.0, -2.0, 1.0]],
    ));

    kernels.push(Kernel::new(
        "emboss",
        Family::Emboss,
        [[-2.0, -1.0, 0.0], [-1.0, 1.0, 1.0], [0.0, 1.0, 2.0]],
    ));

    kernels.push(Kernel::new("blur_box", Family::Blur, [[1.0 / 9.0; 3]; 3]));
    kernels.push(Kernel::new(
        "blur_gaussian",
        Family::Blur,
        [
            [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
            [2.0 / 16.0, 4.0 / 16.0, 2.0 / 16.0],
            [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
        ],
    ));

    KernelBank { kernels }
}

/// Single-channel same-size cross-correlation with zero padding of one.
/// `image` is row-major `height × width`.
pub fn apply_kernel(k: &Kernel, image: &[f64], height: usize, width: usize) -> Result<Vec<f64>> {
    if height == 0 || width == 0 || image.is_empty() {
        return Err(Error::EmptyInput);
    }
    if image.len() != height * width {
        return Err(Error::Shape(format!(
            "image buffer has {} values, expected {height}×{width}",
            image.len()
        )));
    }
    let mut out = vec![0.0; height * width];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (dy, row) in k.coeffs.iter().enumerate() {
                let Some(sy) = (y + dy).checked_sub(1).filter(|&v| v < height) else {
                    continue;
                };
                for (dx, &w) in row.iter().enumerate() {
                    if let Some(sx) = (x + dx).checked_sub(1).filter(|&v| v < width) {
                        acc += w * image[sy * width + sx];
                    }
                }
            }
            out[y * width + x] = acc;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    /// Pixels per coefficient cell.
    pub cell: usize,
    /// Pixels between tiles and around the border.
    pub gutter: usize,
    /// Tiles per row.
    pub columns: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            cell: 8,
            gutter: 4,
            columns: 8,
        }
    }
}

/// Per-tile normalized value in 0..=255 (min → 0, max → 255, constant → 128).
pub fn tile_levels(k: &Kernel) -> [[u8; 3]; 3] {
    let (lo, hi) = (k.min(), k.max());
    let mut out = [[128u8; 3]; 3];
    if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
        return out;
    }
    for (r, row) in k.coeffs.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            out[r][c] = ((v - lo) / (hi - lo) * 255.0).round() as u8;
        }
    }
    out
}

/// Lays the bank out as a grid of tiles in bank order, left-to-right then
/// top-to-bottom, each tile normalized on its own. Gutters are black.
pub fn render_bank(bank: &KernelBank, opts: RenderOptions) -> Result<GrayImage> {
    if opts.cell == 0 || opts.columns == 0 {
        return Err(Error::Parameter(
            "cell size and column count must be positive".into(),
        ));
    }
    let tile = 3 * opts.cell;
    let cols = opts.columns.min(bank.len().max(1));
    let rows = bank.len().div_ceil(cols).max(1);
    let width = cols * tile + (cols + 1) * opts.gutter;
    let height = rows * tile + (rows + 1) * opts.gutter;
    let mut img = GrayImage::new(width, height);
    for (i, k) in bank.iter().enumerate() {
        let (tr, tc) = (i / cols, i % cols);
        let x0 = opts.gutter + tc * (tile + opts.gutter);
        let y0 = opts.gutter + tr * (tile + opts.gutter);
        let levels = tile_levels(k);
        for y in 0..tile {
            for x in 0..tile {
                img.set(x0 + x, y0 + y, levels[y / opts.cell][x / opts.cell]);
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter_turn_cw(c: &Coeffs) -> Coeffs {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (col, cell) in row.iter_mut().enumerate() {
                *cell = c[2 - col][r];
            }
        }
        out
    }

    #[test]
    fn bank_shape_and_counts() {
        let bank = build_bank();
        assert_eq!(bank.len(), 41);
        for (family, n) in FAMILY_COUNTS {
            assert_eq!(bank.family_count(family), n, "{family}");
        }
        bank.validate().unwrap();
    }

    #[test]
    fn bank_order_matches_layout() {
        let bank = build_bank();
        let fams: Vec<Family> = bank.iter().map(|k| k.family).collect();
        let mut expected = Vec::new();
        for f in [
            Family::Roberts,
            Family::Prewitt,
            Family::Sobel,
            Family::FreiChen,
        ] {
            expected.extend([f; 8]);
        }
        expected.push(Family::Dct);
        expected.extend([Family::SecondOrder; 2]);
        expected.extend([Family::Sharpen; 3]);
        expected.push(Family::Emboss);
        expected.extend([Family::Blur; 2]);
        assert_eq!(fams, expected);
    }

    #[test]
    fn sums() {
        let bank = build_bank();
        let zero = bank.iter().filter(|k| k.sum().abs() < 1e-9).count();
        let one = bank.iter().filter(|k| (k.sum() - 1.0).abs() < 1e-9).count();
        assert_eq!((zero, one), (35, 6));
    }

    #[test]
    fn deterministic() {
        let a = build_bank().flat_coeffs();
        let b = build_bank().flat_coeffs();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn dct_matches_closed_form() {
        let d = dct_basis(1, 1);
        let expected = [[0.75, 0.0, -0.75], [0.0, 0.0, 0.0], [-0.75, 0.0, 0.75]];
        for r in 0..3 {
            for c in 0..3 {
                assert!((d[r][c] - expected[r][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_ring_steps_are_a_quarter_turn() {
        for base in [ROBERTS_BASE, PREWITT_BASE, SOBEL_BASE, frei_chen_base()] {
            assert_eq!(rotate_coeffs(&base, 2), quarter_turn_cw(&base));
        }
        let rotated = rotate_coeffs(&SOBEL_BASE, 2);
        assert_eq!(
            rotated,
            [[1.0, 0.0, -1.0], [2.0, 0.0, -2.0], [1.0, 0.0, -1.0]]
        );
    }

    #[test]
    fn ring_identity_and_modulo() {
        let k = Kernel::new("t", Family::Sobel, SOBEL_BASE);
        assert_eq!(rotate_ring(&k, 0), k);
        assert_eq!(rotate_ring(&k, 8), k);
        assert_eq!(rotate_ring(&k, -1), rotate_ring(&k, 7));
        assert_eq!(rotate_ring(&k, 19), rotate_ring(&k, 3));
    }

    #[test]
    fn compass_members_distinct() {
        let bank = build_bank();
        for f in [
            Family::Roberts,
            Family::Prewitt,
            Family::Sobel,
            Family::FreiChen,
        ] {
            let members: Vec<&Kernel> = bank.iter().filter(|k| k.family == f).collect();
            for i in 0..8 {
                for j in i + 1..8 {
                    assert_ne!(members[i].coeffs, members[j].coeffs, "{f} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn empty_image_rejected() {
        let k = build_bank().kernels[0].clone();
        assert!(matches!(
            apply_kernel(&k, &[], 0, 0),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn constant_image_responses() {
        let bank = build_bank();
        let img = vec![0.7; 36];
        for k in bank.iter() {
            let out = apply_kernel(k, &img, 6, 6).unwrap();
            let target = if k.family.is_zero_sum() { 0.0 } else { 0.7 };
            for y in 1..5 {
                for x in 1..5 {
                    assert!((out[y * 6 + x] - target).abs() < 1e-12, "{}", k.name);
                }
            }
        }
    }

    #[test]
    fn sobel_on_vertical_step_edge() {
        // Columns 0..=1 dark, 2..=4 bright. Hand-computed: the
        // left-to-right Sobel (sobel_6) gives 4 at interior columns 1 and 2
        // (each straddles the edge) and 0 at column 3.
        let bank = build_bank();
        let k = bank.get("sobel_6").unwrap();
        assert_eq!(
            k.coeffs,
            [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]
        );
        let row = [0.0, 0.0, 1.0, 1.0, 1.0];
        let img: Vec<f64> = (0..5).flat_map(|_| row).collect();
        let out = apply_kernel(k, &img, 5, 5).unwrap();
        for y in 1..4 {
            assert_eq!(out[y * 5 + 1], 4.0);
            assert_eq!(out[y * 5 + 2], 4.0);
            assert_eq!(out[y * 5 + 3], 0.0);
        }
    }

    #[test]
    fn box_blur_tile_is_mid_gray() {
        let bank = build_bank();
        assert_eq!(tile_levels(bank.get("blur_box").unwrap()), [[128; 3]; 3]);
    }

    #[test]
    fn sobel_tile_bright_bottom_dark_top() {
        let bank = build_bank();
        let t = tile_levels(bank.get("sobel_0").unwrap());
        // min -2 → 0, max 2 → 255, -1 → 64, 0 → 128, 1 → 191
        assert_eq!(t, [[64, 0, 64], [128, 128, 128], [191, 255, 191]]);
    }

    #[test]
    fn render_layout() {
        let bank = build_bank();
        let opts = RenderOptions {
            cell: 2,
            gutter: 1,
            columns: 8,
        };
        let img = render_bank(&bank, opts).unwrap();
        assert_eq!(img.width(), 8 * 6 + 9);
        assert_eq!(img.height(), 6 * 6 + 7);
        // Tile 40 (blur_gaussian) sits in row 5, column 0; its center is 255.
        let (x0, y0) = (1, 1 + 5 * 7);
        assert_eq!(img.get(x0 + 2, y0 + 2), 255);
        assert_eq!(img.get(x0, y0), 0);
    }
}
