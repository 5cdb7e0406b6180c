#![allow(dead_code)]

use gfnn_core::data::{synthetic_digits, Dataset, Split};
use gfnn_core::network::{Arch, NetworkConfig};
use gfnn_core::rng::SplitMix64;
use gfnn_core::tensor::{ConvParams, Scalar, Tensor};

pub fn uniform<T: Scalar>(shape: &[usize], lo: f64, hi: f64, rng: &mut SplitMix64) -> Tensor<T> {
    Tensor::from_fn(shape, |_| T::lit(lo + (hi - lo) * rng.next_f64())).unwrap()
}

pub fn conv_params<T: Scalar>(out_ch: usize, in_ch: usize, rng: &mut SplitMix64) -> ConvParams<T> {
    ConvParams::new(
        uniform(&[out_ch, in_ch, 3, 3], -1.0, 1.0, rng),
        uniform(&[out_ch], -1.0, 1.0, rng),
    )
    .unwrap()
}

/// Direct zero-padded 3×3 cross-correlation, written out independently of
/// the library's GEMM path.
pub fn reference_conv<T: Scalar>(input: &Tensor<T>, p: &ConvParams<T>) -> Vec<T> {
    let [b, h, w, c] = [input.dim(0), input.dim(1), input.dim(2), input.dim(3)];
    let o = p.weights.dim(0);
    let x = input.data();
    let k = p.weights.data();
    let mut out = vec![T::zero(); b * h * w * o];
    for n in 0..b {
        for y in 0..h {
            for xx in 0..w {
                for oc in 0..o {
                    let mut acc = p.bias.data()[oc];
                    for ic in 0..c {
                        for dy in 0..3 {
                            for dx in 0..3 {
                                let sy = y as isize + dy as isize - 1;
                                let sx = xx as isize + dx as isize - 1;
                                if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                    continue;
                                }
                                let v = x[((n * h + sy as usize) * w + sx as usize) * c + ic];
                                acc += v * k[((oc * c + ic) * 3 + dy) * 3 + dx];
                            }
                        }
                    }
                    out[((n * h + y) * w + xx) * o + oc] = acc;
                }
            }
        }
    }
    out
}

/// Central differences of `f` at `x`.
pub fn numeric_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// ‖a − b‖ / max(‖a‖, ‖b‖), 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 13×13 input, channels 2/2/2, dense 8→4→3: every layer present, small
/// enough for finite differences over every parameter.
pub fn tiny_config(arch: Arch) -> NetworkConfig {
    NetworkConfig {
        arch,
        input_size: 13,
        conv_channels: [2, 2, 2],
        hidden: 4,
        classes: 3,
        dropout_rate: 0.0,
        init_seed: 11,
    }
}

pub fn synthetic_split(train: usize, val: usize, seed: u64) -> Split {
    Split::holdout(&synthetic_digits(train + val, seed), val).unwrap()
}

pub fn first(d: &Dataset, n: usize) -> Dataset {
    let idx: Vec<usize> = (0..n).collect();
    d.select(d.name.clone(), &idx).unwrap()
}
