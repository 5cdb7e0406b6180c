//! 3×3 same-padding convolution (cross-correlation), stride 1, via im2col.
//!
//! Patch columns are ordered `(in_channel, dy, dx)`, which matches the
//! `out × in × 3 × 3` weight layout, so the weights act as an
//! `out × (in·9)` matrix without reshuffling. Samples are processed one at a
//! time, so a sample's result never depends on its batch neighbours.

use super::gemm::{gemm, View};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> ConvParams<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let s = weights.shape();
        if s.len() != 4 || s[2] != 3 || s[3] != 3 {
            return Err(Error::Shape(format!(
                "conv weights must be out×in×3×3, got {s:?}"
            )));
        }
        if bias.shape() != [s[0]] {
            return Err(Error::Shape(format!(
                "conv bias must be [{}], got {:?}",
                s[0],
                bias.shape()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(out_ch: usize, in_ch: usize) -> Result<Self> {
        Self::new(
            Tensor::zeros(&[out_ch, in_ch, 3, 3])?,
            Tensor::zeros(&[out_ch])?,
        )
    }

    pub fn out_channels(&self) -> usize {
        self.weights.dim(0)
    }

    pub fn in_channels(&self) -> usize {
        self.weights.dim(1)
    }
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub d_input: Option<Tensor<T>>,
    pub d_weights: Tensor<T>,
    pub d_bias: Tensor<T>,
}

/// Multiply-adds for one forward pass over `batch` samples.
pub fn conv_macs(batch: usize, h: usize, w: usize, in_ch: usize, out_ch: usize) -> u64 {
    (batch * h * w * in_ch * out_ch * 9) as u64
}

fn check_input<T: Scalar>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
) -> Result<(usize, usize, usize, usize)> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(Error::Shape(format!(
            "conv input must be B×H×W×C, got {s:?}"
        )));
    }
    if s[3] != params.in_channels() {
        return Err(Error::Shape(format!(
            "conv input {s:?} has {} channels but weights {:?} expect {}",
            s[3],
            params.weights.shape(),
            params.in_channels()
        )));
    }
    Ok((s[0], s[1], s[2], s[3]))
}

/// Fills `cols` (`h·w × c·9`) from one `h × w × c` sample.
fn im2col<T: Scalar>(sample: &[T], h: usize, w: usize, c: usize, cols: &mut [T]) {
    let k = c * 9;
    for y in 0..h {
        for x in 0..w {
            let row = &mut cols[(y * w + x) * k..(y * w + x + 1) * k];
            for dy in 0..3 {
                let sy = y + dy;
                let valid_y = sy >= 1 && sy <= h;
                for dx in 0..3 {
                    let sx = x + dx;
                    let tap = dy * 3 + dx;
                    if valid_y && sx >= 1 && sx <= w {
                        let base = ((sy - 1) * w + (sx - 1)) * c;
                        for ch in 0..c {
                            row[ch * 9 + tap] = sample[base + ch];
                        }
                    } else {
                        for ch in 0..c {
                            row[ch * 9 + tap] = T::zero();
                        }
                    }
                }
            }
        }
    }
}

/// Scatter-adds patch gradients back onto one sample's input gradient.
fn col2im<T: Scalar>(cols: &[T], h: usize, w: usize, c: usize, out: &mut [T]) {
    let k = c * 9;
    for y in 0..h {
        for x in 0..w {
            let row = &cols[(y * w + x) * k..(y * w + x + 1) * k];
            for dy in 0..3 {
                let sy = y + dy;
                if sy < 1 || sy > h {
                    continue;
                }
                for dx in 0..3 {
                    let sx = x + dx;
                    if sx < 1 || sx > w {
                        continue;
                    }
                    let base = ((sy - 1) * w + (sx - 1)) * c;
                    let tap = dy * 3 + dx;
                    for ch in 0..c {
                        out[base + ch] += row[ch * 9 + tap];
                    }
                }
            }
        }
    }
}

/// `out[b,y,x,o] = bias[o] + Σ w[o,c,dy,dx]·in[b,y+dy−1,x+dx−1,c]`, zero padded.
pub fn conv2d_same<T: Scalar>(input: &Tensor<T>, params: &ConvParams<T>) -> Result<Tensor<T>> {
    let (b, h, w, c) = check_input(input, params)?;
    let o = params.out_channels();
    let (p, k) = (h * w, c * 9);
    let weights = View::row_major(params.weights.data(), o, k).t();
    let mut out = Vec::with_capacity(b * p * o);
    let mut cols = vec![T::zero(); p * k];
    for sample in input.data().chunks_exact(p * c) {
        im2col(sample, h, w, c, &mut cols);
        let start = out.len();
        for _ in 0..p {
            out.extend_from_slice(params.bias.data());
        }
        gemm(
            T::one(),
            View::row_major(&cols, p, k),
            weights,
            T::one(),
            &mut out[start..],
        );
    }
    Tensor::new(&[b, h, w, o], out)
}

fn backward_impl<T: Scalar>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    upstream: &Tensor<T>,
    want_input: bool,
) -> Result<ConvGrads<T>> {
    let (b, h, w, c) = check_input(input, params)?;
    let o = params.out_channels();
    if upstream.shape() != [b, h, w, o] {
        return Err(Error::Shape(format!(
            "upstream gradient {:?} does not match conv output [{b}, {h}, {w}, {o}]",
            upstream.shape()
        )));
    }
    let (p, k) = (h * w, c * 9);
    let mut d_w = vec![T::zero(); o * k];
    let mut d_b = vec![T::zero(); o];
    let mut d_in = if want_input {
        vec![T::zero(); input.len()]
    } else {
        Vec::new()
    };
    let mut cols = vec![T::zero(); p * k];
    let mut d_cols = if want_input {
        vec![T::zero(); p * k]
    } else {
        Vec::new()
    };
    let weights = View::row_major(params.weights.data(), o, k);

    for (n, (sample, g)) in input
        .data()
        .chunks_exact(p * c)
        .zip(upstream.data().chunks_exact(p * o))
        .enumerate()
    {
        for row in g.chunks_exact(o) {
            for (acc, &v) in d_b.iter_mut().zip(row) {
                *acc += v;
            }
        }
        im2col(sample, h, w, c, &mut cols);
        let g_view = View::row_major(g, p, o);
        gemm(
            T::one(),
            g_view.t(),
            View::row_major(&cols, p, k),
            T::one(),
            &mut d_w,
        );
        if want_input {
            gemm(T::one(), g_view, weights, T::zero(), &mut d_cols);
            col2im(&d_cols, h, w, c, &mut d_in[n * p * c..(n + 1) * p * c]);
        }
    }

    Ok(ConvGrads {
        d_input: if want_input {
            Some(Tensor::new(input.shape(), d_in)?)
        } else {
            None
        },
        d_weights: Tensor::new(params.weights.shape(), d_w)?,
        d_bias: Tensor::new(&[o], d_b)?,
    })
}

/// Exact adjoint of [`conv2d_same`]: input, weight and bias gradients.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    upstream: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    backward_impl(input, params, upstream, true)
}

/// Weight and bias gradients only; `d_input` is `None`. Used where nothing
/// upstream consumes the input gradient.
pub fn conv2d_backward_params<T: Scalar>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    upstream: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    backward_impl(input, params, upstream, false)
}

/// Input gradient only. Needs no im2col of the forward input, just
/// `upstream · W` scattered back through col2im.
pub fn conv2d_backward_input<T: Scalar>(
    params: &ConvParams<T>,
    upstream: &Tensor<T>,
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if input_shape.len() != 4 || input_shape[3] != params.in_channels() {
        return Err(Error::Shape(format!(
            "input shape {input_shape:?} incompatible with weights {:?}",
            params.weights.shape()
        )));
    }
    let (b, h, w, c) = (
        input_shape[0],
        input_shape[1],
        input_shape[2],
        input_shape[3],
    );
    let o = params.out_channels();
    if upstream.shape() != [b, h, w, o] {
        return Err(Error::Shape(format!(
            "upstream gradient {:?} does not match conv output [{b}, {h}, {w}, {o}]",
            upstream.shape()
        )));
    }
    let (p, k) = (h * w, c * 9);
    let weights = View::row_major(params.weights.data(), o, k);
    let mut d_in = vec![T::zero(); b * p * c];
    let mut d_cols = vec![T::zero(); p * k];
    for (g, d) in upstream
        .data()
        .chunks_exact(p * o)
        .zip(d_in.chunks_exact_mut(p * c))
    {
        gemm(
            T::one(),
            View::row_major(g, p, o),
            weights,
            T::zero(),
            &mut d_cols,
        );
        col2im(&d_cols, h, w, c, d);
    }
    Tensor::new(input_shape, d_in)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_params() -> ConvParams<f64> {
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        ConvParams::new(
            Tensor::new(&[1, 1, 3, 3], w).unwrap(),
            Tensor::zeros(&[1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut p = ConvParams::<f64>::zeros(3, 2).unwrap();
        p.weights = Tensor::full(&[3, 2, 3, 3], 0.3).unwrap();
        p.bias = Tensor::new(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let out = conv2d_same(&Tensor::zeros(&[2, 4, 5, 2]).unwrap(), &p).unwrap();
        assert_eq!(out.shape(), &[2, 4, 5, 3]);
        for px in out.data().chunks_exact(3) {
            assert_eq!(px, &[1.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn delta_kernel_is_identity() {
        let x = Tensor::from_fn(&[1, 4, 3, 1], |i| i as f64 * 0.7 - 1.0).unwrap();
        let out = conv2d_same(&x, &delta_params()).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn channel_mismatch_names_shapes() {
        let err = conv2d_same(
            &Tensor::<f64>::zeros(&[1, 3, 3, 2]).unwrap(),
            &delta_params(),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("[1, 3, 3, 2]") && msg.contains("[1, 1, 3, 3]"),
            "{msg}"
        );
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let x = Tensor::from_fn(&[2, 3, 3, 2], |i| (i as f64).sin()).unwrap();
        let p = ConvParams::new(
            Tensor::from_fn(&[2, 2, 3, 3], |i| (i as f64).cos()).unwrap(),
            Tensor::zeros(&[2]).unwrap(),
        )
        .unwrap();
        let g = conv2d_backward(&x, &p, &Tensor::zeros(&[2, 3, 3, 2]).unwrap()).unwrap();
        assert!(g.d_input.unwrap().data().iter().all(|&v| v == 0.0));
        assert!(g.d_weights.data().iter().all(|&v| v == 0.0));
        assert!(g.d_bias.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_pixel_through_delta() {
        let x = Tensor::<f64>::zeros(&[1, 3, 3, 1]).unwrap();
        let mut up = Tensor::<f64>::zeros(&[1, 3, 3, 1]).unwrap();
        up.data_mut()[5] = 2.5;
        let g = conv2d_backward(&x, &delta_params(), &up).unwrap();
        assert_eq!(g.d_input.unwrap(), up);
    }

    #[test]
    fn input_only_matches_full() {
        let x = Tensor::from_fn(&[2, 4, 3, 2], |i| (i as f64 * 0.37).sin()).unwrap();
        let p = ConvParams::new(
            Tensor::from_fn(&[3, 2, 3, 3], |i| (i as f64 * 0.11).cos()).unwrap(),
            Tensor::zeros(&[3]).unwrap(),
        )
        .unwrap();
        let up = Tensor::from_fn(&[2, 4, 3, 3], |i| (i as f64 * 0.53).sin()).unwrap();
        let full = conv2d_backward(&x, &p, &up).unwrap().d_input.unwrap();
        let only = conv2d_backward_input(&p, &up, x.shape()).unwrap();
        assert!(full.bit_eq(&only));
    }

    #[test]
    fn params_only_skips_input() {
        let x = Tensor::<f64>::zeros(&[1, 3, 3, 1]).unwrap();
        let up = Tensor::<f64>::full(&[1, 3, 3, 1], 1.0).unwrap();
        let g = conv2d_backward_params(&x, &delta_params(), &up).unwrap();
        assert!(g.d_input.is_none());
        assert_eq!(g.d_bias.data(), &[9.0]);
    }
}
