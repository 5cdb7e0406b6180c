//! Literal reference implementations used only to verify the fast paths.

use super::{ConvParams, Scalar, Tensor};
use crate::error::{Error, Result};

/// Quadruple-loop convolution straight from the definition.
pub fn conv2d_oracle<T: Scalar>(input: &Tensor<T>, params: &ConvParams<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    if s.len() != 4 || s[3] != params.in_channels() {
        return Err(Error::Shape(format!(
            "conv input {s:?} incompatible with weights {:?}",
            params.weights.shape()
        )));
    }
    let (b, h, w, c) = (s[0], s[1], s[2], s[3]);
    let o = params.out_channels();
    let x = input.data();
    let wt = params.weights.data();
    let mut out = Tensor::zeros(&[b, h, w, o])?;
    let od = out.data_mut();
    for n in 0..b {
        for y in 0..h {
            for xx in 0..w {
                for oc in 0..o {
                    let mut acc = params.bias.data()[oc];
                    for ic in 0..c {
                        for dy in 0..3 {
                            for dx in 0..3 {
                                let sy = y as isize + dy as isize - 1;
                                let sx = xx as isize + dx as isize - 1;
                                if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                    continue;
                                }
                                let iv = x[((n * h + sy as usize) * w + sx as usize) * c + ic];
                                acc += wt[((oc * c + ic) * 3 + dy) * 3 + dx] * iv;
                            }
                        }
                    }
                    od[((n * h + y) * w + xx) * o + oc] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Naive triple-loop `a (m×k) · b (k×n)`.
pub fn matmul_oracle<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = T::zero();
            for p in 0..k {
                acc += a[i * k + p] * b[p * n + j];
            }
            c[i * n + j] = acc;
        }
    }
    c
}
