//! 2×2 stride-2 max pooling in ceil mode: odd extents are padded bottom/right
//! with −∞, so an `h × w` input pools to `⌈h/2⌉ × ⌈w/2⌉`.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PoolOutput<T> {
    pub output: Tensor<T>,
    /// Flat input index of the winner for every output element.
    pub argmax: Vec<usize>,
}

pub fn maxpool2_ceil<T: Scalar>(input: &Tensor<T>) -> Result<PoolOutput<T>> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(Error::Shape(format!(
            "pool input must be B×H×W×C, got {s:?}"
        )));
    }
    let (b, h, w, c) = (s[0], s[1], s[2], s[3]);
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let x = input.data();
    let mut out = Vec::with_capacity(b * oh * ow * c);
    let mut argmax = Vec::with_capacity(b * oh * ow * c);
    for n in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = T::neg_infinity();
                    let mut best_i = usize::MAX;
                    // Row-major window scan with strict `>` keeps the
                    // smallest flat index on ties.
                    for y in 2 * oy..(2 * oy + 2).min(h) {
                        for xx in 2 * ox..(2 * ox + 2).min(w) {
                            let i = ((n * h + y) * w + xx) * c + ch;
                            if best_i == usize::MAX || x[i] > best {
                                best = x[i];
                                best_i = i;
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_i);
                }
            }
        }
    }
    Ok(PoolOutput {
        output: Tensor::new(&[b, oh, ow, c], out)?,
        argmax,
    })
}

/// Routes each upstream element to its recorded argmax position.
pub fn maxpool2_backward<T: Scalar>(
    argmax: &[usize],
    upstream: &Tensor<T>,
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if argmax.len() != upstream.len() {
        return Err(Error::Internal(format!(
            "{} argmax entries for {} upstream values",
            argmax.len(),
            upstream.len()
        )));
    }
    let mut d_in = Tensor::zeros(input_shape)?;
    let n = d_in.len();
    let d = d_in.data_mut();
    for (&i, &g) in argmax.iter().zip(upstream.data()) {
        if i >= n {
            return Err(Error::Internal(format!(
                "argmax index {i} out of range for input of {n} values"
            )));
        }
        d[i] += g;
    }
    Ok(d_in)
}
