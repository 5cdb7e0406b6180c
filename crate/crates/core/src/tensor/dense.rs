use super::gemm::{gemm, View};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T> {
    /// `in × out`
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> DenseParams<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let s = weights.shape();
        if s.len() != 2 {
            return Err(Error::Shape(format!(
                "dense weights must be in×out, got {s:?}"
            )));
        }
        if bias.shape() != [s[1]] {
            return Err(Error::Shape(format!(
                "dense bias must be [{}], got {:?}",
                s[1],
                bias.shape()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn inputs(&self) -> usize {
        self.weights.dim(0)
    }

    pub fn outputs(&self) -> usize {
        self.weights.dim(1)
    }
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T> {
    pub d_input: Option<Tensor<T>>,
    pub d_weights: Tensor<T>,
    pub d_bias: Tensor<T>,
}

fn rows_of<T: Scalar>(input: &Tensor<T>, params: &DenseParams<T>) -> Result<usize> {
    let s = input.shape();
    if s.len() != 2 || s[1] != params.inputs() {
        return Err(Error::Shape(format!(
            "dense input {s:?} does not match weights {:?}",
            params.weights.shape()
        )));
    }
    Ok(s[0])
}

/// `input · W + bias`, bias broadcast over rows.
pub fn dense<T: Scalar>(input: &Tensor<T>, params: &DenseParams<T>) -> Result<Tensor<T>> {
    let b = rows_of(input, params)?;
    let (i, o) = (params.inputs(), params.outputs());
    let mut out = Vec::with_capacity(b * o);
    for _ in 0..b {
        out.extend_from_slice(params.bias.data());
    }
    gemm(
        T::one(),
        View::row_major(input.data(), b, i),
        View::row_major(params.weights.data(), i, o),
        T::one(),
        &mut out,
    );
    Tensor::new(&[b, o], out)
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    params: &DenseParams<T>,
    upstream: &Tensor<T>,
    want_input: bool,
) -> Result<DenseGrads<T>> {
    let b = rows_of(input, params)?;
    let (i, o) = (params.inputs(), params.outputs());
    if upstream.shape() != [b, o] {
        return Err(Error::Shape(format!(
            "upstream gradient {:?} does not match dense output [{b}, {o}]",
            upstream.shape()
        )));
    }
    let g = View::row_major(upstream.data(), b, o);
    let mut d_w = vec![T::zero(); i * o];
    gemm(
        T::one(),
        View::row_major(input.data(), b, i).t(),
        g,
        T::zero(),
        &mut d_w,
    );
    let mut d_b = vec![T::zero(); o];
    for row in upstream.data().chunks_exact(o) {
        for (acc, &v) in d_b.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let d_input = if want_input {
        let mut d_in = vec![T::zero(); b * i];
        gemm(
            T::one(),
            g,
            View::row_major(params.weights.data(), i, o).t(),
            T::zero(),
            &mut d_in,
        );
        Some(Tensor::new(&[b, i], d_in)?)
    } else {
        None
    };
    Ok(DenseGrads {
        d_input,
        d_weights: Tensor::new(&[i, o], d_w)?,
        d_bias: Tensor::new(&[o], d_b)?,
    })
}
