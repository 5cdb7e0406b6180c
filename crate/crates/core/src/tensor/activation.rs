use super::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub fn relu_inplace<T: Scalar>(t: &mut Tensor<T>) {
    for v in t.data_mut() {
        *v = if *v > T::zero() { *v } else { T::zero() };
    }
}

/// Passes the gradient where `input > 0`.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    input.same_shape(upstream)?;
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(input.shape(), data)
}

/// Same mask computed from the activation output, which is positive exactly
/// where the input was. Masks `upstream` in place.
pub fn relu_backward_from_output<T: Scalar>(
    output: &Tensor<T>,
    upstream: &mut Tensor<T>,
) -> Result<()> {
    output.same_shape(upstream)?;
    for (g, &y) in upstream.data_mut().iter_mut().zip(output.data()) {
        if y <= T::zero() || y.is_nan() {
            *g = T::zero();
        }
    }
    Ok(())
}

/// Inverted dropout. Returns the output and the mask, whose entries are 0 or
/// `1/(1−rate)`; at inference the output is the input and the mask is ones.
pub fn dropout<T: Scalar>(
    input: &Tensor<T>,
    rate: f64,
    rng: &mut SplitMix64,
    training: bool,
) -> Result<(Tensor<T>, Tensor<T>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Parameter(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((input.clone(), Tensor::full(input.shape(), T::one())?));
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let mask = Tensor::from_fn(input.shape(), |_| {
        if rng.next_f64() < rate {
            T::zero()
        } else {
            keep
        }
    })?;
    let out = input
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&x, &m)| x * m)
        .collect();
    Ok((Tensor::new(input.shape(), out)?, mask))
}

pub fn dropout_backward<T: Scalar>(mask: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    mask.same_shape(upstream)?;
    let data = upstream
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&g, &m)| g * m)
        .collect();
    Tensor::new(mask.shape(), data)
}
