use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct XentOutput<T> {
    /// Mean over the batch of `−ln p[label]`.
    pub loss: T,
    pub probs: Tensor<T>,
    /// `(probs − onehot) / batch`
    pub d_logits: Tensor<T>,
}

/// Row-wise softmax with cross-entropy against integer labels. The row max is
/// subtracted before exponentiating.
pub fn softmax_xent<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<XentOutput<T>> {
    let s = logits.shape();
    if s.len() != 2 {
        return Err(Error::Shape(format!("logits must be B×K, got {s:?}")));
    }
    let (b, k) = (s[0], s[1]);
    if labels.len() != b {
        return Err(Error::Shape(format!(
            "{} labels for {b} logit rows",
            labels.len()
        )));
    }
    if let Some((row, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(Error::Data(format!(
            "label {l} in row {row} is outside [0, {k})"
        )));
    }
    let inv_b = T::one() / T::from_usize(b).unwrap();
    let mut probs = Vec::with_capacity(b * k);
    let mut loss = T::zero();
    for (row, &label) in logits.data().chunks_exact(k).zip(labels) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = probs.len();
        let mut sum = T::zero();
        for &z in row {
            let e = (z - max).exp();
            sum += e;
            probs.push(e);
        }
        for p in &mut probs[start..] {
            *p = *p / sum;
        }
        // log-sum-exp form keeps the loss finite when p[label] underflows
        loss += sum.ln() - (row[label] - max);
    }
    let mut d = probs.clone();
    for (r, &label) in labels.iter().enumerate() {
        d[r * k + label] = d[r * k + label] - T::one();
    }
    for v in &mut d {
        *v *= inv_b;
    }
    Ok(XentOutput {
        loss: loss * inv_b,
        probs: Tensor::new(&[b, k], probs)?,
        d_logits: Tensor::new(&[b, k], d)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let t = Tensor::<f64>::zeros(&[3, 10]).unwrap();
        let out = softmax_xent(&t, &[0, 4, 9]).unwrap();
        assert!((out.loss - 10f64.ln()).abs() < 1e-12);
        assert!(out.probs.data().iter().all(|&p| (p - 0.1).abs() < 1e-15));
    }

    #[test]
    fn large_logit_is_stable() {
        let mut t = Tensor::<f32>::zeros(&[1, 10]).unwrap();
        t.data_mut()[3] = 1000.0;
        let out = softmax_xent(&t, &[3]).unwrap();
        assert!(out.loss.is_finite() && out.loss.abs() < 1e-6);
        let mut wrong = Tensor::<f32>::zeros(&[1, 10]).unwrap();
        wrong.data_mut()[0] = 1000.0;
        let out = softmax_xent(&wrong, &[3]).unwrap();
        assert!((out.loss - 1000.0).abs() < 1e-3);
    }

    #[test]
    fn label_out_of_range_names_row() {
        let t = Tensor::<f64>::zeros(&[2, 10]).unwrap();
        let err = softmax_xent(&t, &[1, 10]).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }
}
