use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{GradientSet, Network, ParamId};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Sgd {
        momentum: f64,
    },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd() -> Self {
        OptimizerKind::Sgd { momentum: 0.0 }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        Self::adam()
    }
}

#[derive(Debug, Clone)]
enum Slot<T> {
    Adam { m: Tensor<T>, v: Tensor<T> },
    Velocity(Tensor<T>),
}

/// Per-parameter moments (Adam) or velocity (SGD). The frozen layer never
/// gets an entry.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    kind: OptimizerKind,
    step: u64,
    slots: BTreeMap<ParamId, Slot<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            step: 0,
            slots: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn has_state(&self, id: ParamId) -> bool {
        self.slots.contains_key(&id)
    }

    pub fn state_ids(&self) -> Vec<ParamId> {
        self.slots.keys().copied().collect()
    }
}

/// Bias-corrected Adam update of `params` in place; `step` counts from 1.
pub fn adam_update<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    m: &mut [T],
    v: &mut [T],
    step: u64,
    learning_rate: f64,
    (beta1, beta2, epsilon): (f64, f64, f64),
) {
    let t = step as i32;
    let (lr, b1, b2, eps) = (
        T::lit(learning_rate),
        T::lit(beta1),
        T::lit(beta2),
        T::lit(epsilon),
    );
    let c1 = T::one() - T::lit(beta1.powi(t));
    let c2 = T::one() - T::lit(beta2.powi(t));
    for (((w, &gi), mi), vi) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *mi = b1 * *mi + (T::one() - b1) * gi;
        *vi = b2 * *vi + (T::one() - b2) * gi * gi;
        let m_hat = *mi / c1;
        let v_hat = *vi / c2;
        *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One update of every trainable parameter that has a gradient. Gradients
/// for frozen parameters are ignored.
pub fn optimizer_step<T: Scalar>(
    net: &mut Network<T>,
    grads: &GradientSet<T>,
    state: &mut OptimizerState<T>,
    learning_rate: f64,
) -> Result<()> {
    state.step += 1;
    let lr = T::lit(learning_rate);
    for (id, g) in grads.iter() {
        let Some(p) = net.param_mut(id) else {
            continue;
        };
        if p.shape() != g.shape() {
            return Err(Error::Internal(format!(
                "gradient {:?} for {id:?} does not match parameter {:?}",
                g.shape(),
                p.shape()
            )));
        }
        match state.kind {
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let slot = state.slots.entry(id).or_insert_with(|| Slot::Adam {
                    m: Tensor::zeros(g.shape()).expect("valid shape"),
                    v: Tensor::zeros(g.shape()).expect("valid shape"),
                });
                let Slot::Adam { m, v } = slot else {
                    return Err(Error::Internal("optimizer state kind changed".into()));
                };
                adam_update(
                    p.data_mut(),
                    g.data(),
                    m.data_mut(),
                    v.data_mut(),
                    state.step,
                    learning_rate,
                    (beta1, beta2, epsilon),
                );
            }
            OptimizerKind::Sgd { momentum } => {
                if momentum == 0.0 {
                    for (w, &gi) in p.data_mut().iter_mut().zip(g.data()) {
                        *w = *w - lr * gi;
                    }
                    continue;
                }
                let slot = state.slots.entry(id).or_insert_with(|| {
                    Slot::Velocity(Tensor::zeros(g.shape()).expect("valid shape"))
                });
                let Slot::Velocity(vel) = slot else {
                    return Err(Error::Internal("optimizer state kind changed".into()));
                };
                let mu = T::lit(momentum);
                for ((w, &gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(vel.data_mut()) {
                    *vi = mu * *vi + gi;
                    *w = *w - lr * *vi;
                }
            }
        }
    }
    Ok(())
}
