//! The learned-filter CNN and the fixed-filter GFNN variant.
//!
//! Layer stack: conv1 → relu → pool → conv2 → relu → pool → conv3 → relu →
//! pool → flatten → dense1 → relu → dropout → dense2. The two architectures
//! differ only in whether conv1 is trainable; for GFNN it holds the kernel
//! bank with zero bias and never receives gradients.
//!
//! Forward and backward are split at the layer-1 boundary ("features" =
//! pooled layer-1 output) so the trainer can time layer 1 on its own and
//! the GFNN can start from cached features.

mod cache;
mod checkpoint;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_bank::{KernelBank, BANK_SIZE};
use crate::rng::SplitMix64;
use crate::tensor::{
    conv2d_backward, conv2d_backward_input, conv2d_backward_params, conv2d_same, conv_macs, dense,
    dense_backward, dropout, dropout_backward, maxpool2_backward, maxpool2_ceil,
    relu_backward_from_output, relu_inplace, ConvParams, DenseParams, Scalar, Tensor, ToBits,
};

pub use cache::{precompute_features, CachedBatch, FeatureCache, CACHE_MAGIC};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Cnn,
    Gfnn,
}

impl Arch {
    pub const BOTH: [Arch; 2] = [Arch::Cnn, Arch::Gfnn];
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Cnn => "cnn",
            Arch::Gfnn => "gfnn",
        })
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" => Ok(Arch::Cnn),
            "gfnn" => Ok(Arch::Gfnn),
            other => Err(Error::Parameter(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkConfig {
    pub arch: Arch,
    /// Square input side.
    pub input_size: usize,
    pub conv_channels: [usize; 3],
    pub hidden: usize,
    pub classes: usize,
    pub dropout_rate: f64,
    pub init_seed: u64,
}

/// `⌈n/2⌉`, the ceil-mode pooled extent.
pub fn pooled(n: usize) -> usize {
    n.div_ceil(2)
}

impl NetworkConfig {
    /// 28×28 input, conv channels 41/64/128, dense 2048→625→10.
    pub fn mnist(arch: Arch, dropout_rate: f64, init_seed: u64) -> Self {
        Self {
            arch,
            input_size: 28,
            conv_channels: [BANK_SIZE, 64, 128],
            hidden: 625,
            classes: 10,
            dropout_rate,
            init_seed,
        }
    }

    /// Spatial sides after each pool.
    pub fn sides(&self) -> [usize; 4] {
        let s1 = pooled(self.input_size);
        let s2 = pooled(s1);
        [self.input_size, s1, s2, pooled(s2)]
    }

    pub fn flatten_width(&self) -> usize {
        let s = self.sides()[3];
        s * s * self.conv_channels[2]
    }

    /// Shape of one sample's pooled layer-1 output.
    pub fn feature_shape(&self) -> [usize; 3] {
        let s = self.sides()[1];
        [s, s, self.conv_channels[0]]
    }

    pub fn feature_len(&self) -> usize {
        self.feature_shape().iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.hidden == 0 || self.classes == 0 {
            return Err(Error::Config("layer extents must be positive".into()));
        }
        if self.conv_channels.contains(&0) {
            return Err(Error::Config("conv channel counts must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.arch == Arch::Gfnn && self.conv_channels[0] != BANK_SIZE {
            return Err(Error::Config(format!(
                "GFNN layer 1 holds the {BANK_SIZE}-kernel bank, got {} channels",
                self.conv_channels[0]
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamId {
    Conv1W,
    Conv1B,
    Conv2W,
    Conv2B,
    Conv3W,
    Conv3B,
    Dense1W,
    Dense1B,
    Dense2W,
    Dense2B,
}

impl ParamId {
    pub const ALL: [ParamId; 10] = [
        ParamId::Conv1W,
        ParamId::Conv1B,
        ParamId::Conv2W,
        ParamId::Conv2B,
        ParamId::Conv3W,
        ParamId::Conv3B,
        ParamId::Dense1W,
        ParamId::Dense1B,
        ParamId::Dense2W,
        ParamId::Dense2B,
    ];

    pub fn is_layer1(self) -> bool {
        matches!(self, ParamId::Conv1W | ParamId::Conv1B)
    }

    /// Index of the parameterized layer, 0..5.
    pub fn layer(self) -> usize {
        self as usize / 2
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }
}

/// Gradients keyed by parameter, in [`ParamId::ALL`] order.
#[derive(Debug, Clone, Default)]
pub struct GradientSet<T> {
    entries: Vec<(ParamId, Tensor<T>)>,
}

impl<T: Scalar> GradientSet<T> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, id: ParamId, g: Tensor<T>) {
        self.entries.retain(|(k, _)| *k != id);
        self.entries.push((id, g));
        self.entries.sort_by_key(|(k, _)| *k);
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.entries.iter().find(|(k, _)| *k == id).map(|(_, g)| g)
    }

    pub fn contains(&self, id: ParamId) -> bool {
        self.get(id).is_some()
    }

    pub fn ids(&self) -> Vec<ParamId> {
        self.entries.iter().map(|(k, _)| *k).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.entries.iter().map(|(k, g)| (*k, g))
    }

    pub fn merge(&mut self, other: GradientSet<T>) {
        for (k, g) in other.entries {
            self.insert(k, g);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// What layer 1's backward pass needs.
#[derive(Debug, Clone)]
pub struct Layer1Trace<T> {
    input: Tensor<T>,
    activated: Tensor<T>,
    argmax: Vec<usize>,
}

/// Everything downstream of the features that backward needs.
#[derive(Debug, Clone)]
pub struct RestTrace<T> {
    features: Tensor<T>,
    act2: Tensor<T>,
    argmax2: Vec<usize>,
    pooled2: Tensor<T>,
    act3: Tensor<T>,
    argmax3: Vec<usize>,
    flat: Tensor<T>,
    hidden: Tensor<T>,
    mask: Tensor<T>,
    dropped: Tensor<T>,
}

impl<T> RestTrace<T> {
    pub fn features(&self) -> &Tensor<T> {
        &self.features
    }

    pub fn flat(&self) -> &Tensor<T> {
        &self.flat
    }
}

#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    pub layer1: Option<Layer1Trace<T>>,
    pub rest: RestTrace<T>,
    /// Multiply-adds performed by this forward pass.
    pub macs: u64,
}

/// Gradient arriving at conv2's pre-activation output, kept so the input
/// gradient of conv2 can be computed separately (and only when layer 1 is
/// trainable).
#[derive(Debug, Clone)]
pub struct Conv2Upstream<T>(Tensor<T>);

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    config: NetworkConfig,
    conv: [ConvParams<T>; 3],
    dense1: DenseParams<T>,
    dense2: DenseParams<T>,
    frozen_layer1: bool,
}

fn he_normal<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut SplitMix64) -> Result<Tensor<T>> {
    let std = (2.0 / fan_in as f64).sqrt();
    Tensor::from_fn(shape, |_| T::lit(rng.normal() * std))
}

/// Fills `bank` into an `n × 1 × 3 × 3` weight tensor.
pub fn bank_weights<T: Scalar>(bank: &KernelBank) -> Result<Tensor<T>> {
    let flat = bank.flat_coeffs();
    Tensor::new(
        &[bank.len(), 1, 3, 3],
        flat.into_iter().map(T::lit).collect(),
    )
}

impl<T: Scalar> Network<T> {
    /// All-zero parameters with the right shapes.
    pub(crate) fn zeroed(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let [c1, c2, c3] = config.conv_channels;
        let flat = config.flatten_width();
        Ok(Self {
            conv: [
                ConvParams::zeros(c1, 1)?,
                ConvParams::zeros(c2, c1)?,
                ConvParams::zeros(c3, c2)?,
            ],
            dense1: DenseParams::new(
                Tensor::zeros(&[flat, config.hidden])?,
                Tensor::zeros(&[config.hidden])?,
            )?,
            dense2: DenseParams::new(
                Tensor::zeros(&[config.hidden, config.classes])?,
                Tensor::zeros(&[config.classes])?,
            )?,
            frozen_layer1: config.arch == Arch::Gfnn,
            config,
        })
    }

    /// He-normal weights and zero biases, one generator stream per layer, so
    /// equal seeds give both architectures identical layers 2 and up. GFNN
    /// takes conv1 from `bank` and freezes it.
    pub fn build(config: NetworkConfig, bank: Option<&KernelBank>) -> Result<Self> {
        let mut net = Self::zeroed(config)?;
        let seed = net.config.init_seed;
        let [c1, c2, c3] = net.config.conv_channels;
        let flat = net.config.flatten_width();
        let hidden = net.config.hidden;
        let classes = net.config.classes;

        match (net.config.arch, bank) {
            (Arch::Gfnn, None) => {
                return Err(Error::Config(
                    "GFNN requires a kernel bank for layer 1".into(),
                ));
            }
            (Arch::Gfnn, Some(bank)) => {
                net.conv[0].weights = bank_weights(bank)?;
            }
            (Arch::Cnn, _) => {
                let mut rng = SplitMix64::derive(seed, 0);
                net.conv[0].weights = he_normal(&[c1, 1, 3, 3], 9, &mut rng)?;
            }
        }
        net.conv[1].weights = he_normal(&[c2, c1, 3, 3], c1 * 9, &mut SplitMix64::derive(seed, 1))?;
        net.conv[2].weights = he_normal(&[c3, c2, 3, 3], c2 * 9, &mut SplitMix64::derive(seed, 2))?;
        net.dense1.weights = he_normal(&[flat, hidden], flat, &mut SplitMix64::derive(seed, 3))?;
        net.dense2.weights =
            he_normal(&[hidden, classes], hidden, &mut SplitMix64::derive(seed, 4))?;
        Ok(net)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn arch(&self) -> Arch {
        self.config.arch
    }

    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        self.config.dropout_rate = rate;
        Ok(())
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen_layer1
    }

    pub fn conv(&self, layer: usize) -> &ConvParams<T> {
        &self.conv[layer]
    }

    pub fn param(&self, id: ParamId) -> &Tensor<T> {
        match id {
            ParamId::Conv1W => &self.conv[0].weights,
            ParamId::Conv1B => &self.conv[0].bias,
            ParamId::Conv2W => &self.conv[1].weights,
            ParamId::Conv2B => &self.conv[1].bias,
            ParamId::Conv3W => &self.conv[2].weights,
            ParamId::Conv3B => &self.conv[2].bias,
            ParamId::Dense1W => &self.dense1.weights,
            ParamId::Dense1B => &self.dense1.bias,
            ParamId::Dense2W => &self.dense2.weights,
            ParamId::Dense2B => &self.dense2.bias,
        }
    }

    /// Mutable access for trainable parameters; `None` for the frozen layer.
    pub fn param_mut(&mut self, id: ParamId) -> Option<&mut Tensor<T>> {
        if self.frozen_layer1 && id.is_layer1() {
            return None;
        }
        Some(self.param_mut_unchecked(id))
    }

    pub(crate) fn param_mut_unchecked(&mut self, id: ParamId) -> &mut Tensor<T> {
        match id {
            ParamId::Conv1W => &mut self.conv[0].weights,
            ParamId::Conv1B => &mut self.conv[0].bias,
            ParamId::Conv2W => &mut self.conv[1].weights,
            ParamId::Conv2B => &mut self.conv[1].bias,
            ParamId::Conv3W => &mut self.conv[2].weights,
            ParamId::Conv3B => &mut self.conv[2].bias,
            ParamId::Dense1W => &mut self.dense1.weights,
            ParamId::Dense1B => &mut self.dense1.bias,
            ParamId::Dense2W => &mut self.dense2.weights,
            ParamId::Dense2B => &mut self.dense2.bias,
        }
    }

    /// Overwrites a parameter regardless of the frozen flag. Shapes must match.
    pub fn set_param(&mut self, id: ParamId, value: Tensor<T>) -> Result<()> {
        let slot = self.param_mut_unchecked(id);
        slot.same_shape(&value)?;
        *slot = value;
        Ok(())
    }

    pub fn trainable_ids(&self) -> Vec<ParamId> {
        ParamId::ALL
            .into_iter()
            .filter(|id| !(self.frozen_layer1 && id.is_layer1()))
            .collect()
    }

    pub fn trainable_param_count(&self) -> usize {
        self.trainable_ids()
            .iter()
            .map(|&id| self.param(id).len())
            .sum()
    }

    pub fn total_param_count(&self) -> usize {
        ParamId::ALL.iter().map(|&id| self.param(id).len()).sum()
    }

    /// CRC-32 of the conv1 weights as little-endian `f32`; equals
    /// [`KernelBank::checksum`] when they hold the bank.
    pub fn layer1_checksum(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        for v in self.conv[0].weights.data() {
            h.update(&(v.to_f32().unwrap_or(f32::NAN)).to_le_bytes());
        }
        h.finalize()
    }

    fn check_images(&self, images: &Tensor<T>) -> Result<()> {
        let s = self.config.input_size;
        if images.rank() != 4 || images.shape()[1..] != [s, s, 1] {
            return Err(Error::Shape(format!(
                "network expects B×{s}×{s}×1 input, got {:?}",
                images.shape()
            )));
        }
        Ok(())
    }

    fn check_features(&self, features: &Tensor<T>) -> Result<()> {
        let f = self.config.feature_shape();
        if features.rank() != 4 || features.shape()[1..] != f {
            return Err(Error::Shape(format!(
                "layer-1 features must be B×{}×{}×{}, got {:?}",
                f[0],
                f[1],
                f[2],
                features.shape()
            )));
        }
        Ok(())
    }

    /// conv1 → relu → pool.
    pub fn layer1_forward(&self, images: &Tensor<T>) -> Result<(Tensor<T>, Layer1Trace<T>)> {
        self.check_images(images)?;
        let mut act = conv2d_same(images, &self.conv[0])?;
        relu_inplace(&mut act);
        let pool = maxpool2_ceil(&act)?;
        Ok((
            pool.output,
            Layer1Trace {
                input: images.clone(),
                activated: act,
                argmax: pool.argmax,
            },
        ))
    }

    pub fn layer1_macs(&self, batch: usize) -> u64 {
        let s = self.config.input_size;
        conv_macs(batch, s, s, 1, self.config.conv_channels[0])
    }

    pub fn rest_macs(&self, batch: usize) -> u64 {
        let [_, s1, s2, _] = self.config.sides();
        let [c1, c2, c3] = self.config.conv_channels;
        conv_macs(batch, s1, s1, c1, c2)
            + conv_macs(batch, s2, s2, c2, c3)
            + (batch * self.config.flatten_width() * self.config.hidden) as u64
            + (batch * self.config.hidden * self.config.classes) as u64
    }

    /// Everything after layer 1. Dropout draws from `rng` only when training
    /// with a positive rate.
    pub fn forward_rest(
        &self,
        features: &Tensor<T>,
        training: bool,
        rng: &mut SplitMix64,
    ) -> Result<(Tensor<T>, RestTrace<T>)> {
        self.check_features(features)?;
        let b = features.dim(0);

        let mut act2 = conv2d_same(features, &self.conv[1])?;
        relu_inplace(&mut act2);
        let p2 = maxpool2_ceil(&act2)?;

        let mut act3 = conv2d_same(&p2.output, &self.conv[2])?;
        relu_inplace(&mut act3);
        let p3 = maxpool2_ceil(&act3)?;

        let flat = p3.output.reshape(&[b, self.config.flatten_width()])?;
        let mut hidden = dense(&flat, &self.dense1)?;
        relu_inplace(&mut hidden);
        let (dropped, mask) = dropout(&hidden, self.config.dropout_rate, rng, training)?;
        let logits = dense(&dropped, &self.dense2)?;

        Ok((
            logits,
            RestTrace {
                features: features.clone(),
                act2,
                argmax2: p2.argmax,
                pooled2: p2.output,
                act3,
                argmax3: p3.argmax,
                flat,
                hidden,
                mask,
                dropped,
            },
        ))
    }

    pub fn forward(
        &self,
        images: &Tensor<T>,
        training: bool,
        rng: &mut SplitMix64,
    ) -> Result<(Tensor<T>, ForwardTrace<T>)> {
        let (features, l1) = self.layer1_forward(images)?;
        let (logits, rest) = self.forward_rest(&features, training, rng)?;
        let b = images.dim(0);
        Ok((
            logits,
            ForwardTrace {
                layer1: Some(l1),
                rest,
                macs: self.layer1_macs(b) + self.rest_macs(b),
            },
        ))
    }

    /// Starts from precomputed layer-1 features; only valid for a frozen
    /// layer 1.
    pub fn forward_from_features(
        &self,
        features: &Tensor<T>,
        training: bool,
        rng: &mut SplitMix64,
    ) -> Result<(Tensor<T>, ForwardTrace<T>)> {
        if !self.frozen_layer1 {
            return Err(Error::Config(
                "cached features require a frozen first layer".into(),
            ));
        }
        let (logits, rest) = self.forward_rest(features, training, rng)?;
        let macs = self.rest_macs(features.dim(0));
        Ok((
            logits,
            ForwardTrace {
                layer1: None,
                rest,
                macs,
            },
        ))
    }

    /// Inference logits, dropout off.
    pub fn logits(&self, images: &Tensor<T>) -> Result<Tensor<T>> {
        let mut rng = SplitMix64::new(0);
        Ok(self.forward(images, false, &mut rng)?.0)
    }

    /// Gradients for conv2 onward. Returns the gradient at conv2's output so
    /// [`Self::feature_grad`] can continue toward layer 1 when needed.
    pub fn backward_rest(
        &self,
        trace: &RestTrace<T>,
        d_logits: &Tensor<T>,
    ) -> Result<(GradientSet<T>, Conv2Upstream<T>)> {
        let mut grads = GradientSet::new();

        let g = dense_backward(&trace.dropped, &self.dense2, d_logits, true)?;
        grads.insert(ParamId::Dense2W, g.d_weights);
        grads.insert(ParamId::Dense2B, g.d_bias);
        let mut d_hidden = dropout_backward(&trace.mask, &g.d_input.expect("requested"))?;
        relu_backward_from_output(&trace.hidden, &mut d_hidden)?;

        let g = dense_backward(&trace.flat, &self.dense1, &d_hidden, true)?;
        grads.insert(ParamId::Dense1W, g.d_weights);
        grads.insert(ParamId::Dense1B, g.d_bias);
        let d_flat = g.d_input.expect("requested");

        let pooled3_shape = {
            let s = self.config.sides()[3];
            [trace.flat.dim(0), s, s, self.config.conv_channels[2]]
        };
        let d_p3 = d_flat.reshape(&pooled3_shape)?;
        let mut d_act3 = maxpool2_backward(&trace.argmax3, &d_p3, trace.act3.shape())?;
        relu_backward_from_output(&trace.act3, &mut d_act3)?;
        let g = conv2d_backward(&trace.pooled2, &self.conv[2], &d_act3)?;
        grads.insert(ParamId::Conv3W, g.d_weights);
        grads.insert(ParamId::Conv3B, g.d_bias);

        let mut d_act2 = maxpool2_backward(
            &trace.argmax2,
            &g.d_input.expect("requested"),
            trace.act2.shape(),
        )?;
        relu_backward_from_output(&trace.act2, &mut d_act2)?;
        let g = conv2d_backward_params(&trace.features, &self.conv[1], &d_act2)?;
        grads.insert(ParamId::Conv2W, g.d_weights);
        grads.insert(ParamId::Conv2B, g.d_bias);

        Ok((grads, Conv2Upstream(d_act2)))
    }

    /// Gradient with respect to the layer-1 features (conv2's input).
    pub fn feature_grad(
        &self,
        trace: &RestTrace<T>,
        upstream: &Conv2Upstream<T>,
    ) -> Result<Tensor<T>> {
        conv2d_backward_input(&self.conv[1], &upstream.0, trace.features.shape())
    }

    /// conv1 weight and bias gradients from the feature gradient.
    pub fn backward_layer1(
        &self,
        trace: &Layer1Trace<T>,
        d_features: &Tensor<T>,
    ) -> Result<GradientSet<T>> {
        if self.frozen_layer1 {
            return Err(Error::Internal(
                "layer 1 is frozen and has no gradients".into(),
            ));
        }
        let mut d_act = maxpool2_backward(&trace.argmax, d_features, trace.activated.shape())?;
        relu_backward_from_output(&trace.activated, &mut d_act)?;
        let g = conv2d_backward_params(&trace.input, &self.conv[0], &d_act)?;
        let mut grads = GradientSet::new();
        grads.insert(ParamId::Conv1W, g.d_weights);
        grads.insert(ParamId::Conv1B, g.d_bias);
        Ok(grads)
    }

    /// Full backward pass. A frozen network stops at conv2's parameter
    /// gradients: neither the feature gradient nor anything in layer 1 is
    /// computed.
    pub fn backward(
        &self,
        trace: &ForwardTrace<T>,
        d_logits: &Tensor<T>,
    ) -> Result<GradientSet<T>> {
        let (mut grads, up) = self.backward_rest(&trace.rest, d_logits)?;
        if self.frozen_layer1 {
            return Ok(grads);
        }
        let l1 = trace.layer1.as_ref().ok_or_else(|| {
            Error::Internal("missing layer-1 activations for a trainable layer 1".into())
        })?;
        let d_features = self.feature_grad(&trace.rest, &up)?;
        grads.merge(self.backward_layer1(l1, &d_features)?);
        Ok(grads)
    }

    /// Bitwise equality of every parameter.
    pub fn params_bit_eq(&self, other: &Self) -> bool
    where
        T: ToBits,
    {
        ParamId::ALL
            .iter()
            .all(|&id| self.param(id).bit_eq(other.param(id)))
    }
}

/// Index of the largest logit per row; ties go to the lowest class.
pub fn argmax_rows<T: Scalar>(logits: &Tensor<T>) -> Vec<usize> {
    let k = logits.dim(logits.rank() - 1);
    logits
        .data()
        .chunks_exact(k)
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_bank::build_bank;

    #[test]
    fn mnist_shapes() {
        let c = NetworkConfig::mnist(Arch::Cnn, 0.5, 1);
        assert_eq!(c.sides(), [28, 14, 7, 4]);
        assert_eq!(c.flatten_width(), 2048);
        assert_eq!(c.feature_len(), 8036);
    }

    #[test]
    fn gfnn_needs_bank() {
        let err =
            Network::<f32>::build(NetworkConfig::mnist(Arch::Gfnn, 0.5, 1), None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn gfnn_layer1_is_the_bank() {
        let bank = build_bank();
        let net =
            Network::<f32>::build(NetworkConfig::mnist(Arch::Gfnn, 0.5, 1), Some(&bank)).unwrap();
        assert!(net.is_frozen());
        let w = net.param(ParamId::Conv1W);
        assert_eq!(w.shape(), &[41, 1, 3, 3]);
        for (i, k) in bank.iter().enumerate() {
            for (j, &c) in k.coeffs.iter().flatten().enumerate() {
                assert_eq!(w.data()[i * 9 + j], c as f32);
            }
        }
        assert!(net.param(ParamId::Conv1B).data().iter().all(|&b| b == 0.0));
        assert_eq!(net.layer1_checksum(), bank.checksum());
    }

    #[test]
    fn frozen_param_not_mutable() {
        let bank = build_bank();
        let mut net =
            Network::<f32>::build(NetworkConfig::mnist(Arch::Gfnn, 0.5, 1), Some(&bank)).unwrap();
        assert!(net.param_mut(ParamId::Conv1W).is_none());
        assert!(net.param_mut(ParamId::Conv2W).is_some());
        assert_eq!(net.trainable_ids().len(), 8);
    }

    #[test]
    fn bad_input_shape() {
        let net = Network::<f32>::build(NetworkConfig::mnist(Arch::Cnn, 0.5, 1), None).unwrap();
        let mut rng = SplitMix64::new(0);
        let err = net
            .forward(&Tensor::zeros(&[1, 27, 28, 1]).unwrap(), false, &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn unfrozen_backward_needs_layer1_trace() {
        let net = Network::<f64>::build(NetworkConfig::mnist(Arch::Cnn, 0.0, 1), None).unwrap();
        let mut rng = SplitMix64::new(0);
        let x = Tensor::zeros(&[1, 28, 28, 1]).unwrap();
        let (logits, mut trace) = net.forward(&x, true, &mut rng).unwrap();
        trace.layer1 = None;
        let err = net.backward(&trace, &logits).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }

    #[test]
    fn argmax_ties_lowest() {
        let t = Tensor::new(&[2, 3], vec![1.0, 3.0, 3.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(argmax_rows::<f64>(&t), [1, 0]);
    }
}
