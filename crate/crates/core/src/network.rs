//! Layered feed-forward networks with per-layer frozen flags.
//!
//! Frozen layers hold fixed logical operators. Backpropagation runs the chain
//! rule through them so that earlier learnable layers still receive an error
//! signal, but it never emits gradients for their parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DomainError, NetworkError, ShapeError};
use crate::logic::{clamp_unit, Generator, SquashingParams};

/// Default multiplier from data coordinates in `[-1, 1]` to network inputs.
pub const DEFAULT_INPUT_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Squash { a: f64, lambda: f64, beta: f64 },
    HardCut,
    Linear,
}

impl Activation {
    pub fn squash(p: SquashingParams) -> Self {
        Activation::Squash {
            a: p.a,
            lambda: p.lambda,
            beta: p.beta,
        }
    }

    fn params(a: f64, lambda: f64, beta: f64) -> SquashingParams {
        SquashingParams { a, lambda, beta }
    }

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match *self {
            Activation::Squash { a, lambda, beta } => Self::params(a, lambda, beta).eval(z),
            Activation::HardCut => clamp_unit(z),
            Activation::Linear => z,
        }
    }

    /// Derivative with respect to the pre-activation. The cut uses the
    /// one-sided convention `1` on `(0, 1)` and `0` elsewhere.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Activation::Squash { a, lambda, beta } => Self::params(a, lambda, beta).partials(z).dx,
            Activation::HardCut => {
                if z > 0.0 && z < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    fn validate(&self) -> Result<(), DomainError> {
        match *self {
            Activation::Squash { a, lambda, beta } => Self::params(a, lambda, beta).validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum InputFeature {
    Raw(usize),
    Squared(usize),
}

/// Interpretability metadata for one unit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UnitInfo {
    /// Operator name (`AND`, `OR`, ...) or the inequality of a membership unit.
    pub label: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    /// Row-major, `out_dim x in_dim`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub frozen: bool,
    pub activation: Activation,
    pub label: Option<String>,
    pub units: Vec<UnitInfo>,
}

impl LayerSpec {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Self {
        Self {
            weights,
            bias,
            frozen: false,
            activation,
            label: None,
            units: Vec::new(),
        }
    }

    pub fn frozen(mut self, label: impl Into<String>) -> Self {
        self.frozen = true;
        self.label = Some(label.into());
        self
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub generator: Generator,
    /// Number of raw coordinates a sample carries.
    pub inputs: usize,
    /// Multiplier applied to raw coordinates before feature expansion.
    pub input_scale: f64,
    pub input_features: Vec<InputFeature>,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(input_features: Vec<InputFeature>, layers: Vec<LayerSpec>) -> Self {
        Self {
            generator: Generator::Identity,
            inputs: 2,
            input_scale: DEFAULT_INPUT_SCALE,
            input_features,
            layers,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.layers.is_empty() {
            return Err(ConfigError::NoLayers);
        }
        if !self.generator.is_identity() {
            return invalid("network units need the identity generator".into());
        }
        if !(self.input_scale.is_finite() && self.input_scale > 0.0) {
            return invalid(format!("input scale must be positive, got {}", self.input_scale));
        }
        if self.input_features.is_empty() {
            return invalid("no input features".into());
        }
        for feature in &self.input_features {
            let (InputFeature::Raw(i) | InputFeature::Squared(i)) = *feature;
            if i >= self.inputs {
                return invalid(format!(
                    "input feature {feature:?} refers past the {} raw inputs",
                    self.inputs
                ));
            }
        }
        let mut expected_in = self.input_features.len();
        for (idx, layer) in self.layers.iter().enumerate() {
            let err = |reason: String| ConfigError::Layer { layer: idx, reason };
            if layer.bias.is_empty() {
                return Err(err("layer has no units".into()));
            }
            if layer.weights.len() != layer.bias.len() {
                return Err(err(format!(
                    "{} weight rows for {} biases",
                    layer.weights.len(),
                    layer.bias.len()
                )));
            }
            if let Some(row) = layer.weights.iter().find(|r| r.len() != expected_in) {
                return Err(err(format!(
                    "expects {} inputs, weight row has {}",
                    expected_in,
                    row.len()
                )));
            }
            let finite = layer.weights.iter().flatten().chain(&layer.bias).all(|v| v.is_finite());
            if !finite {
                return Err(err("non-finite parameter".into()));
            }
            layer.activation.validate().map_err(|e| err(e.to_string()))?;
            if layer.frozen && layer.label.as_deref().is_none_or(str::is_empty) {
                return Err(err("frozen layer needs an operator label".into()));
            }
            if !layer.units.is_empty() && layer.units.len() != layer.bias.len() {
                return Err(err(format!(
                    "{} unit labels for {} units",
                    layer.units.len(),
                    layer.bias.len()
                )));
            }
            expected_in = layer.bias.len();
        }
        Ok(())
    }
}

/// Everything a backward pass needs from a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub features: Vec<f64>,
    /// Pre-activations per layer.
    pub pre: Vec<Vec<f64>>,
    /// Activations per layer; the last entry is the network output.
    pub post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.post.last().map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub layer: usize,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Gradients of the learnable layers only; frozen layers have no entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradientSet {
    pub layers: Vec<LayerGradient>,
}

impl GradientSet {
    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn get(&self, layer: usize) -> Option<&LayerGradient> {
        self.layers.iter().find(|g| g.layer == layer)
    }

    /// Adds `other` into `self`, element-wise. Both must come from the same
    /// network.
    pub fn accumulate(&mut self, other: &GradientSet) {
        if self.layers.is_empty() {
            self.layers = other.layers.clone();
            return;
        }
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            debug_assert_eq!(mine.layer, theirs.layer);
            for (row, orow) in mine.weights.iter_mut().zip(&theirs.weights) {
                for (w, o) in row.iter_mut().zip(orow) {
                    *w += o;
                }
            }
            for (b, o) in mine.bias.iter_mut().zip(&theirs.bias) {
                *b += o;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.layers {
            g.weights.iter_mut().flatten().for_each(|w| *w *= factor);
            g.bias.iter_mut().for_each(|b| *b *= factor);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// `1` when the output is at least 0.5, else `0`.
    pub label: u8,
    pub confidence: f64,
}

/// A validated, executable network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
}

impl Network {
    pub fn assemble(spec: NetworkSpec) -> Result<Self, ConfigError> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn into_spec(self) -> NetworkSpec {
        self.spec
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.spec.layers
    }

    pub fn output_dim(&self) -> usize {
        self.spec.layers.last().map_or(0, LayerSpec::out_dim)
    }

    pub fn has_learnable(&self) -> bool {
        self.spec.layers.iter().any(|l| !l.frozen)
    }

    pub fn learnable_parameter_count(&self) -> usize {
        self.spec
            .layers
            .iter()
            .filter(|l| !l.frozen)
            .map(|l| l.bias.len() * (l.in_dim() + 1))
            .sum()
    }

    /// Replaces every layer's activation.
    pub fn with_activation(mut self, activation: Activation) -> Result<Self, DomainError> {
        activation.validate()?;
        for layer in &mut self.spec.layers {
            layer.activation = activation;
        }
        Ok(self)
    }

    /// Draws learnable weights and biases uniformly from `[-1, 1]`.
    pub fn randomize_learnable<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for layer in self.spec.layers.iter_mut().filter(|l| !l.frozen) {
            for w in layer.weights.iter_mut().flatten() {
                *w = rng.random_range(-1.0..=1.0);
            }
            for b in &mut layer.bias {
                *b = rng.random_range(-1.0..=1.0);
            }
        }
    }

    pub fn set_frozen(&mut self, layer: usize, frozen: bool) {
        let l = &mut self.spec.layers[layer];
        l.frozen = frozen;
        if frozen && l.label.is_none() {
            l.label = Some("frozen".into());
        }
    }

    /// Expands raw coordinates into the first layer's inputs.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>, DomainError> {
        if x.len() != self.spec.inputs {
            return Err(DomainError::LengthMismatch {
                expected: self.spec.inputs,
                actual: x.len(),
            });
        }
        if let Some(&bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(DomainError::NonFinite(bad));
        }
        let k = self.spec.input_scale;
        Ok(self
            .spec
            .input_features
            .iter()
            .map(|f| match *f {
                InputFeature::Raw(i) => k * x[i],
                InputFeature::Squared(i) => (k * x[i]) * (k * x[i]),
            })
            .collect())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace, DomainError> {
        let features = self.features(x)?;
        let mut pre = Vec::with_capacity(self.spec.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.spec.layers.len());
        for layer in &self.spec.layers {
            let input = post.last().unwrap_or(&features);
            let z: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, b)| row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>() + b)
                .collect();
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardTrace { features, pre, post })
    }

    /// Network output only.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, DomainError> {
        Ok(self.forward(x)?.post.pop().unwrap_or_default())
    }

    /// Squared-error loss `(y - target)^2` on the first output and gradients of
    /// the learnable layers.
    pub fn backward(&self, trace: &ForwardTrace, target: f64) -> Result<(GradientSet, f64), NetworkError> {
        let layers = &self.spec.layers;
        let mismatch = |what, expected, actual| ShapeError::Mismatch { what, expected, actual };
        if trace.pre.len() != layers.len() || trace.post.len() != layers.len() {
            return Err(mismatch("layer records", layers.len(), trace.post.len()).into());
        }
        if trace.features.len() != self.spec.input_features.len() {
            return Err(mismatch("features", self.spec.input_features.len(), trace.features.len()).into());
        }
        for (layer, (z, a)) in layers.iter().zip(trace.pre.iter().zip(&trace.post)) {
            if z.len() != layer.out_dim() || a.len() != layer.out_dim() {
                return Err(mismatch("activations", layer.out_dim(), a.len()).into());
            }
        }

        let y = trace.output()[0];
        let loss = (y - target) * (y - target);

        let mut grads = Vec::new();
        let Some(lowest_learnable) = layers.iter().position(|l| !l.frozen) else {
            return Ok((GradientSet::default(), loss));
        };

        // dL/d(post) of the current layer.
        let last = layers.len() - 1;
        let mut upstream = vec![0.0; layers[last].out_dim()];
        upstream[0] = 2.0 * (y - target);

        for l in (lowest_learnable..=last).rev() {
            let layer = &layers[l];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(&trace.pre[l])
                .map(|(g, &z)| g * layer.activation.derivative(z))
                .collect();
            let input = if l == 0 { &trace.features } else { &trace.post[l - 1] };
            if !layer.frozen {
                grads.push(LayerGradient {
                    layer: l,
                    weights: delta.iter().map(|d| input.iter().map(|v| d * v).collect()).collect(),
                    bias: delta.clone(),
                });
            }
            if l > lowest_learnable {
                let mut next = vec![0.0; layer.in_dim()];
                for (row, d) in layer.weights.iter().zip(&delta) {
                    for (n, w) in next.iter_mut().zip(row) {
                        *n += w * d;
                    }
                }
                upstream = next;
            }
        }
        grads.reverse();
        Ok((GradientSet { layers: grads }, loss))
    }

    /// `param -= lr * grad` on learnable layers. Validates every shape before
    /// touching any parameter.
    pub fn sgd_step(&mut self, grads: &GradientSet, lr: f64) -> Result<(), NetworkError> {
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(DomainError::InvalidParameter(format!("learning rate {lr}")).into());
        }
        for g in &grads.layers {
            let Some(layer) = self.spec.layers.get(g.layer) else {
                return Err(ShapeError::Mismatch {
                    what: "layers",
                    expected: self.spec.layers.len(),
                    actual: g.layer + 1,
                }
                .into());
            };
            if layer.frozen {
                return Err(NetworkError::FrozenGradient(g.layer));
            }
            let rows_ok = g.weights.len() == layer.weights.len()
                && g.weights.iter().zip(&layer.weights).all(|(a, b)| a.len() == b.len());
            if !rows_ok || g.bias.len() != layer.bias.len() {
                return Err(ShapeError::Mismatch {
                    what: "gradient entries",
                    expected: layer.bias.len(),
                    actual: g.bias.len(),
                }
                .into());
            }
        }
        for g in &grads.layers {
            let layer = &mut self.spec.layers[g.layer];
            for (row, grow) in layer.weights.iter_mut().zip(&g.weights) {
                for (w, d) in row.iter_mut().zip(grow) {
                    *w -= lr * d;
                }
            }
            for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * d;
            }
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, DomainError> {
        let y = self.evaluate(x)?[0];
        Ok(Prediction {
            label: u8::from(y >= 0.5),
            confidence: y,
        })
    }
}
