//! Minibatch SGD sessions, accuracy and decision-surface grids.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledPoint;
use crate::error::{ConfigError, DomainError, TrainError};
use crate::logic::SquashingParams;
use crate::network::{Activation, GradientSet, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub a: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let p = SquashingParams::default();
        Self {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 10,
            seed: 0,
            a: p.a,
            lambda: p.lambda,
            beta: p.beta,
        }
    }
}

impl TrainConfig {
    pub fn squashing(&self) -> SquashingParams {
        SquashingParams {
            a: self.a,
            lambda: self.lambda,
            beta: self.beta,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::Invalid("batch size must be positive".into()));
        }
        self.squashing()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Idle,
    Running,
    Paused,
    Done,
}

impl SessionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SessionStatus::Idle => "idle",
            SessionStatus::Running => "running",
            SessionStatus::Paused => "paused",
            SessionStatus::Done => "done",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub step: u64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
}

/// Mean squared error and accuracy of `net` on `points`.
pub fn loss_and_accuracy(net: &Network, points: &[LabeledPoint]) -> Result<(f64, f64), DomainError> {
    if points.is_empty() {
        return Err(DomainError::Empty);
    }
    let mut loss = 0.0;
    let mut hits = 0usize;
    for p in points {
        let y = net.evaluate(&p.coords())?[0];
        loss += (y - p.target()) * (y - p.target());
        hits += usize::from(u8::from(y >= 0.5) == p.class());
    }
    let n = points.len() as f64;
    Ok((loss / n, hits as f64 / n))
}

/// Fraction of points whose predicted class matches the label.
pub fn accuracy(net: &Network, points: &[LabeledPoint]) -> Result<f64, DomainError> {
    loss_and_accuracy(net, points).map(|(_, acc)| acc)
}

/// A network, its data and the SGD state that drives it.
///
/// Status moves `idle -> running <-> paused -> done`; `step` is allowed from
/// idle or paused and leaves the session paused. A step is one minibatch
/// update; metrics are recorded once per completed epoch.
#[derive(Debug, Clone)]
pub struct TrainingSession {
    initial: Network,
    network: Network,
    train: Vec<LabeledPoint>,
    test: Vec<LabeledPoint>,
    config: TrainConfig,
    status: SessionStatus,
    step: u64,
    epoch: usize,
    cursor: usize,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    history: Vec<EpochMetrics>,
}

impl TrainingSession {
    /// Puts the configured squashing activation on every layer of `network`.
    pub fn new(
        network: Network,
        train: Vec<LabeledPoint>,
        test: Vec<LabeledPoint>,
        config: TrainConfig,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        if train.is_empty() {
            return Err(TrainError::EmptyData);
        }
        let network = network
            .with_activation(Activation::squash(config.squashing()))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut session = Self {
            initial: network.clone(),
            network,
            order: (0..train.len()).collect(),
            train,
            test,
            config,
            status: SessionStatus::Idle,
            step: 0,
            epoch: 0,
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            history: Vec::new(),
        };
        session.reset();
        Ok(session)
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn history(&self) -> &[EpochMetrics] {
        &self.history
    }

    pub fn train_data(&self) -> &[LabeledPoint] {
        &self.train
    }

    pub fn test_data(&self) -> &[LabeledPoint] {
        &self.test
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.train.len().div_ceil(self.config.batch_size)
    }

    pub fn total_steps(&self) -> u64 {
        (self.config.epochs * self.batches_per_epoch()) as u64
    }

    fn transition_error(&self, action: &'static str) -> TrainError {
        TrainError::InvalidTransition {
            action,
            status: self.status.as_str(),
        }
    }

    fn finish_if_complete(&mut self) {
        if self.step >= self.total_steps() {
            self.status = SessionStatus::Done;
        }
    }

    pub fn start(&mut self) -> Result<(), TrainError> {
        match self.status {
            SessionStatus::Idle | SessionStatus::Paused => {
                self.status = SessionStatus::Running;
                self.finish_if_complete();
                Ok(())
            }
            _ => Err(self.transition_error("start")),
        }
    }

    pub fn pause(&mut self) -> Result<(), TrainError> {
        match self.status {
            SessionStatus::Running => {
                self.status = SessionStatus::Paused;
                Ok(())
            }
            _ => Err(self.transition_error("pause")),
        }
    }

    /// Runs up to `n` steps from idle or paused, then pauses (or finishes).
    pub fn step(&mut self, n: u64) -> Result<u64, TrainError> {
        match self.status {
            SessionStatus::Idle | SessionStatus::Paused => {
                let done = self.advance(n)?;
                self.status = SessionStatus::Paused;
                self.finish_if_complete();
                Ok(done)
            }
            _ => Err(self.transition_error("step")),
        }
    }

    /// Runs up to `n` steps of a running session.
    pub fn tick(&mut self, n: u64) -> Result<u64, TrainError> {
        if self.status != SessionStatus::Running {
            return Err(self.transition_error("tick"));
        }
        let done = self.advance(n)?;
        self.finish_if_complete();
        Ok(done)
    }

    /// Restores the initial network and clears all progress.
    pub fn reset(&mut self) {
        self.network = self.initial.clone();
        self.status = SessionStatus::Idle;
        self.step = 0;
        self.epoch = 0;
        self.cursor = 0;
        self.history.clear();
        self.rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        self.order = (0..self.train.len()).collect();
        self.order.shuffle(&mut self.rng);
    }

    fn advance(&mut self, n: u64) -> Result<u64, TrainError> {
        let budget = n.min(self.total_steps() - self.step);
        for _ in 0..budget {
            self.sgd_batch()?;
        }
        Ok(budget)
    }

    fn sgd_batch(&mut self) -> Result<(), TrainError> {
        let end = (self.cursor + self.config.batch_size).min(self.train.len());
        if self.network.has_learnable() {
            let mut total = GradientSet::default();
            let mut loss = 0.0;
            for &i in &self.order[self.cursor..end] {
                let p = &self.train[i];
                let trace = self
                    .network
                    .forward(&p.coords())
                    .map_err(crate::error::NetworkError::from)?;
                let (g, l) = self.network.backward(&trace, p.target())?;
                total.accumulate(&g);
                loss += l;
            }
            if !loss.is_finite() {
                return Err(TrainError::Diverged { step: self.step });
            }
            total.scale(1.0 / (end - self.cursor) as f64);
            self.network.sgd_step(&total, self.config.learning_rate)?;
        }
        self.step += 1;
        self.cursor = end;
        if self.cursor == self.train.len() {
            self.epoch += 1;
            self.cursor = 0;
            self.record_epoch()?;
            self.order.shuffle(&mut self.rng);
        }
        Ok(())
    }

    fn record_epoch(&mut self) -> Result<(), TrainError> {
        let metrics = match self.history.last() {
            // Nothing can change without learnable parameters.
            Some(last) if !self.network.has_learnable() => EpochMetrics {
                epoch: self.epoch,
                step: self.step,
                ..*last
            },
            _ => {
                let (train_loss, train_accuracy) =
                    loss_and_accuracy(&self.network, &self.train).map_err(crate::error::NetworkError::from)?;
                let (test_loss, test_accuracy) = if self.test.is_empty() {
                    (None, None)
                } else {
                    let (l, a) =
                        loss_and_accuracy(&self.network, &self.test).map_err(crate::error::NetworkError::from)?;
                    (Some(l), Some(a))
                };
                EpochMetrics {
                    epoch: self.epoch,
                    step: self.step,
                    train_loss,
                    train_accuracy,
                    test_loss,
                    test_accuracy,
                }
            }
        };
        if !metrics.train_loss.is_finite() {
            return Err(TrainError::Diverged { step: self.step });
        }
        self.history.push(metrics);
        Ok(())
    }
}

/// Trains an idle or paused session to completion.
pub fn run_training(session: &mut TrainingSession) -> Result<(), TrainError> {
    session.start()?;
    if session.status == SessionStatus::Running {
        let remaining = session.total_steps() - session.step;
        session.tick(remaining)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitGrid {
    pub label: String,
    /// Row-major, `values[row * resolution + col]`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGrid {
    pub label: Option<String>,
    pub frozen: bool,
    pub units: Vec<UnitGrid>,
}

/// Network output and every unit's activation on a uniform grid over
/// `[-1, 1]^2`. Row `r` holds `y = axis[r]`, column `c` holds `x = axis[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSnapshot {
    pub resolution: usize,
    pub axis: Vec<f64>,
    pub output: Vec<f64>,
    pub layers: Vec<LayerGrid>,
}

impl GridSnapshot {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.output[row * self.resolution + col]
    }
}

pub fn grid_axis(resolution: usize) -> Vec<f64> {
    let last = (resolution - 1) as f64;
    (0..resolution).map(|i| -1.0 + 2.0 * i as f64 / last).collect()
}

pub fn evaluate_grid(net: &Network, resolution: usize) -> Result<GridSnapshot, ConfigError> {
    if resolution < 2 {
        return Err(ConfigError::Invalid(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    if net.spec().inputs != 2 {
        return Err(ConfigError::Invalid("grids need a two-input network".into()));
    }
    let axis = grid_axis(resolution);
    let cells = resolution * resolution;
    let mut layers: Vec<LayerGrid> = net
        .layers()
        .iter()
        .map(|l| LayerGrid {
            label: l.label.clone(),
            frozen: l.frozen,
            units: (0..l.out_dim())
                .map(|u| UnitGrid {
                    label: l.units.get(u).map(|i| i.label.clone()).unwrap_or_default(),
                    values: Vec::with_capacity(cells),
                })
                .collect(),
        })
        .collect();
    let mut output = Vec::with_capacity(cells);
    for &y in &axis {
        for &x in &axis {
            let trace = net.forward(&[x, y]).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            for (grid, acts) in layers.iter_mut().zip(&trace.post) {
                for (unit, &v) in grid.units.iter_mut().zip(acts) {
                    unit.values.push(v);
                }
            }
            output.push(trace.output()[0]);
        }
    }
    Ok(GridSnapshot {
        resolution,
        axis,
        output,
        layers,
    })
}
