//! Single-layer tanh student trained with mean-squared error and Adam.

use crate::dynamics::{iterate, NetworkParams, StateVector, Stepper, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::kernel::EvalKernel;
use crate::rng::{shuffle, symmetric_scaled, Seed};
use crate::scalar::Real;

/// Consecutive-state pairs `(x(t), x(t+1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    n: usize,
    inputs: Vec<StateVector<T>>,
    targets: Vec<StateVector<T>>,
}

impl<T: Real> Dataset<T> {
    pub fn new(inputs: Vec<StateVector<T>>, targets: Vec<StateVector<T>>) -> Result<Self> {
        check_dim(inputs.len(), targets.len())?;
        let n = inputs
            .first()
            .map(|s| s.len())
            .ok_or_else(|| Error::InsufficientData("dataset has no pairs".into()))?;
        for s in inputs.iter().chain(&targets) {
            check_dim(n, s.len())?;
        }
        Ok(Dataset { n, inputs, targets })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[StateVector<T>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[StateVector<T>] {
        &self.targets
    }
}

/// Pairs `(states[k], states[k + 1])` for every `k`.
pub fn build_dataset<T: Real>(traj: &Trajectory<T>) -> Result<Dataset<T>> {
    if traj.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need a trajectory of at least 2 states, got {}",
            traj.len()
        )));
    }
    let states = traj.states();
    Dataset::new(states[..states.len() - 1].to_vec(), states[1..].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_hat: f64,
    pub shuffle_seed: Seed,
    pub init_seed: Seed,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 100,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon_hat: 1e-7,
            shuffle_seed: Seed(0),
            init_seed: Seed(1),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0 < self.beta1 && self.beta1 < 1.0 && 0.0 < self.beta2 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if self.epsilon_hat.is_nan() || self.epsilon_hat <= 0.0 {
            return bad("epsilon_hat must be positive");
        }
        Ok(())
    }
}

/// Gradient of the loss with respect to `w` (row-major) and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair<T> {
    pub g_w: Vec<T>,
    pub g_b: Vec<T>,
}

impl<T: Real> GradientPair<T> {
    pub fn zeros(n: usize) -> Self {
        GradientPair {
            g_w: vec![T::zero(); n * n],
            g_b: vec![T::zero(); n],
        }
    }
}

/// Adam first/second moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m_w: Vec<T>,
    pub v_w: Vec<T>,
    pub m_b: Vec<T>,
    pub v_b: Vec<T>,
    pub step_count: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(n: usize) -> Self {
        AdamState {
            m_w: vec![T::zero(); n * n],
            v_w: vec![T::zero(); n * n],
            m_b: vec![T::zero(); n],
            v_b: vec![T::zero(); n],
            step_count: 0,
        }
    }

    /// One Adam step applied to `model` in place.
    pub fn apply(&mut self, model: &mut NetworkParams<T>, grad: &GradientPair<T>, config: &TrainConfig) -> Result<()> {
        let n = model.n();
        for (len, parts) in [
            (n * n, [self.m_w.len(), self.v_w.len(), grad.g_w.len()]),
            (n, [self.m_b.len(), self.v_b.len(), grad.g_b.len()]),
        ] {
            for p in parts {
                check_dim(len, p)?;
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let f = T::from_f64_lossy;
        let beta1 = f(config.beta1);
        let beta2 = f(config.beta2);
        let hyper = AdamHyper {
            beta1,
            beta2,
            correction1: T::one() - beta1.powi(t),
            correction2: T::one() - beta2.powi(t),
            lr: f(config.learning_rate),
            eps: f(config.epsilon_hat),
        };
        hyper.update(model.weights_mut(), &mut self.m_w, &mut self.v_w, &grad.g_w);
        hyper.update(model.bias_mut(), &mut self.m_b, &mut self.v_b, &grad.g_b);
        Ok(())
    }
}

struct AdamHyper<T> {
    beta1: T,
    beta2: T,
    correction1: T,
    correction2: T,
    lr: T,
    eps: T,
}

impl<T: Real> AdamHyper<T> {
    fn update(&self, theta: &mut [T], m: &mut [T], v: &mut [T], g: &[T]) {
        for (((p, m), v), &g) in theta.iter_mut().zip(m).zip(v).zip(g) {
            *m = self.beta1 * *m + (T::one() - self.beta1) * g;
            *v = self.beta2 * *v + (T::one() - self.beta2) * g * g;
            let m_hat = *m / self.correction1;
            let v_hat = *v / self.correction2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Functional form of [`AdamState::apply`].
pub fn adam_update<T: Real>(
    model: &NetworkParams<T>,
    state: &AdamState<T>,
    grad: &GradientPair<T>,
    config: &TrainConfig,
) -> Result<(NetworkParams<T>, AdamState<T>)> {
    let mut model = model.clone();
    let mut state = state.clone();
    state.apply(&mut model, grad, config)?;
    Ok((model, state))
}

fn check_batch<T: Real>(model: &NetworkParams<T>, inputs: &[StateVector<T>], targets: &[StateVector<T>]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    check_dim(inputs.len(), targets.len())?;
    for s in inputs.iter().chain(targets) {
        check_dim(model.n(), s.len())?;
    }
    Ok(())
}

/// Loss and gradient over the pairs yielded by `pairs`, which must yield
/// `count` items. Samples are accumulated in iteration order.
fn loss_and_gradient<'a, T: Real>(
    model: &NetworkParams<T>,
    kernel: EvalKernel,
    pairs: impl Iterator<Item = (&'a StateVector<T>, &'a StateVector<T>)>,
    count: usize,
    grad: Option<&mut GradientPair<T>>,
) -> Result<T> {
    let n = model.n();
    let scale = T::one() / T::from_usize(count * n).expect("batch size fits the scalar type");
    let two_scale = scale + scale;
    let mut stepper = Stepper::new(model, kernel);
    let mut sq_sum = T::zero();
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.g_w.iter_mut().chain(g.g_b.iter_mut()).for_each(|v| *v = T::zero());
    }
    for (x, y) in pairs {
        let y_hat = stepper.step(x)?;
        for i in 0..n {
            let diff = y_hat[i] - y[i];
            sq_sum += diff * diff;
            if let Some(g) = grad.as_deref_mut() {
                let delta = two_scale * diff * (T::one() - y_hat[i] * y_hat[i]);
                g.g_b[i] += delta;
                let row = &mut g.g_w[i * n..(i + 1) * n];
                for (gw, &xm) in row.iter_mut().zip(x.iter()) {
                    *gw += delta * xm;
                }
            }
        }
    }
    Ok(sq_sum * scale)
}

/// Mean over every batch element and component of `(step(model, x) - y)^2`.
pub fn mse_loss<T: Real>(
    model: &NetworkParams<T>,
    batch_in: &[StateVector<T>],
    batch_target: &[StateVector<T>],
    kernel: EvalKernel,
) -> Result<T> {
    check_batch(model, batch_in, batch_target)?;
    loss_and_gradient(model, kernel, batch_in.iter().zip(batch_target), batch_in.len(), None)
}

/// Analytic gradient of [`mse_loss`].
///
/// With `B` samples, `z = w x + b` and `y_hat = tanh(z)`:
/// `dL/dz[i] = 2 / (B n) * (y_hat[i] - y[i]) * (1 - y_hat[i]^2)`, summed over
/// the batch for `g_b`, and multiplied by `x[m]` for `g_w[i][m]`. The forward
/// values come from `kernel`; the backward arithmetic is done in `T`.
pub fn gradient<T: Real>(
    model: &NetworkParams<T>,
    batch_in: &[StateVector<T>],
    batch_target: &[StateVector<T>],
    kernel: EvalKernel,
) -> Result<GradientPair<T>> {
    check_batch(model, batch_in, batch_target)?;
    let mut g = GradientPair::zeros(model.n());
    loss_and_gradient(model, kernel, batch_in.iter().zip(batch_target), batch_in.len(), Some(&mut g))?;
    Ok(g)
}

/// Glorot-uniform weights with limit `sqrt(6 / (2n))`, zero bias.
pub fn glorot_init<T: Real>(seed: Seed, n: usize) -> Result<NetworkParams<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension("network size must be >= 1".into()));
    }
    let limit = (6.0 / (2.0 * n as f64)).sqrt();
    let mut rng = seed.rng();
    let w = (0..n * n)
        .map(|_| T::from_f64_lossy(symmetric_scaled(&mut rng, limit)))
        .collect();
    NetworkParams::new(n, w, vec![T::zero(); n])
}

/// Sample visiting order for `epoch`: a Fisher-Yates shuffle of `0..len`
/// driven by the stream `shuffle_seed.derive(&[epoch])`.
pub fn epoch_order(shuffle_seed: Seed, epoch: usize, len: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    shuffle(&mut shuffle_seed.derive(&[epoch as u64]).rng(), &mut idx);
    idx
}

/// Train a student from `config.init_seed`.
///
/// Each epoch visits the samples in [`epoch_order`], split into consecutive
/// batches of `batch_size` (the last may be short), with one Adam step per
/// batch. The returned history holds, per epoch, the sample-weighted mean of
/// the batch losses seen before each update.
pub fn train<T: Real>(dataset: &Dataset<T>, config: &TrainConfig, kernel: EvalKernel) -> Result<(NetworkParams<T>, Vec<T>)> {
    let model = glorot_init(config.init_seed, dataset.n())?;
    train_from(model, dataset, config, kernel)
}

/// As [`train`], starting from the given parameters.
pub fn train_from<T: Real>(
    mut model: NetworkParams<T>,
    dataset: &Dataset<T>,
    config: &TrainConfig,
    kernel: EvalKernel,
) -> Result<(NetworkParams<T>, Vec<T>)> {
    if dataset.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    config.validate()?;
    check_dim(dataset.n(), model.n())?;
    let n = model.n();
    let mut adam = AdamState::new(n);
    let mut grad = GradientPair::zeros(n);
    let mut history = Vec::with_capacity(config.epochs);
    let total = T::from_usize(dataset.len()).expect("dataset size fits the scalar type");
    for epoch in 0..config.epochs {
        let order = epoch_order(config.shuffle_seed, epoch, dataset.len());
        let mut epoch_loss = T::zero();
        for batch in order.chunks(config.batch_size) {
            let pairs = batch.iter().map(|&k| (&dataset.inputs[k], &dataset.targets[k]));
            let loss = loss_and_gradient(&model, kernel, pairs, batch.len(), Some(&mut grad))?;
            epoch_loss += loss * T::from_usize(batch.len()).expect("batch size fits the scalar type");
            adam.apply(&mut model, &grad, config)?;
        }
        history.push(epoch_loss / total);
    }
    Ok((model, history))
}

/// Roll the model forward from `x0`; identical to [`iterate`].
pub fn predict_rollout<T: Real>(
    model: &NetworkParams<T>,
    x0: &StateVector<T>,
    t: usize,
    kernel: EvalKernel,
) -> Result<Trajectory<T>> {
    iterate(model, x0, t, kernel)
}
