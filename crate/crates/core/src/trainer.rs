//! Training: categorical cross-entropy, exact backpropagation through time,
//! bias-corrected Adam, and a mini-batch loop with early stopping on
//! validation loss.
//!
//! Determinism contract: parameter initialization and the per-epoch shuffle
//! derive from the config seed (separate RNG streams), per-example gradient
//! contributions are summed in batch order, and the optimizer walks the
//! canonical flat parameter layout. Two runs with the same inputs produce
//! bit-identical weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::NUM_CLASSES;
use crate::linalg::argmax;
use crate::model::{
    dense_softmax, encode_with_cache, pool_from_cache, predict, CellParams, DirectionCache,
    ModelError, ModelParams, GATE_F, GATE_G, GATE_I, GATE_O,
};
use crate::preprocess::PreprocessedSequence;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("object {object_id} has no label")]
    MissingLabel { object_id: u64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Hyperparameters for [`train`]. Defaults: 50 epochs, batch 32, Adam at
/// learning rate 0.001 with the usual moment constants, patience 5.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub patience: usize,
    pub class_weights: Option<[f64; NUM_CLASSES]>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 50,
            batch_size: 32,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            patience: 5,
            class_weights: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.max_epochs < 1 {
            return Err(TrainError::Config("max_epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.patience < 1 {
            return Err(TrainError::Config("patience must be at least 1".into()));
        }
        for (name, value) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(value.is_finite() && 0.0 < value && value < 1.0) {
                return Err(TrainError::Config(format!(
                    "adam_{name} {value} must lie strictly between 0 and 1"
                )));
            }
        }
        if !(self.adam_epsilon.is_finite() && self.adam_epsilon > 0.0) {
            return Err(TrainError::Config(format!(
                "adam_epsilon {} must be positive",
                self.adam_epsilon
            )));
        }
        if let Some(w) = &self.class_weights {
            if !w.iter().all(|&v| v.is_finite() && v > 0.0) {
                return Err(TrainError::Config(format!(
                    "class weights {w:?} must all be positive"
                )));
            }
        }
        Ok(())
    }
}

/// The balanced weighting heuristic w_c = N / (5 n_c). Absent classes get
/// weight 1 so the vector stays valid; they contribute no examples anyway.
pub fn balanced_class_weights(class_counts: &[usize; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let total: usize = class_counts.iter().sum();
    let mut weights = [1.0; NUM_CLASSES];
    for (w, &n) in weights.iter_mut().zip(class_counts) {
        if n > 0 {
            *w = total as f64 / (NUM_CLASSES as f64 * n as f64);
        }
    }
    weights
}

/// One epoch's record in the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch whose validation loss is the recorded minimum; the
    /// returned parameters come from this epoch.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Mean weighted categorical cross-entropy: mean over rows of
/// -w_c ln(p_true).
pub fn cross_entropy_loss(
    probs: &[[f64; NUM_CLASSES]],
    labels_onehot: &[[f64; NUM_CLASSES]],
    class_weights: Option<&[f64; NUM_CLASSES]>,
) -> Result<f64, TrainError> {
    if probs.len() != labels_onehot.len() {
        return Err(TrainError::Shape(format!(
            "{} probability rows vs {} label rows",
            probs.len(),
            labels_onehot.len()
        )));
    }
    if probs.is_empty() {
        return Err(TrainError::Shape("empty batch".into()));
    }
    let mut total = 0.0;
    for (p, y) in probs.iter().zip(labels_onehot) {
        let mut p_true = 0.0;
        let mut class = 0;
        for (j, (&pj, &yj)) in p.iter().zip(y).enumerate() {
            p_true += pj * yj;
            if yj == 1.0 {
                class = j;
            }
        }
        let w = class_weights.map_or(1.0, |cw| cw[class]);
        total += w * -p_true.ln();
    }
    Ok(total / probs.len() as f64)
}

struct ExampleGrad {
    grads: ModelParams,
    loss: f64,
}

/// Backward pass for one example. `scale` multiplies the softmax gradient
/// (class weight over batch size); the returned loss term is already
/// weight-scaled but not divided by the batch size.
fn backprop_example(
    params: &ModelParams,
    seq: &PreprocessedSequence,
    weights: Option<&[f64; NUM_CLASSES]>,
    batch_len: usize,
) -> Result<ExampleGrad, TrainError> {
    let label = seq
        .label
        .ok_or(TrainError::MissingLabel {
            object_id: seq.object_id,
        })?
        .index();
    let h_size = params.hidden_size;
    let cache = encode_with_cache(params, seq)?;
    let (pooled, arg_pos) = pool_from_cache(&cache, h_size);
    let probs = dense_softmax(params, &pooled)?;

    let w = weights.map_or(1.0, |cw| cw[label]);
    let loss = w * -probs[label].ln();
    let scale = w / batch_len as f64;

    let mut grads = ModelParams::zeros(h_size);

    // Softmax with cross-entropy: d loss / d logit = scale (p - y).
    let mut delta = [0.0; NUM_CLASSES];
    for (j, d) in delta.iter_mut().enumerate() {
        let y = if j == label { 1.0 } else { 0.0 };
        *d = scale * (probs[j] - y);
    }
    grads.dense_w.add_outer(&delta, &pooled);
    for (gb, &d) in grads.dense_b.iter_mut().zip(&delta) {
        *gb += d;
    }
    let mut d_pooled = vec![0.0; 2 * h_size];
    params.dense_w.matvec_t_acc(&delta, &mut d_pooled);

    // The max pool routes each column's gradient to the step that won it.
    let n = cache.fwd.steps.len();
    let mut dh_fwd = vec![0.0; n * h_size];
    let mut dh_bwd = vec![0.0; n * h_size];
    for j in 0..h_size {
        dh_fwd[arg_pos[j] * h_size + j] += d_pooled[j];
        let col = h_size + j;
        dh_bwd[arg_pos[col] * h_size + j] += d_pooled[col];
    }

    backprop_direction(
        &params.forward_cell,
        &cache.fwd,
        seq,
        &dh_fwd,
        &mut grads.forward_cell,
    );
    backprop_direction(
        &params.backward_cell,
        &cache.bwd,
        seq,
        &dh_bwd,
        &mut grads.backward_cell,
    );

    Ok(ExampleGrad { grads, loss })
}

/// Reverse sweep over one direction's cached steps. `dh_routed` holds the
/// pooling gradient per cached position, row-major `n x H`.
fn backprop_direction(
    cell: &CellParams,
    cache: &DirectionCache,
    seq: &PreprocessedSequence,
    dh_routed: &[f64],
    grads: &mut CellParams,
) {
    let n = cache.steps.len();
    let h_size = cell.b[0].len();
    let zeros = vec![0.0; h_size];
    let mut dh_next = vec![0.0; h_size];
    let mut dc_next = vec![0.0; h_size];
    let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; h_size]);
    for pos in (0..n).rev() {
        let step = &cache.steps[pos];
        let (h_prev, c_prev) = if pos > 0 {
            (&cache.steps[pos - 1].h, &cache.steps[pos - 1].c)
        } else {
            (&zeros, &zeros)
        };
        for j in 0..h_size {
            let dh = dh_routed[pos * h_size + j] + dh_next[j];
            let tc = step.c_tanh[j];
            let dc = dc_next[j] + dh * step.o[j] * (1.0 - tc * tc);
            let d_o = dh * tc;
            let d_i = dc * step.g[j];
            let d_g = dc * step.i[j];
            let d_f = dc * c_prev[j];
            dc_next[j] = dc * step.f[j];
            // Through the gate nonlinearities to the pre-activations.
            da[GATE_I][j] = d_i * step.i[j] * (1.0 - step.i[j]);
            da[GATE_F][j] = d_f * step.f[j] * (1.0 - step.f[j]);
            da[GATE_G][j] = d_g * (1.0 - step.g[j] * step.g[j]);
            da[GATE_O][j] = d_o * step.o[j] * (1.0 - step.o[j]);
        }
        let x = seq.row(cache.times[pos]);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for (k, d) in da.iter().enumerate() {
            grads.w[k].add_outer(d, x);
            grads.u[k].add_outer(d, h_prev);
            for (gb, &dv) in grads.b[k].iter_mut().zip(d) {
                *gb += dv;
            }
            cell.u[k].matvec_t_acc(d, &mut dh_next);
        }
    }
}

fn add_cell(acc: &mut CellParams, other: &CellParams) {
    for k in 0..4 {
        acc.w[k].add_assign(&other.w[k]);
        acc.u[k].add_assign(&other.u[k]);
        for (a, b) in acc.b[k].iter_mut().zip(&other.b[k]) {
            *a += b;
        }
    }
}

/// Mean-loss gradients over a batch, plus the batch loss itself. Examples
/// are backpropagated independently (in parallel) and summed in batch
/// order, keeping the result deterministic.
pub fn compute_gradients(
    params: &ModelParams,
    batch: &[PreprocessedSequence],
    weights: Option<&[f64; NUM_CLASSES]>,
) -> Result<(ModelParams, f64), TrainError> {
    let refs: Vec<&PreprocessedSequence> = batch.iter().collect();
    compute_gradients_refs(params, &refs, weights)
}

pub(crate) fn compute_gradients_refs(
    params: &ModelParams,
    batch: &[&PreprocessedSequence],
    weights: Option<&[f64; NUM_CLASSES]>,
) -> Result<(ModelParams, f64), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::Shape("empty batch".into()));
    }
    let per_example: Vec<Result<ExampleGrad, TrainError>> = batch
        .par_iter()
        .map(|seq| backprop_example(params, seq, weights, batch.len()))
        .collect();
    let mut total = ModelParams::zeros(params.hidden_size);
    let mut loss = 0.0;
    for item in per_example {
        let item = item?;
        add_cell(&mut total.forward_cell, &item.grads.forward_cell);
        add_cell(&mut total.backward_cell, &item.grads.backward_cell);
        total.dense_w.add_assign(&item.grads.dense_w);
        for (a, b) in total.dense_b.iter_mut().zip(&item.grads.dense_b) {
            *a += b;
        }
        loss += item.loss;
    }
    Ok((total, loss / batch.len() as f64))
}

/// First and second moment accumulators over the flat parameter layout.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step_count: 0,
        }
    }
}

/// Standard bias-corrected Adam update, epsilon outside the square root:
/// theta -= lr * m_hat / (sqrt(v_hat) + eps).
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &TrainConfig) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.step_count += 1;
    let t = state.step_count as i32;
    let bias1 = 1.0 - cfg.adam_beta1.powi(t);
    let bias2 = 1.0 - cfg.adam_beta2.powi(t);
    for idx in 0..params.len() {
        let g = grads[idx];
        state.m[idx] = cfg.adam_beta1 * state.m[idx] + (1.0 - cfg.adam_beta1) * g;
        state.v[idx] = cfg.adam_beta2 * state.v[idx] + (1.0 - cfg.adam_beta2) * g * g;
        let m_hat = state.m[idx] / bias1;
        let v_hat = state.v[idx] / bias2;
        params[idx] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
    }
}

/// Early-stopping bookkeeping: strict improvement resets the counter,
/// anything else advances it, and `patience` consecutive non-improvements
/// stop the run.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best_loss: f64,
    /// 1-based epoch of the best loss so far; 0 before any update.
    pub best_epoch: usize,
    since_best: usize,
    epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        EarlyStopper {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
            epoch: 0,
        }
    }

    pub fn update(&mut self, val_loss: f64) -> StopDecision {
        self.epoch += 1;
        if val_loss < self.best_loss {
            self.best_loss = val_loss;
            self.best_epoch = self.epoch;
            self.since_best = 0;
            StopDecision::Improved
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

fn onehot_rows(seqs: &[PreprocessedSequence]) -> Result<Vec<[f64; NUM_CLASSES]>, TrainError> {
    seqs.iter()
        .map(|s| {
            s.label_onehot().ok_or(TrainError::MissingLabel {
                object_id: s.object_id,
            })
        })
        .collect()
}

/// Trains a fresh model. Initialization and shuffling both derive from
/// `cfg.seed`; per epoch the training set is reshuffled, consumed in
/// sequential mini-batches (last partial batch kept), and evaluated on the
/// validation set. Returns the parameters of the best validation epoch and
/// the full history. `on_epoch` fires after every epoch, for progress
/// reporting.
pub fn train(
    hidden_size: usize,
    train_set: &[PreprocessedSequence],
    val_set: &[PreprocessedSequence],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams, TrainHistory), TrainError> {
    cfg.validate()?;
    if hidden_size < 1 {
        return Err(TrainError::Config("hidden size must be at least 1".into()));
    }
    if train_set.is_empty() || val_set.is_empty() {
        return Err(TrainError::Config(
            "training and validation sets must be nonempty".into(),
        ));
    }
    let val_onehot = onehot_rows(val_set)?;
    for s in train_set {
        if s.label.is_none() {
            return Err(TrainError::MissingLabel {
                object_id: s.object_id,
            });
        }
    }
    // Validation metrics are unweighted; class weights shape the training
    // objective only.
    let weights = cfg.class_weights.as_ref();

    let mut params = ModelParams::init(hidden_size, cfg.seed);
    let mut adam = AdamState::new(params.param_count());
    // Stream 1 keeps the shuffle sequence independent of initialization,
    // which consumed the default stream.
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);

    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut records = Vec::new();
    let mut best_flat = params.flatten();
    let mut stopped_early = false;
    let mut indices: Vec<usize> = (0..train_set.len()).collect();
    let mut batch_buf: Vec<&PreprocessedSequence> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch_ids in indices.chunks(cfg.batch_size) {
            batch_buf.clear();
            batch_buf.extend(batch_ids.iter().map(|&i| &train_set[i]));
            let (grads, batch_loss) = compute_gradients_refs(&params, &batch_buf, weights)?;
            loss_sum += batch_loss * batch_ids.len() as f64;
            let mut flat = params.flatten();
            adam_step(&mut flat, &grads.flatten(), &mut adam, cfg);
            params.unflatten_from(&flat);
        }
        let train_loss = loss_sum / train_set.len() as f64;

        let val_probs = predict(&params, val_set)?;
        let val_loss = cross_entropy_loss(&val_probs, &val_onehot, None)?;
        let correct = val_probs
            .iter()
            .zip(val_set)
            .filter(|(p, s)| argmax(*p) == s.label.unwrap().index())
            .count();
        let val_accuracy = correct as f64 / val_set.len() as f64;

        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        };
        on_epoch(&record);
        records.push(record);

        match stopper.update(val_loss) {
            StopDecision::Improved => best_flat = params.flatten(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }

    params.unflatten_from(&best_flat);
    Ok((
        params,
        TrainHistory {
            records,
            best_epoch: stopper.best_epoch,
            stopped_early,
        },
    ))
}
