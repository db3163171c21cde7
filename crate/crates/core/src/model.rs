//! Bidirectional LSTM classifier: masked recurrent encoding, global max
//! pooling over valid timesteps, dense softmax head.
//!
//! Gate order everywhere is input, forget, cell candidate, output. A step
//! computes i=σ(W_i x+U_i h+b_i), f, o likewise, g=tanh(W_g x+U_g h+b_g),
//! then c=f⊙c_prev+i⊙g and h=o⊙tanh(c). Masked timesteps are skipped:
//! states pass through unchanged and the emitted row stays a zero sentinel
//! that pooling never reads. All arithmetic is f64 and sequential per
//! object, so outputs are bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::NUM_CLASSES;
use crate::linalg::{sigmoid, softmax, Mat};
use crate::preprocess::{PreprocessedSequence, NUM_FEATURES};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sequence has no valid timestep")]
    EmptySequence,
}

/// Gate indices into the weight arrays.
pub const GATE_I: usize = 0;
pub const GATE_F: usize = 1;
pub const GATE_G: usize = 2;
pub const GATE_O: usize = 3;

/// One direction's LSTM parameters.
///
/// `w[k]` is H x F, `u[k]` is H x H, `b[k]` is H, with k indexing the gates
/// in i, f, g, o order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    pub w: [Mat; 4],
    pub u: [Mat; 4],
    pub b: [Vec<f64>; 4],
}

impl CellParams {
    fn zeros(hidden: usize) -> Self {
        CellParams {
            w: std::array::from_fn(|_| Mat::zeros(hidden, NUM_FEATURES)),
            u: std::array::from_fn(|_| Mat::zeros(hidden, hidden)),
            b: std::array::from_fn(|_| vec![0.0; hidden]),
        }
    }

    fn glorot<R: rand::Rng>(hidden: usize, rng: &mut R) -> Self {
        let w = std::array::from_fn(|_| Mat::glorot_uniform(hidden, NUM_FEATURES, rng));
        let u = std::array::from_fn(|_| Mat::glorot_uniform(hidden, hidden, rng));
        let mut b: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hidden]);
        // Forget-gate bias starts at 1 so early training does not erase the
        // cell state.
        b[GATE_F] = vec![1.0; hidden];
        CellParams { w, u, b }
    }

    fn append_flat(&self, out: &mut Vec<f64>) {
        for m in &self.w {
            out.extend_from_slice(&m.data);
        }
        for m in &self.u {
            out.extend_from_slice(&m.data);
        }
        for b in &self.b {
            out.extend_from_slice(b);
        }
    }

    fn read_flat(&mut self, src: &[f64], cursor: &mut usize) {
        for m in &mut self.w {
            let n = m.data.len();
            m.data.copy_from_slice(&src[*cursor..*cursor + n]);
            *cursor += n;
        }
        for m in &mut self.u {
            let n = m.data.len();
            m.data.copy_from_slice(&src[*cursor..*cursor + n]);
            *cursor += n;
        }
        for b in &mut self.b {
            let n = b.len();
            b.copy_from_slice(&src[*cursor..*cursor + n]);
            *cursor += n;
        }
    }
}

/// Full parameter set: two recurrent cells plus the dense softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub hidden_size: usize,
    pub forward_cell: CellParams,
    pub backward_cell: CellParams,
    /// NUM_CLASSES x 2H.
    pub dense_w: Mat,
    pub dense_b: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(hidden_size: usize) -> Self {
        ModelParams {
            hidden_size,
            forward_cell: CellParams::zeros(hidden_size),
            backward_cell: CellParams::zeros(hidden_size),
            dense_w: Mat::zeros(NUM_CLASSES, 2 * hidden_size),
            dense_b: vec![0.0; NUM_CLASSES],
        }
    }

    /// Glorot-uniform initialization, forget-gate biases 1.0, everything
    /// else deterministic in the seed. Tensors are drawn in the same order
    /// they are flattened.
    pub fn init(hidden_size: usize, seed: u64) -> Self {
        assert!(hidden_size >= 1, "hidden size must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let forward_cell = CellParams::glorot(hidden_size, &mut rng);
        let backward_cell = CellParams::glorot(hidden_size, &mut rng);
        let dense_w = Mat::glorot_uniform(NUM_CLASSES, 2 * hidden_size, &mut rng);
        ModelParams {
            hidden_size,
            forward_cell,
            backward_cell,
            dense_w,
            dense_b: vec![0.0; NUM_CLASSES],
        }
    }

    pub fn param_count(&self) -> usize {
        let h = self.hidden_size;
        2 * (4 * (h * NUM_FEATURES + h * h + h)) + NUM_CLASSES * 2 * h + NUM_CLASSES
    }

    /// Canonical flat layout: forward cell (W_i,W_f,W_g,W_o, U_i..U_o,
    /// b_i..b_o), backward cell likewise, dense weights row-major, dense
    /// bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.forward_cell.append_flat(&mut out);
        self.backward_cell.append_flat(&mut out);
        out.extend_from_slice(&self.dense_w.data);
        out.extend_from_slice(&self.dense_b);
        out
    }

    /// Inverse of [`flatten`](Self::flatten); lengths must match exactly.
    pub fn unflatten_from(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut cursor = 0;
        self.forward_cell.read_flat(flat, &mut cursor);
        self.backward_cell.read_flat(flat, &mut cursor);
        let n = self.dense_w.data.len();
        self.dense_w.data.copy_from_slice(&flat[cursor..cursor + n]);
        cursor += n;
        let n = self.dense_b.len();
        self.dense_b.copy_from_slice(&flat[cursor..cursor + n]);
    }
}

/// Everything one timestep produces, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub c_tanh: Vec<f64>,
    pub h: Vec<f64>,
}

/// One direction's pass over the valid timesteps, in iteration order
/// (ascending time for the forward cell, descending for the backward cell).
#[derive(Debug, Clone)]
pub struct DirectionCache {
    /// Actual timestep of each cached step.
    pub times: Vec<usize>,
    pub steps: Vec<StepCache>,
}

/// Both directions' caches for one sequence.
#[derive(Debug, Clone)]
pub struct EncodeCache {
    pub fwd: DirectionCache,
    pub bwd: DirectionCache,
}

fn step_cached(cell: &CellParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let h_size = h_prev.len();
    let mut pre: [Vec<f64>; 4] = std::array::from_fn(|k| cell.b[k].clone());
    for ((w, u), p) in cell.w.iter().zip(&cell.u).zip(&mut pre) {
        w.matvec_acc(x, p);
        u.matvec_acc(h_prev, p);
    }
    let [pi, pf, pg, po] = pre;
    let i: Vec<f64> = pi.iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = pf.iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = pg.iter().map(|&v| v.tanh()).collect();
    let o: Vec<f64> = po.iter().map(|&v| sigmoid(v)).collect();
    let mut c = vec![0.0; h_size];
    for j in 0..h_size {
        c[j] = f[j] * c_prev[j] + i[j] * g[j];
    }
    let c_tanh: Vec<f64> = c.iter().map(|&v| v.tanh()).collect();
    let h: Vec<f64> = o.iter().zip(&c_tanh).map(|(&ov, &tv)| ov * tv).collect();
    StepCache {
        i,
        f,
        g,
        o,
        c,
        c_tanh,
        h,
    }
}

/// Single LSTM cell step; the shape-checked public entry point.
pub fn lstm_cell_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    cell: &CellParams,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let h_size = cell.b[0].len();
    if x.len() != NUM_FEATURES {
        return Err(ModelError::Shape(format!(
            "input has {} features, expected {NUM_FEATURES}",
            x.len()
        )));
    }
    if h_prev.len() != h_size || c_prev.len() != h_size {
        return Err(ModelError::Shape(format!(
            "state sizes ({}, {}) do not match hidden size {h_size}",
            h_prev.len(),
            c_prev.len()
        )));
    }
    let step = step_cached(cell, x, h_prev, c_prev);
    Ok((step.h, step.c))
}

fn run_direction<I>(cell: &CellParams, seq: &PreprocessedSequence, times: I) -> DirectionCache
where
    I: Iterator<Item = usize>,
{
    let h_size = cell.b[0].len();
    let mut h_prev = vec![0.0; h_size];
    let mut c_prev = vec![0.0; h_size];
    let mut cache = DirectionCache {
        times: Vec::new(),
        steps: Vec::new(),
    };
    for t in times {
        let step = step_cached(cell, seq.row(t), &h_prev, &c_prev);
        h_prev.copy_from_slice(&step.h);
        c_prev.copy_from_slice(&step.c);
        cache.times.push(t);
        cache.steps.push(step);
    }
    cache
}

/// Runs both directions over the valid timesteps and keeps every
/// intermediate. The shared implementation under [`bidirectional_encode`]
/// and the training backward pass, so inference and training see
/// bit-identical activations.
pub fn encode_with_cache(
    params: &ModelParams,
    seq: &PreprocessedSequence,
) -> Result<EncodeCache, ModelError> {
    let valid: Vec<usize> = (0..seq.target_len()).filter(|&t| seq.mask[t]).collect();
    if valid.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    let fwd = run_direction(&params.forward_cell, seq, valid.iter().copied());
    let bwd = run_direction(&params.backward_cell, seq, valid.iter().rev().copied());
    Ok(EncodeCache { fwd, bwd })
}

/// Hidden-state matrix, `target_len x 2H` row-major. Row t holds the
/// forward hidden state in the first H columns and the backward hidden
/// state in the rest; masked rows stay zero sentinels.
pub fn bidirectional_encode(
    params: &ModelParams,
    seq: &PreprocessedSequence,
) -> Result<Vec<f64>, ModelError> {
    let cache = encode_with_cache(params, seq)?;
    let h = params.hidden_size;
    let width = 2 * h;
    let mut hidden = vec![0.0; seq.target_len() * width];
    for (pos, &t) in cache.fwd.times.iter().enumerate() {
        hidden[t * width..t * width + h].copy_from_slice(&cache.fwd.steps[pos].h);
    }
    for (pos, &t) in cache.bwd.times.iter().enumerate() {
        hidden[t * width + h..(t + 1) * width].copy_from_slice(&cache.bwd.steps[pos].h);
    }
    Ok(hidden)
}

/// Per-column maximum over mask-true rows.
pub fn masked_global_max_pool(
    hidden: &[f64],
    mask: &[bool],
    width: usize,
) -> Result<Vec<f64>, ModelError> {
    if hidden.len() != mask.len() * width {
        return Err(ModelError::Shape(format!(
            "hidden matrix has {} entries, expected {} rows x {width}",
            hidden.len(),
            mask.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(ModelError::EmptySequence);
    }
    let mut pooled = vec![f64::NEG_INFINITY; width];
    for (t, &valid) in mask.iter().enumerate() {
        if !valid {
            continue;
        }
        let row = &hidden[t * width..(t + 1) * width];
        for (p, &v) in pooled.iter_mut().zip(row) {
            if v > *p {
                *p = v;
            }
        }
    }
    Ok(pooled)
}

/// Pooled vector plus, per column, the cache position of the step that
/// produced the maximum. Ties go to the earliest timestep. Visits steps in
/// ascending time order for both directions, so the values are
/// bit-identical to [`masked_global_max_pool`] over the encoded matrix.
pub(crate) fn pool_from_cache(cache: &EncodeCache, hidden_size: usize) -> (Vec<f64>, Vec<usize>) {
    let width = 2 * hidden_size;
    let mut pooled = vec![f64::NEG_INFINITY; width];
    let mut arg_pos = vec![0usize; width];
    let n = cache.fwd.steps.len();
    // Forward steps are cached in ascending time order already.
    for (pos, step) in cache.fwd.steps.iter().enumerate() {
        for j in 0..hidden_size {
            if step.h[j] > pooled[j] {
                pooled[j] = step.h[j];
                arg_pos[j] = pos;
            }
        }
    }
    // Backward steps are cached in descending time order; walk them in
    // reverse so ties still resolve to the earliest timestep.
    for pos in (0..n).rev() {
        let step = &cache.bwd.steps[pos];
        for j in 0..hidden_size {
            let col = hidden_size + j;
            if step.h[j] > pooled[col] {
                pooled[col] = step.h[j];
                arg_pos[col] = pos;
            }
        }
    }
    (pooled, arg_pos)
}

/// Dense head: logits z = W v + b, then numerically stable softmax.
pub fn dense_softmax(params: &ModelParams, v: &[f64]) -> Result<[f64; NUM_CLASSES], ModelError> {
    if v.len() != 2 * params.hidden_size {
        return Err(ModelError::Shape(format!(
            "pooled vector has {} entries, expected {}",
            v.len(),
            2 * params.hidden_size
        )));
    }
    let mut logits = params.dense_b.clone();
    params.dense_w.matvec_acc(v, &mut logits);
    let p = softmax(&logits);
    let mut out = [0.0; NUM_CLASSES];
    out.copy_from_slice(&p);
    Ok(out)
}

/// Full forward pass for one sequence.
pub fn predict_one(
    params: &ModelParams,
    seq: &PreprocessedSequence,
) -> Result<[f64; NUM_CLASSES], ModelError> {
    let cache = encode_with_cache(params, seq)?;
    let (pooled, _) = pool_from_cache(&cache, params.hidden_size);
    dense_softmax(params, &pooled)
}

/// Class probabilities for a batch, one row per input sequence. Objects are
/// independent, so rows are computed in parallel; output order matches
/// input order.
pub fn predict(
    params: &ModelParams,
    seqs: &[PreprocessedSequence],
) -> Result<Vec<[f64; NUM_CLASSES]>, ModelError> {
    seqs.par_iter()
        .map(|seq| predict_one(params, seq))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
