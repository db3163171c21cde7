//! Finite-difference verification of the analytic gradients.
//!
//! Every parameter of a small model is perturbed by ±1e-5 and the central
//! difference of the batch loss is compared against the backpropagated
//! gradient. The relative error uses a floored denominator,
//! |a−n| / max(|a|+|n|, 1e-3), so near-zero gradients are checked against
//! an absolute bound of 1e-9 instead of drowning in finite-difference
//! roundoff (the f64 noise floor of the difference quotient is about 1e-10
//! at this step size).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ingest::GeneralizedClass;
use crate::model::ModelParams;
use crate::preprocess::{PreprocessedSequence, NUM_FEATURES};
use crate::trainer::{compute_gradients, TrainError};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Denominator floor in the relative-error metric.
pub const REL_ERR_FLOOR: f64 = 1e-3;
/// Pass threshold on the maximum relative error.
pub const REL_ERR_TOLERANCE: f64 = 1e-6;

/// Outcome of a full sweep over every parameter.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Flat index of the worst parameter.
    pub worst_param: usize,
    pub param_count: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= REL_ERR_TOLERANCE
    }
}

/// Random labeled batch in the preprocessed representation: features in
/// plausible post-normalization ranges, variable valid lengths, fixed
/// padded length.
fn random_batch(
    rng: &mut ChaCha8Rng,
    batch: usize,
    target_len: usize,
) -> Vec<PreprocessedSequence> {
    (0..batch)
        .map(|idx| {
            let n = rng.gen_range(target_len / 2..=target_len);
            let mut features = vec![0.0; target_len * NUM_FEATURES];
            let mut mask = vec![false; target_len];
            for t in 0..n {
                let row = &mut features[t * NUM_FEATURES..(t + 1) * NUM_FEATURES];
                row[0] = rng.gen::<f64>();
                row[1] = rng.gen::<f64>() * 0.2;
                row[2] = t as f64 * (1.0 + rng.gen::<f64>());
                row[3] = rng.gen_range(0u8..6) as f64;
                row[4] = f64::from(rng.gen_bool(0.3));
                mask[t] = true;
            }
            PreprocessedSequence {
                object_id: idx as u64 + 1,
                features,
                mask,
                label: GeneralizedClass::from_index(idx % 5),
            }
        })
        .collect()
}

fn batch_loss(params: &ModelParams, batch: &[PreprocessedSequence]) -> Result<f64, TrainError> {
    // compute_gradients returns the same mean loss the gradients
    // differentiate, which is exactly what the finite difference must probe.
    compute_gradients(params, batch, None).map(|(_, loss)| loss)
}

/// Sweeps every parameter of an H=8 model over a batch of 4 random
/// sequences of padded length 12.
pub fn run(seed: u64) -> Result<GradCheckReport, TrainError> {
    run_sized(seed, 8, 12, 4)
}

/// Same sweep with explicit sizes, for cheaper unit tests.
pub fn run_sized(
    seed: u64,
    hidden: usize,
    target_len: usize,
    batch_size: usize,
) -> Result<GradCheckReport, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Separate stream for the data so it does not alias the init draws.
    rng.set_stream(2);
    let batch = random_batch(&mut rng, batch_size, target_len);
    let params = ModelParams::init(hidden, seed);

    let (analytic, _) = compute_gradients(&params, &batch, None)?;
    let analytic_flat = analytic.flatten();

    let mut flat = params.flatten();
    let mut scratch = ModelParams::zeros(hidden);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: 0,
        param_count: flat.len(),
    };
    for idx in 0..flat.len() {
        let original = flat[idx];
        flat[idx] = original + FD_STEP;
        scratch.unflatten_from(&flat);
        let loss_plus = batch_loss(&scratch, &batch)?;
        flat[idx] = original - FD_STEP;
        scratch.unflatten_from(&flat);
        let loss_minus = batch_loss(&scratch, &batch)?;
        flat[idx] = original;

        let numeric = (loss_plus - loss_minus) / (2.0 * FD_STEP);
        let a = analytic_flat[idx];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(REL_ERR_FLOOR);
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_param = idx;
        }
    }
    Ok(report)
}
