//! Transformation of raw light curves into fixed-shape masked feature
//! matrices.
//!
//! Per object the pipeline is: optional detection-anchored truncation (on
//! raw times), temporal rescaling so the first measurement sits at day zero,
//! per-object min-max flux normalization, then padding to a fixed length
//! with a validity mask. Everything here is deterministic and pure.

use thiserror::Error;

use crate::ingest::{Dataset, GeneralizedClass, LightCurve, NUM_CLASSES};

/// Features per timestep, in table column order:
/// flux, error, time, passband, detected.
pub const NUM_FEATURES: usize = 5;

/// Default padded sequence length.
pub const DEFAULT_SEQUENCE_LEN: usize = 352;

/// Value written into every feature column of padded rows. Validity is
/// carried solely by the mask, so the value itself is arbitrary; zero keeps
/// outputs reproducible.
pub const PADDING_VALUE: f64 = 0.0;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("object {object_id} has no detected measurement")]
    NoDetection { object_id: u64 },
    #[error("object {object_id} has {len} measurements, more than the sequence length {max}")]
    SequenceTooLong {
        object_id: u64,
        len: usize,
        max: usize,
    },
    #[error("invalid preprocessing configuration: {0}")]
    InvalidConfig(String),
}

/// Knobs for the preprocessing pipeline.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    /// Padded sequence length. 352 matches the reference dataset; other
    /// subsets may need more room.
    pub target_len: usize,
    /// Divisor applied to the rescaled time column (1.0 = raw days).
    pub time_scale: f64,
    /// When set, keep only measurements within this many days after the
    /// first detection.
    pub horizon_days: Option<f64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            target_len: DEFAULT_SEQUENCE_LEN,
            time_scale: 1.0,
            horizon_days: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.target_len == 0 {
            return Err(PreprocessError::InvalidConfig(
                "sequence length must be at least 1".into(),
            ));
        }
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return Err(PreprocessError::InvalidConfig(format!(
                "time scale {} must be positive",
                self.time_scale
            )));
        }
        if let Some(h) = self.horizon_days {
            if !(h.is_finite() && h > 0.0) {
                return Err(PreprocessError::InvalidConfig(format!(
                    "horizon {h} must be a positive number of days"
                )));
            }
        }
        Ok(())
    }
}

/// A fixed-shape feature matrix with a validity mask.
///
/// `features` is `target_len x NUM_FEATURES` row-major. The mask is true on
/// a prefix (the real measurements, in time order) and false on the padded
/// suffix; padded rows hold [`PADDING_VALUE`] in every column.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedSequence {
    pub object_id: u64,
    pub features: Vec<f64>,
    pub mask: Vec<bool>,
    pub label: Option<GeneralizedClass>,
}

impl PreprocessedSequence {
    pub fn target_len(&self) -> usize {
        self.mask.len()
    }

    /// Number of real (mask-true) timesteps.
    pub fn valid_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.features[t * NUM_FEATURES..(t + 1) * NUM_FEATURES]
    }

    /// One-hot label vector, when the sequence is labeled.
    pub fn label_onehot(&self) -> Option<[f64; NUM_CLASSES]> {
        self.label.map(|class| {
            let mut onehot = [0.0; NUM_CLASSES];
            onehot[class.index()] = 1.0;
            onehot
        })
    }
}

/// Shifts times so the first measurement is exactly day zero.
pub fn rescale_time(lc: &LightCurve) -> LightCurve {
    let mut out = lc.clone();
    let first = out.measurements[0].time;
    for m in &mut out.measurements {
        m.time -= first;
    }
    out
}

/// Min-max normalizes flux to [0, 1] per object and scales the error by the
/// same flux range. A flat curve (max == min) maps every flux to 0.5 and
/// leaves errors untouched.
pub fn normalize_flux(lc: &LightCurve) -> LightCurve {
    let mut out = lc.clone();
    let min = out
        .measurements
        .iter()
        .map(|m| m.flux)
        .fold(f64::INFINITY, f64::min);
    let max = out
        .measurements
        .iter()
        .map(|m| m.flux)
        .fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        for m in &mut out.measurements {
            m.flux = 0.5;
        }
    } else {
        for m in &mut out.measurements {
            m.flux = (m.flux - min) / range;
            m.flux_err /= range;
        }
    }
    out
}

/// Keeps the measurements within `horizon_days` after the first detection.
/// Times must still be raw (not rescaled); pre-detection history is kept.
pub fn truncate_after_detection(
    lc: &LightCurve,
    horizon_days: f64,
) -> Result<LightCurve, PreprocessError> {
    let detection_time = lc
        .measurements
        .iter()
        .find(|m| m.detected)
        .map(|m| m.time)
        .ok_or(PreprocessError::NoDetection {
            object_id: lc.object_id,
        })?;
    let cutoff = detection_time + horizon_days;
    let mut out = lc.clone();
    out.measurements.retain(|m| m.time <= cutoff);
    debug_assert!(!out.measurements.is_empty());
    Ok(out)
}

/// Lays the measurements into a fixed-length matrix with a validity mask.
/// The curve must already be rescaled and normalized.
pub fn pad_and_mask(
    lc: &LightCurve,
    target_len: usize,
) -> Result<PreprocessedSequence, PreprocessError> {
    let n = lc.measurements.len();
    if n > target_len {
        return Err(PreprocessError::SequenceTooLong {
            object_id: lc.object_id,
            len: n,
            max: target_len,
        });
    }
    let mut features = vec![PADDING_VALUE; target_len * NUM_FEATURES];
    let mut mask = vec![false; target_len];
    for (t, m) in lc.measurements.iter().enumerate() {
        let row = &mut features[t * NUM_FEATURES..(t + 1) * NUM_FEATURES];
        row[0] = m.flux;
        row[1] = m.flux_err;
        row[2] = m.time;
        row[3] = m.passband as f64;
        row[4] = f64::from(m.detected as u8);
        mask[t] = true;
    }
    Ok(PreprocessedSequence {
        object_id: lc.object_id,
        features,
        mask,
        label: lc.generalized_class,
    })
}

/// Objects dropped by [`preprocess_dataset`] because they have no detection
/// to anchor the truncation horizon on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreprocessSummary {
    pub dropped_no_detection: Vec<u64>,
}

fn scale_time(lc: &mut LightCurve, time_scale: f64) {
    if time_scale != 1.0 {
        for m in &mut lc.measurements {
            m.time /= time_scale;
        }
    }
}

/// Runs the full per-object pipeline over a dataset. Objects without any
/// detection are dropped (only relevant with a horizon) and reported in the
/// summary.
pub fn preprocess_dataset(
    dataset: &Dataset,
    config: &PreprocessConfig,
) -> Result<(Vec<PreprocessedSequence>, PreprocessSummary), PreprocessError> {
    config.validate()?;
    let mut sequences = Vec::with_capacity(dataset.len());
    let mut summary = PreprocessSummary::default();
    for curve in &dataset.curves {
        let truncated = match config.horizon_days {
            Some(horizon) => match truncate_after_detection(curve, horizon) {
                Ok(lc) => lc,
                Err(PreprocessError::NoDetection { object_id }) => {
                    summary.dropped_no_detection.push(object_id);
                    continue;
                }
                Err(other) => return Err(other),
            },
            None => curve.clone(),
        };
        let mut rescaled = rescale_time(&truncated);
        scale_time(&mut rescaled, config.time_scale);
        let normalized = normalize_flux(&rescaled);
        sequences.push(pad_and_mask(&normalized, config.target_len)?);
    }
    Ok((sequences, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Measurement;
    use proptest::prelude::*;

    fn meas(time: f64, flux: f64, detected: bool) -> Measurement {
        Measurement {
            time,
            flux,
            flux_err: 1.0,
            passband: 2,
            detected,
        }
    }

    fn curve(id: u64, measurements: Vec<Measurement>) -> LightCurve {
        LightCurve::new(id, measurements, Some(90)).unwrap()
    }

    #[test]
    fn rescale_sets_first_time_to_zero() {
        let lc = curve(1, vec![meas(59750.4, 1.0, true), meas(59798.3, 2.0, false)]);
        let out = rescale_time(&lc);
        assert_eq!(out.measurements[0].time, 0.0);
        assert!((out.measurements[1].time - 47.9).abs() < 1e-9);
    }

    #[test]
    fn rescale_single_measurement() {
        let lc = curve(1, vec![meas(12345.6, 1.0, true)]);
        assert_eq!(rescale_time(&lc).measurements[0].time, 0.0);
    }

    #[test]
    fn rescale_is_idempotent() {
        let lc = curve(1, vec![meas(10.0, 1.0, true), meas(20.5, 2.0, false)]);
        let once = rescale_time(&lc);
        let twice = rescale_time(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn normalize_maps_extremes_to_unit_interval() {
        let lc = curve(1, vec![meas(0.0, -544.81, true), meas(1.0, -2.94, false)]);
        let out = normalize_flux(&lc);
        assert_eq!(out.measurements[0].flux, 0.0);
        assert_eq!(out.measurements[1].flux, 1.0);
    }

    #[test]
    fn normalize_three_points() {
        let lc = curve(
            1,
            vec![
                meas(0.0, 0.0, true),
                meas(1.0, 5.0, false),
                meas(2.0, 10.0, false),
            ],
        );
        let fluxes: Vec<f64> = normalize_flux(&lc)
            .measurements
            .iter()
            .map(|m| m.flux)
            .collect();
        assert_eq!(fluxes, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_flat_curve_maps_to_midpoint() {
        let lc = curve(
            1,
            vec![
                meas(0.0, 7.0, true),
                meas(1.0, 7.0, false),
                meas(2.0, 7.0, false),
            ],
        );
        let out = normalize_flux(&lc);
        for m in &out.measurements {
            assert_eq!(m.flux, 0.5);
            assert_eq!(m.flux_err, 1.0); // untouched
        }
    }

    #[test]
    fn normalize_scales_error_by_flux_range() {
        let lc = curve(1, vec![meas(0.0, 0.0, true), meas(1.0, 4.0, false)]);
        let out = normalize_flux(&lc);
        assert_eq!(out.measurements[0].flux_err, 0.25);
    }

    #[test]
    fn truncate_keeps_measurements_up_to_horizon() {
        let lc = curve(
            1,
            vec![
                meas(90.0, 1.0, false),
                meas(100.0, 2.0, true),
                meas(103.0, 3.0, false),
                meas(106.0, 4.0, false),
            ],
        );
        let out = truncate_after_detection(&lc, 5.0).unwrap();
        let times: Vec<f64> = out.measurements.iter().map(|m| m.time).collect();
        assert_eq!(times, vec![90.0, 100.0, 103.0]);

        // Exhaustive filter oracle: same rule applied by direct counting.
        let t_d = 100.0;
        let expected: Vec<f64> = lc
            .measurements
            .iter()
            .map(|m| m.time)
            .filter(|&t| t <= t_d + 5.0)
            .collect();
        assert_eq!(times, expected);
    }

    #[test]
    fn truncate_with_large_horizon_is_identity() {
        let lc = curve(1, vec![meas(0.0, 1.0, true), meas(50.0, 2.0, false)]);
        assert_eq!(truncate_after_detection(&lc, 1e6).unwrap(), lc);
    }

    #[test]
    fn truncate_without_detection_errors() {
        let lc = curve(1, vec![meas(0.0, 1.0, false), meas(1.0, 2.0, false)]);
        assert!(matches!(
            truncate_after_detection(&lc, 5.0),
            Err(PreprocessError::NoDetection { object_id: 1 })
        ));
    }

    #[test]
    fn pad_produces_prefix_mask() {
        let measurements: Vec<Measurement> =
            (0..100).map(|i| meas(i as f64, 0.5, i == 0)).collect();
        let lc = curve(1, measurements);
        let seq = pad_and_mask(&lc, DEFAULT_SEQUENCE_LEN).unwrap();
        assert_eq!(seq.target_len(), 352);
        assert_eq!(seq.valid_len(), 100);
        assert!(seq.mask[..100].iter().all(|&m| m));
        assert!(seq.mask[100..].iter().all(|&m| !m));
        for t in 100..352 {
            assert!(seq.row(t).iter().all(|&v| v == PADDING_VALUE));
        }
    }

    #[test]
    fn pad_exact_length_has_all_true_mask() {
        let measurements: Vec<Measurement> = (0..352).map(|i| meas(i as f64, 0.5, true)).collect();
        let seq = pad_and_mask(&curve(1, measurements), 352).unwrap();
        assert!(seq.mask.iter().all(|&m| m));
    }

    #[test]
    fn pad_rejects_overlong_sequences() {
        let measurements: Vec<Measurement> = (0..353).map(|i| meas(i as f64, 0.5, true)).collect();
        match pad_and_mask(&curve(1, measurements), 352) {
            Err(PreprocessError::SequenceTooLong { len, max, .. }) => {
                assert_eq!(len, 353);
                assert_eq!(max, 352);
            }
            other => panic!("expected SequenceTooLong, got {other:?}"),
        }
    }

    #[test]
    fn pipeline_layout_matches_table_order() {
        // First row of a rescaled object: time 0, original passband and
        // detection flag, normalized flux and scaled error.
        let lc = curve(
            615,
            vec![
                Measurement {
                    time: 59750.4,
                    flux: -544.81,
                    flux_err: 3.623,
                    passband: 2,
                    detected: true,
                },
                Measurement {
                    time: 59751.4,
                    flux: -300.0,
                    flux_err: 2.0,
                    passband: 1,
                    detected: false,
                },
                Measurement {
                    time: 59798.3,
                    flux: -2.94,
                    flux_err: 1.771,
                    passband: 3,
                    detected: false,
                },
            ],
        );
        let ds = Dataset::new(vec![lc]).unwrap();
        let (seqs, summary) = preprocess_dataset(&ds, &PreprocessConfig::default()).unwrap();
        assert!(summary.dropped_no_detection.is_empty());
        let row = seqs[0].row(0);
        let range = -2.94 - (-544.81);
        assert_eq!(row[0], 0.0); // min flux normalizes to 0
        assert!((row[1] - 3.623 / range).abs() < 1e-15);
        assert_eq!(row[2], 0.0);
        assert_eq!(row[3], 2.0);
        assert_eq!(row[4], 1.0);
        assert_eq!(seqs[0].label, Some(GeneralizedClass::SLike)); // class 90
        assert_eq!(seqs[0].label_onehot(), Some([1.0, 0.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn pipeline_without_horizon_keeps_every_object() {
        let ds = Dataset::new(vec![
            curve(1, vec![meas(0.0, 1.0, false)]),
            curve(2, vec![meas(5.0, 2.0, false), meas(6.0, 3.0, true)]),
        ])
        .unwrap();
        let (seqs, summary) = preprocess_dataset(&ds, &PreprocessConfig::default()).unwrap();
        assert_eq!(seqs.len(), 2);
        assert!(summary.dropped_no_detection.is_empty());
    }

    #[test]
    fn pipeline_with_horizon_drops_undetected_objects() {
        let ds = Dataset::new(vec![
            curve(1, vec![meas(0.0, 1.0, false)]),
            curve(2, vec![meas(5.0, 2.0, false), meas(6.0, 3.0, true)]),
        ])
        .unwrap();
        let config = PreprocessConfig {
            horizon_days: Some(5.0),
            ..PreprocessConfig::default()
        };
        let (seqs, summary) = preprocess_dataset(&ds, &config).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].object_id, 2);
        assert_eq!(summary.dropped_no_detection, vec![1]);
    }

    #[test]
    fn shorter_horizon_keeps_a_prefix() {
        let measurements: Vec<Measurement> = (0..40)
            .map(|i| meas(i as f64, (i % 7) as f64, i >= 3))
            .collect();
        let ds = Dataset::new(vec![curve(1, measurements)]).unwrap();
        let short = PreprocessConfig {
            horizon_days: Some(5.0),
            ..PreprocessConfig::default()
        };
        let long = PreprocessConfig {
            horizon_days: Some(20.0),
            ..PreprocessConfig::default()
        };
        let (s5, _) = preprocess_dataset(&ds, &short).unwrap();
        let (s20, _) = preprocess_dataset(&ds, &long).unwrap();
        assert!(s5[0].valid_len() <= s20[0].valid_len());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let ds = Dataset::new(vec![curve(1, vec![meas(0.0, 1.0, true)])]).unwrap();
        for config in [
            PreprocessConfig {
                target_len: 0,
                ..PreprocessConfig::default()
            },
            PreprocessConfig {
                time_scale: 0.0,
                ..PreprocessConfig::default()
            },
            PreprocessConfig {
                horizon_days: Some(-1.0),
                ..PreprocessConfig::default()
            },
        ] {
            assert!(matches!(
                preprocess_dataset(&ds, &config),
                Err(PreprocessError::InvalidConfig(_))
            ));
        }
    }

    // Grid-aligned generators: times and shifts on a dyadic grid keep f64
    // addition and subtraction exact, so invariance checks can be bitwise.
    fn grid_times(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0u32..2_000_000, n..=n).prop_map(|ticks| {
            let mut t: Vec<f64> = ticks.iter().map(|&k| k as f64 / 8.0).collect();
            t.sort_by(|a, b| a.partial_cmp(b).unwrap());
            t
        })
    }

    fn grid_object() -> impl Strategy<Value = LightCurve> {
        (3usize..40).prop_flat_map(|n| {
            (
                grid_times(n),
                proptest::collection::vec(-1_000_000i32..1_000_000, n..=n),
                proptest::collection::vec(0u8..6, n..=n),
                proptest::collection::vec(proptest::bool::ANY, n..=n),
            )
                .prop_map(|(times, flux_ticks, bands, detected)| {
                    let measurements = times
                        .iter()
                        .zip(&flux_ticks)
                        .zip(&bands)
                        .zip(&detected)
                        .map(|(((&t, &f), &p), &d)| Measurement {
                            time: t,
                            flux: f as f64 / 16.0,
                            flux_err: 0.25,
                            passband: p,
                            detected: d,
                        })
                        .collect();
                    LightCurve::new(77, measurements, Some(42)).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn time_shift_invariance(lc in grid_object(), shift_ticks in -4_000_000i64..4_000_000) {
            let shift = shift_ticks as f64 / 8.0;
            let mut shifted = lc.clone();
            for m in &mut shifted.measurements {
                m.time += shift;
            }
            let config = PreprocessConfig {
                horizon_days: Some(40.0),
                ..PreprocessConfig::default()
            };
            let ds_a = Dataset::new(vec![lc]).unwrap();
            let ds_b = Dataset::new(vec![shifted]).unwrap();
            let (a, _) = preprocess_dataset(&ds_a, &config).unwrap();
            let (b, _) = preprocess_dataset(&ds_b, &config).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn flux_affine_invariance(lc in grid_object(), scale_pow in -3i32..4, offset_ticks in -1_000i32..1_000) {
            let scale = 2f64.powi(scale_pow);
            let offset = offset_ticks as f64;
            let mut transformed = lc.clone();
            for m in &mut transformed.measurements {
                m.flux = scale * m.flux + offset;
            }
            let config = PreprocessConfig::default();
            let (a, _) = preprocess_dataset(&Dataset::new(vec![lc]).unwrap(), &config).unwrap();
            let (b, _) =
                preprocess_dataset(&Dataset::new(vec![transformed]).unwrap(), &config).unwrap();
            // Flux column identical bit for bit; other columns untouched by
            // the transform.
            for t in 0..a[0].target_len() {
                prop_assert_eq!(a[0].row(t)[0].to_bits(), b[0].row(t)[0].to_bits());
            }
        }

        #[test]
        fn mask_is_always_a_prefix(lc in grid_object(), horizon in proptest::option::of(1u32..100)) {
            let config = PreprocessConfig {
                horizon_days: horizon.map(f64::from),
                ..PreprocessConfig::default()
            };
            let ds = Dataset::new(vec![lc]).unwrap();
            let (seqs, _) = preprocess_dataset(&ds, &config).unwrap();
            for seq in &seqs {
                let n = seq.valid_len();
                prop_assert!(seq.mask[..n].iter().all(|&m| m));
                prop_assert!(seq.mask[n..].iter().all(|&m| !m));
                for t in 0..n {
                    let f = seq.row(t)[0];
                    prop_assert!((0.0..=1.0).contains(&f), "flux {f} outside [0,1]");
                }
                if n > 0 {
                    prop_assert_eq!(seq.row(0)[2], 0.0);
                }
            }
        }

        #[test]
        fn horizon_subsets_are_nested(lc in grid_object()) {
            prop_assume!(lc.measurements.iter().any(|m| m.detected));
            let mut prev_len = 0usize;
            for horizon in [5.0, 10.0, 20.0] {
                let kept = truncate_after_detection(&lc, horizon).unwrap();
                prop_assert!(kept.measurements.len() >= prev_len);
                prop_assert!(kept.measurements.iter().all(|m| lc.measurements.contains(m)));
                prev_len = kept.measurements.len();
            }
        }
    }
}
