//! Evaluation: one-vs-rest ROC and precision-recall curves, trapezoidal
//! AUC, confusion matrices, and the combined evaluation report.
//!
//! Thresholds sweep the distinct score values in descending order, so tied
//! scores always move together. ROC curves carry a leading (0, 0) anchor at
//! threshold +inf; PR curves anchor recall 0 at the precision of the
//! highest threshold rather than an interpolated 1.0.

use serde::Serialize;
use std::io::Write;
use thiserror::Error;

use crate::ingest::{Dataset, NUM_CLASSES};
use crate::linalg::argmax;
use crate::model::{predict, ModelError, ModelParams};
use crate::preprocess::{preprocess_dataset, PreprocessConfig, PreprocessError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("label {label} out of range for object index {index}")]
    LabelError { index: usize, label: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("scores must be finite")]
    NonFiniteScore,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("object {object_id} has no label; evaluation needs a labeled set")]
    Unlabeled { object_id: u64 },
    #[error("no objects left to evaluate")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Roc,
    Pr,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Roc => "roc",
            CurveKind::Pr => "pr",
        }
    }
}

/// One class's curve. For ROC the points are (false-positive rate,
/// true-positive rate); for PR they are (recall, precision). `thresholds`
/// aligns with `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoints {
    pub kind: CurveKind,
    pub class_index: usize,
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
}

/// Sweeps thresholds over the distinct scores, descending, counting an
/// object as predicted-positive when its score is >= the threshold.
pub fn curve_points(
    scores: &[f64],
    positives: &[bool],
    kind: CurveKind,
) -> Result<CurvePoints, MetricsError> {
    if scores.len() != positives.len() {
        return Err(MetricsError::Shape(format!(
            "{} scores vs {} labels",
            scores.len(),
            positives.len()
        )));
    }
    if scores.is_empty() {
        return Err(MetricsError::Shape("empty score set".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore);
    }
    let pos_total = positives.iter().filter(|&&p| p).count();
    let neg_total = scores.len() - pos_total;
    if pos_total == 0 {
        return Err(MetricsError::DegenerateLabels(
            "no positive examples".into(),
        ));
    }
    if kind == CurveKind::Roc && neg_total == 0 {
        return Err(MetricsError::DegenerateLabels(
            "no negative examples for an ROC curve".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = Vec::new();
    let mut thresholds = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut idx = 0;
    while idx < order.len() {
        let threshold = scores[order[idx]];
        // Consume the whole tied group before emitting a point.
        while idx < order.len() && scores[order[idx]] == threshold {
            if positives[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        let point = match kind {
            CurveKind::Roc => (fp as f64 / neg_total as f64, tp as f64 / pos_total as f64),
            CurveKind::Pr => (tp as f64 / pos_total as f64, tp as f64 / (tp + fp) as f64),
        };
        points.push(point);
        thresholds.push(threshold);
    }

    let anchor = match kind {
        CurveKind::Roc => (0.0, 0.0),
        // Recall 0 at the precision of the strictest threshold.
        CurveKind::Pr => (0.0, points[0].1),
    };
    points.insert(0, anchor);
    thresholds.insert(0, f64::INFINITY);

    Ok(CurvePoints {
        kind,
        class_index: 0,
        points,
        thresholds,
    })
}

/// Trapezoidal area under the curve's points.
pub fn auc_trapezoid(curve: &CurvePoints) -> f64 {
    let mut area = 0.0;
    for pair in curve.points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    area
}

/// Counts (true class, argmax-predicted class) pairs; rows are true
/// classes, columns predictions, ties to the lowest class index.
pub fn confusion_matrix(
    probs: &[[f64; NUM_CLASSES]],
    labels: &[usize],
) -> Result<[[u64; NUM_CLASSES]; NUM_CLASSES], MetricsError> {
    if probs.len() != labels.len() {
        return Err(MetricsError::Shape(format!(
            "{} probability rows vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let mut matrix = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    for (index, (p, &label)) in probs.iter().zip(labels).enumerate() {
        if label >= NUM_CLASSES {
            return Err(MetricsError::LabelError { index, label });
        }
        matrix[label][argmax(p)] += 1;
    }
    Ok(matrix)
}

/// The evaluation summary serialized to the report file. Curves ride along
/// in memory but are exported separately as delimited text.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub n_objects: usize,
    pub horizon_days: Option<f64>,
    pub accuracy: f64,
    /// One-vs-rest ROC AUC per class; null when the class is degenerate in
    /// the evaluated set (no positives or no negatives).
    pub auc_roc: [Option<f64>; NUM_CLASSES],
    /// One-vs-rest PR AUC per class; null when the class has no positives.
    pub auc_pr: [Option<f64>; NUM_CLASSES],
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
    /// Objects dropped before evaluation because a truncation horizon was
    /// requested and they have no detection to anchor it.
    pub dropped_no_detection: Vec<u64>,
    #[serde(skip)]
    pub curves: Vec<CurvePoints>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// Full evaluation pipeline: preprocess (honoring any truncation horizon in
/// the config), predict, then derive curves, AUCs, and the confusion
/// matrix.
pub fn evaluate(
    params: &ModelParams,
    dataset: &Dataset,
    config: &PreprocessConfig,
) -> Result<EvalReport, EvalError> {
    let (seqs, summary) = preprocess_dataset(dataset, config)?;
    if seqs.is_empty() {
        return Err(EvalError::Empty);
    }
    let labels: Vec<usize> = seqs
        .iter()
        .map(|s| {
            s.label.map(|c| c.index()).ok_or(EvalError::Unlabeled {
                object_id: s.object_id,
            })
        })
        .collect::<Result<_, _>>()?;
    let probs = predict(params, &seqs)?;

    let confusion = confusion_matrix(&probs, &labels)?;
    let correct: u64 = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
    let accuracy = correct as f64 / seqs.len() as f64;

    let mut auc_roc = [None; NUM_CLASSES];
    let mut auc_pr = [None; NUM_CLASSES];
    let mut curves = Vec::new();
    for class in 0..NUM_CLASSES {
        let scores: Vec<f64> = probs.iter().map(|p| p[class]).collect();
        let positives: Vec<bool> = labels.iter().map(|&l| l == class).collect();
        for kind in [CurveKind::Roc, CurveKind::Pr] {
            match curve_points(&scores, &positives, kind) {
                Ok(mut curve) => {
                    curve.class_index = class;
                    let auc = auc_trapezoid(&curve);
                    match kind {
                        CurveKind::Roc => auc_roc[class] = Some(auc),
                        CurveKind::Pr => auc_pr[class] = Some(auc),
                    }
                    curves.push(curve);
                }
                // A class absent from (or filling) the evaluated subset has
                // no meaningful curve; the report records null instead.
                Err(MetricsError::DegenerateLabels(_)) => {}
                Err(other) => return Err(other.into()),
            }
        }
    }

    Ok(EvalReport {
        n_objects: seqs.len(),
        horizon_days: config.horizon_days,
        accuracy,
        auc_roc,
        auc_pr,
        confusion,
        dropped_no_detection: summary.dropped_no_detection,
        curves,
    })
}

/// Writes curves as delimited text with columns class, kind, threshold, x,
/// y. Infinite anchor thresholds print as `inf`.
pub fn write_curves_csv<W: Write>(curves: &[CurvePoints], mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "class,kind,threshold,x,y")?;
    for curve in curves {
        for (point, threshold) in curve.points.iter().zip(&curve.thresholds) {
            writeln!(
                writer,
                "{},{},{},{},{}",
                curve.class_index,
                curve.kind.as_str(),
                threshold,
                point.0,
                point.1
            )?;
        }
    }
    Ok(())
}
