//! Parsing and grouping of tabular light-curve data.
//!
//! Input rows follow the survey table layout: one measurement per row with
//! columns flux, error, mjd, filter, detection, (optional) class and object
//! id. Rows may arrive unsorted and interleaved across objects; ingestion
//! groups them per object, sorts by time and remaps the fourteen original
//! class ids onto the five generalized classes.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Number of generalized classes.
pub const NUM_CLASSES: usize = 5;

/// The five generalized classes the original fourteen ids collapse onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneralizedClass {
    SLike = 0,
    Fast = 1,
    Long = 2,
    Periodic = 3,
    NonPeriodic = 4,
}

impl GeneralizedClass {
    pub const ALL: [GeneralizedClass; NUM_CLASSES] = [
        GeneralizedClass::SLike,
        GeneralizedClass::Fast,
        GeneralizedClass::Long,
        GeneralizedClass::Periodic,
        GeneralizedClass::NonPeriodic,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<GeneralizedClass> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GeneralizedClass::SLike => "S-Like",
            GeneralizedClass::Fast => "Fast",
            GeneralizedClass::Long => "Long",
            GeneralizedClass::Periodic => "Periodic",
            GeneralizedClass::NonPeriodic => "Non-Periodic",
        }
    }
}

/// Mapping from original class id to generalized class.
pub const CLASS_REMAP: [(u16, GeneralizedClass); 14] = [
    (6, GeneralizedClass::Fast),         // single micro-lens
    (15, GeneralizedClass::Long),        // TDE
    (16, GeneralizedClass::Periodic),    // eclipsing binary
    (42, GeneralizedClass::SLike),       // SNII
    (52, GeneralizedClass::SLike),       // SNIax
    (53, GeneralizedClass::Periodic),    // Mira
    (62, GeneralizedClass::SLike),       // SNIbc
    (64, GeneralizedClass::Fast),        // kilonova
    (65, GeneralizedClass::Fast),        // M-dwarf
    (67, GeneralizedClass::SLike),       // SNIa-91bg
    (88, GeneralizedClass::NonPeriodic), // AGN
    (90, GeneralizedClass::SLike),       // SNIa
    (92, GeneralizedClass::Periodic),    // RR Lyrae
    (95, GeneralizedClass::Long),        // SLSN-I
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unknown original class id {0}")]
    UnknownClass(u16),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("input is empty")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for IngestError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => IngestError::Io(io),
            other => IngestError::Schema(format!("{other:?}")),
        }
    }
}

/// One photometric measurement of one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Modified Julian Date in days.
    pub time: f64,
    /// Calibrated flux; arbitrary units, may be negative.
    pub flux: f64,
    /// Measurement error, non-negative.
    pub flux_err: f64,
    /// Filter index 0-5.
    pub passband: u8,
    /// Whether this measurement is a significant detection.
    pub detected: bool,
}

impl Measurement {
    fn validate(&self) -> Result<(), String> {
        if !self.time.is_finite() {
            return Err(format!("non-finite time {}", self.time));
        }
        if !self.flux.is_finite() {
            return Err(format!("non-finite flux {}", self.flux));
        }
        if !self.flux_err.is_finite() || self.flux_err < 0.0 {
            return Err(format!("invalid flux error {}", self.flux_err));
        }
        if self.passband > 5 {
            return Err(format!("passband {} out of range 0-5", self.passband));
        }
        Ok(())
    }
}

/// All measurements of one object, time-sorted, plus its labels.
///
/// `generalized_class` is always derived from `original_class` via
/// [`remap_class`]; both are absent for unlabeled prediction input.
#[derive(Debug, Clone, PartialEq)]
pub struct LightCurve {
    pub object_id: u64,
    pub measurements: Vec<Measurement>,
    pub original_class: Option<u16>,
    pub generalized_class: Option<GeneralizedClass>,
}

impl LightCurve {
    /// Builds a light curve, sorting measurements by time (stable, so ties
    /// keep input order) and validating every measurement.
    pub fn new(
        object_id: u64,
        mut measurements: Vec<Measurement>,
        original_class: Option<u16>,
    ) -> Result<LightCurve, IngestError> {
        if measurements.is_empty() {
            return Err(IngestError::Config(format!(
                "object {object_id} has no measurements"
            )));
        }
        for m in &measurements {
            m.validate().map_err(|message| IngestError::Parse {
                line: 0,
                message: format!("object {object_id}: {message}"),
            })?;
        }
        measurements.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
        let generalized_class = match original_class {
            Some(id) => Some(remap_class(id)?),
            None => None,
        };
        Ok(LightCurve {
            object_id,
            measurements,
            original_class,
            generalized_class,
        })
    }

    pub fn label(&self) -> Option<GeneralizedClass> {
        self.generalized_class
    }
}

/// An immutable collection of light curves with per-class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub curves: Vec<LightCurve>,
    pub class_counts: [usize; NUM_CLASSES],
}

impl Dataset {
    /// Builds a dataset, rejecting duplicate object ids.
    pub fn new(curves: Vec<LightCurve>) -> Result<Dataset, IngestError> {
        let mut seen = HashMap::with_capacity(curves.len());
        let mut class_counts = [0usize; NUM_CLASSES];
        for curve in &curves {
            if seen.insert(curve.object_id, ()).is_some() {
                return Err(IngestError::Schema(format!(
                    "duplicate object id {}",
                    curve.object_id
                )));
            }
            if let Some(class) = curve.generalized_class {
                class_counts[class.index()] += 1;
            }
        }
        Ok(Dataset {
            curves,
            class_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// True when every curve carries a class label.
    pub fn is_labeled(&self) -> bool {
        self.curves.iter().all(|c| c.generalized_class.is_some())
    }

    /// Writes the dataset in the tabular input format. With `include_labels`
    /// the class column carries the original class id.
    pub fn write_csv<W: Write>(&self, writer: W, include_labels: bool) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(writer);
        if include_labels {
            w.write_record(["flux", "error", "mjd", "filter", "detection", "class", "id"])?;
        } else {
            w.write_record(["flux", "error", "mjd", "filter", "detection", "id"])?;
        }
        for curve in &self.curves {
            let class = if include_labels {
                Some(curve.original_class.ok_or_else(|| {
                    IngestError::Config(format!(
                        "object {} has no label but labels were requested",
                        curve.object_id
                    ))
                })?)
            } else {
                None
            };
            for m in &curve.measurements {
                let mut record = vec![
                    m.flux.to_string(),
                    m.flux_err.to_string(),
                    m.time.to_string(),
                    m.passband.to_string(),
                    u8::from(m.detected).to_string(),
                ];
                if let Some(class) = class {
                    record.push(class.to_string());
                }
                record.push(curve.object_id.to_string());
                w.write_record(&record)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Maps an original class id to its generalized class.
pub fn remap_class(original_id: u16) -> Result<GeneralizedClass, IngestError> {
    CLASS_REMAP
        .iter()
        .find(|(id, _)| *id == original_id)
        .map(|(_, class)| *class)
        .ok_or(IngestError::UnknownClass(original_id))
}

/// Column indices resolved from the header row.
struct Columns {
    flux: usize,
    error: usize,
    mjd: usize,
    filter: usize,
    detection: usize,
    id: usize,
    class: Option<usize>,
}

fn resolve_columns(headers: &csv::StringRecord, has_labels: bool) -> Result<Columns, IngestError> {
    let find = |names: &[&str]| -> Option<usize> {
        headers
            .iter()
            .position(|h| names.contains(&h.trim().to_ascii_lowercase().as_str()))
    };
    let require = |names: &[&str]| -> Result<usize, IngestError> {
        find(names).ok_or_else(|| IngestError::Schema(format!("missing column {:?}", names[0])))
    };
    let class = find(&["class", "target"]);
    if has_labels && class.is_none() {
        return Err(IngestError::Schema(
            "missing column \"class\" (labels requested)".into(),
        ));
    }
    Ok(Columns {
        flux: require(&["flux"])?,
        error: require(&["error", "flux_err"])?,
        mjd: require(&["mjd"])?,
        filter: require(&["filter", "passband"])?,
        detection: require(&["detection", "detected"])?,
        id: require(&["id", "object_id"])?,
        class: if has_labels { class } else { None },
    })
}

fn cell(record: &csv::StringRecord, idx: usize, line: u64) -> Result<&str, IngestError> {
    record.get(idx).ok_or_else(|| IngestError::Parse {
        line,
        message: format!("row has no column {idx}"),
    })
}

fn parse_f64(text: &str, what: &str, line: u64) -> Result<f64, IngestError> {
    let value: f64 = text.trim().parse().map_err(|_| IngestError::Parse {
        line,
        message: format!("{what} {text:?} is not numeric"),
    })?;
    if !value.is_finite() {
        return Err(IngestError::Parse {
            line,
            message: format!("{what} {text:?} is not finite"),
        });
    }
    Ok(value)
}

fn parse_u64(text: &str, what: &str, line: u64) -> Result<u64, IngestError> {
    text.trim().parse().map_err(|_| IngestError::Parse {
        line,
        message: format!("{what} {text:?} is not a non-negative integer"),
    })
}

/// Parses delimited text into a dataset: rows are grouped by object id (in
/// first-appearance order), each group is time-sorted and class ids are
/// remapped. Column names are case-insensitive; see the module docs.
pub fn parse_table<R: Read>(reader: R, has_labels: bool) -> Result<Dataset, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match csv_reader.headers() {
        Ok(h) if !h.is_empty() && h.iter().any(|f| !f.is_empty()) => h.clone(),
        _ => return Err(IngestError::EmptyInput),
    };
    let columns = resolve_columns(&headers, has_labels)?;

    // Grouping preserves first-appearance order of object ids.
    let mut order: Vec<u64> = Vec::new();
    let mut groups: HashMap<u64, (Vec<Measurement>, Option<u16>)> = HashMap::new();

    for record in csv_reader.records() {
        let record = record.map_err(|e| match e.position() {
            Some(pos) => IngestError::Parse {
                line: pos.line(),
                message: e.to_string(),
            },
            None => IngestError::Parse {
                line: 0,
                message: e.to_string(),
            },
        })?;
        let line = record.position().map_or(0, |p| p.line());

        let object_id = parse_u64(cell(&record, columns.id, line)?, "object id", line)?;
        let time = parse_f64(cell(&record, columns.mjd, line)?, "mjd", line)?;
        let flux = parse_f64(cell(&record, columns.flux, line)?, "flux", line)?;
        let flux_err = parse_f64(cell(&record, columns.error, line)?, "error", line)?;
        if flux_err < 0.0 {
            return Err(IngestError::Parse {
                line,
                message: format!("error {flux_err} is negative"),
            });
        }
        let passband_raw = parse_u64(cell(&record, columns.filter, line)?, "filter", line)?;
        if passband_raw > 5 {
            return Err(IngestError::Parse {
                line,
                message: format!("filter {passband_raw} out of range 0-5"),
            });
        }
        let detected = match cell(&record, columns.detection, line)?.trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(IngestError::Parse {
                    line,
                    message: format!("detection {other:?} is not 0 or 1"),
                })
            }
        };
        let class = match columns.class {
            Some(idx) => Some(parse_u64(cell(&record, idx, line)?, "class", line)? as u16),
            None => None,
        };

        let entry = groups.entry(object_id).or_insert_with(|| {
            order.push(object_id);
            (Vec::new(), class)
        });
        if entry.1 != class {
            return Err(IngestError::Parse {
                line,
                message: format!(
                    "object {object_id} has inconsistent class labels ({:?} vs {:?})",
                    entry.1, class
                ),
            });
        }
        entry.0.push(Measurement {
            time,
            flux,
            flux_err,
            passband: passband_raw as u8,
            detected,
        });
    }

    if order.is_empty() {
        return Err(IngestError::EmptyInput);
    }

    let mut curves = Vec::with_capacity(order.len());
    for object_id in order {
        let (measurements, class) = groups.remove(&object_id).expect("grouped");
        curves.push(LightCurve::new(object_id, measurements, class)?);
    }
    Dataset::new(curves)
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Splits a dataset into (training, validation) by seeded stratified
/// sampling per generalized class. The validation set gets
/// `round(fraction * len)` objects overall, with per-class counts within one
/// of `round(fraction * class_count)`; both halves keep the input order.
pub fn split_train_validation(
    dataset: Dataset,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), IngestError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(IngestError::Config(format!(
            "validation fraction {fraction} must lie in (0, 1)"
        )));
    }
    if dataset.is_empty() {
        return Err(IngestError::Config("cannot split an empty dataset".into()));
    }

    // Strata 0-4 are the generalized classes; stratum 5 collects unlabeled
    // curves so the split stays total on prediction-style input.
    let mut strata: [Vec<usize>; NUM_CLASSES + 1] = Default::default();
    for (idx, curve) in dataset.curves.iter().enumerate() {
        let stratum = curve.generalized_class.map_or(NUM_CLASSES, |c| c.index());
        strata[stratum].push(idx);
    }

    let total_target = round_half_up(fraction * dataset.len() as f64);
    let mut floors = [0usize; NUM_CLASSES + 1];
    let mut remainders = [0f64; NUM_CLASSES + 1];
    for (s, members) in strata.iter().enumerate() {
        let exact = fraction * members.len() as f64;
        floors[s] = exact.floor() as usize;
        remainders[s] = exact - exact.floor();
    }
    let mut extra = total_target.saturating_sub(floors.iter().sum::<usize>());
    // Largest remainder first; ties resolved by stratum index.
    let mut by_remainder: Vec<usize> = (0..strata.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        remainders[b]
            .partial_cmp(&remainders[a])
            .expect("finite remainders")
            .then(a.cmp(&b))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_validation = vec![false; dataset.len()];
    for &s in &by_remainder {
        let mut take = floors[s];
        if extra > 0 && take < strata[s].len() && remainders[s] > 0.0 {
            take += 1;
            extra -= 1;
        }
        let mut members = strata[s].clone();
        members.shuffle(&mut rng);
        for &idx in members.iter().take(take) {
            in_validation[idx] = true;
        }
    }

    let mut train = Vec::new();
    let mut validation = Vec::new();
    for (idx, curve) in dataset.curves.into_iter().enumerate() {
        if in_validation[idx] {
            validation.push(curve);
        } else {
            train.push(curve);
        }
    }
    Ok((Dataset::new(train)?, Dataset::new(validation)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meas(time: f64) -> Measurement {
        Measurement {
            time,
            flux: 1.0,
            flux_err: 0.5,
            passband: 2,
            detected: true,
        }
    }

    fn labeled_curve(id: u64, class: u16) -> LightCurve {
        LightCurve::new(id, vec![meas(0.0)], Some(class)).unwrap()
    }

    #[test]
    fn remap_covers_all_fourteen_ids() {
        let expected: [(u16, usize); 14] = [
            (6, 1),
            (15, 2),
            (16, 3),
            (42, 0),
            (52, 0),
            (53, 3),
            (62, 0),
            (64, 1),
            (65, 1),
            (67, 0),
            (88, 4),
            (90, 0),
            (92, 3),
            (95, 2),
        ];
        for (id, new_id) in expected {
            assert_eq!(remap_class(id).unwrap().index(), new_id, "id {id}");
        }
        assert_eq!(CLASS_REMAP.len(), 14);
    }

    #[test]
    fn remap_rejects_unknown_ids() {
        for id in [0u16, 1, 99, 43, 1000] {
            match remap_class(id) {
                Err(IngestError::UnknownClass(bad)) => assert_eq!(bad, id),
                other => panic!("expected UnknownClass for {id}, got {other:?}"),
            }
        }
    }

    #[test]
    fn parse_groups_rows_by_object() {
        let csv = "flux,error,mjd,filter,detection,class,id\n\
                   1.0,0.1,59752.0,2,1,92,615\n\
                   2.0,0.2,59750.0,3,0,92,615\n\
                   3.0,0.3,59751.0,1,1,92,615\n";
        let ds = parse_table(csv.as_bytes(), true).unwrap();
        assert_eq!(ds.len(), 1);
        let curve = &ds.curves[0];
        assert_eq!(curve.object_id, 615);
        assert_eq!(curve.measurements.len(), 3);
        let times: Vec<f64> = curve.measurements.iter().map(|m| m.time).collect();
        assert_eq!(times, vec![59750.0, 59751.0, 59752.0]);
    }

    #[test]
    fn parse_reads_example_first_row() {
        let csv = "Flux,Error,mjd,Filter,Detection,Class,Id\n\
                   -544.810,3.623,59750.4,2,1,92,615\n";
        let ds = parse_table(csv.as_bytes(), true).unwrap();
        let curve = &ds.curves[0];
        assert_eq!(curve.object_id, 615);
        assert_eq!(curve.original_class, Some(92));
        assert_eq!(curve.generalized_class, Some(GeneralizedClass::Periodic));
        let m = &curve.measurements[0];
        assert_eq!(m.flux, -544.810);
        assert_eq!(m.flux_err, 3.623);
        assert_eq!(m.time, 59750.4);
        assert_eq!(m.passband, 2);
        assert!(m.detected);
    }

    #[test]
    fn parse_rejects_out_of_range_filter() {
        let csv = "flux,error,mjd,filter,detection,class,id\n\
                   1.0,0.1,59750.0,7,1,92,615\n";
        match parse_table(csv.as_bytes(), true) {
            Err(IngestError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains('7'), "{message}");
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_non_numeric_cell_with_line_number() {
        let csv = "flux,error,mjd,filter,detection,class,id\n\
                   1.0,0.1,59750.0,2,1,92,615\n\
                   oops,0.1,59750.5,2,1,92,615\n";
        match parse_table(csv.as_bytes(), true) {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_reports_missing_column() {
        let csv = "flux,error,mjd,filter,id\n1.0,0.1,59750.0,2,615\n";
        match parse_table(csv.as_bytes(), false) {
            Err(IngestError::Schema(msg)) => assert!(msg.contains("detection"), "{msg}"),
            other => panic!("expected Schema error, got {other:?}"),
        }
    }

    #[test]
    fn parse_requires_class_only_when_labeled() {
        let csv = "flux,error,mjd,filter,detection,id\n1.0,0.1,59750.0,2,1,615\n";
        match parse_table(csv.as_bytes(), true) {
            Err(IngestError::Schema(msg)) => assert!(msg.contains("class"), "{msg}"),
            other => panic!("expected Schema error, got {other:?}"),
        }
        let ds = parse_table(csv.as_bytes(), false).unwrap();
        assert_eq!(ds.curves[0].generalized_class, None);
    }

    #[test]
    fn parse_accepts_alias_headers() {
        let csv = "FLUX,flux_err,MJD,passband,detected,target,object_id\n\
                   1.0,0.1,59750.0,2,1,90,7\n";
        let ds = parse_table(csv.as_bytes(), true).unwrap();
        assert_eq!(
            ds.curves[0].generalized_class,
            Some(GeneralizedClass::SLike)
        );
    }

    #[test]
    fn parse_empty_input() {
        match parse_table(&b""[..], true) {
            Err(IngestError::EmptyInput) => {}
            other => panic!("expected EmptyInput, got {other:?}"),
        }
        // Header-only input has no objects either.
        match parse_table(&b"flux,error,mjd,filter,detection,class,id\n"[..], true) {
            Err(IngestError::EmptyInput) => {}
            other => panic!("expected EmptyInput, got {other:?}"),
        }
    }

    #[test]
    fn parse_interleaved_objects_keep_first_appearance_order() {
        let csv = "flux,error,mjd,filter,detection,class,id\n\
                   1.0,0.1,59750.0,2,1,92,615\n\
                   2.0,0.2,59750.0,1,1,88,713\n\
                   3.0,0.3,59751.0,2,0,92,615\n";
        let ds = parse_table(csv.as_bytes(), true).unwrap();
        let ids: Vec<u64> = ds.curves.iter().map(|c| c.object_id).collect();
        assert_eq!(ids, vec![615, 713]);
        assert_eq!(ds.curves[0].measurements.len(), 2);
        assert_eq!(ds.class_counts, [0, 0, 0, 1, 1]);
    }

    #[test]
    fn parse_rejects_inconsistent_labels() {
        let csv = "flux,error,mjd,filter,detection,class,id\n\
                   1.0,0.1,59750.0,2,1,92,615\n\
                   2.0,0.2,59751.0,2,1,90,615\n";
        assert!(matches!(
            parse_table(csv.as_bytes(), true),
            Err(IngestError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let curves = vec![
            LightCurve::new(
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
                        time: 59798.3,
                        flux: -2.94,
                        flux_err: 1.771,
                        passband: 3,
                        detected: false,
                    },
                ],
                Some(92),
            )
            .unwrap(),
            LightCurve::new(
                713,
                vec![Measurement {
                    time: 0.125,
                    flux: 1e-7,
                    flux_err: 0.0,
                    passband: 5,
                    detected: true,
                }],
                Some(88),
            )
            .unwrap(),
        ];
        let ds = Dataset::new(curves).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf, true).unwrap();
        let back = parse_table(buf.as_slice(), true).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn dataset_rejects_duplicate_ids() {
        let curves = vec![labeled_curve(1, 90), labeled_curve(1, 88)];
        assert!(matches!(Dataset::new(curves), Err(IngestError::Schema(_))));
    }

    #[test]
    fn split_counts_match_rounding() {
        // 7848 objects, 10% validation -> 785 / 7063.
        let mut curves = Vec::new();
        for i in 0..7848u64 {
            let class = CLASS_REMAP[(i % 14) as usize].0;
            curves.push(labeled_curve(i, class));
        }
        let ds = Dataset::new(curves).unwrap();
        let (train, val) = split_train_validation(ds, 0.1, 42).unwrap();
        assert_eq!(val.len(), 785);
        assert_eq!(train.len(), 7063);
    }

    #[test]
    fn split_two_objects_in_half() {
        let ds = Dataset::new(vec![labeled_curve(1, 90), labeled_curve(2, 90)]).unwrap();
        let (train, val) = split_train_validation(ds, 0.5, 7).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(val.len(), 1);
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let mut curves = Vec::new();
        for i in 0..103u64 {
            curves.push(labeled_curve(i, CLASS_REMAP[(i % 14) as usize].0));
        }
        let ds = Dataset::new(curves).unwrap();
        let (t1, v1) = split_train_validation(ds.clone(), 0.25, 9).unwrap();
        let (t2, v2) = split_train_validation(ds.clone(), 0.25, 9).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);

        let mut ids: Vec<u64> = t1
            .curves
            .iter()
            .chain(v1.curves.iter())
            .map(|c| c.object_id)
            .collect();
        ids.sort_unstable();
        let expected: Vec<u64> = (0..103).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn split_is_stratified_within_one() {
        let mut curves = Vec::new();
        let per_class = [37usize, 11, 8, 23, 50];
        let mut id = 0u64;
        for (class_idx, &n) in per_class.iter().enumerate() {
            let original = CLASS_REMAP
                .iter()
                .find(|(_, c)| c.index() == class_idx)
                .unwrap()
                .0;
            for _ in 0..n {
                curves.push(labeled_curve(id, original));
                id += 1;
            }
        }
        let ds = Dataset::new(curves).unwrap();
        let fraction = 0.2;
        let (_, val) = split_train_validation(ds, fraction, 3).unwrap();
        for (class_idx, &n) in per_class.iter().enumerate() {
            let expected = round_half_up(fraction * n as f64) as i64;
            let got = val.class_counts[class_idx] as i64;
            assert!(
                (got - expected).abs() <= 1,
                "class {class_idx}: got {got}, expected {expected}±1"
            );
        }
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = Dataset::new(vec![labeled_curve(1, 90)]).unwrap();
        for fraction in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                split_train_validation(ds.clone(), fraction, 0),
                Err(IngestError::Config(_))
            ));
        }
    }
}
