//! Rank-based AUC, repeated stratified evaluation, and report tables.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::{stratified_split, DataError, Dataset};
use crate::gbdt::{self, BoostConfig, PredictError, TrainError};
use crate::loss::LossSpec;

/// Area under the ROC curve via average ranks (Mann-Whitney form): the
/// fraction of (positive, negative) pairs where the positive scores
/// higher, ties counting one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass { positives, negatives });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk tie groups assigning the average 1-based rank; accumulate the
    // rank sum of positives. Rank sums are exact in f64 well past any
    // realistic sample count.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 1) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        i = j;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// How `evaluate` splits and repeats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalProtocol {
    pub repeats: usize,
    pub train_fraction: f64,
    pub base_seed: u64,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol { repeats: 3, train_fraction: 0.7, base_seed: 0 }
    }
}

/// One report cell: mean and spread of held-out AUC for a classifier at an
/// achieved imbalance ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub classifier_name: String,
    pub ir_achieved: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub repeats: usize,
    pub seeds: Vec<u64>,
}

/// Per-repeat held-out AUCs: split with seed `base_seed + r`, train on the
/// train part, score the held-out part with raw scores.
///
/// For the shifted loss the spec's imbalance ratio is re-pinned from each
/// training fold before training.
pub fn evaluate_aucs(
    dataset: &Dataset,
    config: &BoostConfig,
    spec: &LossSpec,
    protocol: &EvalProtocol,
) -> Result<Vec<f64>, MetricsError> {
    if protocol.repeats < 1 {
        return Err(MetricsError::NoRepeats);
    }
    let mut aucs = Vec::with_capacity(protocol.repeats);
    for r in 0..protocol.repeats {
        let seed = protocol.base_seed + r as u64;
        let (train_part, test_part) =
            stratified_split(dataset, protocol.train_fraction, seed).map_err(MetricsError::Data)?;
        let fold_spec = spec.with_ir(train_part.imbalance_ratio().map_err(MetricsError::Data)?);
        let model =
            gbdt::train(&train_part, config, &fold_spec).map_err(MetricsError::Train)?;
        let scores = model.predict_raw(test_part.features()).map_err(MetricsError::Predict)?;
        aucs.push(auc(&scores, test_part.labels())?);
    }
    Ok(aucs)
}

/// Mean and population standard deviation of held-out AUC across repeats.
pub fn evaluate(
    classifier_name: &str,
    dataset: &Dataset,
    config: &BoostConfig,
    spec: &LossSpec,
    protocol: &EvalProtocol,
) -> Result<EvalRecord, MetricsError> {
    let aucs = evaluate_aucs(dataset, config, spec, protocol)?;
    let n = aucs.len() as f64;
    let mean = aucs.iter().sum::<f64>() / n;
    let var = aucs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    Ok(EvalRecord {
        classifier_name: classifier_name.to_string(),
        ir_achieved: dataset.imbalance_ratio().map_err(MetricsError::Data)?.value(),
        auc_mean: mean,
        auc_std: libm::sqrt(var),
        repeats: aucs.len(),
        seeds: (0..aucs.len() as u64).map(|r| protocol.base_seed + r).collect(),
    })
}

/// A benchmark cell that produced no record, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub classifier_name: String,
    pub ir: f64,
    pub reason: String,
}

enum Cell {
    Auc { mean: f64, std: f64 },
    Failed { reason: String },
    Absent,
}

/// Rows sorted by achieved imbalance ratio, one column per classifier in
/// first-appearance order; renders as CSV and as an aligned markdown table
/// with `mean ± std` cells scaled by 100.
pub struct ReportTable {
    classifiers: Vec<String>,
    irs: Vec<f64>,
    cells: Vec<Cell>, // row-major irs x classifiers
}

pub fn aggregate_report(
    records: &[EvalRecord],
    failures: &[CellFailure],
) -> Result<ReportTable, MetricsError> {
    let mut classifiers: Vec<String> = Vec::new();
    let mut irs: Vec<f64> = Vec::new();
    let mut keyed: Vec<(usize, usize, Cell)> = Vec::new();
    let intern = |classifiers: &mut Vec<String>, irs: &mut Vec<f64>, name: &str, ir: f64| {
        let c = match classifiers.iter().position(|n| n == name) {
            Some(c) => c,
            None => {
                classifiers.push(name.to_string());
                classifiers.len() - 1
            }
        };
        let r = match irs.iter().position(|&v| v == ir) {
            Some(r) => r,
            None => {
                irs.push(ir);
                irs.len() - 1
            }
        };
        (r, c)
    };
    for rec in records {
        let (r, c) = intern(&mut classifiers, &mut irs, &rec.classifier_name, rec.ir_achieved);
        keyed.push((r, c, Cell::Auc { mean: rec.auc_mean, std: rec.auc_std }));
    }
    for fail in failures {
        let (r, c) = intern(&mut classifiers, &mut irs, &fail.classifier_name, fail.ir);
        keyed.push((r, c, Cell::Failed { reason: fail.reason.clone() }));
    }

    // Sort rows by IR while remembering where each old row index went.
    let mut row_order: Vec<usize> = (0..irs.len()).collect();
    row_order.sort_by(|&a, &b| irs[a].total_cmp(&irs[b]));
    let mut row_target = alloc::vec![0usize; irs.len()];
    for (new, &old) in row_order.iter().enumerate() {
        row_target[old] = new;
    }
    let sorted_irs: Vec<f64> = row_order.iter().map(|&r| irs[r]).collect();

    let mut cells: Vec<Cell> = (0..irs.len() * classifiers.len())
        .map(|_| Cell::Absent)
        .collect();
    for (r, c, cell) in keyed {
        let slot = &mut cells[row_target[r] * classifiers.len() + c];
        if !matches!(slot, Cell::Absent) {
            return Err(MetricsError::DuplicateCell {
                classifier: classifiers[c].clone(),
                ir: irs[r],
            });
        }
        *slot = cell;
    }
    Ok(ReportTable { classifiers, irs: sorted_irs, cells })
}

impl ReportTable {
    /// Machine-readable form: `ir` column, then `<name>_mean,<name>_std`
    /// per classifier with full-precision values; failed cells carry `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ir");
        for name in &self.classifiers {
            out.push_str(&format!(",{name}_mean,{name}_std"));
        }
        out.push('\n');
        for (r, ir) in self.irs.iter().enumerate() {
            out.push_str(&format!("{ir}"));
            for c in 0..self.classifiers.len() {
                match &self.cells[r * self.classifiers.len() + c] {
                    Cell::Auc { mean, std } => out.push_str(&format!(",{mean},{std}")),
                    Cell::Failed { .. } => out.push_str(",NA,NA"),
                    Cell::Absent => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Aligned markdown table with `mean ± std` cells scaled by 100 and
    /// rounded to one decimal.
    pub fn to_markdown(&self) -> String {
        let mut header: Vec<String> = Vec::with_capacity(self.classifiers.len() + 1);
        header.push("IR".to_string());
        header.extend(self.classifiers.iter().cloned());
        let mut rows: Vec<Vec<String>> = Vec::with_capacity(self.irs.len());
        for (r, ir) in self.irs.iter().enumerate() {
            let mut row = Vec::with_capacity(self.classifiers.len() + 1);
            row.push(format!("{:.1}", ir));
            for c in 0..self.classifiers.len() {
                row.push(match &self.cells[r * self.classifiers.len() + c] {
                    Cell::Auc { mean, std } => format_cell(*mean, *std),
                    Cell::Failed { reason } => format!("NA ({reason})"),
                    Cell::Absent => String::new(),
                });
            }
            rows.push(row);
        }

        let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
        for row in &rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let emit_row = |out: &mut String, cells: &[String]| {
            out.push('|');
            for (i, cell) in cells.iter().enumerate() {
                out.push(' ');
                out.push_str(cell);
                for _ in cell.chars().count()..widths[i] {
                    out.push(' ');
                }
                out.push_str(" |");
            }
            out.push('\n');
        };
        emit_row(&mut out, &header);
        out.push('|');
        for w in &widths {
            for _ in 0..w + 2 {
                out.push('-');
            }
            out.push('|');
        }
        out.push('\n');
        for row in &rows {
            emit_row(&mut out, row);
        }
        out
    }
}

/// `0.861 ± 0.001` renders as `86.1 ± 0.1`.
fn format_cell(mean: f64, std: f64) -> String {
    format!("{:.1} ± {:.1}", mean * 100.0, std * 100.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    LengthMismatch { scores: usize, labels: usize },
    SingleClass { positives: usize, negatives: usize },
    NoRepeats,
    DuplicateCell { classifier: String, ir: f64 },
    Data(DataError),
    Train(TrainError),
    Predict(PredictError),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch { scores, labels } => {
                write!(f, "{scores} scores for {labels} labels")
            }
            MetricsError::SingleClass { positives, negatives } => write!(
                f,
                "AUC needs both classes ({positives} positives, {negatives} negatives)"
            ),
            MetricsError::NoRepeats => write!(f, "evaluation needs at least one repeat"),
            MetricsError::DuplicateCell { classifier, ir } => {
                write!(f, "duplicate report cell for {classifier} at ir {ir}")
            }
            MetricsError::Data(e) => write!(f, "{e}"),
            MetricsError::Train(e) => write!(f, "{e}"),
            MetricsError::Predict(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MetricsError {}
