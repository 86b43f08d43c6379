//! In-memory datasets: a dense feature matrix with binary labels, plus the
//! resampling and splitting operations the evaluation pipeline is built on.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::SplitMix64;

/// Dense row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self, DataError> {
        if values.len() != n_rows * n_cols {
            return Err(DataError::ShapeMismatch {
                values: values.len(),
                n_rows,
                n_cols,
            });
        }
        Ok(FeatureMatrix { values, n_rows, n_cols })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// New matrix holding the given rows, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            values,
            n_rows: rows.len(),
            n_cols: self.n_cols,
        }
    }
}

/// Majority-to-minority sample count ratio (negatives / positives).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ImbalanceRatio(f64);

impl ImbalanceRatio {
    pub fn new(value: f64) -> Result<Self, DataError> {
        if !value.is_finite() || value <= 0.0 {
            return Err(DataError::BadImbalanceRatio { value });
        }
        Ok(ImbalanceRatio(value))
    }

    pub fn from_counts(negatives: usize, positives: usize) -> Result<Self, DataError> {
        if positives == 0 || negatives == 0 {
            return Err(DataError::SingleClass { positives, negatives });
        }
        Ok(ImbalanceRatio(negatives as f64 / positives as f64))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl fmt::Display for ImbalanceRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A labelled dataset. Labels are 1 for the positive (defaulter) class,
/// 0 for the negative class; positives are expected to be the minority.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    source_tag: String,
}

impl Dataset {
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        source_tag: String,
    ) -> Result<Self, DataError> {
        if labels.len() != features.n_rows() {
            return Err(DataError::LabelCountMismatch {
                labels: labels.len(),
                rows: features.n_rows(),
            });
        }
        if feature_names.len() != features.n_cols() {
            return Err(DataError::NameCountMismatch {
                names: feature_names.len(),
                cols: features.n_cols(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
            return Err(DataError::LabelNotBinary { value: bad });
        }
        for name in &feature_names {
            if name.contains('\n') || name.contains('\r') {
                return Err(DataError::BadFeatureName { name: name.clone() });
            }
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            source_tag,
        })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.labels.len() - self.positives()
    }

    /// Achieved imbalance ratio; errors when either class is empty.
    pub fn imbalance_ratio(&self) -> Result<ImbalanceRatio, DataError> {
        ImbalanceRatio::from_counts(self.negatives(), self.positives())
    }

    /// Dataset restricted to the given rows, preserving the order given.
    pub fn select_rows(&self, rows: &[usize], source_tag: String) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
            source_tag,
        }
    }
}

/// Undersample the positive class until the imbalance ratio reaches `target`.
///
/// All negative rows are retained; `floor(negatives / target)` positive rows
/// are kept, chosen uniformly by a splitmix64 stream seeded with `seed`.
/// Row order of the original dataset is preserved.
pub fn resample_to_ir(
    dataset: &Dataset,
    target: ImbalanceRatio,
    seed: u64,
) -> Result<Dataset, DataError> {
    let current = dataset.imbalance_ratio()?;
    if target.value() < current.value() - 1e-9 {
        return Err(DataError::TargetBelowCurrent {
            target: target.value(),
            current: current.value(),
        });
    }
    let negatives = dataset.negatives();
    let positives = dataset.positives();
    // The 1e-9 slack keeps "target equals current ratio" exact despite the
    // float division on the way in.
    let keep = libm::floor(negatives as f64 / target.value() + 1e-9) as usize;
    let keep = keep.min(positives);
    if keep == 0 {
        return Err(DataError::NoPositivesRetained { target: target.value() });
    }

    let mut pos_rows: Vec<usize> = (0..dataset.n_rows())
        .filter(|&r| dataset.labels()[r] == 1)
        .collect();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut pos_rows);
    pos_rows.truncate(keep);

    let mut rows: Vec<usize> = (0..dataset.n_rows())
        .filter(|&r| dataset.labels()[r] == 0)
        .chain(pos_rows)
        .collect();
    rows.sort_unstable();
    Ok(dataset.select_rows(&rows, dataset.source_tag().into()))
}

/// Class-stratified split into (train, test) parts.
///
/// Each class contributes `round(train_fraction * class_count)` rows to the
/// train part; membership is drawn from a splitmix64 stream seeded with
/// `seed`. Both parts preserve original row order.
pub fn stratified_split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::BadFraction { fraction: train_fraction });
    }
    let mut rng = SplitMix64::new(seed);
    let mut train_rows: Vec<usize> = Vec::new();
    let mut test_rows: Vec<usize> = Vec::new();
    for class in [1u8, 0u8] {
        let mut rows: Vec<usize> = (0..dataset.n_rows())
            .filter(|&r| dataset.labels()[r] == class)
            .collect();
        let n = rows.len();
        let n_train = libm::round(train_fraction * n as f64) as usize;
        if n_train == 0 || n_train == n {
            return Err(DataError::EmptySplitSide { class, count: n });
        }
        rng.shuffle(&mut rows);
        train_rows.extend_from_slice(&rows[..n_train]);
        test_rows.extend_from_slice(&rows[n_train..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    let tag = dataset.source_tag();
    Ok((
        dataset.select_rows(&train_rows, tag.into()),
        dataset.select_rows(&test_rows, tag.into()),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    ShapeMismatch { values: usize, n_rows: usize, n_cols: usize },
    LabelCountMismatch { labels: usize, rows: usize },
    NameCountMismatch { names: usize, cols: usize },
    LabelNotBinary { value: u8 },
    BadFeatureName { name: String },
    BadImbalanceRatio { value: f64 },
    SingleClass { positives: usize, negatives: usize },
    TargetBelowCurrent { target: f64, current: f64 },
    NoPositivesRetained { target: f64 },
    BadFraction { fraction: f64 },
    EmptySplitSide { class: u8, count: usize },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::ShapeMismatch { values, n_rows, n_cols } => write!(
                f,
                "matrix shape mismatch: {values} values for {n_rows}x{n_cols}"
            ),
            DataError::LabelCountMismatch { labels, rows } => {
                write!(f, "{labels} labels for {rows} rows")
            }
            DataError::NameCountMismatch { names, cols } => {
                write!(f, "{names} feature names for {cols} columns")
            }
            DataError::LabelNotBinary { value } => {
                write!(f, "labels must be 0 or 1, got {value}")
            }
            DataError::BadFeatureName { name } => {
                write!(f, "feature name contains a line break: {name:?}")
            }
            DataError::BadImbalanceRatio { value } => {
                write!(f, "imbalance ratio must be a positive finite number, got {value}")
            }
            DataError::SingleClass { positives, negatives } => write!(
                f,
                "both classes required: {positives} positives, {negatives} negatives"
            ),
            DataError::TargetBelowCurrent { target, current } => write!(
                f,
                "target ratio {target} below current {current}; undersampling the minority can only raise it"
            ),
            DataError::NoPositivesRetained { target } => {
                write!(f, "no positive rows would remain at target ratio {target}")
            }
            DataError::BadFraction { fraction } => {
                write!(f, "train fraction must be in (0, 1), got {fraction}")
            }
            DataError::EmptySplitSide { class, count } => write!(
                f,
                "class {class} ({count} rows) would leave an empty train or test side"
            ),
        }
    }
}

impl core::error::Error for DataError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    /// n_neg negatives followed by n_pos positives, single feature = row index.
    fn counts_dataset(n_neg: usize, n_pos: usize) -> Dataset {
        let n = n_neg + n_pos;
        let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n_neg)).collect();
        Dataset::new(
            FeatureMatrix::new(values, n, 1).unwrap(),
            labels,
            vec!["x".to_string()],
            "test".to_string(),
        )
        .unwrap()
    }

    #[test]
    fn imbalance_ratio_from_counts() {
        let ds = counts_dataset(3, 1);
        assert_eq!(ds.imbalance_ratio().unwrap().value(), 3.0);
    }

    #[test]
    fn resample_keeps_floor_of_negatives_over_target() {
        let ds = counts_dataset(1000, 100);
        let out = resample_to_ir(&ds, ImbalanceRatio::new(20.0).unwrap(), 7).unwrap();
        assert_eq!(out.negatives(), 1000);
        assert_eq!(out.positives(), 50);
        assert_eq!(out.imbalance_ratio().unwrap().value(), 20.0);
    }

    #[test]
    fn resample_at_current_ratio_changes_nothing() {
        let ds = counts_dataset(1000, 100);
        let ir = ds.imbalance_ratio().unwrap();
        let out = resample_to_ir(&ds, ir, 3).unwrap();
        assert_eq!(out.positives(), 100);
        assert_eq!(out.negatives(), 1000);
    }

    #[test]
    fn resample_gmc_scale_counts() {
        // 139974 negatives at target 300 keeps floor(139974/300) = 466.
        let ds = counts_dataset(139_974, 10_026);
        let out = resample_to_ir(&ds, ImbalanceRatio::new(300.0).unwrap(), 11).unwrap();
        assert_eq!(out.positives(), 466);
        assert_eq!(out.negatives(), 139_974);
    }

    #[test]
    fn resample_rejects_target_below_current() {
        let ds = counts_dataset(100, 10);
        let err = resample_to_ir(&ds, ImbalanceRatio::new(5.0).unwrap(), 1).unwrap_err();
        assert!(matches!(err, DataError::TargetBelowCurrent { .. }));
    }

    #[test]
    fn resample_never_touches_negative_rows() {
        let ds = counts_dataset(50, 10);
        let out = resample_to_ir(&ds, ImbalanceRatio::new(10.0).unwrap(), 5).unwrap();
        let neg_in: Vec<f64> = (0..50).map(|i| ds.features().get(i, 0)).collect();
        let neg_out: Vec<f64> = (0..out.n_rows())
            .filter(|&r| out.labels()[r] == 0)
            .map(|r| out.features().get(r, 0))
            .collect();
        assert_eq!(neg_in, neg_out);
    }

    #[test]
    fn resample_is_deterministic_per_seed() {
        let ds = counts_dataset(500, 60);
        let a = resample_to_ir(&ds, ImbalanceRatio::new(25.0).unwrap(), 42).unwrap();
        let b = resample_to_ir(&ds, ImbalanceRatio::new(25.0).unwrap(), 42).unwrap();
        let c = resample_to_ir(&ds, ImbalanceRatio::new(25.0).unwrap(), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn resample_achieved_within_one_positive_of_target() {
        let ds = counts_dataset(997, 200);
        for target in [5.0, 7.3, 19.7, 55.0, 120.0] {
            let out = resample_to_ir(&ds, ImbalanceRatio::new(target).unwrap(), 9).unwrap();
            let kept = out.positives() as f64;
            let achieved = out.negatives() as f64 / kept;
            assert!(
                (achieved - target).abs() <= target / kept + 1e-9,
                "target {target}: achieved {achieved} with {kept} kept"
            );
        }
    }

    #[test]
    fn split_is_exactly_stratified_at_even_fractions() {
        let ds = counts_dataset(100, 10);
        let (train, test) = stratified_split(&ds, 0.7, 1).unwrap();
        assert_eq!(train.positives(), 7);
        assert_eq!(train.negatives(), 70);
        assert_eq!(test.positives(), 3);
        assert_eq!(test.negatives(), 30);
    }

    #[test]
    fn split_partitions_the_row_set() {
        let ds = counts_dataset(40, 8);
        let (train, test) = stratified_split(&ds, 0.7, 123).unwrap();
        let mut seen: Vec<f64> = (0..train.n_rows())
            .map(|r| train.features().get(r, 0))
            .chain((0..test.n_rows()).map(|r| test.features().get(r, 0)))
            .collect();
        seen.sort_by(f64::total_cmp);
        let all: Vec<f64> = (0..48).map(|i| i as f64).collect();
        assert_eq!(seen, all);
    }

    #[test]
    fn split_deterministic_per_seed() {
        let ds = counts_dataset(60, 12);
        let (a_train, a_test) = stratified_split(&ds, 0.7, 5).unwrap();
        let (b_train, b_test) = stratified_split(&ds, 0.7, 5).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
    }

    #[test]
    fn tiny_split_keeps_both_classes_on_both_sides() {
        let ds = counts_dataset(3, 3);
        for seed in 0..20 {
            let (train, test) = stratified_split(&ds, 0.5, seed).unwrap();
            assert!(train.positives() >= 1 && train.negatives() >= 1, "seed {seed}");
            assert!(test.positives() >= 1 && test.negatives() >= 1, "seed {seed}");
        }
    }

    #[test]
    fn split_rejects_class_that_would_empty_a_side() {
        let ds = counts_dataset(10, 1);
        assert!(matches!(
            stratified_split(&ds, 0.7, 0),
            Err(DataError::EmptySplitSide { .. })
        ));
    }

    #[test]
    fn labels_must_be_binary() {
        let m = FeatureMatrix::new(vec![0.0, 1.0], 2, 1).unwrap();
        let err = Dataset::new(
            m,
            vec![0, 2],
            vec!["x".to_string()],
            "t".to_string(),
        )
        .unwrap_err();
        assert!(matches!(err, DataError::LabelNotBinary { value: 2 }));
    }
}
