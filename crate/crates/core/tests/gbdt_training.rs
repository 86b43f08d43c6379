//! End-to-end checks of the histogram trainer: learning power on separable
//! data, determinism, degenerate inputs, the model document round-trip, and
//! the per-round loss curve.

use asigboost_core::activation::AsigParams;
use asigboost_core::dataset::{Dataset, FeatureMatrix, ImbalanceRatio};
use asigboost_core::gbdt::{self, BoostConfig, BoostedModel, Node, TrainError};
use asigboost_core::loss::LossSpec;
use asigboost_core::metrics::auc;
use asigboost_core::rng::SplitMix64;

fn dataset(values: Vec<f64>, n_cols: usize, labels: Vec<u8>) -> Dataset {
    let n = labels.len();
    let names = (0..n_cols).map(|c| format!("f{c}")).collect();
    Dataset::new(
        FeatureMatrix::new(values, n, n_cols).unwrap(),
        labels,
        names,
        "test".to_string(),
    )
    .unwrap()
}

/// 1-D separable data: positives at x > 0, negatives at x < 0.
fn separable(n_per_class: usize) -> Dataset {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rng = SplitMix64::new(404);
    for i in 0..2 * n_per_class {
        let pos = i % 2 == 0;
        let x = rng.next_f64() * 3.0 + 0.25;
        values.push(if pos { x } else { -x });
        labels.push(u8::from(pos));
    }
    dataset(values, 1, labels)
}

/// Two overlapping Gaussian bumps in 3 features.
fn overlapping(n_neg: usize, n_pos: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let mut gauss = move || {
        let u1 = rng.next_f64().max(1e-12);
        let u2 = rng.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n_neg + n_pos {
        let pos = i >= n_neg;
        let shift = if pos { 0.9 } else { 0.0 };
        for _ in 0..3 {
            values.push(gauss() + shift);
        }
        labels.push(u8::from(pos));
    }
    dataset(values, 3, labels)
}

fn quick_config(rounds: usize) -> BoostConfig {
    BoostConfig {
        num_rounds: rounds,
        min_samples_leaf: 5,
        ..BoostConfig::default()
    }
}

#[test]
fn separable_data_reaches_training_auc_one() {
    let ds = separable(60);
    let model = gbdt::train(&ds, &quick_config(5), &LossSpec::cross_entropy()).unwrap();
    assert!(!model.trees().is_empty());
    let scores = model.predict_raw(ds.features()).unwrap();
    assert_eq!(auc(&scores, ds.labels()).unwrap(), 1.0);
}

#[test]
fn training_is_deterministic() {
    let ds = overlapping(400, 40, 1);
    let spec = LossSpec::focal(2.0, 0.25).unwrap();
    let a = gbdt::train(&ds, &quick_config(20), &spec).unwrap();
    let b = gbdt::train(&ds, &quick_config(20), &spec).unwrap();
    assert_eq!(a.to_text(), b.to_text());
}

#[test]
fn constant_features_yield_base_score_only() {
    let ds = dataset(vec![3.0; 40], 1, (0..40).map(|i| u8::from(i % 4 == 0)).collect());
    let model = gbdt::train(&ds, &quick_config(10), &LossSpec::cross_entropy()).unwrap();
    assert!(model.trees().is_empty());
    let scores = model.predict_raw(ds.features()).unwrap();
    assert!(scores.iter().all(|&z| z == model.base_score()));
}

#[test]
fn training_loss_never_increases_across_rounds() {
    let ds = overlapping(300, 30, 2);
    let specs = [
        LossSpec::cross_entropy(),
        LossSpec::focal(2.0, 0.25).unwrap(),
        LossSpec::asig_focal(
            2.0,
            0.25,
            AsigParams::new(0.24, 0.92).unwrap(),
            ds.imbalance_ratio().unwrap(),
        )
        .unwrap(),
    ];
    for spec in &specs {
        let model = gbdt::train(&ds, &quick_config(40), spec).unwrap();
        let mut scores = vec![model.base_score(); ds.n_rows()];
        let mut prev = gbdt::total_loss(spec, &scores, ds.labels()).unwrap();
        for tree in model.trees() {
            for (r, z) in scores.iter_mut().enumerate() {
                *z += tree.predict_row(model.bin_edges(), ds.features().row(r));
            }
            let cur = gbdt::total_loss(spec, &scores, ds.labels()).unwrap();
            assert!(
                cur <= prev + 1e-12,
                "loss rose from {prev} to {cur} under {:?}",
                spec.kind()
            );
            prev = cur;
        }
    }
}

#[test]
fn every_leaf_holds_min_samples() {
    let ds = overlapping(500, 50, 3);
    let config = BoostConfig { num_rounds: 15, min_samples_leaf: 25, ..BoostConfig::default() };
    let model = gbdt::train(&ds, &config, &LossSpec::cross_entropy()).unwrap();
    for tree in model.trees() {
        let mut counts = vec![0usize; tree.nodes.len()];
        for r in 0..ds.n_rows() {
            let row = ds.features().row(r);
            let mut idx = 0usize;
            loop {
                match &tree.nodes[idx] {
                    Node::Leaf { .. } => {
                        counts[idx] += 1;
                        break;
                    }
                    Node::Split { feature, threshold, left, right } => {
                        let f = *feature as usize;
                        let bin = model.bin_edges().bin_value(f, row[f]);
                        idx = if bin <= *threshold { *left } else { *right } as usize;
                    }
                }
            }
        }
        for (idx, node) in tree.nodes.iter().enumerate() {
            if matches!(node, Node::Leaf { .. }) {
                assert!(
                    counts[idx] >= config.min_samples_leaf,
                    "leaf {idx} holds {} rows",
                    counts[idx]
                );
            }
        }
    }
}

#[test]
fn predictions_invariant_to_row_order() {
    let ds = overlapping(200, 20, 4);
    let model = gbdt::train(&ds, &quick_config(10), &LossSpec::cross_entropy()).unwrap();
    let scores = model.predict_raw(ds.features()).unwrap();

    let mut perm: Vec<usize> = (0..ds.n_rows()).collect();
    SplitMix64::new(8).shuffle(&mut perm);
    let permuted = ds.features().select_rows(&perm);
    let permuted_scores = model.predict_raw(&permuted).unwrap();
    for (new_row, &old_row) in perm.iter().enumerate() {
        assert_eq!(scores[old_row], permuted_scores[new_row]);
    }
}

#[test]
fn proba_is_activation_of_raw_and_preserves_auc() {
    let ds = overlapping(300, 40, 5);
    let spec = LossSpec::asig_focal(
        2.0,
        0.25,
        AsigParams::new(0.24, 0.92).unwrap(),
        ds.imbalance_ratio().unwrap(),
    )
    .unwrap();
    let model = gbdt::train(&ds, &quick_config(20), &spec).unwrap();
    let raw = model.predict_raw(ds.features()).unwrap();
    let proba = model.predict_proba(ds.features()).unwrap();
    let g = spec.shift().unwrap();
    for (z, p) in raw.iter().zip(&proba) {
        assert_eq!(*p, asigboost_core::activation::asig(*z, g));
    }
    assert_eq!(
        auc(&raw, ds.labels()).unwrap(),
        auc(&proba, ds.labels()).unwrap()
    );
    // A raw score right at the shift maps to probability one half.
    assert_eq!(asigboost_core::activation::asig(g, g), 0.5);
}

#[test]
fn serialization_round_trip_is_exact() {
    let ds = overlapping(400, 50, 6);
    let spec = LossSpec::asig_focal(
        2.0,
        0.25,
        AsigParams::new(0.24, 0.92).unwrap(),
        ds.imbalance_ratio().unwrap(),
    )
    .unwrap();
    let model = gbdt::train(&ds, &quick_config(50), &spec).unwrap();
    let text = model.to_text();
    let restored = BoostedModel::from_text(&text).unwrap();
    assert_eq!(restored.to_text(), text);

    let a = model.predict_raw(ds.features()).unwrap();
    let b = restored.predict_raw(ds.features()).unwrap();
    let max_delta = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    assert_eq!(max_delta, 0.0);
}

#[test]
fn hand_written_single_leaf_document_predicts_the_constant() {
    let doc = "asigboost model v1\n\
               loss ce\n\
               focal_gamma 0\n\
               focal_alpha 0.5\n\
               base_score 0\n\
               features 1\n\
               feature 0 x\n\
               bins 0 0\n\
               trees 1\n\
               tree 0 nodes 1\n\
               node 0 leaf 0.75\n\
               end\n";
    let model = BoostedModel::from_text(doc).unwrap();
    let m = FeatureMatrix::new(vec![1.0, -4.0, 9.9], 3, 1).unwrap();
    assert_eq!(model.predict_raw(&m).unwrap(), vec![0.75, 0.75, 0.75]);
    assert_eq!(model.to_text(), doc);
}

#[test]
fn malformed_documents_rejected() {
    assert!(matches!(
        BoostedModel::from_text("other format v9\n"),
        Err(gbdt::ModelParseError::VersionMismatch { .. })
    ));
    let doc = "asigboost model v1\nloss ce\nfocal_gamma 0\nfocal_alpha 0.5\nbase_score 0\n";
    assert!(BoostedModel::from_text(doc).is_err());
    // Child index pointing at itself.
    let doc = "asigboost model v1\nloss ce\nfocal_gamma 0\nfocal_alpha 0.5\nbase_score 0\n\
               features 1\nfeature 0 x\nbins 0 0\ntrees 1\ntree 0 nodes 3\n\
               node 0 split 0 0 0 2\nnode 1 leaf 0\nnode 2 leaf 0\nend\n";
    assert!(BoostedModel::from_text(doc).is_err());
}

#[test]
fn asig_spec_must_match_training_imbalance() {
    let ds = overlapping(300, 30, 7); // achieved IR 10
    let spec = LossSpec::asig_focal(
        2.0,
        0.25,
        AsigParams::new(0.24, 0.92).unwrap(),
        ImbalanceRatio::new(20.0).unwrap(),
    )
    .unwrap();
    assert!(matches!(
        gbdt::train(&ds, &quick_config(5), &spec),
        Err(TrainError::IrMismatch { .. })
    ));
}

#[test]
fn single_class_and_non_finite_inputs_rejected() {
    let ds = dataset(vec![0.0, 1.0, 2.0], 1, vec![1, 1, 1]);
    assert!(matches!(
        gbdt::train(&ds, &quick_config(1), &LossSpec::cross_entropy()),
        Err(TrainError::SingleClass { .. })
    ));
    let ds = dataset(vec![0.0, f64::NAN, 2.0, 3.0], 1, vec![0, 1, 0, 1]);
    assert!(matches!(
        gbdt::train(&ds, &quick_config(1), &LossSpec::cross_entropy()),
        Err(TrainError::NonFiniteFeature { row: 1, col: 0 })
    ));
}

#[test]
fn predict_rejects_wrong_width() {
    let ds = separable(30);
    let model = gbdt::train(&ds, &quick_config(2), &LossSpec::cross_entropy()).unwrap();
    let wide = FeatureMatrix::new(vec![0.0; 6], 3, 2).unwrap();
    assert!(model.predict_raw(&wide).is_err());
}
