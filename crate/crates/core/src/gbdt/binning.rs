//! Quantile binning of feature columns for histogram split search.

use alloc::vec::Vec;

use crate::dataset::FeatureMatrix;

/// Per-feature sorted cut points. A value `v` falls in bin
/// `#{edges < v}`; bin `b` therefore covers `(edge[b-1], edge[b]]`.
/// Missing values (NaN) map to a dedicated bin one past the last
/// regular bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEdges {
    per_feature: Vec<Vec<f64>>,
}

impl BinEdges {
    /// Quantile boundaries over the observed (non-NaN) values of each
    /// column: at most `max_bins - 1` edges, placed midway between the
    /// distinct values that straddle each quantile cut.
    pub fn build(features: &FeatureMatrix, max_bins: usize) -> BinEdges {
        let per_feature = (0..features.n_cols())
            .map(|c| {
                let mut vals: Vec<f64> = (0..features.n_rows())
                    .map(|r| features.get(r, c))
                    .filter(|v| !v.is_nan())
                    .collect();
                vals.sort_unstable_by(f64::total_cmp);
                column_edges(&vals, max_bins)
            })
            .collect();
        BinEdges { per_feature }
    }

    pub fn from_raw(per_feature: Vec<Vec<f64>>) -> BinEdges {
        BinEdges { per_feature }
    }

    pub fn n_features(&self) -> usize {
        self.per_feature.len()
    }

    pub fn edges(&self, feature: usize) -> &[f64] {
        &self.per_feature[feature]
    }

    /// Number of non-missing bins (edge count + 1).
    pub fn regular_bins(&self, feature: usize) -> usize {
        self.per_feature[feature].len() + 1
    }

    /// Index of the reserved missing-value bin.
    pub fn missing_bin(&self, feature: usize) -> u16 {
        self.regular_bins(feature) as u16
    }

    pub fn bin_value(&self, feature: usize, v: f64) -> u16 {
        if v.is_nan() {
            return self.missing_bin(feature);
        }
        self.per_feature[feature].partition_point(|&e| e < v) as u16
    }
}

fn column_edges(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    // Distinct runs with cumulative counts; an edge goes between two
    // adjacent distinct values whenever a quantile threshold falls inside
    // the earlier run. Thresholds are b*n/max_bins for b = 1..max_bins-1,
    // so at most max_bins-1 edges come out, all distinct.
    let mut edges = Vec::new();
    let mut next_threshold = 1usize;
    let mut cum = 0usize;
    let mut i = 0usize;
    while i < n {
        let v = sorted[i];
        let mut j = i + 1;
        while j < n && sorted[j] == v {
            j += 1;
        }
        cum += j - i;
        // cum >= b*n/max_bins, kept in integers for exactness.
        let crossed = |b: usize| (cum * max_bins) as u64 >= (b * n) as u64;
        if j < n && next_threshold < max_bins && crossed(next_threshold) {
            edges.push(midpoint(v, sorted[j]));
            while next_threshold < max_bins && crossed(next_threshold) {
                next_threshold += 1;
            }
        }
        i = j;
    }
    edges
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    // Guard against a midpoint rounding onto a boundary value; the bin rule
    // is "value <= edge goes left", so an edge equal to `b` would merge the
    // two runs.
    if m >= b {
        a
    } else {
        m
    }
}

/// Column-major binned copy of a feature matrix.
#[derive(Debug)]
pub struct BinnedData {
    cols: Vec<Vec<u16>>,
    n_rows: usize,
}

impl BinnedData {
    pub fn new(edges: &BinEdges, features: &FeatureMatrix) -> BinnedData {
        let n_rows = features.n_rows();
        let cols = (0..features.n_cols())
            .map(|c| {
                (0..n_rows)
                    .map(|r| edges.bin_value(c, features.get(r, c)))
                    .collect()
            })
            .collect();
        BinnedData { cols, n_rows }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, feature: usize) -> &[u16] {
        &self.cols[feature]
    }
}
