//! Versioned line-oriented model document.
//!
//! Keys appear in a fixed order and floats are written in shortest
//! round-trip form, so equal models serialize to byte-identical documents
//! and `to_text . from_text` is the identity on documents we emit.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::binning::BinEdges;
use super::{BoostedModel, Node, Tree};
use crate::activation::AsigParams;
use crate::dataset::ImbalanceRatio;
use crate::loss::{LossKind, LossSpec};

const HEADER: &str = "asigboost model v1";

pub(super) fn to_text(model: &BoostedModel) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let spec = model.loss_spec();
    out.push_str(&format!("loss {}\n", spec.kind().name()));
    out.push_str(&format!("focal_gamma {}\n", spec.focal_gamma()));
    out.push_str(&format!("focal_alpha {}\n", spec.focal_alpha()));
    if spec.kind() == LossKind::AsigFocal {
        let asig = spec.asig().expect("asig spec has parameters");
        let ir = spec.ir().expect("asig spec has an ir");
        let g = spec.shift().expect("asig spec has a shift");
        out.push_str(&format!("asig_alpha {}\n", asig.asig_alpha()));
        out.push_str(&format!("asig_beta {}\n", asig.asig_beta()));
        out.push_str(&format!("ir {}\n", ir.value()));
        out.push_str(&format!("g {g}\n"));
    }
    out.push_str(&format!("base_score {}\n", model.base_score()));
    out.push_str(&format!("features {}\n", model.feature_names().len()));
    for (i, name) in model.feature_names().iter().enumerate() {
        out.push_str(&format!("feature {i} {name}\n"));
    }
    for f in 0..model.bin_edges().n_features() {
        let edges = model.bin_edges().edges(f);
        out.push_str(&format!("bins {f} {}", edges.len()));
        for e in edges {
            out.push_str(&format!(" {e}"));
        }
        out.push('\n');
    }
    out.push_str(&format!("trees {}\n", model.trees().len()));
    for (t, tree) in model.trees().iter().enumerate() {
        out.push_str(&format!("tree {t} nodes {}\n", tree.nodes.len()));
        for (i, node) in tree.nodes.iter().enumerate() {
            match node {
                Node::Split { feature, threshold, left, right } => {
                    out.push_str(&format!("node {i} split {feature} {threshold} {left} {right}\n"));
                }
                Node::Leaf { value } => {
                    out.push_str(&format!("node {i} leaf {value}\n"));
                }
            }
        }
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    iter: core::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, ModelParseError> {
        self.line_no += 1;
        self.iter.next().ok_or(ModelParseError::UnexpectedEnd)
    }

    fn bad(&self, what: &'static str) -> ModelParseError {
        ModelParseError::Malformed { line: self.line_no, what }
    }
}

fn strip_key<'a>(
    lines: &Lines<'_>,
    line: &'a str,
    key: &'static str,
) -> Result<&'a str, ModelParseError> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| lines.bad(key))
}

fn parse_f64(lines: &Lines<'_>, s: &str, what: &'static str) -> Result<f64, ModelParseError> {
    s.parse::<f64>().map_err(|_| lines.bad(what))
}

fn parse_usize(lines: &Lines<'_>, s: &str, what: &'static str) -> Result<usize, ModelParseError> {
    s.parse::<usize>().map_err(|_| lines.bad(what))
}

pub(super) fn from_text(doc: &str) -> Result<BoostedModel, ModelParseError> {
    let mut lines = Lines { iter: doc.lines(), line_no: 0 };

    let header = lines.next()?;
    if header != HEADER {
        return Err(ModelParseError::VersionMismatch { found: header.to_string() });
    }

    let line = lines.next()?;
    let kind = match strip_key(&lines, line, "loss")? {
        "ce" => LossKind::CrossEntropy,
        "focal" => LossKind::Focal,
        "asig_focal" => LossKind::AsigFocal,
        _ => return Err(lines.bad("loss kind")),
    };
    let line = lines.next()?;
    let focal_gamma = parse_f64(&lines, strip_key(&lines, line, "focal_gamma")?, "focal_gamma")?;
    let line = lines.next()?;
    let focal_alpha = parse_f64(&lines, strip_key(&lines, line, "focal_alpha")?, "focal_alpha")?;

    let spec = match kind {
        LossKind::CrossEntropy => {
            let spec = LossSpec::cross_entropy();
            if focal_gamma != spec.focal_gamma() || focal_alpha != spec.focal_alpha() {
                return Err(lines.bad("cross-entropy hyperparameters"));
            }
            spec
        }
        LossKind::Focal => LossSpec::focal(focal_gamma, focal_alpha)
            .map_err(|_| lines.bad("focal hyperparameters"))?,
        LossKind::AsigFocal => {
            let line = lines.next()?;
            let a = parse_f64(&lines, strip_key(&lines, line, "asig_alpha")?, "asig_alpha")?;
            let line = lines.next()?;
            let b = parse_f64(&lines, strip_key(&lines, line, "asig_beta")?, "asig_beta")?;
            let line = lines.next()?;
            let ir = parse_f64(&lines, strip_key(&lines, line, "ir")?, "ir")?;
            let line = lines.next()?;
            let g = parse_f64(&lines, strip_key(&lines, line, "g")?, "g")?;
            let params =
                AsigParams::new_unchecked(a, b).map_err(|_| lines.bad("shift parameters"))?;
            let ir = ImbalanceRatio::new(ir).map_err(|_| lines.bad("ir"))?;
            let spec = LossSpec::asig_focal(focal_gamma, focal_alpha, params, ir)
                .map_err(|_| lines.bad("shifted-loss hyperparameters"))?;
            let expect_g = spec.shift().map_err(|_| lines.bad("g"))?;
            if (expect_g - g).abs() > 1e-9 {
                return Err(lines.bad("g inconsistent with asig_alpha/asig_beta/ir"));
            }
            spec
        }
    };

    let line = lines.next()?;
    let base_score = parse_f64(&lines, strip_key(&lines, line, "base_score")?, "base_score")?;
    if !base_score.is_finite() {
        return Err(lines.bad("base_score"));
    }

    let line = lines.next()?;
    let n_features = parse_usize(&lines, strip_key(&lines, line, "features")?, "features")?;
    let mut feature_names = Vec::with_capacity(n_features);
    for i in 0..n_features {
        let line = lines.next()?;
        let rest = strip_key(&lines, line, "feature")?;
        let (idx, name) = match rest.split_once(' ') {
            Some((idx, name)) => (idx, name),
            None => (rest, ""),
        };
        if parse_usize(&lines, idx, "feature index")? != i {
            return Err(lines.bad("feature index order"));
        }
        feature_names.push(name.to_string());
    }

    let mut per_feature = Vec::with_capacity(n_features);
    for f in 0..n_features {
        let line = lines.next()?;
        let rest = strip_key(&lines, line, "bins")?;
        let mut parts = rest.split(' ');
        let idx = parse_usize(&lines, parts.next().ok_or_else(|| lines.bad("bins"))?, "bins index")?;
        if idx != f {
            return Err(lines.bad("bins index order"));
        }
        let count =
            parse_usize(&lines, parts.next().ok_or_else(|| lines.bad("bins"))?, "bins count")?;
        let edges: Vec<f64> = parts
            .map(|p| parse_f64(&lines, p, "bin edge"))
            .collect::<Result<_, _>>()?;
        if edges.len() != count {
            return Err(lines.bad("bin edge count"));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(lines.bad("bin edges must be finite and strictly increasing"));
        }
        per_feature.push(edges);
    }

    let line = lines.next()?;
    let n_trees = parse_usize(&lines, strip_key(&lines, line, "trees")?, "trees")?;
    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let line = lines.next()?;
        let rest = strip_key(&lines, line, "tree")?;
        let mut parts = rest.split(' ');
        let idx = parse_usize(&lines, parts.next().ok_or_else(|| lines.bad("tree"))?, "tree index")?;
        if idx != t {
            return Err(lines.bad("tree index order"));
        }
        if parts.next() != Some("nodes") {
            return Err(lines.bad("tree header"));
        }
        let n_nodes =
            parse_usize(&lines, parts.next().ok_or_else(|| lines.bad("tree"))?, "node count")?;
        if n_nodes == 0 {
            return Err(lines.bad("tree must have at least one node"));
        }
        let mut nodes = Vec::with_capacity(n_nodes);
        let mut referenced = alloc::vec![0u8; n_nodes];
        for i in 0..n_nodes {
            let line = lines.next()?;
            let rest = strip_key(&lines, line, "node")?;
            let mut parts = rest.split(' ');
            let idx =
                parse_usize(&lines, parts.next().ok_or_else(|| lines.bad("node"))?, "node index")?;
            if idx != i {
                return Err(lines.bad("node index order"));
            }
            match parts.next() {
                Some("split") => {
                    let feature = parse_usize(
                        &lines,
                        parts.next().ok_or_else(|| lines.bad("node"))?,
                        "split feature",
                    )?;
                    let threshold = parse_usize(
                        &lines,
                        parts.next().ok_or_else(|| lines.bad("node"))?,
                        "split threshold",
                    )?;
                    let left = parse_usize(
                        &lines,
                        parts.next().ok_or_else(|| lines.bad("node"))?,
                        "left child",
                    )?;
                    let right = parse_usize(
                        &lines,
                        parts.next().ok_or_else(|| lines.bad("node"))?,
                        "right child",
                    )?;
                    if feature >= n_features {
                        return Err(lines.bad("split feature out of range"));
                    }
                    if threshold > u16::MAX as usize {
                        return Err(lines.bad("split threshold out of range"));
                    }
                    // Pre-order: children always come after their parent.
                    if left <= i || right <= i || left >= n_nodes || right >= n_nodes || left == right
                    {
                        return Err(lines.bad("child indices"));
                    }
                    referenced[left] += 1;
                    referenced[right] += 1;
                    nodes.push(Node::Split {
                        feature: feature as u32,
                        threshold: threshold as u16,
                        left: left as u32,
                        right: right as u32,
                    });
                }
                Some("leaf") => {
                    let value = parse_f64(
                        &lines,
                        parts.next().ok_or_else(|| lines.bad("node"))?,
                        "leaf value",
                    )?;
                    if !value.is_finite() {
                        return Err(lines.bad("leaf value"));
                    }
                    nodes.push(Node::Leaf { value });
                }
                _ => return Err(lines.bad("node kind")),
            }
            if parts.next().is_some() {
                return Err(lines.bad("trailing fields on node line"));
            }
        }
        if referenced[0] != 0 || referenced[1..].iter().any(|&c| c != 1) {
            return Err(lines.bad("nodes must form a single tree"));
        }
        trees.push(Tree { nodes });
    }

    let line = lines.next()?;
    if line != "end" {
        return Err(lines.bad("end marker"));
    }
    if lines.iter.next().is_some() {
        return Err(ModelParseError::TrailingContent);
    }

    Ok(BoostedModel::from_parts(
        base_score,
        trees,
        BinEdges::from_raw(per_feature),
        spec,
        feature_names,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelParseError {
    VersionMismatch { found: String },
    UnexpectedEnd,
    TrailingContent,
    Malformed { line: usize, what: &'static str },
}

impl fmt::Display for ModelParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelParseError::VersionMismatch { found } => {
                write!(f, "unsupported model document header: {found:?} (expected {HEADER:?})")
            }
            ModelParseError::UnexpectedEnd => write!(f, "model document ended early"),
            ModelParseError::TrailingContent => write!(f, "content after end marker"),
            ModelParseError::Malformed { line, what } => {
                write!(f, "malformed model document at line {line}: {what}")
            }
        }
    }
}

impl core::error::Error for ModelParseError {}
