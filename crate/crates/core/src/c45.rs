//! C4.5-style decision trees: gain-ratio induction and pessimistic
//! subtree-replacement pruning.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adtree::midpoint;
use crate::data::{AttributeKind, Cell, Dataset, Instance, Label, Schema};
use crate::error::ModelError;
use crate::stats::ln_gamma;

const GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C45Config {
    /// Minimum instances on at least two branches of any split.
    pub min_leaf: usize,
    /// Pruning confidence factor in (0, 1].
    pub confidence: f64,
    /// Only split on candidates whose gain reaches the mean positive gain.
    pub use_average_gain_gate: bool,
    pub prune: bool,
}

impl Default for C45Config {
    fn default() -> Self {
        C45Config {
            min_leaf: 2,
            confidence: 0.25,
            use_average_gain_gate: true,
            prune: true,
        }
    }
}

impl C45Config {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.min_leaf < 1 {
            return Err(ModelError::InvalidConfig("min_leaf must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(ModelError::InvalidConfig(format!(
                "confidence must be in (0, 1], got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Class counts as `[positive, negative]`.
pub type Counts = [usize; 2];

fn majority(counts: &Counts) -> Label {
    if counts[0] >= counts[1] {
        Label::Positive
    } else {
        Label::Negative
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub category: usize,
    pub label: String,
    pub node: C45Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum C45Node {
    Leaf {
        label: Label,
        counts: Counts,
    },
    Numeric {
        attribute: String,
        index: usize,
        threshold: f64,
        counts: Counts,
        /// Values `<= threshold`.
        below: Box<C45Node>,
        above: Box<C45Node>,
    },
    Nominal {
        attribute: String,
        index: usize,
        counts: Counts,
        branches: Vec<Branch>,
    },
}

impl C45Node {
    pub fn counts(&self) -> Counts {
        match self {
            C45Node::Leaf { counts, .. }
            | C45Node::Numeric { counts, .. }
            | C45Node::Nominal { counts, .. } => *counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, C45Node::Leaf { .. })
    }

    fn leaf(counts: Counts) -> C45Node {
        C45Node::Leaf { label: majority(&counts), counts }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            C45Node::Leaf { .. } => 1,
            C45Node::Numeric { below, above, .. } => below.leaf_count() + above.leaf_count(),
            C45Node::Nominal { branches, .. } => branches.iter().map(|b| b.node.leaf_count()).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            C45Node::Leaf { .. } => 0,
            C45Node::Numeric { below, above, .. } => 1 + below.depth().max(above.depth()),
            C45Node::Nominal { branches, .. } => {
                1 + branches.iter().map(|b| b.node.depth()).max().unwrap_or(0)
            }
        }
    }

    /// All leaves, left to right.
    pub fn leaves(&self) -> Vec<&C45Node> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a C45Node>) {
        match self {
            C45Node::Leaf { .. } => out.push(self),
            C45Node::Numeric { below, above, .. } => {
                below.collect_leaves(out);
                above.collect_leaves(out);
            }
            C45Node::Nominal { branches, .. } => {
                for b in branches {
                    b.node.collect_leaves(out);
                }
            }
        }
    }

    /// Leaf reached by `inst`. Unseen nominal categories follow the
    /// branch with the most training instances.
    pub fn route(&self, inst: &Instance) -> Result<&C45Node, ModelError> {
        let mut node = self;
        loop {
            node = match node {
                C45Node::Leaf { .. } => return Ok(node),
                C45Node::Numeric { attribute, index, threshold, below, above, .. } => {
                    match cell(inst, *index, attribute)? {
                        Cell::Numeric(v) if v <= *threshold => below,
                        Cell::Numeric(_) => above,
                        _ => return Err(kind_mismatch(attribute)),
                    }
                }
                C45Node::Nominal { attribute, index, branches, .. } => {
                    let c = match cell(inst, *index, attribute)? {
                        Cell::Category(c) => c,
                        _ => return Err(kind_mismatch(attribute)),
                    };
                    match branches.iter().find(|b| b.category == c) {
                        Some(b) => &b.node,
                        None => {
                            let mut best = &branches[0];
                            for b in &branches[1..] {
                                if total(&b.node.counts()) > total(&best.node.counts()) {
                                    best = b;
                                }
                            }
                            &best.node
                        }
                    }
                }
            };
        }
    }
}

fn cell(inst: &Instance, index: usize, attribute: &str) -> Result<Cell, ModelError> {
    match inst.cells.get(index) {
        None => Err(ModelError::SchemaMismatch(format!("no column for '{}'", attribute))),
        Some(Cell::Missing) => Err(ModelError::MissingCell(attribute.to_string())),
        Some(c) => Ok(*c),
    }
}

fn kind_mismatch(attribute: &str) -> ModelError {
    ModelError::SchemaMismatch(format!("cell kind does not match split on '{}'", attribute))
}

fn total(c: &Counts) -> usize {
    c[0] + c[1]
}

/// Candidate partition of a node's rows.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitTest {
    Threshold { index: usize, threshold: f64 },
    Nominal { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRatio {
    pub info_gain: f64,
    pub split_info: f64,
    pub ratio: f64,
}

fn entropy(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    if n <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.log2()
        })
        .sum()
}

/// Gain ratio of a partition given per-cell class counts. Every cell must
/// be non-empty and there must be at least two.
pub fn gain_ratio_from_counts(cells: &[Counts]) -> Result<GainRatio, ModelError> {
    if cells.len() < 2 {
        return Err(ModelError::DegenerateSplit("fewer than two cells".into()));
    }
    if cells.iter().any(|c| total(c) == 0) {
        return Err(ModelError::DegenerateSplit("empty cell".into()));
    }
    let parent = cells.iter().fold([0.0, 0.0], |acc, c| [acc[0] + c[0] as f64, acc[1] + c[1] as f64]);
    let n = parent[0] + parent[1];
    let mut conditional = 0.0;
    let mut split_info = 0.0;
    for c in cells {
        let size = total(c) as f64;
        let frac = size / n;
        conditional += frac * entropy(&[c[0] as f64, c[1] as f64]);
        split_info -= frac * frac.log2();
    }
    let info_gain = entropy(&parent) - conditional;
    Ok(GainRatio {
        info_gain,
        split_info,
        ratio: info_gain / split_info,
    })
}

fn partition(ds: &Dataset, rows: &[usize], test: &SplitTest) -> Vec<(Option<usize>, Vec<usize>)> {
    match *test {
        SplitTest::Threshold { index, threshold } => {
            let (below, above): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| {
                ds.instances()[r].cells[index].as_numeric().is_some_and(|v| v <= threshold)
            });
            vec![(None, below), (None, above)]
        }
        SplitTest::Nominal { index } => {
            let k = ds.schema().attribute(index).categories.len();
            let mut cells = vec![Vec::new(); k];
            for &r in rows {
                if let Some(c) = ds.instances()[r].cells[index].as_category() {
                    cells[c].push(r);
                }
            }
            cells
                .into_iter()
                .enumerate()
                .filter(|(_, v)| !v.is_empty())
                .map(|(c, v)| (Some(c), v))
                .collect()
        }
    }
}

fn class_counts(labels: &[Label], rows: &[usize]) -> Counts {
    rows.iter().fold([0, 0], |mut acc, &r| {
        acc[labels[r].category()] += 1;
        acc
    })
}

/// Gain ratio of `test` over `rows`. For nominal tests only the observed
/// categories form cells.
pub fn gain_ratio(ds: &Dataset, rows: &[usize], test: &SplitTest) -> Result<GainRatio, ModelError> {
    if rows.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let labels = ds.labels()?;
    let cells: Vec<Counts> = partition(ds, rows, test)
        .iter()
        .map(|(_, r)| class_counts(&labels, r))
        .collect();
    gain_ratio_from_counts(&cells)
}

/// Upper confidence limit on the error rate of a leaf with `errors`
/// mistakes out of `n`: the `p` with `P(Binomial(n, p) <= errors) = cf`.
pub fn upper_error_bound(errors: usize, n: usize, cf: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if errors >= n {
        return 1.0;
    }
    if errors == 0 {
        return 1.0 - cf.powf(1.0 / n as f64);
    }
    let (mut lo, mut hi) = (errors as f64 / n as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binomial_cdf(errors, n, mid) > cf {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn binomial_cdf(k: usize, n: usize, p: f64) -> f64 {
    let nf = n as f64;
    let ln_n_fact = ln_gamma(nf + 1.0);
    (0..=k)
        .map(|i| {
            let i_f = i as f64;
            (ln_n_fact - ln_gamma(i_f + 1.0) - ln_gamma(nf - i_f + 1.0)
                + i_f * p.ln()
                + (nf - i_f) * (-p).ln_1p())
            .exp()
        })
        .sum::<f64>()
        .min(1.0)
}

/// Pessimistic error count `n * U_cf(e, n)` for a leaf with class counts.
pub fn leaf_estimate(counts: &Counts, cf: f64) -> f64 {
    let n = total(counts);
    let errors = n - counts[0].max(counts[1]);
    n as f64 * upper_error_bound(errors, n, cf)
}

/// Pessimistic error estimate of a (sub)tree: the sum over its leaves.
pub fn tree_estimate(node: &C45Node, cf: f64) -> f64 {
    node.leaves().iter().map(|l| leaf_estimate(&l.counts(), cf)).sum()
}

/// Bottom-up subtree replacement: an internal node becomes a leaf when
/// the leaf's pessimistic error does not exceed that of its subtree.
pub fn prune(node: &C45Node, cf: f64) -> C45Node {
    prune_node(node, cf).0
}

fn prune_node(node: &C45Node, cf: f64) -> (C45Node, f64) {
    let (pruned, subtree) = match node {
        C45Node::Leaf { counts, .. } => return (node.clone(), leaf_estimate(counts, cf)),
        C45Node::Numeric { attribute, index, threshold, counts, below, above } => {
            let (b, eb) = prune_node(below, cf);
            let (a, ea) = prune_node(above, cf);
            (
                C45Node::Numeric {
                    attribute: attribute.clone(),
                    index: *index,
                    threshold: *threshold,
                    counts: *counts,
                    below: Box::new(b),
                    above: Box::new(a),
                },
                eb + ea,
            )
        }
        C45Node::Nominal { attribute, index, counts, branches } => {
            let mut est = 0.0;
            let branches = branches
                .iter()
                .map(|br| {
                    let (n, e) = prune_node(&br.node, cf);
                    est += e;
                    Branch { category: br.category, label: br.label.clone(), node: n }
                })
                .collect();
            (
                C45Node::Nominal {
                    attribute: attribute.clone(),
                    index: *index,
                    counts: *counts,
                    branches,
                },
                est,
            )
        }
    };
    let counts = node.counts();
    let as_leaf = leaf_estimate(&counts, cf);
    if as_leaf <= subtree + 1e-12 {
        (C45Node::leaf(counts), as_leaf)
    } else {
        (pruned, subtree)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C45Tree {
    pub schema: Schema,
    pub fingerprint: String,
    pub positive_label: String,
    pub config: C45Config,
    pub root: C45Node,
}

struct Grower<'a> {
    ds: &'a Dataset,
    labels: Vec<Label>,
    features: Vec<usize>,
    config: C45Config,
}

struct Scored {
    test: SplitTest,
    gain: GainRatio,
}

impl Grower<'_> {
    fn candidates(&self, rows: &[usize]) -> Vec<Scored> {
        let mut out = Vec::new();
        let min_leaf = self.config.min_leaf;
        for &idx in &self.features {
            match self.ds.schema().attribute(idx).kind {
                AttributeKind::Numeric => {
                    let mut sorted: Vec<(f64, Label)> = rows
                        .iter()
                        .map(|&r| (self.ds.instances()[r].cells[idx].as_numeric().unwrap_or(f64::NAN), self.labels[r]))
                        .collect();
                    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let all = class_counts(&self.labels, rows);
                    let mut left: Counts = [0, 0];
                    for i in 0..sorted.len().saturating_sub(1) {
                        left[sorted[i].1.category()] += 1;
                        if sorted[i].0 == sorted[i + 1].0 {
                            continue;
                        }
                        let right = [all[0] - left[0], all[1] - left[1]];
                        if total(&left) < min_leaf || total(&right) < min_leaf {
                            continue;
                        }
                        let gain = gain_ratio_from_counts(&[left, right]).expect("both sides non-empty");
                        out.push(Scored {
                            test: SplitTest::Threshold {
                                index: idx,
                                threshold: midpoint(sorted[i].0, sorted[i + 1].0),
                            },
                            gain,
                        });
                    }
                }
                AttributeKind::Nominal => {
                    let test = SplitTest::Nominal { index: idx };
                    let cells: Vec<Counts> = partition(self.ds, rows, &test)
                        .iter()
                        .map(|(_, r)| class_counts(&self.labels, r))
                        .collect();
                    if cells.iter().filter(|c| total(c) >= min_leaf).count() < 2 {
                        continue;
                    }
                    if let Ok(gain) = gain_ratio_from_counts(&cells) {
                        out.push(Scored { test, gain });
                    }
                }
            }
        }
        out
    }

    fn choose(&self, candidates: Vec<Scored>) -> Option<SplitTest> {
        let positive: Vec<&Scored> = candidates.iter().filter(|c| c.gain.info_gain > GAIN_TOLERANCE).collect();
        if positive.is_empty() {
            // No informative split; take the first admissible one so that
            // consistent but impure nodes can still be separated deeper down.
            return candidates.into_iter().next().map(|c| c.test);
        }
        let floor = if self.config.use_average_gain_gate {
            positive.iter().map(|c| c.gain.info_gain).sum::<f64>() / positive.len() as f64 - GAIN_TOLERANCE
        } else {
            f64::NEG_INFINITY
        };
        let mut best: Option<&Scored> = None;
        for c in positive.into_iter().filter(|c| c.gain.info_gain >= floor) {
            if best.is_none_or(|b| c.gain.ratio > b.gain.ratio) {
                best = Some(c);
            }
        }
        best.map(|b| b.test.clone())
    }

    fn grow(&self, rows: &[usize]) -> C45Node {
        let counts = class_counts(&self.labels, rows);
        if counts[0] == 0 || counts[1] == 0 || rows.len() < 2 * self.config.min_leaf {
            return C45Node::leaf(counts);
        }
        let Some(test) = self.choose(self.candidates(rows)) else {
            return C45Node::leaf(counts);
        };
        let parts = partition(self.ds, rows, &test);
        let schema = self.ds.schema();
        match test {
            SplitTest::Threshold { index, threshold } => C45Node::Numeric {
                attribute: schema.attribute(index).name.clone(),
                index,
                threshold,
                counts,
                below: Box::new(self.grow(&parts[0].1)),
                above: Box::new(self.grow(&parts[1].1)),
            },
            SplitTest::Nominal { index } => {
                let attr = schema.attribute(index);
                C45Node::Nominal {
                    attribute: attr.name.clone(),
                    index,
                    counts,
                    branches: parts
                        .iter()
                        .map(|(c, r)| {
                            let c = c.expect("nominal partition carries categories");
                            Branch { category: c, label: attr.categories[c].clone(), node: self.grow(r) }
                        })
                        .collect(),
                }
            }
        }
    }
}

/// Induces a tree top-down and, when `config.prune`, prunes it.
pub fn fit_c45(ds: &Dataset, config: &C45Config) -> Result<C45Tree, ModelError> {
    config.validate()?;
    if ds.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    ds.require_complete()?;
    let grower = Grower {
        ds,
        labels: ds.labels()?,
        features: ds.schema().feature_indices(),
        config: *config,
    };
    let rows: Vec<usize> = (0..ds.len()).collect();
    let mut root = grower.grow(&rows);
    if config.prune {
        root = prune(&root, config.confidence);
    }
    Ok(C45Tree {
        schema: ds.schema().clone(),
        fingerprint: ds.schema().fingerprint(),
        positive_label: ds.schema().positive_label().to_string(),
        config: *config,
        root,
    })
}

impl C45Tree {
    fn check_width(&self, inst: &Instance) -> Result<(), ModelError> {
        if inst.cells.len() != self.schema.len() {
            return Err(ModelError::SchemaMismatch(format!(
                "expected {} cells, found {}",
                self.schema.len(),
                inst.cells.len()
            )));
        }
        Ok(())
    }

    /// Leaf label and leaf purity (majority count over leaf total).
    pub fn classify(&self, inst: &Instance) -> Result<(Label, f64), ModelError> {
        self.check_width(inst)?;
        match self.root.route(inst)? {
            C45Node::Leaf { label, counts } => {
                Ok((*label, counts[label.category()] as f64 / total(counts) as f64))
            }
            _ => unreachable!("route ends at a leaf"),
        }
    }

    /// Fraction of positive training instances at the reached leaf.
    pub fn positive_score(&self, inst: &Instance) -> Result<f64, ModelError> {
        self.check_width(inst)?;
        let counts = self.root.route(inst)?.counts();
        Ok(counts[0] as f64 / total(&counts) as f64)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let names = [self.schema.positive_label(), self.schema.negative_label()];
        render_node(&self.root, 0, &names, &mut out);
        let _ = writeln!(
            out,
            "\nNumber of leaves: {}\nSize of the tree: {}",
            self.root.leaf_count(),
            node_count(&self.root)
        );
        out
    }
}

fn node_count(node: &C45Node) -> usize {
    match node {
        C45Node::Leaf { .. } => 1,
        C45Node::Numeric { below, above, .. } => 1 + node_count(below) + node_count(above),
        C45Node::Nominal { branches, .. } => 1 + branches.iter().map(|b| node_count(&b.node)).sum::<usize>(),
    }
}

fn leaf_text(node: &C45Node, names: &[&str; 2]) -> String {
    let counts = node.counts();
    let label = majority(&counts);
    let errors = total(&counts) - counts[label.category()];
    if errors > 0 {
        format!("{} ({}/{})", names[label.category()], total(&counts), errors)
    } else {
        format!("{} ({})", names[label.category()], total(&counts))
    }
}

fn render_node(node: &C45Node, depth: usize, names: &[&str; 2], out: &mut String) {
    let indent = "|   ".repeat(depth);
    let arm = |text: String, child: &C45Node, out: &mut String| {
        if child.is_leaf() {
            let _ = writeln!(out, "{}{}: {}", indent, text, leaf_text(child, names));
        } else {
            let _ = writeln!(out, "{}{}", indent, text);
            render_node(child, depth + 1, names, out);
        }
    };
    match node {
        C45Node::Leaf { .. } => {
            let _ = writeln!(out, ": {}", leaf_text(node, names));
        }
        C45Node::Numeric { attribute, threshold, below, above, .. } => {
            arm(format!("{} <= {}", attribute, threshold), below, out);
            arm(format!("{} > {}", attribute, threshold), above, out);
        }
        C45Node::Nominal { attribute, branches, .. } => {
            for b in branches {
                arm(format!("{} = {}", attribute, b.label), &b.node, out);
            }
        }
    }
}
