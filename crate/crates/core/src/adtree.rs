//! Alternating decision trees grown by boosting.
//!
//! A model alternates prediction nodes, which carry a real contribution,
//! and decision nodes, which test one attribute. Scoring sums the
//! contribution of every prediction node an instance reaches: a decision
//! node forwards the instance to one of its two prediction children, a
//! prediction node forwards it to all of its decision children.
//!
//! Training starts from unit weights, sets the root contribution from the
//! class weight totals and then, for each boosting round, picks the
//! (prediction node, condition) pair with the smallest Z value over every
//! existing prediction node. Weights are multiplied by `exp(-y * r(x))`
//! where `r(x)` is the contribution the new rule gives `x`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Cell, Dataset, Instance, Label, Schema};
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdTreeConfig {
    /// Boosting rounds; each adds one decision node.
    pub iterations: usize,
    /// Additive smoothing in [`prediction_value`].
    pub epsilon: f64,
}

impl Default for AdTreeConfig {
    fn default() -> Self {
        AdTreeConfig {
            iterations: 10,
            epsilon: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Test {
    LessThan { threshold: f64 },
    Equals { category: usize, label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    /// Column of `attribute` in the training schema.
    pub index: usize,
    pub test: Test,
}

impl Condition {
    pub fn holds(&self, inst: &Instance) -> Result<bool, ModelError> {
        let cell = inst
            .cells
            .get(self.index)
            .ok_or_else(|| ModelError::SchemaMismatch(format!("no column for '{}'", self.attribute)))?;
        match (&self.test, cell) {
            (_, Cell::Missing) => Err(ModelError::MissingCell(self.attribute.clone())),
            (Test::LessThan { threshold }, Cell::Numeric(v)) => Ok(v < threshold),
            (Test::Equals { category, .. }, Cell::Category(c)) => Ok(c == category),
            _ => Err(ModelError::SchemaMismatch(format!(
                "cell kind does not match condition on '{}'",
                self.attribute
            ))),
        }
    }

    fn describe(&self, outcome: bool) -> String {
        match (&self.test, outcome) {
            (Test::LessThan { threshold }, true) => format!("{} < {}", self.attribute, threshold),
            (Test::LessThan { threshold }, false) => format!("{} >= {}", self.attribute, threshold),
            (Test::Equals { label, .. }, true) => format!("{} = {}", self.attribute, label),
            (Test::Equals { label, .. }, false) => format!("{} != {}", self.attribute, label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionNode {
    pub id: usize,
    pub value: f64,
    /// Decision node ids hanging below this node.
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionNode {
    pub id: usize,
    pub parent: usize,
    pub condition: Condition,
    pub true_child: usize,
    pub false_child: usize,
    /// Boosting round that created this node, from 1.
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdTreeModel {
    pub schema: Schema,
    pub fingerprint: String,
    pub positive_label: String,
    pub iterations: usize,
    pub epsilon: f64,
    /// Prediction nodes by id; id 0 is the root.
    pub predictions: Vec<PredictionNode>,
    /// Decision nodes by id; node `i` was added in round `i + 1`.
    pub decisions: Vec<DecisionNode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// `0.5 * ln((w_pos + eps) / (w_neg + eps))`.
pub fn prediction_value(w_pos: f64, w_neg: f64, epsilon: f64) -> f64 {
    0.5 * ((w_pos + epsilon) / (w_neg + epsilon)).ln()
}

/// Class weight sums on both sides of a condition within a precondition.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SplitWeights {
    pub pos_true: f64,
    pub neg_true: f64,
    pub pos_false: f64,
    pub neg_false: f64,
}

impl SplitWeights {
    pub fn total(&self) -> f64 {
        self.pos_true + self.neg_true + self.pos_false + self.neg_false
    }
}

/// `2 * (sqrt(W+(p&c) W-(p&c)) + sqrt(W+(p&!c) W-(p&!c))) + W(!p)`.
pub fn z_value(split: &SplitWeights, outside: f64) -> f64 {
    2.0 * ((split.pos_true * split.neg_true).sqrt() + (split.pos_false * split.neg_false).sqrt())
        + outside
}

/// Candidate conditions over the feature attributes for the `reaching`
/// rows: midpoints between consecutive distinct values for numeric
/// attributes, one equality per observed category for nominal ones. An
/// attribute with a single distinct value among `reaching` yields nothing.
pub fn candidate_conditions(ds: &Dataset, reaching: &[usize]) -> Vec<Condition> {
    let schema = ds.schema();
    let mut out = Vec::new();
    for idx in schema.feature_indices() {
        let attr = schema.attribute(idx);
        match attr.kind {
            AttributeKind::Numeric => {
                let mut values: Vec<f64> = reaching
                    .iter()
                    .filter_map(|&r| ds.instances()[r].cells[idx].as_numeric())
                    .collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                for pair in values.windows(2) {
                    out.push(Condition {
                        attribute: attr.name.clone(),
                        index: idx,
                        test: Test::LessThan {
                            threshold: midpoint(pair[0], pair[1]),
                        },
                    });
                }
            }
            AttributeKind::Nominal => {
                let mut present = vec![false; attr.categories.len()];
                for &r in reaching {
                    if let Some(c) = ds.instances()[r].cells[idx].as_category() {
                        present[c] = true;
                    }
                }
                if present.iter().filter(|&&p| p).count() < 2 {
                    continue;
                }
                for (c, _) in present.iter().enumerate().filter(|(_, &p)| p) {
                    out.push(Condition {
                        attribute: attr.name.clone(),
                        index: idx,
                        test: Test::Equals {
                            category: c,
                            label: attr.categories[c].clone(),
                        },
                    });
                }
            }
        }
    }
    out
}

pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

/// One boosting round as recorded during training.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub iteration: usize,
    pub precondition: usize,
    pub condition: Condition,
    pub z: f64,
    pub split: SplitWeights,
    pub weight_before: f64,
    pub weight_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub model: AdTreeModel,
    pub rounds: Vec<RoundTrace>,
    /// Total weight after the root update.
    pub initial_weight: f64,
    /// Final per-instance weights.
    pub weights: Vec<f64>,
}

/// Trains an alternating decision tree.
pub fn fit_adtree(ds: &Dataset, config: &AdTreeConfig) -> Result<AdTreeModel, ModelError> {
    fit_adtree_traced(ds, config).map(|t| t.model)
}

struct Candidate {
    node: usize,
    condition: Condition,
    z: f64,
}

/// Trains and keeps the per-round record.
pub fn fit_adtree_traced(ds: &Dataset, config: &AdTreeConfig) -> Result<Training, ModelError> {
    if !(config.epsilon >= 0.0) || !config.epsilon.is_finite() {
        return Err(ModelError::InvalidConfig(format!(
            "smoothing must be a non-negative finite number, got {}",
            config.epsilon
        )));
    }
    if ds.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    ds.require_complete()?;
    let schema = ds.schema().clone();
    let labels = ds.labels()?;
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    if config.iterations > 0 && (n_pos == 0 || n_pos == labels.len()) {
        return Err(ModelError::SingleClass);
    }

    let mut weights = vec![1.0f64; ds.len()];
    let root = prediction_value(n_pos as f64, (ds.len() - n_pos) as f64, config.epsilon);
    for (w, yi) in weights.iter_mut().zip(&y) {
        *w *= (-yi * root).exp();
    }
    let initial_weight: f64 = weights.iter().sum();

    let mut model = AdTreeModel {
        fingerprint: schema.fingerprint(),
        positive_label: schema.positive_label().to_string(),
        schema,
        iterations: config.iterations,
        epsilon: config.epsilon,
        predictions: vec![PredictionNode { id: 0, value: root, children: Vec::new() }],
        decisions: Vec::new(),
        warnings: Vec::new(),
    };
    let mut reach: Vec<Vec<usize>> = vec![(0..ds.len()).collect()];
    let mut candidates: Vec<Vec<Condition>> = vec![candidate_conditions(ds, &reach[0])];
    let mut rounds = Vec::with_capacity(config.iterations);

    for t in 1..=config.iterations {
        let total: f64 = weights.iter().sum();
        let mut best: Option<Candidate> = None;
        for (node, conds) in candidates.iter().enumerate() {
            let inside: f64 = reach[node].iter().map(|&r| weights[r]).sum();
            let outside = (total - inside).max(0.0);
            for cond in conds {
                let split = split_weights(ds, &reach[node], cond, &y, &weights)?;
                let z = z_value(&split, outside);
                if best.as_ref().is_none_or(|b| z < b.z) {
                    best = Some(Candidate { node, condition: cond.clone(), z });
                }
            }
        }
        let Some(best) = best else {
            model.warnings.push(format!(
                "no splittable attribute remained after {} of {} rounds",
                t - 1,
                config.iterations
            ));
            break;
        };

        let split = split_weights(ds, &reach[best.node], &best.condition, &y, &weights)?;
        let a_true = prediction_value(split.pos_true, split.neg_true, config.epsilon);
        let a_false = prediction_value(split.pos_false, split.neg_false, config.epsilon);
        let (mut rows_true, mut rows_false) = (Vec::new(), Vec::new());
        for &r in &reach[best.node] {
            if best.condition.holds(&ds.instances()[r])? {
                weights[r] *= (-y[r] * a_true).exp();
                rows_true.push(r);
            } else {
                weights[r] *= (-y[r] * a_false).exp();
                rows_false.push(r);
            }
        }

        let decision_id = model.decisions.len();
        let true_id = model.predictions.len();
        let false_id = true_id + 1;
        model.predictions[best.node].children.push(decision_id);
        model.predictions.push(PredictionNode { id: true_id, value: a_true, children: Vec::new() });
        model.predictions.push(PredictionNode { id: false_id, value: a_false, children: Vec::new() });
        model.decisions.push(DecisionNode {
            id: decision_id,
            parent: best.node,
            condition: best.condition.clone(),
            true_child: true_id,
            false_child: false_id,
            iteration: t,
        });
        candidates.push(candidate_conditions(ds, &rows_true));
        candidates.push(candidate_conditions(ds, &rows_false));
        reach.push(rows_true);
        reach.push(rows_false);

        rounds.push(RoundTrace {
            iteration: t,
            precondition: best.node,
            condition: best.condition,
            z: best.z,
            split,
            weight_before: total,
            weight_after: weights.iter().sum(),
        });
    }

    Ok(Training { model, rounds, initial_weight, weights })
}

fn split_weights(
    ds: &Dataset,
    rows: &[usize],
    cond: &Condition,
    y: &[f64],
    weights: &[f64],
) -> Result<SplitWeights, ModelError> {
    let mut s = SplitWeights::default();
    for &r in rows {
        let pos = y[r] > 0.0;
        match (cond.holds(&ds.instances()[r])?, pos) {
            (true, true) => s.pos_true += weights[r],
            (true, false) => s.neg_true += weights[r],
            (false, true) => s.pos_false += weights[r],
            (false, false) => s.neg_false += weights[r],
        }
    }
    Ok(s)
}

impl AdTreeModel {
    pub fn root(&self) -> &PredictionNode {
        &self.predictions[0]
    }

    fn check_instance(&self, inst: &Instance) -> Result<(), ModelError> {
        if inst.cells.len() != self.schema.len() {
            return Err(ModelError::SchemaMismatch(format!(
                "expected {} cells, found {}",
                self.schema.len(),
                inst.cells.len()
            )));
        }
        for d in &self.decisions {
            if inst.cells[d.condition.index].is_missing() {
                return Err(ModelError::MissingCell(d.condition.attribute.clone()));
            }
        }
        Ok(())
    }

    /// Margin F(x): the sum of every reached prediction value.
    pub fn score(&self, inst: &Instance) -> Result<f64, ModelError> {
        self.check_instance(inst)?;
        let mut total = 0.0;
        let mut stack = vec![0usize];
        while let Some(p) = stack.pop() {
            let node = &self.predictions[p];
            total += node.value;
            for &d in &node.children {
                let dec = &self.decisions[d];
                stack.push(if dec.condition.holds(inst)? { dec.true_child } else { dec.false_child });
            }
        }
        Ok(total)
    }

    /// Positive iff F(x) >= 0; returns the label with |F(x)|.
    pub fn classify(&self, inst: &Instance) -> Result<(Label, f64), ModelError> {
        let f = self.score(inst)?;
        let label = if f >= 0.0 { Label::Positive } else { Label::Negative };
        Ok((label, f.abs()))
    }

    /// Indented text rendering, one line per prediction node.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, ": {:.4}", self.root().value);
        self.render_children(0, 1, &mut out);
        let _ = writeln!(
            out,
            "Legend: positive score = {}, negative score = {}",
            self.schema.positive_label(),
            self.schema.negative_label()
        );
        out
    }

    fn render_children(&self, node: usize, depth: usize, out: &mut String) {
        for &d in &self.predictions[node].children {
            let dec = &self.decisions[d];
            for (outcome, child) in [(true, dec.true_child), (false, dec.false_child)] {
                let _ = writeln!(
                    out,
                    "{}({}){}: {:.4}",
                    "|  ".repeat(depth),
                    dec.iteration,
                    dec.condition.describe(outcome),
                    self.predictions[child].value
                );
                self.render_children(child, depth + 1, out);
            }
        }
    }
}
