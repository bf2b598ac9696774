//! Stratified cross-validation, confusion matrices, per-class and
//! support-weighted metrics, and ROC analysis.
//!
//! Rate conventions when a denominator is zero: every rate and the
//! precision are 0, and F is 0 when precision and recall are both 0.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{class_distribution, Dataset, Label};
use crate::error::EvalError;
use crate::model::Learner;

pub const REPORT_FORMAT: &str = "dxtree-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fn_: usize, fp: usize, tn: usize) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// The same matrix seen with the negative class as "positive".
    pub fn swapped(&self) -> ConfusionMatrix {
        ConfusionMatrix::new(self.tn, self.fp, self.fn_, self.tp)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(predicted: &[Label], truth: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch(predicted.len(), truth.len()));
    }
    if predicted.is_empty() {
        return Err(EvalError::TooFewInstances("no predictions".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in predicted.iter().zip(truth) {
        match (t, p) {
            (Label::Positive, Label::Positive) => cm.tp += 1,
            (Label::Positive, Label::Negative) => cm.fn_ += 1,
            (Label::Negative, Label::Positive) => cm.fp += 1,
            (Label::Negative, Label::Negative) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// `(1 + b^2) P R / (b^2 P + R)`, or 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub support: usize,
}

fn class_metrics(cm: &ConfusionMatrix, label: Label) -> ClassMetrics {
    let tp_rate = ratio(cm.tp, cm.positives());
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    ClassMetrics {
        label,
        tp_rate,
        fp_rate: ratio(cm.fp, cm.negatives()),
        precision,
        recall: tp_rate,
        f_measure: f_measure(precision, tp_rate, 1.0),
        support: cm.positives(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMetrics {
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub f_measure: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roc_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Positive class first.
    pub per_class: Vec<ClassMetrics>,
    pub weighted: WeightedMetrics,
    pub accuracy: f64,
}

/// Per-class one-vs-rest metrics and their support-weighted averages.
pub fn summarize(cm: &ConfusionMatrix) -> Summary {
    let per_class = vec![
        class_metrics(cm, Label::Positive),
        class_metrics(&cm.swapped(), Label::Negative),
    ];
    let n = cm.total() as f64;
    let avg = |f: fn(&ClassMetrics) -> f64| {
        if n == 0.0 {
            0.0
        } else {
            per_class.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / n
        }
    };
    let weighted = WeightedMetrics {
        tp_rate: avg(|c| c.tp_rate),
        fp_rate: avg(|c| c.fp_rate),
        precision: avg(|c| c.precision),
        f_measure: avg(|c| c.f_measure),
        roc_auc: None,
    };
    Summary {
        per_class,
        weighted,
        accuracy: cm.accuracy(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Score at or above which an instance is called positive; `None` for
    /// the origin, where nothing is.
    pub threshold: Option<f64>,
    pub fp_rate: f64,
    pub tp_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// `threshold,fp_rate,tp_rate` rows; the origin's threshold is `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fp_rate,tp_rate\n");
        for p in &self.points {
            let t = p.threshold.map_or_else(|| "inf".to_string(), |t| format!("{}", t));
            let _ = writeln!(out, "{},{},{}", t, p.fp_rate, p.tp_rate);
        }
        out
    }
}

/// Threshold sweep over distinct scores (descending); tied scores move
/// the curve diagonally in one step. AUC by the trapezoid rule.
pub fn roc_curve(scores: &[f64], truth: &[Label]) -> Result<RocCurve, EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::LengthMismatch(scores.len(), truth.len()));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(EvalError::InvalidScore(i));
    }
    let pos = truth.iter().filter(|l| l.is_positive()).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { threshold: None, fp_rate: 0.0, tp_rate: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = points.last().expect("origin present");
        let (x, y) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        auc += (x - prev.fp_rate) * (y + prev.tp_rate) / 2.0;
        points.push(RocPoint { threshold: Some(s), fp_rate: x, tp_rate: y });
    }
    Ok(RocCurve { points, auc })
}

/// Assigns rows to `k` folds: each class is shuffled with a seeded RNG,
/// then all rows (positives first) are dealt round-robin, so every fold's
/// per-class count is within one of proportional.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 || k > labels.len() {
        return Err(EvalError::TooFewInstances(format!(
            "{} folds requested for {} instances",
            k,
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_positive()).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i].is_positive()).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::SingleClass);
    }
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, row) in pos.into_iter().chain(neg).enumerate() {
        folds[i % k].push(row);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub row: usize,
    pub fold: usize,
    pub truth: Label,
    pub predicted: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub version: u32,
    pub learner: Learner,
    pub folds: usize,
    pub seed: u64,
    pub instances: usize,
    pub positive_label: String,
    pub negative_label: String,
    pub score_source: String,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub weighted: WeightedMetrics,
    pub accuracy: f64,
    pub roc: RocCurve,
    pub predictions: Vec<Prediction>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, crate::error::FormatError> {
        let report: EvalReport = serde_json::from_str(text)?;
        if report.format != REPORT_FORMAT {
            return Err(crate::error::FormatError::WrongFormat {
                expected: REPORT_FORMAT.into(),
                found: report.format,
            });
        }
        if report.version != REPORT_VERSION {
            return Err(crate::error::FormatError::Version(report.version));
        }
        Ok(report)
    }

    /// Accuracy recomputed from the embedded confusion matrix agrees with
    /// the stored one.
    pub fn is_consistent(&self) -> bool {
        let cm = &self.confusion;
        cm.total() == self.instances && (cm.accuracy() - self.accuracy).abs() <= 1e-12
    }

    /// Confusion matrix and weighted metrics as a short text table.
    pub fn to_text(&self) -> String {
        let cm = &self.confusion;
        let mut out = String::new();
        let _ = writeln!(out, "{} {}-fold cross-validation (seed {})", self.learner.algorithm(), self.folds, self.seed);
        let _ = writeln!(out, "Correctly classified: {} of {} ({:.1}%)", cm.tp + cm.tn, cm.total(), 100.0 * self.accuracy);
        let _ = writeln!(out, "\nActual \\ Predicted  {:>6} {:>6}", self.positive_label, self.negative_label);
        let _ = writeln!(out, "{:<19} {:>6} {:>6}", self.positive_label, cm.tp, cm.fn_);
        let _ = writeln!(out, "{:<19} {:>6} {:>6}", self.negative_label, cm.fp, cm.tn);
        let _ = writeln!(out, "\n{:<10} {:>8} {:>8} {:>9} {:>9} {:>7}", "Class", "TP rate", "FP rate", "Precision", "F-Measure", "ROC");
        let auc = format!("{:.3}", self.roc.auc);
        for (c, name) in self.per_class.iter().zip([&self.positive_label, &self.negative_label]) {
            let _ = writeln!(
                out,
                "{:<10} {:>8.3} {:>8.3} {:>9.3} {:>9.3} {:>7}",
                name, c.tp_rate, c.fp_rate, c.precision, c.f_measure, auc
            );
        }
        let w = &self.weighted;
        let _ = writeln!(
            out,
            "{:<10} {:>8.3} {:>8.3} {:>9.3} {:>9.3} {:>7.3}",
            "Weighted", w.tp_rate, w.fp_rate, w.precision, w.f_measure, w.roc_auc.unwrap_or(self.roc.auc)
        );
        out
    }
}

/// Trains on k-1 folds and predicts the held-out fold, for every fold,
/// then pools all held-out predictions into one report.
pub fn cross_validate(learner: &Learner, ds: &Dataset, k: usize, seed: u64) -> Result<EvalReport, EvalError> {
    let labels = ds.labels()?;
    let (pos, neg) = class_distribution(ds);
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let folds = stratified_kfold(&labels, k, seed)?;

    let mut predictions = Vec::with_capacity(ds.len());
    for (f, test_rows) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        let mut train_rows = train_rows;
        train_rows.sort_unstable();
        let model = learner
            .fit(&ds.subset(&train_rows))
            .map_err(|source| EvalError::Fold { fold: f, source })?;
        for &row in test_rows {
            let (predicted, score) = model
                .predict(&ds.instances()[row])
                .map_err(|source| EvalError::Fold { fold: f, source })?;
            predictions.push(Prediction { row, fold: f, truth: labels[row], predicted, score });
        }
    }

    let predicted: Vec<Label> = predictions.iter().map(|p| p.predicted).collect();
    let truth: Vec<Label> = predictions.iter().map(|p| p.truth).collect();
    let scores: Vec<f64> = predictions.iter().map(|p| p.score).collect();
    let cm = confusion(&predicted, &truth)?;
    let summary = summarize(&cm);
    let roc = roc_curve(&scores, &truth)?;
    let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
    let flipped: Vec<Label> = truth
        .iter()
        .map(|l| if l.is_positive() { Label::Negative } else { Label::Positive })
        .collect();
    let roc_negative = roc_curve(&negated, &flipped)?;
    let n = cm.total() as f64;
    let mut weighted = summary.weighted;
    weighted.roc_auc = Some((cm.positives() as f64 * roc.auc + cm.negatives() as f64 * roc_negative.auc) / n);

    let schema = ds.schema();
    Ok(EvalReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        learner: *learner,
        folds: k,
        seed,
        instances: ds.len(),
        positive_label: schema.positive_label().to_string(),
        negative_label: schema.negative_label().to_string(),
        score_source: learner.score_source().to_string(),
        confusion: cm,
        per_class: summary.per_class,
        weighted,
        accuracy: summary.accuracy,
        roc,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: Label = Label::Positive;
    const N: Label = Label::Negative;

    #[test]
    fn counts_confusion() {
        let cm = confusion(&[P, P, N, N, P], &[P, N, N, P, P]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(2, 1, 1, 1));
        assert!(matches!(confusion(&[P], &[P, N]), Err(EvalError::LengthMismatch(1, 2))));
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn all_correct() {
        let cm = confusion(&[P, N, N], &[P, N, N]).unwrap();
        assert_eq!((cm.fn_, cm.fp), (0, 0));
    }

    #[test]
    fn f_values() {
        assert_eq!(f_measure(1.0, 1.0, 1.0), 1.0);
        assert!((f_measure(53.0 / 60.0, 1.0, 1.0) - 0.9381).abs() < 1e-4);
        assert!((f_measure(0.5, 0.5, 2.0) - 0.5).abs() < 1e-15);
        assert_eq!(f_measure(0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn perfect_summary() {
        let s = summarize(&ConfusionMatrix::new(10, 0, 0, 10));
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.weighted.tp_rate, 1.0);
        assert_eq!(s.weighted.fp_rate, 0.0);
        assert_eq!(s.weighted.f_measure, 1.0);
        assert_eq!(s.weighted.precision, 1.0);
    }

    #[test]
    fn zero_denominators() {
        let s = summarize(&ConfusionMatrix::new(0, 5, 0, 5));
        assert_eq!(s.per_class[0].precision, 0.0);
        assert_eq!(s.per_class[0].f_measure, 0.0);
    }

    #[test]
    fn roc_perfect_and_flat() {
        let r = roc_curve(&[0.9, 0.8, 0.2, 0.1], &[P, P, N, N]).unwrap();
        assert_eq!(r.auc, 1.0);
        let flat = roc_curve(&[0.5; 6], &[P, N, P, N, N, P]).unwrap();
        assert_eq!(flat.points.len(), 2);
        assert_eq!((flat.points[1].fp_rate, flat.points[1].tp_rate), (1.0, 1.0));
        assert_eq!(flat.auc, 0.5);
    }

    #[test]
    fn roc_four_scores() {
        let r = roc_curve(&[0.9, 0.8, 0.7, 0.6], &[P, N, P, N]).unwrap();
        assert!((r.auc - 0.75).abs() < 1e-15);
        assert!(r.to_csv().starts_with("threshold,fp_rate,tp_rate\ninf,0,0\n0.9,0,0.5\n"));
    }

    #[test]
    fn roc_errors() {
        assert!(matches!(roc_curve(&[0.1, 0.2], &[P, P]), Err(EvalError::SingleClass)));
        assert!(matches!(roc_curve(&[f64::NAN, 0.2], &[P, N]), Err(EvalError::InvalidScore(0))));
    }

    #[test]
    fn leave_one_out_folds() {
        let labels = [P, N, P, N, P, N];
        let folds = stratified_kfold(&labels, 6, 3).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));
        assert!(stratified_kfold(&labels, 7, 3).is_err());
        assert!(stratified_kfold(&labels, 1, 3).is_err());
    }

    #[test]
    fn folds_are_seeded() {
        let labels: Vec<Label> = (0..30).map(|i| if i % 3 == 0 { N } else { P }).collect();
        assert_eq!(stratified_kfold(&labels, 5, 9).unwrap(), stratified_kfold(&labels, 5, 9).unwrap());
        assert_ne!(stratified_kfold(&labels, 5, 9).unwrap(), stratified_kfold(&labels, 5, 10).unwrap());
    }
}
