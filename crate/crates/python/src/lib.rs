//! Python bindings: datasets, the two learners, cross-validation and the
//! statistical helpers. Structured results come back as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dxtree::corpus::{generate as generate_cohort, separable_preset, CohortSpec};
use dxtree::data::{class_distribution, impute_means, parse_csv, parse_csv_unlabelled, serialize_csv, DiscretizeRule};
use dxtree::eval::summarize as summarize_cm;
use dxtree::select::{screen as screen_features, LogisticConfig};
use dxtree::{AdTreeConfig, Algorithm, C45Config, ConfusionMatrix, Label, Learner, ModelDocument, Schema};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Round-trips a serde value through Python's json module.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Dataset", module = "dxtree_py")]
struct PyDataset {
    inner: dxtree::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Parses CSV text against a schema sidecar. With `labelled=False` the
    /// target column may be blank or absent.
    #[staticmethod]
    #[pyo3(signature = (csv, schema, labelled = true))]
    fn from_csv(csv: &str, schema: &str, labelled: bool) -> PyResult<Self> {
        let schema = Schema::parse_sidecar(schema).map_err(err)?;
        let inner = if labelled {
            parse_csv(csv.as_bytes(), &schema)
        } else {
            parse_csv_unlabelled(csv.as_bytes(), &schema)
        }
        .map_err(err)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, schema_path, labelled = true))]
    fn read(path: &str, schema_path: &str, labelled: bool) -> PyResult<Self> {
        let csv = std::fs::read_to_string(path).map_err(err)?;
        let schema = std::fs::read_to_string(schema_path).map_err(err)?;
        Self::from_csv(&csv, &schema, labelled)
    }

    fn to_csv(&self) -> String {
        serialize_csv(&self.inner)
    }

    fn schema(&self) -> String {
        self.inner.schema().to_sidecar()
    }

    fn attribute_names(&self) -> Vec<String> {
        self.inner.schema().attributes().iter().map(|a| a.name.clone()).collect()
    }

    /// (positives, negatives)
    fn class_distribution(&self) -> (usize, usize) {
        class_distribution(&self.inner)
    }

    /// Mean-imputed copy plus a list of {attribute, imputed, mean}.
    fn impute<'py>(&self, py: Python<'py>) -> PyResult<(Self, Bound<'py, PyAny>)> {
        let (inner, report) = impute_means(&self.inner).map_err(err)?;
        Ok((PyDataset { inner }, to_py(py, &report.columns)?))
    }

    /// Applies an `attr:cut[:cut...]:label...` rule.
    fn discretize(&self, rule: &str) -> PyResult<Self> {
        let rule = DiscretizeRule::parse(rule).map_err(err)?;
        Ok(PyDataset { inner: rule.apply(&self.inner).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let (p, n) = class_distribution(&self.inner);
        format!("Dataset({} rows, {} attributes, {} positive, {} negative)", self.inner.len(), self.inner.schema().len(), p, n)
    }
}

fn learner(algo: &str, iterations: usize, epsilon: f64, cf: f64, min_leaf: usize, prune: bool) -> PyResult<Learner> {
    let learner = match algo.parse::<Algorithm>().map_err(PyValueError::new_err)? {
        Algorithm::AdTree => Learner::AdTree(AdTreeConfig { iterations, epsilon }),
        Algorithm::C45 => {
            let cfg = C45Config { min_leaf, confidence: cf, use_average_gain_gate: true, prune };
            cfg.validate().map_err(err)?;
            Learner::C45(cfg)
        }
    };
    Ok(learner)
}

#[pyclass(name = "Model", module = "dxtree_py")]
struct PyModel {
    doc: ModelDocument,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (data, algo = "adtree", iterations = 10, epsilon = 1.0, cf = 0.25, min_leaf = 2, prune = true))]
    fn fit(
        data: &PyDataset,
        algo: &str,
        iterations: usize,
        epsilon: f64,
        cf: f64,
        min_leaf: usize,
        prune: bool,
    ) -> PyResult<Self> {
        let model = learner(algo, iterations, epsilon, cf, min_leaf, prune)?.fit(&data.inner).map_err(err)?;
        Ok(PyModel { doc: ModelDocument::new(data.inner.schema().clone(), Vec::new(), model) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel { doc: ModelDocument::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.doc.to_json().map_err(err)
    }

    fn algorithm(&self) -> String {
        self.doc.model.algorithm().to_string()
    }

    /// (label, score) per row.
    fn predict(&self, data: &PyDataset) -> PyResult<Vec<(String, f64)>> {
        let ds = self.doc.prepare(&data.inner).map_err(err)?;
        let target = self.doc.model.schema().target();
        ds.instances()
            .iter()
            .map(|inst| {
                let (label, score) = self.doc.model.predict(inst).map_err(err)?;
                Ok((target.categories[label.category()].clone(), score))
            })
            .collect()
    }

    fn render(&self) -> String {
        self.doc.model.render()
    }
}

/// Stratified k-fold report as a dict.
#[pyfunction]
#[pyo3(signature = (data, algo = "adtree", k = 10, seed = 42, iterations = 10, epsilon = 1.0, cf = 0.25, min_leaf = 2))]
#[allow(clippy::too_many_arguments)]
fn cross_validate<'py>(
    py: Python<'py>,
    data: &PyDataset,
    algo: &str,
    k: usize,
    seed: u64,
    iterations: usize,
    epsilon: f64,
    cf: f64,
    min_leaf: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let learner = learner(algo, iterations, epsilon, cf, min_leaf, true)?;
    let report = dxtree::cross_validate(&learner, &data.inner, k, seed).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (tp, fn_, fp, tn))]
fn summarize<'py>(py: Python<'py>, tp: usize, fn_: usize, fp: usize, tn: usize) -> PyResult<Bound<'py, PyAny>> {
    let cm = ConfusionMatrix::new(tp, fn_, fp, tn);
    if cm.total() == 0 {
        return Err(PyValueError::new_err("confusion matrix is empty"));
    }
    to_py(py, &summarize_cm(&cm))
}

#[pyfunction]
fn chi2_sf(x: f64, df: u32) -> PyResult<f64> {
    dxtree::chi2_sf(x, df).map_err(err)
}

/// ROC curve of `scores` against boolean truth (True = positive):
/// returns ([(threshold or None, fp_rate, tp_rate)], auc).
#[pyfunction]
fn roc(scores: Vec<f64>, truth: Vec<bool>) -> PyResult<(Vec<(Option<f64>, f64, f64)>, f64)> {
    let truth: Vec<Label> = truth.into_iter().map(|t| if t { Label::Positive } else { Label::Negative }).collect();
    let curve = dxtree::roc_curve(&scores, &truth).map_err(err)?;
    Ok((curve.points.iter().map(|p| (p.threshold, p.fp_rate, p.tp_rate)).collect(), curve.auc))
}

/// Wald / chi-squared screening; returns {logistic, chi_squared, selection}.
#[pyfunction]
#[pyo3(signature = (data, alpha = 0.05, force_include = Vec::new()))]
fn screen<'py>(py: Python<'py>, data: &PyDataset, alpha: f64, force_include: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let (logit, chi2s, set) = screen_features(&data.inner, alpha, &force_include, &LogisticConfig::default()).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("logistic", to_py(py, &logit)?)?;
    out.set_item("chi_squared", to_py(py, &chi2s)?)?;
    out.set_item("selection", to_py(py, &set)?)?;
    Ok(out)
}

/// Synthetic cohort: preset "clinical" (65 rows, 53 positive by default) or
/// "separable" (one attribute, classes `gap` deviations apart).
#[pyfunction]
#[pyo3(signature = (seed = 42, preset = "clinical", n = None, n_pos = None, gap = 8.0))]
fn generate(seed: u64, preset: &str, n: Option<usize>, n_pos: Option<usize>, gap: f64) -> PyResult<PyDataset> {
    let inner = match preset {
        "clinical" => {
            let mut spec = CohortSpec::clinical(seed);
            spec.n = n.unwrap_or(spec.n);
            spec.n_pos = n_pos.unwrap_or(spec.n_pos);
            generate_cohort(&spec)
        }
        "separable" => separable_preset(n.unwrap_or(65), n_pos.unwrap_or(53), gap, seed),
        other => return Err(PyValueError::new_err(format!("unknown preset '{}'", other))),
    }
    .map_err(err)?;
    Ok(PyDataset { inner })
}

#[pymodule]
fn dxtree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_sf, m)?)?;
    m.add_function(wrap_pyfunction!(roc, m)?)?;
    m.add_function(wrap_pyfunction!(screen, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
