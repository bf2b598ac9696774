//! Feature screening: binomial logistic regression with Wald tests for
//! numeric attributes and chi-squared independence tests for nominal ones.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Cell, Dataset, Label, Role, Schema};
use crate::error::{DataError, StatsError};
use crate::stats::chi2_sf;

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    pub max_iterations: usize,
    /// Convergence when the largest coefficient change falls below this.
    pub tolerance: f64,
    /// Relative pivot threshold below which the information matrix is singular.
    pub singular_tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            max_iterations: 50,
            tolerance: 1e-8,
            singular_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub wald: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub target: String,
    /// Intercept first, then predictors in the order requested.
    pub coefficients: Vec<Coefficient>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood at the start and after every iteration.
    pub trace: Vec<f64>,
}

impl LogisticFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn predictors(&self) -> impl Iterator<Item = &Coefficient> {
        self.coefficients.iter().filter(|c| c.name != INTERCEPT)
    }
}

/// Wald chi-square `(estimate / se)^2` and its df = 1 tail probability.
pub fn wald_statistic(estimate: f64, std_error: f64) -> Result<(f64, f64), StatsError> {
    if !(std_error > 0.0) {
        return Err(StatsError::Domain(format!("standard error must be positive, got {}", std_error)));
    }
    let z = estimate / std_error;
    let chi2 = z * z;
    Ok((chi2, chi2_sf(chi2, 1)?))
}

/// Per-coefficient (name, chi2, p). Fails on a non-converged fit.
pub fn wald_test(fit: &LogisticFit) -> Result<Vec<(String, f64, f64)>, StatsError> {
    if !fit.converged {
        return Err(StatsError::NotConverged { iterations: fit.iterations });
    }
    fit.coefficients
        .iter()
        .map(|c| {
            let (chi2, p) = wald_statistic(c.estimate, c.std_error)?;
            Ok((c.name.clone(), chi2, p))
        })
        .collect()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_likelihood(x: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta = dot(row, beta);
            yi * eta - softplus(eta)
        })
        .sum()
}

/// Lower-triangular Cholesky factor, or None if a pivot is not positive
/// relative to the largest diagonal entry.
fn cholesky(a: &[Vec<f64>], rel_tol: f64) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0f64, f64::max);
    if !(scale > rel_tol) {
        return None;
    }
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > rel_tol * scale) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    x
}

fn information(x: &[Vec<f64>], beta: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = beta.len();
    let mut h = vec![vec![0.0; p]; p];
    let mut mu = Vec::with_capacity(x.len());
    for row in x {
        let m = sigmoid(dot(row, beta));
        let w = m * (1.0 - m);
        for i in 0..p {
            for j in 0..=i {
                h[i][j] += w * row[i] * row[j];
            }
        }
        mu.push(m);
    }
    for i in 0..p {
        for j in 0..i {
            h[j][i] = h[i][j];
        }
    }
    (h, mu)
}

/// Maximum-likelihood binomial logistic regression by IRLS with step
/// halving, on design rows `[1, x_1, ..., x_p]` and 0/1 responses.
pub fn fit_logistic_matrix(
    names: &[String],
    target: &str,
    design: &[Vec<f64>],
    response: &[f64],
    config: &LogisticConfig,
) -> Result<LogisticFit, StatsError> {
    let p = names.len() + 1;
    if design.len() != response.len() {
        return Err(StatsError::InvalidInput("design and response lengths differ".into()));
    }
    if design.len() < p {
        return Err(StatsError::InvalidInput(format!(
            "{} observations cannot identify {} coefficients",
            design.len(),
            p
        )));
    }
    if design.iter().any(|r| r.len() != p) {
        return Err(StatsError::InvalidInput("design rows must have one column per coefficient".into()));
    }

    let mut beta = vec![0.0; p];
    let mut ll = log_likelihood(design, response, &beta);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let (h, mu) = information(design, &beta);
        let l = cholesky(&h, config.singular_tolerance).ok_or(StatsError::Separation)?;
        let score: Vec<f64> = (0..p)
            .map(|j| design.iter().zip(response).zip(&mu).map(|((r, y), m)| r[j] * (y - m)).sum())
            .collect();
        let mut delta = cholesky_solve(&l, &score);

        let mut candidate: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + d).collect();
        let mut cand_ll = log_likelihood(design, response, &candidate);
        let mut halvings = 0;
        while !(cand_ll >= ll) && halvings < 60 {
            delta.iter_mut().for_each(|d| *d *= 0.5);
            candidate = beta.iter().zip(&delta).map(|(b, d)| b + d).collect();
            cand_ll = log_likelihood(design, response, &candidate);
            halvings += 1;
        }
        if !(cand_ll >= ll) {
            // no ascent direction left at working precision
            trace.push(ll);
            converged = delta.iter().all(|d| d.abs() < config.tolerance);
            break;
        }
        let step = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        beta = candidate;
        ll = cand_ll;
        trace.push(ll);
        if step < config.tolerance {
            converged = true;
            break;
        }
    }

    let (h, _) = information(design, &beta);
    let l = cholesky(&h, config.singular_tolerance).ok_or(StatsError::Separation)?;
    let mut coefficients = Vec::with_capacity(p);
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e);
        let se = col[j].sqrt();
        let (wald, p_value) = wald_statistic(beta[j], se)?;
        coefficients.push(Coefficient {
            name: if j == 0 { INTERCEPT.to_string() } else { names[j - 1].clone() },
            estimate: beta[j],
            std_error: se,
            wald,
            p_value,
        });
    }
    Ok(LogisticFit {
        target: target.to_string(),
        coefficients,
        converged,
        iterations,
        log_likelihood: ll,
        trace,
    })
}

/// Fits `target ~ predictors` on a dataset. Predictors must be numeric and
/// complete; the positive target class is coded 1.
pub fn fit_logistic(
    ds: &Dataset,
    predictors: &[String],
    target: &str,
    config: &LogisticConfig,
) -> Result<LogisticFit, StatsError> {
    let schema = ds.schema();
    let t = schema.require(target)?;
    if t != schema.target_index() {
        return Err(StatsError::InvalidInput(format!("'{}' is not the target attribute", target)));
    }
    let cols: Vec<usize> = predictors
        .iter()
        .map(|name| {
            let idx = schema.require(name)?;
            if schema.attribute(idx).kind != AttributeKind::Numeric {
                return Err(StatsError::Data(DataError::AttrNotNumeric(name.clone())));
            }
            Ok(idx)
        })
        .collect::<Result<_, _>>()?;

    let mut design = Vec::with_capacity(ds.len());
    let mut response = Vec::with_capacity(ds.len());
    for (row, inst) in ds.instances().iter().enumerate() {
        let mut x = Vec::with_capacity(cols.len() + 1);
        x.push(1.0);
        for &c in &cols {
            match inst.cells[c] {
                Cell::Numeric(v) => x.push(v),
                _ => {
                    return Err(DataError::MissingCell {
                        row,
                        attribute: schema.attribute(c).name.clone(),
                    }
                    .into())
                }
            }
        }
        let label = ds.label(row).ok_or(DataError::MissingTarget { row })?;
        design.push(x);
        response.push(if label == Label::Positive { 1.0 } else { 0.0 });
    }
    fit_logistic_matrix(predictors, target, &design, &response, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub attribute: String,
    pub against: String,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// Observed categories of `attribute` (rows) and `against` (columns).
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub observed: Vec<Vec<f64>>,
    pub expected: Vec<Vec<f64>>,
}

/// Pearson chi-squared test of independence between two nominal
/// attributes, without continuity correction. Categories never observed
/// are dropped before counting degrees of freedom.
pub fn chi_squared_test(ds: &Dataset, attr: &str, against: &str) -> Result<Chi2Result, StatsError> {
    let schema = ds.schema();
    let a = schema.require(attr)?;
    let b = schema.require(against)?;
    for (idx, name) in [(a, attr), (b, against)] {
        if schema.attribute(idx).kind != AttributeKind::Nominal {
            return Err(StatsError::InvalidInput(format!("'{}' is not nominal", name)));
        }
    }
    let (ra, rb) = (&schema.attribute(a).categories, &schema.attribute(b).categories);
    let mut table = vec![vec![0.0f64; rb.len()]; ra.len()];
    for (row, inst) in ds.instances().iter().enumerate() {
        match (inst.cells[a], inst.cells[b]) {
            (Cell::Category(i), Cell::Category(j)) => table[i][j] += 1.0,
            (Cell::Category(_), _) => {
                return Err(DataError::MissingCell { row, attribute: against.to_string() }.into())
            }
            _ => return Err(DataError::MissingCell { row, attribute: attr.to_string() }.into()),
        }
    }
    let rows: Vec<usize> = (0..ra.len()).filter(|&i| table[i].iter().sum::<f64>() > 0.0).collect();
    let cols: Vec<usize> = (0..rb.len()).filter(|&j| table.iter().map(|r| r[j]).sum::<f64>() > 0.0).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return Err(StatsError::ZeroExpectedCell { attribute: attr.to_string() });
    }
    let observed: Vec<Vec<f64>> = rows.iter().map(|&i| cols.iter().map(|&j| table[i][j]).collect()).collect();
    let row_tot: Vec<f64> = observed.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<f64> = (0..cols.len()).map(|j| observed.iter().map(|r| r[j]).sum()).collect();
    let grand: f64 = row_tot.iter().sum();
    let expected: Vec<Vec<f64>> = row_tot
        .iter()
        .map(|rt| col_tot.iter().map(|ct| rt * ct / grand).collect())
        .collect();
    let statistic: f64 = observed
        .iter()
        .flatten()
        .zip(expected.iter().flatten())
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = ((rows.len() - 1) * (cols.len() - 1)) as u32;
    Ok(Chi2Result {
        attribute: attr.to_string(),
        against: against.to_string(),
        statistic,
        df,
        p_value: chi2_sf(statistic, df)?,
        row_labels: rows.iter().map(|&i| ra[i].clone()).collect(),
        col_labels: cols.iter().map(|&j| rb[j].clone()).collect(),
        observed,
        expected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningTest {
    Wald,
    ChiSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionReason {
    Threshold,
    Forced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenedAttribute {
    pub name: String,
    pub test: ScreeningTest,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub selected: Option<SelectionReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub alpha: f64,
    pub force_include: Vec<String>,
    pub screened: Vec<ScreenedAttribute>,
    /// Selected names in schema order.
    pub selected: Vec<String>,
}

impl FeatureSet {
    /// Marks every unselected feature attribute as ignored.
    pub fn restrict(&self, schema: &Schema) -> Result<Schema, DataError> {
        let mut out = schema.clone();
        for attr in schema.attributes() {
            if attr.role == Role::Feature && !self.selected.contains(&attr.name) {
                out = out.with_role(&attr.name, Role::Ignored)?;
            }
        }
        Ok(out)
    }

    pub fn is_selected(&self, name: &str) -> bool {
        self.selected.iter().any(|s| s == name)
    }

    /// Plain-text tables in the layout of a Wald table and a chi-square table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mark = |s: Option<SelectionReason>| match s {
            Some(SelectionReason::Threshold) => "yes",
            Some(SelectionReason::Forced) => "forced",
            None => "no",
        };
        let wald: Vec<_> = self.screened.iter().filter(|s| s.test == ScreeningTest::Wald).collect();
        let chi: Vec<_> = self.screened.iter().filter(|s| s.test == ScreeningTest::ChiSquared).collect();
        let _ = writeln!(out, "# alpha = {}", self.alpha);
        if !wald.is_empty() {
            let _ = writeln!(out, "{:<16} {:>10} {:>8} {:>9}", "Attribute", "chi2 wald", "p-value", "selected");
            for s in wald {
                let _ = writeln!(out, "{:<16} {:>10.3} {:>8.4} {:>9}", s.name, s.statistic, s.p_value, mark(s.selected));
            }
            out.push('\n');
        }
        if !chi.is_empty() {
            let _ = writeln!(out, "{:<16} {:>10} {:>3} {:>8} {:>9}", "Attribute", "chi2", "df", "p-value", "selected");
            for s in chi {
                let _ = writeln!(
                    out,
                    "{:<16} {:>10.2} {:>3} {:>8.4} {:>9}",
                    s.name,
                    s.statistic,
                    s.df,
                    s.p_value,
                    mark(s.selected)
                );
            }
            out.push('\n');
        }
        let _ = writeln!(out, "selected: {}", self.selected.join(", "));
        out
    }
}

/// Selects every screened attribute with p <= alpha, plus `force_include`.
pub fn select_features(
    schema: &Schema,
    logit: Option<&LogisticFit>,
    chi2s: &[Chi2Result],
    alpha: f64,
    force_include: &[String],
) -> Result<FeatureSet, StatsError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(StatsError::InvalidInput(format!("alpha must be in (0, 1], got {}", alpha)));
    }
    for name in force_include {
        match schema.index_of(name) {
            Some(i) if schema.attribute(i).role == Role::Feature => {}
            _ => return Err(StatsError::UnknownAttribute(name.clone())),
        }
    }
    let mut screened = Vec::new();
    if let Some(fit) = logit {
        for c in fit.predictors() {
            screened.push(ScreenedAttribute {
                name: c.name.clone(),
                test: ScreeningTest::Wald,
                statistic: c.wald,
                df: 1,
                p_value: c.p_value,
                selected: None,
            });
        }
    }
    for r in chi2s {
        screened.push(ScreenedAttribute {
            name: r.attribute.clone(),
            test: ScreeningTest::ChiSquared,
            statistic: r.statistic,
            df: r.df,
            p_value: r.p_value,
            selected: None,
        });
    }
    for s in &mut screened {
        match schema.index_of(&s.name) {
            Some(i) if schema.attribute(i).role == Role::Feature => {}
            _ => return Err(StatsError::UnknownAttribute(s.name.clone())),
        }
        if s.p_value <= alpha {
            s.selected = Some(SelectionReason::Threshold);
        } else if force_include.contains(&s.name) {
            s.selected = Some(SelectionReason::Forced);
        }
    }
    let selected = schema
        .attributes()
        .iter()
        .filter(|a| {
            force_include.contains(&a.name)
                || screened.iter().any(|s| s.name == a.name && s.selected.is_some())
        })
        .map(|a| a.name.clone())
        .collect();
    Ok(FeatureSet {
        alpha,
        force_include: force_include.to_vec(),
        screened,
        selected,
    })
}

/// Runs the full screen on a complete dataset: one multivariable logistic
/// fit over all numeric features and one chi-squared test per nominal
/// feature against the target.
pub fn screen(
    ds: &Dataset,
    alpha: f64,
    force_include: &[String],
    config: &LogisticConfig,
) -> Result<(Option<LogisticFit>, Vec<Chi2Result>, FeatureSet), StatsError> {
    let schema = ds.schema();
    let target = schema.target().name.clone();
    let features = schema.feature_indices();
    let numeric: Vec<String> = features
        .iter()
        .filter(|&&i| schema.attribute(i).kind == AttributeKind::Numeric)
        .map(|&i| schema.attribute(i).name.clone())
        .collect();
    let logit = if numeric.is_empty() {
        None
    } else {
        Some(fit_logistic(ds, &numeric, &target, config)?)
    };
    let chi2s = features
        .iter()
        .filter(|&&i| schema.attribute(i).kind == AttributeKind::Nominal)
        .map(|&i| chi_squared_test(ds, &schema.attribute(i).name, &target))
        .collect::<Result<Vec<_>, _>>()?;
    let set = select_features(schema, logit.as_ref(), &chi2s, alpha, force_include)?;
    Ok((logit, chi2s, set))
}
