//! Learner selection and the versioned model document.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adtree::{fit_adtree, AdTreeConfig, AdTreeModel};
use crate::c45::{fit_c45, C45Config, C45Tree};
use crate::data::{Dataset, DiscretizeRule, Instance, Label, Schema};
use crate::error::{DataError, FormatError, ModelError};

pub const MODEL_FORMAT: &str = "dxtree-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    AdTree,
    C45,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::AdTree => "adtree",
            Algorithm::C45 => "c45",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adtree" => Ok(Algorithm::AdTree),
            "c45" | "j48" => Ok(Algorithm::C45),
            other => Err(format!("unknown algorithm '{}' (expected adtree or c45)", other)),
        }
    }
}

/// Algorithm tag plus its configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "config", rename_all = "lowercase")]
pub enum Learner {
    AdTree(AdTreeConfig),
    C45(C45Config),
}

impl Learner {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Learner::AdTree(_) => Algorithm::AdTree,
            Learner::C45(_) => Algorithm::C45,
        }
    }

    pub fn fit(&self, ds: &Dataset) -> Result<TrainedModel, ModelError> {
        match self {
            Learner::AdTree(cfg) => fit_adtree(ds, cfg).map(TrainedModel::AdTree),
            Learner::C45(cfg) => fit_c45(ds, cfg).map(TrainedModel::C45),
        }
    }

    /// What the ROC score of this learner means.
    pub fn score_source(&self) -> &'static str {
        match self {
            Learner::AdTree(_) => "adtree margin F(x)",
            Learner::C45(_) => "c45 leaf fraction of positive training instances",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "model", rename_all = "lowercase")]
pub enum TrainedModel {
    AdTree(AdTreeModel),
    C45(C45Tree),
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            TrainedModel::AdTree(_) => Algorithm::AdTree,
            TrainedModel::C45(_) => Algorithm::C45,
        }
    }

    pub fn schema(&self) -> &Schema {
        match self {
            TrainedModel::AdTree(m) => &m.schema,
            TrainedModel::C45(t) => &t.schema,
        }
    }

    /// Predicted label and a ranking score that grows with the evidence
    /// for the positive class.
    pub fn predict(&self, inst: &Instance) -> Result<(Label, f64), ModelError> {
        match self {
            TrainedModel::AdTree(m) => {
                let f = m.score(inst)?;
                Ok((if f >= 0.0 { Label::Positive } else { Label::Negative }, f))
            }
            TrainedModel::C45(t) => Ok((t.classify(inst)?.0, t.positive_score(inst)?)),
        }
    }

    pub fn render(&self) -> String {
        match self {
            TrainedModel::AdTree(m) => m.render(),
            TrainedModel::C45(t) => t.render(),
        }
    }
}

/// Serialized model: the raw input schema, the discretization rules that
/// turn it into the training schema, and the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub input_schema: Schema,
    #[serde(default)]
    pub preprocessing: Vec<DiscretizeRule>,
    #[serde(flatten)]
    pub model: TrainedModel,
}

impl ModelDocument {
    pub fn new(input_schema: Schema, preprocessing: Vec<DiscretizeRule>, model: TrainedModel) -> Self {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            input_schema,
            preprocessing,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String, FormatError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        let format = probe.get("format").and_then(|v| v.as_str()).unwrap_or("");
        if format != MODEL_FORMAT {
            return Err(FormatError::WrongFormat {
                expected: MODEL_FORMAT.into(),
                found: format.into(),
            });
        }
        let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_VERSION {
            return Err(FormatError::Version(version));
        }
        let doc: ModelDocument = serde_json::from_value(probe)?;
        if doc.model.schema().fingerprint() != fingerprint_of(&doc.model) {
            return Err(ModelError::SchemaMismatch("stored fingerprint does not match the stored schema".into()).into());
        }
        Ok(doc)
    }

    /// Applies the stored preprocessing to data read with `input_schema`.
    pub fn prepare(&self, ds: &Dataset) -> Result<Dataset, DataError> {
        let mut out = ds.clone();
        for rule in &self.preprocessing {
            out = rule.apply(&out)?;
        }
        Ok(out)
    }
}

fn fingerprint_of(model: &TrainedModel) -> String {
    match model {
        TrainedModel::AdTree(m) => m.fingerprint.clone(),
        TrainedModel::C45(t) => t.fingerprint.clone(),
    }
}
