//! Binary diagnosis from tabular clinical records: alternating decision
//! trees, C4.5, statistical feature screening and stratified
//! cross-validation with ROC analysis.

// NaN must fail the range checks, so `!(x >= 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adtree;
pub mod c45;
pub mod cli;
pub mod corpus;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod plot;
pub mod select;
pub mod stats;

pub use adtree::{fit_adtree, AdTreeConfig, AdTreeModel};
pub use c45::{fit_c45, C45Config, C45Tree};
pub use data::{Attribute, AttributeKind, Cell, Dataset, Instance, Label, Role, Schema};
pub use error::{CorpusError, DataError, EvalError, FormatError, ModelError, StatsError};
pub use eval::{cross_validate, roc_curve, ConfusionMatrix, EvalReport, RocCurve};
pub use model::{Algorithm, Learner, ModelDocument, TrainedModel};
pub use stats::chi2_sf;
