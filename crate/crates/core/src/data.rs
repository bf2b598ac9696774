//! Tabular datasets: schema, CSV ingestion, mean imputation and discretization.
//!
//! Cells are typed by the schema, never inferred from the data. Nominal
//! categories are fixed up front so train and test splits always agree on
//! category indices. The target attribute is nominal with exactly two
//! categories and the positive class is listed first.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::DataError;

/// Tokens treated as a missing cell when reading CSV.
pub const MISSING_TOKENS: [&str; 2] = ["", "?"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Feature,
    Target,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    /// Category labels in index order. Empty for numeric attributes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    pub role: Role,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>, role: Role) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
            categories: Vec::new(),
            role,
        }
    }

    pub fn nominal<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
        role: Role,
    ) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Nominal,
            categories: categories.into_iter().map(Into::into).collect(),
            role,
        }
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }
}

/// Ordered list of attributes with exactly one binary nominal target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Attribute>", into = "Vec<Attribute>")]
pub struct Schema {
    attributes: Vec<Attribute>,
    target: usize,
}

impl TryFrom<Vec<Attribute>> for Schema {
    type Error = DataError;

    fn try_from(attributes: Vec<Attribute>) -> Result<Self, Self::Error> {
        Schema::new(attributes)
    }
}

impl From<Schema> for Vec<Attribute> {
    fn from(schema: Schema) -> Self {
        schema.attributes
    }
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self, DataError> {
        let mut seen = HashMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            if attr.name.is_empty() {
                return Err(DataError::InvalidSchema(format!("attribute {} has an empty name", i)));
            }
            if seen.insert(attr.name.as_str(), i).is_some() {
                return Err(DataError::InvalidSchema(format!("duplicate attribute '{}'", attr.name)));
            }
            match attr.kind {
                AttributeKind::Numeric if !attr.categories.is_empty() => {
                    return Err(DataError::InvalidSchema(format!(
                        "numeric attribute '{}' lists categories",
                        attr.name
                    )));
                }
                AttributeKind::Nominal => {
                    if attr.categories.is_empty() {
                        return Err(DataError::InvalidSchema(format!(
                            "nominal attribute '{}' has no categories",
                            attr.name
                        )));
                    }
                    let mut labels = std::collections::HashSet::new();
                    for c in &attr.categories {
                        if c.is_empty() || MISSING_TOKENS.contains(&c.as_str()) {
                            return Err(DataError::InvalidSchema(format!(
                                "attribute '{}' has an empty or reserved category label",
                                attr.name
                            )));
                        }
                        if !labels.insert(c) {
                            return Err(DataError::InvalidSchema(format!(
                                "attribute '{}' repeats category '{}'",
                                attr.name, c
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
        let targets: Vec<usize> = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::Target)
            .map(|(i, _)| i)
            .collect();
        let target = match targets.as_slice() {
            [t] => *t,
            _ => {
                return Err(DataError::InvalidSchema(format!(
                    "expected exactly one target attribute, found {}",
                    targets.len()
                )))
            }
        };
        let t = &attributes[target];
        if t.kind != AttributeKind::Nominal || t.categories.len() != 2 {
            return Err(DataError::InvalidSchema(format!(
                "target '{}' must be nominal with exactly two categories",
                t.name
            )));
        }
        Ok(Schema { attributes, target })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize, DataError> {
        self.index_of(name)
            .ok_or_else(|| DataError::UnknownAttribute(name.to_string()))
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn target(&self) -> &Attribute {
        &self.attributes[self.target]
    }

    pub fn positive_label(&self) -> &str {
        &self.target().categories[0]
    }

    pub fn negative_label(&self) -> &str {
        &self.target().categories[1]
    }

    /// Indices of feature-role attributes in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::Feature)
            .map(|(i, _)| i)
            .collect()
    }

    /// Returns a copy with `name`'s role replaced.
    pub fn with_role(&self, name: &str, role: Role) -> Result<Schema, DataError> {
        let idx = self.require(name)?;
        let mut attributes = self.attributes.clone();
        attributes[idx].role = role;
        Schema::new(attributes)
    }

    /// Sidecar text: one line per attribute, `name,kind,role[,cat1|cat2|...]`.
    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for a in &self.attributes {
            let kind = match a.kind {
                AttributeKind::Numeric => "numeric",
                AttributeKind::Nominal => "nominal",
            };
            let role = match a.role {
                Role::Feature => "feature",
                Role::Target => "target",
                Role::Ignored => "ignored",
            };
            out.push_str(&a.name);
            out.push(',');
            out.push_str(kind);
            out.push(',');
            out.push_str(role);
            if a.kind == AttributeKind::Nominal {
                out.push(',');
                out.push_str(&a.categories.join("|"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_sidecar(text: &str) -> Result<Schema, DataError> {
        let mut attributes = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| DataError::SchemaLine {
                line: lineno + 1,
                message: msg.to_string(),
            };
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() < 3 || parts.len() > 4 {
                return Err(bad("expected name,kind,role[,categories]"));
            }
            let kind = match parts[1].to_ascii_lowercase().as_str() {
                "numeric" => AttributeKind::Numeric,
                "nominal" => AttributeKind::Nominal,
                other => return Err(bad(&format!("unknown kind '{}'", other))),
            };
            let role = match parts[2].to_ascii_lowercase().as_str() {
                "feature" => Role::Feature,
                "target" => Role::Target,
                "ignored" => Role::Ignored,
                other => return Err(bad(&format!("unknown role '{}'", other))),
            };
            let categories = match (kind, parts.get(3)) {
                (AttributeKind::Nominal, Some(cats)) => {
                    cats.split('|').map(|c| c.trim().to_string()).collect()
                }
                (AttributeKind::Nominal, None) => {
                    return Err(bad("nominal attribute needs a category list"))
                }
                (AttributeKind::Numeric, Some(_)) => {
                    return Err(bad("numeric attribute cannot list categories"))
                }
                (AttributeKind::Numeric, None) => Vec::new(),
            };
            attributes.push(Attribute {
                name: parts[0].to_string(),
                kind,
                categories,
                role,
            });
        }
        Schema::new(attributes)
    }

    /// Hex SHA-256 prefix of the sidecar text.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_sidecar().as_bytes());
        digest.iter().take(8).map(|b| format!("{:02x}", b)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Numeric(f64),
    Category(usize),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match *self {
            Cell::Numeric(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_category(&self) -> Option<usize> {
        match *self {
            Cell::Category(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub cells: Vec<Cell>,
}

impl Instance {
    pub fn new(cells: Vec<Cell>) -> Self {
        Instance { cells }
    }
}

/// Binary class of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_category(index: usize) -> Label {
        if index == 0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn category(self) -> usize {
        match self {
            Label::Positive => 0,
            Label::Negative => 1,
        }
    }

    /// +1 for positive, -1 for negative.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    instances: Vec<Instance>,
}

impl Dataset {
    /// Builds a dataset, checking every cell against the schema.
    pub fn new(schema: Schema, instances: Vec<Instance>) -> Result<Self, DataError> {
        for (row, inst) in instances.iter().enumerate() {
            if inst.cells.len() != schema.len() {
                return Err(DataError::MalformedRow {
                    line: row + 1,
                    expected: schema.len(),
                    found: inst.cells.len(),
                });
            }
            for (cell, attr) in inst.cells.iter().zip(schema.attributes()) {
                let ok = match (cell, attr.kind) {
                    (Cell::Missing, _) => true,
                    (Cell::Numeric(v), AttributeKind::Numeric) => v.is_finite(),
                    (Cell::Category(c), AttributeKind::Nominal) => *c < attr.categories.len(),
                    _ => false,
                };
                if !ok {
                    return Err(DataError::CellKind {
                        row,
                        attribute: attr.name.clone(),
                    });
                }
            }
        }
        Ok(Dataset { schema, instances })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    pub fn with_schema(&self, schema: Schema) -> Result<Dataset, DataError> {
        Dataset::new(schema, self.instances.clone())
    }

    pub fn label(&self, row: usize) -> Option<Label> {
        self.instances[row].cells[self.schema.target_index()]
            .as_category()
            .map(Label::from_category)
    }

    /// All labels; fails if any target cell is missing.
    pub fn labels(&self) -> Result<Vec<Label>, DataError> {
        (0..self.len())
            .map(|r| self.label(r).ok_or(DataError::MissingTarget { row: r }))
            .collect()
    }

    /// Errors unless every feature cell is present and every target is labelled.
    pub fn require_complete(&self) -> Result<(), DataError> {
        let features = self.schema.feature_indices();
        for (row, inst) in self.instances.iter().enumerate() {
            if inst.cells[self.schema.target_index()].is_missing() {
                return Err(DataError::MissingTarget { row });
            }
            for &f in &features {
                if inst.cells[f].is_missing() {
                    return Err(DataError::MissingCell {
                        row,
                        attribute: self.schema.attribute(f).name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn numeric_column(&self, attr: usize) -> Vec<Option<f64>> {
        self.instances.iter().map(|i| i.cells[attr].as_numeric()).collect()
    }
}

fn parse_rows<R: Read>(
    reader: R,
    schema: &Schema,
    allow_unlabelled: bool,
) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(DataError::from)?.clone();

    // column position in the file for each schema attribute
    let mut position: Vec<Option<usize>> = vec![None; schema.len()];
    for (col, name) in header.iter().enumerate() {
        let idx = schema.index_of(name).ok_or_else(|| DataError::HeaderMismatch(format!(
            "column '{}' is not in the schema",
            name
        )))?;
        if position[idx].replace(col).is_some() {
            return Err(DataError::HeaderMismatch(format!("column '{}' appears twice", name)));
        }
    }
    for (idx, pos) in position.iter().enumerate() {
        if pos.is_none() && !(allow_unlabelled && idx == schema.target_index()) {
            return Err(DataError::HeaderMismatch(format!(
                "schema attribute '{}' has no column",
                schema.attribute(idx).name
            )));
        }
    }

    let mut instances = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(DataError::from)?;
        // header is line 1
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        if record.len() != header.len() {
            return Err(DataError::MalformedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut cells = Vec::with_capacity(schema.len());
        for (idx, attr) in schema.attributes().iter().enumerate() {
            let raw = match position[idx] {
                Some(col) => &record[col],
                None => "",
            };
            let cell = if MISSING_TOKENS.contains(&raw) {
                Cell::Missing
            } else {
                match attr.kind {
                    AttributeKind::Numeric => match raw.parse::<f64>() {
                        Ok(v) if v.is_finite() => Cell::Numeric(v),
                        _ => {
                            return Err(DataError::NonNumericCell {
                                line,
                                attribute: attr.name.clone(),
                                value: raw.to_string(),
                            })
                        }
                    },
                    AttributeKind::Nominal => match attr.category_index(raw) {
                        Some(c) => Cell::Category(c),
                        None => {
                            return Err(DataError::UnknownCategory {
                                line,
                                attribute: attr.name.clone(),
                                value: raw.to_string(),
                            })
                        }
                    },
                }
            };
            if idx == schema.target_index() && cell.is_missing() && !allow_unlabelled {
                return Err(DataError::MissingTarget { row });
            }
            cells.push(cell);
        }
        instances.push(Instance { cells });
    }
    Dataset::new(schema.clone(), instances)
}

/// Reads labelled CSV. Header names must match the schema (any order);
/// empty cells and `?` are missing. Target cells may not be missing.
pub fn parse_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, DataError> {
    parse_rows(reader, schema, false)
}

/// Like [`parse_csv`], but the target column may be absent or blank.
pub fn parse_csv_unlabelled<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, DataError> {
    parse_rows(reader, schema, true)
}

/// Writes the dataset as CSV in schema column order, missing cells as `?`.
pub fn serialize_csv(ds: &Dataset) -> String {
    let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<&str> = ds.schema.attributes().iter().map(|a| a.name.as_str()).collect();
    wtr.write_record(&header).expect("in-memory write");
    for inst in &ds.instances {
        let row: Vec<String> = inst
            .cells
            .iter()
            .zip(ds.schema.attributes())
            .map(|(cell, attr)| match *cell {
                Cell::Numeric(v) => format!("{}", v),
                Cell::Category(c) => attr.categories[c].clone(),
                Cell::Missing => "?".to_string(),
            })
            .collect();
        wtr.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedColumn {
    pub attribute: String,
    pub imputed: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub columns: Vec<ImputedColumn>,
}

impl ImputationReport {
    /// CSV with header `attribute,imputed,mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("attribute,imputed,mean\n");
        for c in &self.columns {
            out.push_str(&format!("{},{},{}\n", c.attribute, c.imputed, c.mean));
        }
        out
    }
}

impl fmt::Display for ImputationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.columns {
            writeln!(f, "{:<12} {} values -- replaced with {:.4}", c.attribute, c.imputed, c.mean)?;
        }
        Ok(())
    }
}

/// Replaces missing numeric feature cells with the column mean of the
/// observed cells. Nominal and non-feature columns are left alone.
pub fn impute_means(ds: &Dataset) -> Result<(Dataset, ImputationReport), DataError> {
    let mut instances = ds.instances.clone();
    let mut report = ImputationReport::default();
    for idx in ds.schema.feature_indices() {
        let attr = ds.schema.attribute(idx);
        if attr.kind != AttributeKind::Numeric {
            continue;
        }
        let column = ds.numeric_column(idx);
        let observed: Vec<f64> = column.iter().flatten().copied().collect();
        let missing = column.len() - observed.len();
        if missing == 0 {
            continue;
        }
        if observed.is_empty() {
            return Err(DataError::AllMissingColumn(attr.name.clone()));
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        for inst in instances.iter_mut() {
            if inst.cells[idx].is_missing() {
                inst.cells[idx] = Cell::Numeric(mean);
            }
        }
        report.columns.push(ImputedColumn {
            attribute: attr.name.clone(),
            imputed: missing,
            mean,
        });
    }
    Ok((Dataset::new(ds.schema.clone(), instances)?, report))
}

/// A binning rule turning a numeric attribute into a nominal one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeRule {
    pub attribute: String,
    pub cutpoints: Vec<f64>,
    pub labels: Vec<String>,
}

impl DiscretizeRule {
    /// Parses `attr:cut1[:cut2...]:label1:label2[...]`: k cutpoints followed
    /// by k + 1 labels.
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let bad = || DataError::InvalidRule(text.to_string());
        if parts.len() < 4 || parts.len() % 2 != 0 || parts[0].is_empty() {
            return Err(bad());
        }
        let k = (parts.len() - 2) / 2;
        let cutpoints = parts[1..=k]
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DiscretizeRule {
            attribute: parts[0].to_string(),
            cutpoints,
            labels: parts[k + 1..].iter().map(|l| l.to_string()).collect(),
        })
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset, DataError> {
        discretize(ds, &self.attribute, &self.cutpoints, &self.labels)
    }
}

/// Label index for `value`: the number of cutpoints `c` with `value >= c`.
pub fn bin_index(value: f64, cutpoints: &[f64]) -> usize {
    cutpoints.iter().filter(|&&c| value >= c).count()
}

/// Converts numeric `attr` to nominal. A value below the first cutpoint
/// takes the first label; a value equal to a cutpoint moves up.
pub fn discretize(
    ds: &Dataset,
    attr: &str,
    cutpoints: &[f64],
    labels: &[String],
) -> Result<Dataset, DataError> {
    let idx = ds.schema.require(attr)?;
    let attribute = ds.schema.attribute(idx);
    if attribute.kind != AttributeKind::Numeric {
        return Err(DataError::AttrNotNumeric(attr.to_string()));
    }
    if labels.len() != cutpoints.len() + 1 {
        return Err(DataError::LabelArity {
            cutpoints: cutpoints.len(),
            labels: labels.len(),
        });
    }
    if cutpoints.iter().any(|c| !c.is_finite()) || cutpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DataError::InvalidRule(format!(
            "cutpoints for '{}' must be finite and strictly ascending",
            attr
        )));
    }
    let mut attributes = ds.schema.attributes().to_vec();
    attributes[idx] = Attribute::nominal(attr, labels.iter().cloned(), attribute.role);
    let schema = Schema::new(attributes)?;

    let mut instances = ds.instances.clone();
    for (row, inst) in instances.iter_mut().enumerate() {
        let value = inst.cells[idx].as_numeric().ok_or_else(|| DataError::MissingCell {
            row,
            attribute: attr.to_string(),
        })?;
        inst.cells[idx] = Cell::Category(bin_index(value, cutpoints));
    }
    Dataset::new(schema, instances)
}

/// (positives, negatives) among labelled instances.
pub fn class_distribution(ds: &Dataset) -> (usize, usize) {
    let t = ds.schema.target_index();
    ds.instances.iter().fold((0, 0), |(p, n), inst| match inst.cells[t] {
        Cell::Category(0) => (p + 1, n),
        Cell::Category(_) => (p, n + 1),
        _ => (p, n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse_schema() -> Schema {
        Schema::new(vec![
            Attribute::numeric("Pulse", Role::Feature),
            Attribute::nominal("Dengue", ["YES", "NO"], Role::Target),
        ])
        .unwrap()
    }

    #[test]
    fn parses_typed_cells() {
        let ds = parse_csv("Pulse,Dengue\n89,YES\n".as_bytes(), &pulse_schema()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.instances()[0].cells, vec![Cell::Numeric(89.0), Cell::Category(0)]);
    }

    #[test]
    fn header_order_is_free() {
        let ds = parse_csv("Dengue,Pulse\nNO,101.5\n".as_bytes(), &pulse_schema()).unwrap();
        assert_eq!(ds.instances()[0].cells, vec![Cell::Numeric(101.5), Cell::Category(1)]);
    }

    #[test]
    fn missing_tokens() {
        let ds = parse_csv("Pulse,Dengue\n?,YES\n,NO\n".as_bytes(), &pulse_schema()).unwrap();
        assert!(ds.instances()[0].cells[0].is_missing());
        assert!(ds.instances()[1].cells[0].is_missing());
    }

    #[test]
    fn rejects_bad_cells() {
        let s = pulse_schema();
        assert!(matches!(
            parse_csv("Pulse,Dengue\nabc,YES\n".as_bytes(), &s),
            Err(DataError::NonNumericCell { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv("Pulse,Dengue\n80,MAYBE\n".as_bytes(), &s),
            Err(DataError::UnknownCategory { .. })
        ));
        assert!(matches!(
            parse_csv("Pulse,Dengue\n80,YES,1\n".as_bytes(), &s),
            Err(DataError::MalformedRow { .. })
        ));
        assert!(matches!(
            parse_csv("Pulse,Fever\n80,YES\n".as_bytes(), &s),
            Err(DataError::HeaderMismatch(_))
        ));
        assert!(matches!(
            parse_csv("Pulse\n80\n".as_bytes(), &s),
            Err(DataError::HeaderMismatch(_))
        ));
        assert!(matches!(
            parse_csv("Pulse,Dengue\n80,?\n".as_bytes(), &s),
            Err(DataError::MissingTarget { .. })
        ));
    }

    #[test]
    fn unlabelled_parse_allows_absent_target() {
        let ds = parse_csv_unlabelled("Pulse\n80\n".as_bytes(), &pulse_schema()).unwrap();
        assert!(ds.instances()[0].cells[1].is_missing());
    }

    #[test]
    fn schema_invariants() {
        assert!(Schema::new(vec![Attribute::numeric("a", Role::Feature)]).is_err());
        assert!(Schema::new(vec![Attribute::nominal("t", ["a", "b", "c"], Role::Target)]).is_err());
        assert!(Schema::new(vec![Attribute::nominal("t", ["a", "a"], Role::Target)]).is_err());
        assert!(Schema::new(vec![
            Attribute::nominal("t", ["a", "b"], Role::Target),
            Attribute::nominal("u", ["x", "y"], Role::Target),
        ])
        .is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let text = "FD,numeric,feature\nIgM,nominal,ignored,POS|NEG\nDengue,nominal,target,YES|NO\n";
        let schema = Schema::parse_sidecar(text).unwrap();
        assert_eq!(schema.to_sidecar(), text);
        assert_eq!(schema.positive_label(), "YES");
        assert_eq!(schema.attribute(1).role, Role::Ignored);
        assert!(Schema::parse_sidecar("FD,numeric\n").is_err());
        assert!(Schema::parse_sidecar("FD,ordinal,feature\n").is_err());
    }

    #[test]
    fn imputes_column_mean() {
        let ds = parse_csv("Pulse,Dengue\n1,YES\n?,NO\n3,YES\n".as_bytes(), &pulse_schema()).unwrap();
        let (out, report) = impute_means(&ds).unwrap();
        assert_eq!(out.numeric_column(0), vec![Some(1.0), Some(2.0), Some(3.0)]);
        assert_eq!(
            report.columns,
            vec![ImputedColumn { attribute: "Pulse".into(), imputed: 1, mean: 2.0 }]
        );
    }

    #[test]
    fn imputation_noop_without_missing() {
        let ds = parse_csv("Pulse,Dengue\n1,YES\n3,YES\n".as_bytes(), &pulse_schema()).unwrap();
        let (out, report) = impute_means(&ds).unwrap();
        assert_eq!(out, ds);
        assert!(report.columns.is_empty());
    }

    #[test]
    fn all_missing_column_fails() {
        let ds = parse_csv("Pulse,Dengue\n?,YES\n?,NO\n".as_bytes(), &pulse_schema()).unwrap();
        assert!(matches!(impute_means(&ds), Err(DataError::AllMissingColumn(_))));
    }

    #[test]
    fn pulse_boundary_rule() {
        let ds = parse_csv(
            "Pulse,Dengue\n89.6719,YES\n100,NO\n99.999,YES\n".as_bytes(),
            &pulse_schema(),
        )
        .unwrap();
        let rule = DiscretizeRule::parse("Pulse:100:L:H").unwrap();
        let out = rule.apply(&ds).unwrap();
        let attr = out.schema().attribute(0);
        assert_eq!(attr.kind, AttributeKind::Nominal);
        let labels: Vec<&str> = out
            .instances()
            .iter()
            .map(|i| attr.categories[i.cells[0].as_category().unwrap()].as_str())
            .collect();
        assert_eq!(labels, vec!["L", "H", "L"]);
    }

    #[test]
    fn rule_syntax() {
        let r = DiscretizeRule::parse("Pulse:60:100:low:mid:high").unwrap();
        assert_eq!(r.cutpoints, vec![60.0, 100.0]);
        assert_eq!(r.labels, vec!["low", "mid", "high"]);
        for bad in ["Pulse", "Pulse:100:L", "Pulse:x:L:H", ":1:L:H", "Pulse:1:2:L:H"] {
            assert!(DiscretizeRule::parse(bad).is_err(), "{}", bad);
        }
    }

    #[test]
    fn discretize_errors() {
        let s = pulse_schema();
        let ds = parse_csv("Pulse,Dengue\n?,YES\n".as_bytes(), &s).unwrap();
        let labels = vec!["L".to_string(), "H".to_string()];
        assert!(matches!(
            discretize(&ds, "Pulse", &[100.0], &labels),
            Err(DataError::MissingCell { .. })
        ));
        assert!(matches!(
            discretize(&ds, "Dengue", &[100.0], &labels),
            Err(DataError::AttrNotNumeric(_))
        ));
        assert!(matches!(
            discretize(&ds, "Pulse", &[90.0, 100.0], &labels),
            Err(DataError::LabelArity { .. })
        ));
    }

    #[test]
    fn counts_classes() {
        let ds = parse_csv("Pulse,Dengue\n1,YES\n2,YES\n3,YES\n".as_bytes(), &pulse_schema()).unwrap();
        assert_eq!(class_distribution(&ds), (3, 0));
    }

    #[test]
    fn fingerprint_tracks_schema() {
        let a = pulse_schema();
        let b = a.with_role("Pulse", Role::Ignored).unwrap();
        assert_eq!(a.fingerprint(), pulse_schema().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }
}
