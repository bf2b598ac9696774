//! Seeded synthetic cohorts with exact class counts.
//!
//! The built-in presets are synthetic. Their parameters only make demo
//! output legible; they are not estimates from any patient data.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::data::{Attribute, Cell, Dataset, Instance, Role, Schema};
use crate::error::CorpusError;

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Normal {
        mean_pos: f64,
        sd_pos: f64,
        mean_neg: f64,
        sd_neg: f64,
        /// Decimal places kept after sampling.
        decimals: u32,
    },
    Categorical {
        categories: Vec<String>,
        probs_pos: Vec<f64>,
        probs_neg: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticAttribute {
    pub name: String,
    pub role: Role,
    pub missing_rate: f64,
    pub generator: Generator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub n: usize,
    pub n_pos: usize,
    pub seed: u64,
    pub target: String,
    /// Positive label first.
    pub target_labels: [String; 2],
    pub attributes: Vec<SyntheticAttribute>,
}

fn numeric(name: &str, missing_rate: f64, pos: (f64, f64), neg: (f64, f64), decimals: u32) -> SyntheticAttribute {
    SyntheticAttribute {
        name: name.to_string(),
        role: Role::Feature,
        missing_rate,
        generator: Generator::Normal {
            mean_pos: pos.0,
            sd_pos: pos.1,
            mean_neg: neg.0,
            sd_neg: neg.1,
            decimals,
        },
    }
}

fn yes_no(name: &str, p_pos: f64, p_neg: f64) -> SyntheticAttribute {
    SyntheticAttribute {
        name: name.to_string(),
        role: Role::Feature,
        missing_rate: 0.0,
        generator: Generator::Categorical {
            categories: vec!["YES".into(), "NO".into()],
            probs_pos: vec![p_pos, 1.0 - p_pos],
            probs_neg: vec![p_neg, 1.0 - p_neg],
        },
    }
}

impl CohortSpec {
    /// Dengue-like cohort: 65 records, 53 positive, the clinical and
    /// laboratory attributes of a fever work-up, and two antibody columns
    /// that are mostly missing and marked ignored.
    pub fn clinical(seed: u64) -> CohortSpec {
        let antibody = |name: &str| SyntheticAttribute {
            name: name.to_string(),
            role: Role::Ignored,
            missing_rate: 0.45,
            generator: Generator::Categorical {
                categories: vec!["POS".into(), "NEG".into()],
                probs_pos: vec![0.7, 0.3],
                probs_neg: vec![0.2, 0.8],
            },
        };
        CohortSpec {
            n: 65,
            n_pos: 53,
            seed,
            target: "Dengue".into(),
            target_labels: ["YES".into(), "NO".into()],
            attributes: vec![
                numeric("FD", 1.0 / 65.0, (7.8, 2.0), (6.0, 2.2), 0),
                numeric("Pulse", 1.0 / 65.0, (88.0, 11.0), (97.0, 13.0), 0),
                numeric("HB", 7.0 / 65.0, (12.4, 1.6), (10.9, 1.7), 1),
                numeric("WBC", 8.0 / 65.0, (8.6, 3.2), (12.8, 4.0), 2),
                numeric("PLT", 7.0 / 65.0, (185.0, 70.0), (240.0, 80.0), 0),
                numeric("PCV", 24.0 / 65.0, (43.4, 5.0), (41.5, 5.0), 1),
                yes_no("Vomiting", 0.55, 0.45),
                yes_no("BodyPains", 0.75, 0.70),
                yes_no("Rashes", 0.35, 0.20),
                yes_no("BleedingSite", 0.10, 0.10),
                yes_no("Headache", 0.80, 0.45),
                yes_no("Restlessness", 0.30, 0.25),
                yes_no("AbdominalPain", 0.40, 0.30),
                antibody("IgM"),
                antibody("IgG"),
            ],
        }
    }

    /// One numeric attribute `x` whose class means are `gap` standard
    /// deviations apart.
    pub fn separable(n: usize, n_pos: usize, gap: f64, seed: u64) -> CohortSpec {
        CohortSpec {
            n,
            n_pos,
            seed,
            target: "Class".into(),
            target_labels: ["YES".into(), "NO".into()],
            attributes: vec![SyntheticAttribute {
                name: "x".into(),
                role: Role::Feature,
                missing_rate: 0.0,
                generator: Generator::Normal {
                    mean_pos: gap,
                    sd_pos: 1.0,
                    mean_neg: 0.0,
                    sd_neg: 1.0,
                    decimals: 6,
                },
            }],
        }
    }

    pub fn schema(&self) -> Result<Schema, CorpusError> {
        let mut attrs: Vec<Attribute> = self
            .attributes
            .iter()
            .map(|a| match &a.generator {
                Generator::Normal { .. } => Attribute::numeric(a.name.clone(), a.role),
                Generator::Categorical { categories, .. } => {
                    Attribute::nominal(a.name.clone(), categories.iter().cloned(), a.role)
                }
            })
            .collect();
        attrs.push(Attribute::nominal(self.target.clone(), self.target_labels.iter().cloned(), Role::Target));
        Ok(Schema::new(attrs)?)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::InvalidSpec(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.n_pos > self.n {
            return bad(format!("n_pos {} exceeds n {}", self.n_pos, self.n));
        }
        for a in &self.attributes {
            if !(0.0..1.0).contains(&a.missing_rate) {
                return bad(format!("missing rate of '{}' must be in [0, 1)", a.name));
            }
            match &a.generator {
                Generator::Normal { mean_pos, sd_pos, mean_neg, sd_neg, .. } => {
                    if ![mean_pos, mean_neg].iter().all(|m| m.is_finite())
                        || ![sd_pos, sd_neg].iter().all(|s| s.is_finite() && **s >= 0.0)
                    {
                        return bad(format!("'{}' needs finite means and non-negative deviations", a.name));
                    }
                }
                Generator::Categorical { categories, probs_pos, probs_neg } => {
                    for probs in [probs_pos, probs_neg] {
                        if probs.len() != categories.len()
                            || probs.iter().any(|p| !(*p >= 0.0))
                            || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
                        {
                            return bad(format!("probabilities of '{}' must match its categories and sum to 1", a.name));
                        }
                    }
                }
            }
        }
        self.schema().map(|_| ())
    }
}

/// Draws the cohort: exactly `n_pos` positives in shuffled order, features
/// from the class-conditional generators, then missing cells.
pub fn generate(spec: &CohortSpec) -> Result<Dataset, CorpusError> {
    spec.validate()?;
    let schema = spec.schema()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut positive: Vec<bool> = (0..spec.n).map(|i| i < spec.n_pos).collect();
    positive.shuffle(&mut rng);

    let mut columns: Vec<Vec<Cell>> = Vec::with_capacity(spec.attributes.len());
    for a in &spec.attributes {
        let col = match &a.generator {
            Generator::Normal { mean_pos, sd_pos, mean_neg, sd_neg, decimals } => {
                let dp = Normal::new(*mean_pos, *sd_pos).expect("validated");
                let dn = Normal::new(*mean_neg, *sd_neg).expect("validated");
                let scale = 10f64.powi(*decimals as i32);
                positive
                    .iter()
                    .map(|&p| {
                        let v = if p { dp.sample(&mut rng) } else { dn.sample(&mut rng) };
                        Cell::Numeric((v * scale).round() / scale)
                    })
                    .collect()
            }
            Generator::Categorical { probs_pos, probs_neg, .. } => {
                let dp = WeightedIndex::new(probs_pos).expect("validated");
                let dn = WeightedIndex::new(probs_neg).expect("validated");
                positive
                    .iter()
                    .map(|&p| Cell::Category(if p { dp.sample(&mut rng) } else { dn.sample(&mut rng) }))
                    .collect()
            }
        };
        columns.push(col);
    }
    for (a, col) in spec.attributes.iter().zip(columns.iter_mut()) {
        if a.missing_rate > 0.0 {
            for cell in col.iter_mut() {
                if rng.random_bool(a.missing_rate) {
                    *cell = Cell::Missing;
                }
            }
        }
    }

    let instances = (0..spec.n)
        .map(|row| {
            let mut cells: Vec<Cell> = columns.iter().map(|c| c[row]).collect();
            cells.push(Cell::Category(if positive[row] { 0 } else { 1 }));
            Instance::new(cells)
        })
        .collect();
    Ok(Dataset::new(schema, instances)?)
}

/// Dataset from [`CohortSpec::separable`].
pub fn separable_preset(n: usize, n_pos: usize, gap: f64, seed: u64) -> Result<Dataset, CorpusError> {
    if !(gap >= 0.0) || !gap.is_finite() {
        return Err(CorpusError::InvalidSpec(format!("gap must be a non-negative number, got {}", gap)));
    }
    generate(&CohortSpec::separable(n, n_pos, gap, seed))
}
