//! Builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

use dxtree::adtree::{AdTreeModel, Test};
use dxtree::{Attribute, Cell, Dataset, Instance, Label, Role, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn target() -> Attribute {
    Attribute::nominal("y", ["YES", "NO"], Role::Target)
}

/// Dataset from numeric feature rows and labels (true = positive).
pub fn numeric_dataset(rows: &[Vec<f64>], labels: &[bool]) -> Dataset {
    let width = rows.first().map_or(0, |r| r.len());
    let mut attrs: Vec<Attribute> = (0..width).map(|j| Attribute::numeric(format!("x{}", j), Role::Feature)).collect();
    attrs.push(target());
    let schema = Schema::new(attrs).unwrap();
    let instances = rows
        .iter()
        .zip(labels)
        .map(|(r, &pos)| {
            let mut cells: Vec<Cell> = r.iter().map(|&v| Cell::Numeric(v)).collect();
            cells.push(Cell::Category(if pos { 0 } else { 1 }));
            Instance::new(cells)
        })
        .collect();
    Dataset::new(schema, instances).unwrap()
}

/// Small mixed dataset: numeric attributes on a coarse integer grid (many
/// ties) and, when `nominal` is set, one three-valued nominal attribute.
/// Both classes are always present.
pub fn random_small(seed: u64, max_n: usize, max_attrs: usize, nominal: bool) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let n_attrs = rng.random_range(1..=max_attrs);
    let n_nominal = usize::from(nominal && n_attrs > 1);
    let mut attrs: Vec<Attribute> = (0..n_attrs - n_nominal)
        .map(|j| Attribute::numeric(format!("x{}", j), Role::Feature))
        .collect();
    if n_nominal == 1 {
        attrs.push(Attribute::nominal("c", ["a", "b", "c"], Role::Feature));
    }
    attrs.push(target());
    let schema = Schema::new(attrs).unwrap();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    labels[0] = true;
    labels[1] = false;
    let instances = labels
        .iter()
        .map(|&pos| {
            let mut cells: Vec<Cell> = (0..n_attrs - n_nominal)
                .map(|_| Cell::Numeric(rng.random_range(0..5) as f64))
                .collect();
            if n_nominal == 1 {
                cells.push(Cell::Category(rng.random_range(0..3)));
            }
            cells.push(Cell::Category(if pos { 0 } else { 1 }));
            Instance::new(cells)
        })
        .collect();
    Dataset::new(schema, instances).unwrap()
}

/// Normalized Mann-Whitney U over all (positive, negative) pairs, ties ½.
pub fn mann_whitney(scores: &[f64], truth: &[Label]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, ti) in truth.iter().enumerate() {
        if !ti.is_positive() {
            continue;
        }
        for (j, tj) in truth.iter().enumerate() {
            if tj.is_positive() {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn condition_holds(test: &Test, cell: Cell) -> bool {
    match (test, cell) {
        (Test::LessThan { threshold }, Cell::Numeric(v)) => v < *threshold,
        (Test::Equals { category, .. }, Cell::Category(c)) => c == *category,
        _ => panic!("cell kind does not match test"),
    }
}

/// Whether `inst` reaches prediction node `node`, by walking the path of
/// decision nodes above it.
pub fn reaches(model: &AdTreeModel, node: usize, inst: &Instance) -> bool {
    let mut p = node;
    while p != 0 {
        let d = model
            .decisions
            .iter()
            .find(|d| d.true_child == p || d.false_child == p)
            .expect("non-root prediction node has a parent decision");
        let holds = condition_holds(&d.condition.test, inst.cells[d.condition.index]);
        if holds != (d.true_child == p) {
            return false;
        }
        p = d.parent;
    }
    true
}

/// Score using only prediction nodes created before round `round`
/// (node 0 is the root; round t adds nodes 2t-1 and 2t).
pub fn margin_before(model: &AdTreeModel, round: usize, inst: &Instance) -> f64 {
    (0..(2 * round - 1).min(model.predictions.len()))
        .filter(|&p| reaches(model, p, inst))
        .map(|p| model.predictions[p].value)
        .sum()
}

/// Z of splitting the rows that reach `node` with `holds`, given weights.
pub fn z_of(
    ds: &Dataset,
    model: &AdTreeModel,
    node: usize,
    weights: &[f64],
    holds: &dyn Fn(&Instance) -> bool,
) -> f64 {
    let (mut pt, mut nt, mut pf, mut nf, mut out) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (r, inst) in ds.instances().iter().enumerate() {
        let pos = ds.label(r).unwrap().is_positive();
        if !reaches(model, node, inst) {
            out += weights[r];
        } else if holds(inst) {
            if pos { pt += weights[r] } else { nt += weights[r] }
        } else if pos {
            pf += weights[r]
        } else {
            nf += weights[r]
        }
    }
    2.0 * ((pt * nt).sqrt() + (pf * nf).sqrt()) + out
}

/// Minimum Z over every (existing prediction node, test) pair before
/// `round`. Thresholds are every distinct observed value, which covers
/// each partition a midpoint threshold can produce; tests that leave one
/// side empty never beat a real split.
pub fn exhaustive_min_z(ds: &Dataset, model: &AdTreeModel, round: usize, weights: &[f64]) -> f64 {
    let schema = ds.schema();
    let mut best = f64::INFINITY;
    for node in 0..(2 * round - 1) {
        for j in schema.feature_indices() {
            let attr = schema.attribute(j);
            if attr.kind == dxtree::AttributeKind::Numeric {
                let mut values: Vec<f64> = ds.instances().iter().filter_map(|i| i.cells[j].as_numeric()).collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                for v in values {
                    let z = z_of(ds, model, node, weights, &|i: &Instance| i.cells[j].as_numeric().unwrap() < v);
                    best = best.min(z);
                }
            } else {
                for c in 0..attr.categories.len() {
                    let z = z_of(ds, model, node, weights, &|i: &Instance| i.cells[j].as_category() == Some(c));
                    best = best.min(z);
                }
            }
        }
    }
    best
}

pub fn log_likelihood(x: &[f64], y: &[f64], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(xi, yi)| {
            let eta = b0 + b1 * xi;
            // log(1 + e^eta) without overflow
            let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            yi * eta - softplus
        })
        .sum()
}

/// Maximizes the one-predictor log-likelihood by a zooming grid search.
pub fn grid_search_logistic(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut c0, mut c1) = (0.0, 0.0);
    let mut step = 0.5;
    while step > 1e-7 {
        let mut best = (f64::NEG_INFINITY, c0, c1);
        for i in -20..=20 {
            for j in -20..=20 {
                let (b0, b1) = (c0 + i as f64 * step, c1 + j as f64 * step);
                let ll = log_likelihood(x, y, b0, b1);
                if ll > best.0 {
                    best = (ll, b0, b1);
                }
            }
        }
        c0 = best.1;
        c1 = best.2;
        step /= 8.0;
    }
    (c0, c1)
}
