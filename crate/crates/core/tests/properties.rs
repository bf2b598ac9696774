mod common;

use dxtree::adtree::fit_adtree_traced;
use dxtree::c45::{gain_ratio_from_counts, prune, tree_estimate};
use dxtree::data::{class_distribution, discretize, impute_means, parse_csv, serialize_csv};
use dxtree::eval::{stratified_kfold, summarize};
use dxtree::select::{chi_squared_test, fit_logistic_matrix, LogisticConfig};
use dxtree::*;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn schema() -> Schema {
    Schema::new(vec![
        Attribute::numeric("a", Role::Feature),
        Attribute::numeric("b", Role::Feature),
        Attribute::nominal("c", ["p", "q", "r"], Role::Feature),
        Attribute::nominal("y", ["YES", "NO"], Role::Target),
    ])
    .unwrap()
}

/// Rows of (a, b, c, label) with optional missing numeric cells.
fn rows(max: usize, missing: bool) -> impl Strategy<Value = Vec<(Option<f64>, Option<f64>, usize, bool)>> {
    let num = move || {
        let v = (-50i32..50).prop_map(|k| k as f64 / 4.0);
        if missing {
            proptest::option::weighted(0.8, v).boxed()
        } else {
            v.prop_map(Some).boxed()
        }
    };
    proptest::collection::vec((num(), num(), 0usize..3, any::<bool>()), 2..max)
}

fn build(rows: &[(Option<f64>, Option<f64>, usize, bool)]) -> Dataset {
    let cell = |v: Option<f64>| v.map_or(Cell::Missing, Cell::Numeric);
    let instances = rows
        .iter()
        .map(|&(a, b, c, pos)| Instance::new(vec![cell(a), cell(b), Cell::Category(c), Cell::Category(usize::from(!pos))]))
        .collect();
    Dataset::new(schema(), instances).unwrap()
}

fn column_mean(ds: &Dataset, j: usize) -> Option<f64> {
    let vals: Vec<f64> = ds.numeric_column(j).into_iter().flatten().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn impute_is_idempotent_and_keeps_means(r in rows(30, true)) {
        let ds = build(&r);
        let Ok((once, _)) = impute_means(&ds) else { return Ok(()) };
        let (twice, report) = impute_means(&once).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(report.columns.is_empty());
        for j in 0..2 {
            let (before, after) = (column_mean(&ds, j).unwrap(), column_mean(&once, j).unwrap());
            prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1.0));
        }
    }

    #[test]
    fn csv_round_trip(r in rows(30, true)) {
        let ds = build(&r);
        let back = parse_csv(serialize_csv(&ds).as_bytes(), ds.schema()).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn discretize_leaves_class_distribution(r in rows(30, false), cut in -10.0f64..10.0) {
        let ds = build(&r);
        let binned = discretize(&ds, "a", &[cut], &["lo".into(), "hi".into()]).unwrap();
        prop_assert_eq!(class_distribution(&binned), class_distribution(&ds));
        let t = ds.schema().target_index();
        for (x, y) in ds.instances().iter().zip(binned.instances()) {
            prop_assert_eq!(x.cells[t], y.cells[t]);
        }
    }

    #[test]
    fn chi2_sf_decreasing_and_matches_reference(x in 0.0f64..60.0, dx in 0.01f64..5.0, df in 1u32..12) {
        let p = chi2_sf(x, df).unwrap();
        let q = chi2_sf(x + dx, df).unwrap();
        prop_assert!(q < p || (p < 1e-300 && q == 0.0));
        let reference = ChiSquared::new(df as f64).unwrap().sf(x);
        prop_assert!((p - reference).abs() < 1e-10, "{} vs {}", p, reference);
        prop_assert!((chi2_sf(x, 2).unwrap() - (-x / 2.0).exp()).abs() <= 1e-12);
    }

    #[test]
    fn chi_squared_symmetric(r in rows(40, false)) {
        let ds = build(&r);
        match (chi_squared_test(&ds, "c", "y"), chi_squared_test(&ds, "y", "c")) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.max(1.0));
                prop_assert_eq!(a.df, b.df);
                prop_assert!((a.p_value - b.p_value).abs() <= 1e-9);
                let total: f64 = a.observed.iter().flatten().sum();
                for (i, row) in a.expected.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        let rt: f64 = a.observed[i].iter().sum();
                        let ct: f64 = a.observed.iter().map(|o| o[j]).sum();
                        prop_assert!((e - rt * ct / total).abs() <= 1e-12 * total);
                    }
                }
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "asymmetric failure"),
        }
    }

    #[test]
    fn wald_scaling_invariance(seed in 0u64..1000, c in 0.05f64..40.0) {
        let ds = common::random_small(seed, 40, 1, false);
        let x: Vec<f64> = ds.numeric_column(0).into_iter().map(|v| v.unwrap() + seed as f64 % 3.0).collect();
        let y: Vec<f64> = ds.labels().unwrap().iter().map(|l| f64::from(u8::from(l.is_positive()))).collect();
        let names = vec!["x".to_string()];
        let fit = |scale: f64| {
            let design: Vec<Vec<f64>> = x.iter().map(|v| vec![1.0, scale * v]).collect();
            fit_logistic_matrix(&names, "y", &design, &y, &LogisticConfig::default())
        };
        if let (Ok(a), Ok(b)) = (fit(1.0), fit(c)) {
            prop_assume!(a.converged && b.converged);
            prop_assert!((a.coefficients[1].wald - b.coefficients[1].wald).abs() < 1e-6);
            prop_assert!((a.coefficients[1].p_value - b.coefficients[1].p_value).abs() < 1e-6);
        }
    }

    #[test]
    fn irls_log_likelihood_never_drops(seed in 0u64..1000) {
        let ds = common::random_small(seed, 40, 2, false);
        let y: Vec<f64> = ds.labels().unwrap().iter().map(|l| f64::from(u8::from(l.is_positive()))).collect();
        let design: Vec<Vec<f64>> = ds
            .instances()
            .iter()
            .map(|i| {
                let mut row = vec![1.0];
                row.extend(i.cells[..i.cells.len() - 1].iter().map(|c| c.as_numeric().unwrap()));
                row
            })
            .collect();
        let names: Vec<String> = (1..design[0].len()).map(|j| format!("x{}", j)).collect();
        if let Ok(fit) = fit_logistic_matrix(&names, "y", &design, &y, &LogisticConfig::default()) {
            for w in fit.trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12, "{:?}", fit.trace);
            }
        }
    }

    #[test]
    fn adtree_trainer_and_scorer_agree(seed in 0u64..5000, t in 0usize..6) {
        let ds = common::random_small(seed, 12, 3, true);
        let tr = fit_adtree_traced(&ds, &AdTreeConfig { iterations: t, ..AdTreeConfig::default() }).unwrap();
        let from_scores: f64 = ds
            .instances()
            .iter()
            .enumerate()
            .map(|(r, inst)| (-ds.label(r).unwrap().sign() * tr.model.score(inst).unwrap()).exp())
            .sum();
        let tracked: f64 = tr.weights.iter().sum();
        prop_assert!((from_scores - tracked).abs() <= 1e-9 * tracked);
        for w in tr.rounds.windows(2) {
            prop_assert!(w[1].weight_before <= w[0].weight_before * (1.0 + 1e-9));
        }
        let iterations: Vec<usize> = tr.model.decisions.iter().map(|d| d.iteration).collect();
        prop_assert_eq!(iterations, (1..=tr.rounds.len()).collect::<Vec<_>>());
    }

    #[test]
    fn adtree_deterministic_and_monotone_margin(seed in 0u64..5000, t in 1usize..5) {
        let ds = common::random_small(seed, 12, 3, true);
        let cfg = |iterations| AdTreeConfig { iterations, ..AdTreeConfig::default() };
        let a = fit_adtree(&ds, &cfg(t)).unwrap();
        let b = fit_adtree(&ds, &cfg(t)).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let longer = fit_adtree(&ds, &cfg(t + 1)).unwrap();
        if let Some(added) = longer.decisions.get(t) {
            for inst in ds.instances() {
                if !common::reaches(&longer, added.parent, inst) {
                    prop_assert_eq!(a.score(inst).unwrap(), longer.score(inst).unwrap());
                }
            }
        }
    }

    #[test]
    fn c45_leaves_cover_training_set(r in rows(40, false), min_leaf in 1usize..4, prune_it in any::<bool>()) {
        let ds = build(&r);
        let cfg = C45Config { min_leaf, prune: prune_it, ..C45Config::default() };
        let tree = fit_c45(&ds, &cfg).unwrap();
        let total: usize = tree.root.leaves().iter().map(|l| l.counts().iter().sum::<usize>()).sum();
        prop_assert_eq!(total, ds.len());
        let leaves = tree.root.leaves();
        let mut reached = vec![0usize; leaves.len()];
        for inst in ds.instances() {
            let leaf = tree.root.route(inst).unwrap();
            let k = leaves.iter().position(|l| std::ptr::eq(*l, leaf)).unwrap();
            reached[k] += 1;
        }
        for (leaf, hits) in leaves.iter().zip(reached) {
            prop_assert_eq!(leaf.counts().iter().sum::<usize>(), hits);
        }
    }

    #[test]
    fn c45_pruning_never_raises_estimate(r in rows(40, false), cf in 0.05f64..0.5) {
        let ds = build(&r);
        let cfg = C45Config { min_leaf: 1, prune: false, ..C45Config::default() };
        let tree = fit_c45(&ds, &cfg).unwrap();
        let pruned = prune(&tree.root, cf);
        prop_assert!(tree_estimate(&pruned, cf) <= tree_estimate(&tree.root, cf) + 1e-9);
    }

    #[test]
    fn c45_fits_consistent_training_data(r in rows(40, false)) {
        // duplicate feature vectors keep the first label, so the data is consistent
        let mut seen = std::collections::HashMap::new();
        let r: Vec<_> = r
            .into_iter()
            .map(|(a, b, c, pos)| {
                let key = (a.map(f64::to_bits), b.map(f64::to_bits), c);
                let pos = *seen.entry(key).or_insert(pos);
                (a, b, c, pos)
            })
            .collect();
        let ds = build(&r);
        let tree = fit_c45(&ds, &C45Config { min_leaf: 1, prune: false, ..C45Config::default() }).unwrap();
        for (row, inst) in ds.instances().iter().enumerate() {
            prop_assert_eq!(tree.classify(inst).unwrap().0, ds.label(row).unwrap());
        }
    }

    #[test]
    fn gain_ratio_identity(cells in proptest::collection::vec((1usize..20, 0usize..20), 2..5)) {
        let cells: Vec<[usize; 2]> = cells.into_iter().map(|(a, b)| [a, b]).collect();
        let g = gain_ratio_from_counts(&cells).unwrap();
        prop_assert_eq!(g.ratio, g.info_gain / g.split_info);
        prop_assert!(g.info_gain >= -1e-12);
    }

    #[test]
    fn auc_is_mann_whitney(scores in proptest::collection::vec((0u8..6, any::<bool>()), 2..200)) {
        prop_assume!(scores.iter().any(|s| s.1) && scores.iter().any(|s| !s.1));
        let s: Vec<f64> = scores.iter().map(|x| x.0 as f64).collect();
        let t: Vec<Label> = scores.iter().map(|x| if x.1 { Label::Positive } else { Label::Negative }).collect();
        let curve = roc_curve(&s, &t).unwrap();
        prop_assert!((curve.auc - common::mann_whitney(&s, &t)).abs() <= 1e-12);
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        prop_assert_eq!((first.fp_rate, first.tp_rate), (0.0, 0.0));
        prop_assert_eq!((last.fp_rate, last.tp_rate), (1.0, 1.0));
        for w in curve.points.windows(2) {
            prop_assert!(w[1].fp_rate >= w[0].fp_rate && w[1].tp_rate >= w[0].tp_rate);
        }
    }

    #[test]
    fn weighted_metrics_identities(tp in 0usize..50, fn_ in 0usize..50, fp in 0usize..50, tn in 0usize..50) {
        let cm = ConfusionMatrix::new(tp, fn_, fp, tn);
        prop_assume!(cm.total() > 0);
        let s = summarize(&cm);
        prop_assert!((s.weighted.tp_rate - s.accuracy).abs() <= 1e-12);
        let w = summarize(&cm.swapped()).weighted;
        prop_assert!((w.tp_rate - s.weighted.tp_rate).abs() <= 1e-12);
        prop_assert!((w.fp_rate - s.weighted.fp_rate).abs() <= 1e-12);
        prop_assert!((w.precision - s.weighted.precision).abs() <= 1e-12);
        prop_assert!((w.f_measure - s.weighted.f_measure).abs() <= 1e-12);
        for c in &s.per_class {
            for v in [c.tp_rate, c.fp_rate, c.precision, c.f_measure] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn folds_partition_and_stratify(n_pos in 1usize..40, n_neg in 1usize..40, k in 2usize..8, seed in any::<u64>()) {
        prop_assume!(k <= n_pos + n_neg);
        let mut labels = vec![Label::Positive; n_pos];
        labels.extend(vec![Label::Negative; n_neg]);
        let folds = stratified_kfold(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for fold in &folds {
            let pos = fold.iter().filter(|&&i| labels[i].is_positive()).count() as f64;
            let neg = fold.len() as f64 - pos;
            prop_assert!((pos - n_pos as f64 / k as f64).abs() < 1.0);
            prop_assert!((neg - n_neg as f64 / k as f64).abs() < 1.0);
        }
    }

    #[test]
    fn cross_validation_predicts_each_row_once(seed in 0u64..200) {
        let ds = dxtree::corpus::separable_preset(30, 18, 1.0, seed).unwrap();
        let report = cross_validate(&Learner::C45(C45Config::default()), &ds, 5, seed).unwrap();
        let mut rows: Vec<usize> = report.predictions.iter().map(|p| p.row).collect();
        rows.sort_unstable();
        prop_assert_eq!(rows, (0..30).collect::<Vec<_>>());
        prop_assert!(report.is_consistent());
    }
}
