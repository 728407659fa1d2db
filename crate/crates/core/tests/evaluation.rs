mod common;

use common::{blob_table, oracle};
use phantom_core::evaluation::{
    default_grid, metrics, naive_baselines, select_best, sweep, CellOutcome, ConfusionMatrix,
    EvaluationReport, SweepCell, SweepResult,
};
use phantom_core::measures::MeasureKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cell(threshold: f64, p: f64, r: f64, f: f64) -> SweepCell {
    let t = blob_table(10, 8.0, 0);
    let model = phantom_core::model::fit_model(&t, 1.0, 0).unwrap();
    SweepCell {
        measure: MeasureKind::Commits,
        threshold,
        n_features: 3,
        outcome: CellOutcome::Fitted {
            model: Box::new(model),
            report: EvaluationReport {
                descriptor: String::new(),
                confusion: ConfusionMatrix::default(),
                precision: p,
                recall: r,
                f_measure: f,
                mcc: 0.0,
            },
        },
    }
}

fn result(cells: Vec<SweepCell>) -> SweepResult {
    SweepResult {
        measure: MeasureKind::Commits,
        grid: cells.iter().map(|c| c.threshold).collect(),
        cells,
    }
}

#[test]
fn metrics_match_formula_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let [tp, fp, fn_, tn] = [0; 4].map(|_| rng.random_range(0..200u64));
        if tp + fp + fn_ + tn == 0 {
            continue;
        }
        let r = metrics(ConfusionMatrix { tp, fp, fn_, tn }).unwrap();
        let want = oracle::metrics(tp as f64, fp as f64, fn_ as f64, tn as f64);
        for (g, w) in [r.precision, r.recall, r.f_measure, r.mcc].iter().zip(want) {
            assert!((g - w).abs() < 1e-9);
        }
    }
}

#[test]
fn select_best_rules() {
    // Rule 2: equal F, higher precision wins.
    let r = result(vec![cell(0.3, 0.7, 0.9, 0.8), cell(0.5, 0.9, 0.7, 0.8)]);
    assert_eq!(select_best(&r).unwrap().threshold, 0.5);
    // Rule 3: equal F and P, higher recall wins.
    let r = result(vec![cell(0.3, 0.8, 0.6, 0.7), cell(0.5, 0.8, 0.7, 0.7)]);
    assert_eq!(select_best(&r).unwrap().threshold, 0.5);
    // Rule 4: identical metrics, lower threshold wins, whatever the order.
    let a = cell(0.6, 0.8, 0.8, 0.8);
    let b = cell(0.4, 0.8, 0.8, 0.8);
    assert_eq!(select_best(&result(vec![a.clone(), b.clone()])).unwrap().threshold, 0.4);
    assert_eq!(select_best(&result(vec![b, a])).unwrap().threshold, 0.4);
    // Rule 1 dominates.
    let r = result(vec![cell(0.1, 1.0, 0.5, 0.66), cell(0.9, 0.6, 0.9, 0.72)]);
    assert_eq!(select_best(&r).unwrap().threshold, 0.9);
    let failed = SweepCell {
        outcome: CellOutcome::Failed("x".into()),
        ..cell(0.2, 0.0, 0.0, 0.0)
    };
    assert!(select_best(&result(vec![failed])).is_err());
}

#[test]
fn sweep_default_grid_shape() {
    let t = blob_table(120, 10.0, 4);
    let res = sweep(&t, &default_grid(), 42).unwrap();
    assert_eq!(res.cells.len(), 20);
    assert!(res.cells.iter().any(|c| c.report().is_some_and(|r| r.f_measure == 1.0)));
    let single = sweep(&t, &[1.0], 42).unwrap();
    assert_eq!(single.cells.len(), 1);
    assert_eq!(sweep(&t, &default_grid(), 42).unwrap(), res);
}

#[test]
fn uniform_baseline_accuracy_within_binomial_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let b = naive_baselines(&labels, 42).unwrap();
    let acc = b.uniform.confusion.accuracy();
    let sigma = (0.25f64 / 10_000.0).sqrt();
    assert!((acc - 0.5).abs() <= 3.0 * sigma, "{acc}");
    let acc = b.stratified.confusion.accuracy();
    assert!((acc - 0.5).abs() <= 3.0 * sigma, "{acc}");
}
