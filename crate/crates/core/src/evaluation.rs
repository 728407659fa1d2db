//! Confusion metrics, naive baselines and the correlation-threshold sweep.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::MeasureKind;
use crate::model::{fit_model_with, predict, FeatureTable, FitConfig, ModelError, PhantomModel};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("cannot evaluate an empty set")]
    EmptyEvaluation,
    #[error("no sweep cell produced a model")]
    NoSuccessfulCell,
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    /// Counts with "engineered" as the positive class. Extra entries of the
    /// longer slice are ignored.
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let mut c = ConfusionMatrix::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f_measure(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }

    pub fn mcc(&self) -> f64 {
        let [tp, fp, fn_, tn] = [self.tp, self.fp, self.fn_, self.tn].map(|x| x as f64);
        let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        if denom == 0.0 { 0.0 } else { (tp * tn - fp * fn_) / denom }
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub descriptor: String,
    pub confusion: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
}

/// Precision, recall, F-measure and MCC; undefined ratios are 0.
pub fn metrics(c: ConfusionMatrix) -> Result<EvaluationReport, EvalError> {
    if c.total() == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    Ok(EvaluationReport {
        descriptor: String::new(),
        confusion: c,
        precision: c.precision(),
        recall: c.recall(),
        f_measure: c.f_measure(),
        mcc: c.mcc(),
    })
}

pub fn evaluate(
    predicted: &[bool],
    actual: &[bool],
    descriptor: impl Into<String>,
) -> Result<EvaluationReport, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predicted.len(),
            labels: actual.len(),
        });
    }
    let mut report = metrics(ConfusionMatrix::from_predictions(predicted, actual))?;
    report.descriptor = descriptor.into();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub uniform: EvaluationReport,
    pub stratified: EvaluationReport,
    pub majority: EvaluationReport,
}

/// Fair coin, label-frequency coin and constant-majority predictors.
/// The majority predictor says "engineered" when classes are tied.
pub fn naive_baselines(labels: &[bool], seed: u64) -> Result<Baselines, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let rate = positives as f64 / labels.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform: Vec<bool> = labels.iter().map(|_| rng.random_bool(0.5)).collect();
    let stratified: Vec<bool> = labels.iter().map(|_| rng.random_bool(rate)).collect();
    let majority = vec![positives * 2 >= labels.len(); labels.len()];
    Ok(Baselines {
        uniform: evaluate(&uniform, labels, "uniform")?,
        stratified: evaluate(&stratified, labels, "stratified")?,
        majority: evaluate(&majority, labels, "majority")?,
    })
}

/// `0.05, 0.10, …, 1.00`.
pub fn default_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Fitted {
        model: Box<PhantomModel>,
        report: EvaluationReport,
    },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub measure: MeasureKind,
    pub threshold: f64,
    pub n_features: usize,
    pub outcome: CellOutcome,
}

impl SweepCell {
    pub fn report(&self) -> Option<&EvaluationReport> {
        match &self.outcome {
            CellOutcome::Fitted { report, .. } => Some(report),
            CellOutcome::Failed(_) => None,
        }
    }

    pub fn model(&self) -> Option<&PhantomModel> {
        match &self.outcome {
            CellOutcome::Fitted { model, .. } => Some(model),
            CellOutcome::Failed(_) => None,
        }
    }

    pub fn status(&self) -> String {
        match &self.outcome {
            CellOutcome::Fitted { .. } => "ok".into(),
            CellOutcome::Failed(reason) => format!("failed: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub measure: MeasureKind,
    pub grid: Vec<f64>,
    /// One cell per grid threshold, in grid order.
    pub cells: Vec<SweepCell>,
}

/// Fits one model per threshold and evaluates each on its training table.
pub fn sweep(table: &FeatureTable, grid: &[f64], seed: u64) -> Result<SweepResult, EvalError> {
    sweep_with(table, grid, seed, None)
}

/// Like [`sweep`]; with `holdout`, cells are scored on that table instead.
pub fn sweep_with(
    table: &FeatureTable,
    grid: &[f64],
    seed: u64,
    holdout: Option<&FeatureTable>,
) -> Result<SweepResult, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let cells = grid
        .par_iter()
        .map(|&threshold| sweep_cell(table, threshold, seed, holdout))
        .collect();
    Ok(SweepResult {
        measure: table.measure,
        grid: grid.to_vec(),
        cells,
    })
}

fn sweep_cell(
    table: &FeatureTable,
    threshold: f64,
    seed: u64,
    holdout: Option<&FeatureTable>,
) -> SweepCell {
    let failed = |reason: String| SweepCell {
        measure: table.measure,
        threshold,
        n_features: 0,
        outcome: CellOutcome::Failed(reason),
    };
    let fitted = match fit_model_with(table, &FitConfig::new(threshold, seed)) {
        Ok(f) => f,
        Err(e) => return failed(e.to_string()),
    };
    let target = holdout.unwrap_or(table);
    let Some(labels) = target.labels.as_deref() else {
        return failed("evaluation table has no labels".into());
    };
    let predicted = predict(&fitted.model, &target.rows);
    let descriptor = format!("{}@{}", table.measure, threshold);
    match evaluate(&predicted, labels, descriptor) {
        Ok(report) => SweepCell {
            measure: table.measure,
            threshold,
            n_features: fitted.model.retained.len(),
            outcome: CellOutcome::Fitted {
                model: Box::new(fitted.model),
                report,
            },
        },
        Err(e) => failed(e.to_string()),
    }
}

/// Highest F-measure, then precision, then recall, then lowest threshold.
pub fn select_best(result: &SweepResult) -> Result<&SweepCell, EvalError> {
    result
        .cells
        .iter()
        .filter(|c| c.report().is_some())
        .min_by(|a, b| rank(a, b))
        .ok_or(EvalError::NoSuccessfulCell)
}

fn rank(a: &SweepCell, b: &SweepCell) -> Ordering {
    let (ra, rb) = (a.report().expect("filtered"), b.report().expect("filtered"));
    rb.f_measure
        .total_cmp(&ra.f_measure)
        .then(rb.precision.total_cmp(&ra.precision))
        .then(rb.recall.total_cmp(&ra.recall))
        .then(a.threshold.total_cmp(&b.threshold))
}
