//! Feature selection, standardisation and two-cluster model fitting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::ConfusionMatrix;
use crate::features::{Feature, FeatureVector, FEATURE_COUNT};
use crate::kmeans::{self, KMeansError, KMeansParams};
use crate::measures::MeasureKind;

/// Format tag written into every model file.
pub const MODEL_FORMAT: &str = "phantom-model/1";

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("correlation needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("no feature survives selection at threshold {0}")]
    AllFeaturesDropped(f64),
    #[error("feature {0} is constant over the training rows")]
    ConstantColumn(&'static str),
    #[error("labels are required for every row ({rows} rows, {labels} labels)")]
    MissingLabels { rows: usize, labels: usize },
    #[error("both clusters collapsed onto the same centroid")]
    DegenerateClusters,
    #[error("table contains non-finite values")]
    NonFinite,
    #[error(transparent)]
    KMeans(#[from] KMeansError),
}

/// Feature vectors of one measure across a set of repositories.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub measure: MeasureKind,
    pub repo_ids: Vec<String>,
    pub rows: Vec<FeatureVector>,
    /// Engineered flag per row, when known.
    pub labels: Option<Vec<bool>>,
}

impl FeatureTable {
    pub fn new(measure: MeasureKind) -> Self {
        Self {
            measure,
            repo_ids: Vec::new(),
            rows: Vec::new(),
            labels: None,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, feature: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r.0[feature])
    }

    fn require_labels(&self) -> Result<&[bool], ModelError> {
        match &self.labels {
            Some(l) if l.len() == self.rows.len() => Ok(l),
            other => Err(ModelError::MissingLabels {
                rows: self.rows.len(),
                labels: other.as_ref().map_or(0, Vec::len),
            }),
        }
    }
}

/// Pairwise Pearson correlations; `None` where a column has zero variance.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * FEATURE_COUNT + j]
    }

    /// Whether column `i` has non-zero variance.
    pub fn is_defined(&self, i: usize) -> bool {
        self.get(i, i).is_some()
    }
}

fn centered_columns(table: &FeatureTable) -> Vec<(Vec<f64>, f64)> {
    let n = table.len() as f64;
    (0..FEATURE_COUNT)
        .map(|j| {
            let mean = table.column(j).sum::<f64>() / n;
            let centered: Vec<f64> = table.column(j).map(|x| x - mean).collect();
            let ss = centered.iter().map(|x| x * x).sum::<f64>();
            (centered, ss.sqrt())
        })
        .collect()
}

/// Columns whose values are not all identical.
fn varying(table: &FeatureTable, j: usize) -> bool {
    let first = table.rows[0].0[j];
    table.rows.iter().any(|r| r.0[j] != first)
}

pub fn pearson_matrix(table: &FeatureTable) -> Result<CorrelationMatrix, ModelError> {
    if table.len() < 2 {
        return Err(ModelError::TooFewRows(table.len()));
    }
    let cols = centered_columns(table);
    let live: Vec<bool> = (0..FEATURE_COUNT)
        .map(|j| varying(table, j) && cols[j].1 > 0.0)
        .collect();
    let mut values = vec![None; FEATURE_COUNT * FEATURE_COUNT];
    for i in 0..FEATURE_COUNT {
        if !live[i] {
            continue;
        }
        values[i * FEATURE_COUNT + i] = Some(1.0);
        for j in i + 1..FEATURE_COUNT {
            if !live[j] {
                continue;
            }
            let dot: f64 = cols[i].0.iter().zip(&cols[j].0).map(|(a, b)| a * b).sum();
            let r = (dot / (cols[i].1 * cols[j].1)).clamp(-1.0, 1.0);
            values[i * FEATURE_COUNT + j] = Some(r);
            values[j * FEATURE_COUNT + i] = Some(r);
        }
    }
    Ok(CorrelationMatrix { values })
}

/// Greedy correlation pruning in canonical feature order.
///
/// Constant columns are dropped first. A feature is kept when its absolute
/// correlation with every already kept feature is strictly below
/// `threshold`.
pub fn select_features(table: &FeatureTable, threshold: f64) -> Result<Vec<usize>, ModelError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(ModelError::InvalidThreshold(threshold));
    }
    let corr = pearson_matrix(table)?;
    let mut kept: Vec<usize> = Vec::new();
    for j in (0..FEATURE_COUNT).filter(|&j| corr.is_defined(j)) {
        let redundant = kept
            .iter()
            .any(|&k| corr.get(j, k).is_some_and(|r| r.abs() >= threshold));
        if !redundant {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(ModelError::AllFeaturesDropped(threshold));
    }
    Ok(kept)
}

/// Standard-score parameters for the retained features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(table: &FeatureTable, retained: &[usize]) -> Result<Scaler, ModelError> {
        if table.is_empty() {
            return Err(ModelError::TooFewRows(0));
        }
        let n = table.len() as f64;
        let mut mean = Vec::with_capacity(retained.len());
        let mut std = Vec::with_capacity(retained.len());
        for &j in retained {
            let m = table.column(j).sum::<f64>() / n;
            let var = table.column(j).map(|x| (x - m).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            if s.is_nan() || s <= 0.0 || !varying(table, j) {
                return Err(ModelError::ConstantColumn(Feature::ALL[j].name()));
            }
            mean.push(m);
            std.push(s);
        }
        Ok(Scaler { mean, std })
    }

    /// Projects a full vector onto `retained` and standardises it.
    pub fn apply(&self, vector: &FeatureVector, retained: &[usize]) -> Vec<f64> {
        retained
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&j, (m, s))| (vector.0[j] - m) / s)
            .collect()
    }

    /// Maps a standardised point back to feature units.
    pub fn invert(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| x * s + m)
            .collect()
    }
}

pub fn fit_scaler(table: &FeatureTable, retained: &[usize]) -> Result<Scaler, ModelError> {
    Scaler::fit(table, retained)
}

pub fn apply_scaler(vector: &FeatureVector, retained: &[usize], scaler: &Scaler) -> Vec<f64> {
    scaler.apply(vector, retained)
}

/// Chooses which cluster stands for "engineered": the one whose mapping
/// yields the higher F-measure on `labels`; cluster 0 on ties.
pub fn map_clusters(assignments: &[usize], labels: &[bool]) -> Result<usize, ModelError> {
    if labels.len() != assignments.len() {
        return Err(ModelError::MissingLabels {
            rows: assignments.len(),
            labels: labels.len(),
        });
    }
    let f_for = |positive: usize| {
        let predicted: Vec<bool> = assignments.iter().map(|&c| c == positive).collect();
        ConfusionMatrix::from_predictions(&predicted, labels).f_measure()
    };
    Ok(if f_for(1) > f_for(0) { 1 } else { 0 })
}

/// How the engineered cluster is chosen during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMapping {
    /// Best F-measure against training labels.
    #[default]
    BestFMeasure,
    /// Label-free: the cluster whose members have the larger mean `sum_y`.
    LargerSumY,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub threshold: f64,
    pub seed: u64,
    pub mapping: ClusterMapping,
    pub kmeans: KMeansParams,
    pub provenance: String,
}

impl FitConfig {
    pub fn new(threshold: f64, seed: u64) -> Self {
        Self {
            threshold,
            seed,
            mapping: ClusterMapping::BestFMeasure,
            kmeans: KMeansParams {
                seed,
                ..Default::default()
            },
            provenance: String::new(),
        }
    }
}

/// A fitted classifier for one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomModel {
    pub format: String,
    pub measure: MeasureKind,
    pub threshold: f64,
    /// Canonical names of the retained features, in canonical order.
    pub retained: Vec<String>,
    pub scaler_mean: Vec<f64>,
    pub scaler_std: Vec<f64>,
    /// Two centroids in standardised space.
    pub centroids: Vec<Vec<f64>>,
    pub positive_cluster: usize,
    pub seed: u64,
    pub provenance: String,
}

impl PhantomModel {
    pub fn retained_indices(&self) -> Result<Vec<usize>, String> {
        self.retained
            .iter()
            .map(|n| n.parse::<Feature>().map(Feature::index))
            .collect()
    }

    pub fn scaler(&self) -> Scaler {
        Scaler {
            mean: self.scaler_mean.clone(),
            std: self.scaler_std.clone(),
        }
    }

    /// Structural checks on a model that may have come from disk.
    pub fn validate(&self) -> Result<(), String> {
        let d = self.retained_indices()?.len();
        if d == 0 {
            return Err("model retains no features".into());
        }
        if self.scaler_mean.len() != d || self.scaler_std.len() != d {
            return Err("scaler length does not match retained features".into());
        }
        if self.scaler_std.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err("scaler std must be positive".into());
        }
        if self.centroids.len() != 2 || self.centroids.iter().any(|c| c.len() != d) {
            return Err("model needs exactly two centroids of retained dimension".into());
        }
        if self.centroids[0] == self.centroids[1] {
            return Err("centroids must be distinct".into());
        }
        if self.positive_cluster > 1 {
            return Err("positive_cluster must be 0 or 1".into());
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err("threshold must lie in (0, 1]".into());
        }
        Ok(())
    }

    /// Cluster of each vector: nearest centroid, cluster 0 on ties.
    pub fn clusters(&self, vectors: &[FeatureVector]) -> Vec<usize> {
        let retained = self.retained_indices().expect("validated model");
        let scaler = self.scaler();
        vectors
            .iter()
            .map(|v| kmeans::nearest(&scaler.apply(v, &retained), &self.centroids).0)
            .collect()
    }

    /// Same model with the engineered cluster swapped.
    pub fn flipped(&self) -> PhantomModel {
        PhantomModel {
            positive_cluster: 1 - self.positive_cluster,
            ..self.clone()
        }
    }
}

/// Result of fitting: the model plus the training-time cluster of each row.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: PhantomModel,
    pub assignments: Vec<usize>,
    pub inertia: f64,
}

pub fn fit_model(table: &FeatureTable, threshold: f64, seed: u64) -> Result<PhantomModel, ModelError> {
    fit_model_with(table, &FitConfig::new(threshold, seed)).map(|f| f.model)
}

pub fn fit_model_with(table: &FeatureTable, config: &FitConfig) -> Result<Fitted, ModelError> {
    if table.rows.iter().any(|r| !r.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    let labels = match config.mapping {
        ClusterMapping::BestFMeasure => Some(table.require_labels()?),
        ClusterMapping::LargerSumY => None,
    };
    let retained = select_features(table, config.threshold)?;
    let scaler = Scaler::fit(table, &retained)?;
    let data: Vec<Vec<f64>> = table.rows.iter().map(|r| scaler.apply(r, &retained)).collect();
    let km = kmeans::fit(
        &data,
        &KMeansParams {
            k: 2,
            seed: config.seed,
            ..config.kmeans.clone()
        },
    )?;
    if km.centroids[0] == km.centroids[1] {
        return Err(ModelError::DegenerateClusters);
    }
    let positive_cluster = match labels {
        Some(labels) => map_clusters(&km.assignments, labels)?,
        None => larger_sum_y_cluster(table, &km.assignments),
    };
    let model = PhantomModel {
        format: MODEL_FORMAT.to_owned(),
        measure: table.measure,
        threshold: config.threshold,
        retained: retained.iter().map(|&j| Feature::ALL[j].name().to_owned()).collect(),
        scaler_mean: scaler.mean,
        scaler_std: scaler.std,
        centroids: km.centroids,
        positive_cluster,
        seed: config.seed,
        provenance: config.provenance.clone(),
    };
    Ok(Fitted {
        model,
        assignments: km.assignments,
        inertia: km.inertia,
    })
}

fn larger_sum_y_cluster(table: &FeatureTable, assignments: &[usize]) -> usize {
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for (row, &c) in table.rows.iter().zip(assignments) {
        sums[c] += row[Feature::SumY];
        counts[c] += 1;
    }
    let mean = |c: usize| if counts[c] == 0 { f64::NEG_INFINITY } else { sums[c] / counts[c] as f64 };
    if mean(1) > mean(0) { 1 } else { 0 }
}

/// Engineered flag per vector.
pub fn predict(model: &PhantomModel, vectors: &[FeatureVector]) -> Vec<bool> {
    model
        .clusters(vectors)
        .into_iter()
        .map(|c| c == model.positive_cluster)
        .collect()
}
