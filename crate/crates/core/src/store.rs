//! On-disk artifacts: corpus layout, feature tables, models, predictions and
//! reports.
//!
//! Every write goes to a temporary file in the destination directory and is
//! renamed into place, so readers see either the old or the new file. Writes
//! whose content equals the existing file leave it untouched.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{EvaluationReport, SweepCell, SweepResult};
use crate::features::{Feature, FeatureVector, FEATURE_COUNT};
use crate::gitlog::Unavailable;
use crate::measures::{MeasureKind, MeasureSeries};
use crate::model::{FeatureTable, PhantomModel, MODEL_FORMAT};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: header mismatch: {message}")]
    SchemaMismatch { path: PathBuf, message: String },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: unsupported model format {found:?} (expected {MODEL_FORMAT:?})")]
    VersionMismatch { path: PathBuf, found: String },
    #[error("{path}: invalid model: {message}")]
    InvalidModel { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Atomically replaces `path` with `bytes`. Returns `false` when the file
/// already held exactly these bytes.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<bool> {
    if let Ok(existing) = fs::read(path) {
        if existing == bytes {
            return Ok(false);
        }
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(true)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<bool, StoreError> {
    write_atomic(path, bytes).map_err(io_err(path))
}

/// Directory layout of one corpus run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLayout {
    pub root: PathBuf,
}

impl CorpusLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn logs_dir(&self) -> PathBuf {
        self.root.join("logs")
    }

    pub fn features_dir(&self) -> PathBuf {
        self.root.join("features")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn clones_dir(&self) -> PathBuf {
        self.root.join("clones")
    }

    pub fn log_path(&self, repo_id: &str) -> PathBuf {
        self.logs_dir().join(format!("{repo_id}.log"))
    }

    pub fn unavailable_report(&self) -> PathBuf {
        self.reports_dir().join("unavailable.csv")
    }

    pub fn features_path(&self) -> PathBuf {
        self.features_dir().join("features.csv")
    }

    pub fn series_path(&self) -> PathBuf {
        self.features_dir().join("series.csv")
    }

    pub fn model_path(&self, measure: MeasureKind) -> PathBuf {
        self.models_dir().join(format!("{measure}.json"))
    }

    pub fn ensure(&self) -> io::Result<()> {
        for dir in [self.logs_dir(), self.features_dir(), self.models_dir(), self.reports_dir()] {
            fs::create_dir_all(dir)?;
        }
        Ok(())
    }

    /// Stored logs as `(repo_id, path)`, sorted by id.
    pub fn stored_logs(&self) -> io::Result<Vec<(String, PathBuf)>> {
        let dir = self.logs_dir();
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut logs = Vec::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "log") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    logs.push((stem.to_owned(), path.clone()));
                }
            }
        }
        logs.sort();
        Ok(logs)
    }
}

pub fn write_unavailable(path: &Path, entries: &[Unavailable]) -> io::Result<bool> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["repo_id", "reason"])?;
    for u in entries {
        w.write_record([u.repo_id.as_str(), u.reason.as_str()])?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| e.into_error())?)
}

/// One row of a feature CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub repo_id: String,
    pub measure: MeasureKind,
    pub vector: FeatureVector,
    pub label: Option<bool>,
}

/// Contents of a feature CSV: any mix of measures, optionally labelled.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSet {
    pub rows: Vec<FeatureRow>,
}

impl FeatureSet {
    pub fn is_labelled(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.label.is_some())
    }

    pub fn measures(&self) -> Vec<MeasureKind> {
        let mut m: Vec<MeasureKind> = self.rows.iter().map(|r| r.measure).collect();
        m.sort();
        m.dedup();
        m
    }

    /// Rows of one measure in file order. Labels are attached only when
    /// every selected row carries one.
    pub fn table(&self, measure: MeasureKind) -> FeatureTable {
        let rows: Vec<&FeatureRow> = self.rows.iter().filter(|r| r.measure == measure).collect();
        let labels: Option<Vec<bool>> = rows.iter().map(|r| r.label).collect();
        FeatureTable {
            measure,
            repo_ids: rows.iter().map(|r| r.repo_id.clone()).collect(),
            rows: rows.iter().map(|r| r.vector).collect(),
            labels: labels.filter(|l| !l.is_empty()),
        }
    }

    pub fn from_tables(tables: &[FeatureTable]) -> Self {
        let mut rows = Vec::new();
        for t in tables {
            for (i, (id, v)) in t.repo_ids.iter().zip(&t.rows).enumerate() {
                rows.push(FeatureRow {
                    repo_id: id.clone(),
                    measure: t.measure,
                    vector: *v,
                    label: t.labels.as_ref().map(|l| l[i]),
                });
            }
        }
        Self { rows }
    }

    /// Sets labels by repo id; rows with unknown ids get `None`.
    pub fn attach_labels(&mut self, labels: &HashMap<String, bool>) {
        for r in &mut self.rows {
            r.label = labels.get(&r.repo_id).copied();
        }
    }
}

const LABEL_COLUMN: &str = "engineered";

fn feature_header(labelled: bool) -> Vec<&'static str> {
    let mut h = vec!["repo_id", "measure"];
    h.extend(Feature::names());
    if labelled {
        h.push(LABEL_COLUMN);
    }
    h
}

/// Serialises the set; `f64` display is the shortest round-trip form.
pub fn features_to_csv(set: &FeatureSet) -> Vec<u8> {
    let labelled = set.rows.iter().any(|r| r.label.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(feature_header(labelled)).expect("in-memory write");
    for r in &set.rows {
        let mut rec: Vec<String> = vec![r.repo_id.clone(), r.measure.to_string()];
        rec.extend(r.vector.0.iter().map(|v| v.to_string()));
        if labelled {
            rec.push(r.label.map(|l| u8::from(l).to_string()).unwrap_or_default());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn write_features(path: &Path, set: &FeatureSet) -> Result<bool, StoreError> {
    write_file(path, &features_to_csv(set))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

pub fn read_features(path: &Path) -> Result<FeatureSet, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_features(path, &bytes)
}

pub fn parse_features(path: &Path, bytes: &[u8]) -> Result<FeatureSet, StoreError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = rdr
        .headers()
        .map_err(|e| StoreError::SchemaMismatch {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    let labelled = if header.iter().eq(feature_header(true)) {
        true
    } else if header.iter().eq(feature_header(false)) {
        false
    } else {
        let features = header.len().saturating_sub(2 + usize::from(header.iter().next_back() == Some(LABEL_COLUMN)));
        return Err(StoreError::SchemaMismatch {
            path: path.to_path_buf(),
            message: format!("expected repo_id,measure and {FEATURE_COUNT} canonical feature columns, found {features} feature columns"),
        });
    };
    let parse_err = |line: u64, message: String| StoreError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let measure = rec[1].parse::<MeasureKind>().map_err(|e| parse_err(line, e))?;
        let mut vector = FeatureVector::zeros();
        for (j, slot) in vector.0.iter_mut().enumerate() {
            let field = &rec[2 + j];
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("bad value {field:?} for {}", Feature::ALL[j])))?;
        }
        let label = if labelled {
            let field = &rec[2 + FEATURE_COUNT];
            if field.trim().is_empty() {
                None
            } else {
                Some(parse_bool(field).ok_or_else(|| parse_err(line, format!("bad label {field:?}")))?)
            }
        } else {
            None
        };
        rows.push(FeatureRow {
            repo_id: rec[0].to_owned(),
            measure,
            vector,
            label,
        });
    }
    Ok(FeatureSet { rows })
}

/// Reads `repo_id,engineered` ground truth.
pub fn read_labels(path: &Path) -> Result<HashMap<String, bool>, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header = rdr.headers().map_err(|e| StoreError::SchemaMismatch {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if header.len() < 2 || &header[0] != "repo_id" {
        return Err(StoreError::SchemaMismatch {
            path: path.to_path_buf(),
            message: "expected repo_id,engineered".into(),
        });
    }
    let mut labels = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let label = parse_bool(&rec[1]).ok_or_else(|| StoreError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("bad label {:?}", &rec[1]),
        })?;
        labels.insert(rec[0].to_owned(), label);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &BTreeMap<String, bool>) -> Result<bool, StoreError> {
    let mut out = String::from("repo_id,engineered\n");
    for (id, l) in labels {
        out.push_str(&format!("{id},{}\n", u8::from(*l)));
    }
    write_file(path, out.as_bytes())
}

pub fn model_to_json(model: &PhantomModel) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(model).expect("model serialises");
    bytes.push(b'\n');
    bytes
}

pub fn write_model(path: &Path, model: &PhantomModel) -> Result<bool, StoreError> {
    write_file(path, &model_to_json(model))
}

pub fn read_model(path: &Path) -> Result<PhantomModel, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| StoreError::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let found = value.get("format").and_then(|f| f.as_str()).unwrap_or_default();
    if found != MODEL_FORMAT {
        return Err(StoreError::VersionMismatch {
            path: path.to_path_buf(),
            found: found.to_owned(),
        });
    }
    let model: PhantomModel = serde_json::from_value(value).map_err(|e| StoreError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    model.validate().map_err(|message| StoreError::InvalidModel {
        path: path.to_path_buf(),
        message,
    })?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub repo_id: String,
    pub measure: MeasureKind,
    pub engineered: bool,
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<bool, StoreError> {
    let mut out = String::from("repo_id,measure,engineered\n");
    for p in predictions {
        out.push_str(&format!("{},{},{}\n", p.repo_id, p.measure, u8::from(p.engineered)));
    }
    write_file(path, out.as_bytes())
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header = rdr.headers().map_err(|e| StoreError::SchemaMismatch {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if !header.iter().eq(["repo_id", "measure", "engineered"]) {
        return Err(StoreError::SchemaMismatch {
            path: path.to_path_buf(),
            message: "expected repo_id,measure,engineered".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| StoreError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        out.push(Prediction {
            repo_id: rec[0].to_owned(),
            measure: rec[1].parse().map_err(bad)?,
            engineered: parse_bool(&rec[2]).ok_or_else(|| bad(format!("bad flag {:?}", &rec[2])))?,
        });
    }
    Ok(out)
}

pub fn sweep_to_csv(results: &[SweepResult]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["measure", "threshold", "n_features", "precision", "recall", "f_measure", "mcc", "status"])
        .expect("in-memory write");
    for result in results {
        for cell in &result.cells {
            let metric = |f: fn(&EvaluationReport) -> f64| cell.report().map(|r| f(r).to_string()).unwrap_or_default();
            w.write_record([
                cell.measure.to_string(),
                cell.threshold.to_string(),
                cell.n_features.to_string(),
                metric(|r| r.precision),
                metric(|r| r.recall),
                metric(|r| r.f_measure),
                metric(|r| r.mcc),
                cell.status(),
            ])
            .expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory write")
}

pub fn write_sweep(path: &Path, results: &[SweepResult]) -> Result<bool, StoreError> {
    write_file(path, &sweep_to_csv(results))
}

/// Pointer to the selected model of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestModel {
    pub measure: MeasureKind,
    pub threshold: f64,
    pub n_features: usize,
    pub model_path: PathBuf,
    pub report: EvaluationReport,
}

impl BestModel {
    pub fn from_cell(cell: &SweepCell, model_path: PathBuf) -> Option<Self> {
        Some(Self {
            measure: cell.measure,
            threshold: cell.threshold,
            n_features: cell.n_features,
            model_path,
            report: cell.report()?.clone(),
        })
    }
}

pub fn write_best(path: &Path, best: &BestModel) -> Result<bool, StoreError> {
    let mut bytes = serde_json::to_vec_pretty(best).expect("pointer serialises");
    bytes.push(b'\n');
    write_file(path, &bytes)
}

pub fn write_evaluation(path: &Path, reports: &[EvaluationReport]) -> Result<bool, StoreError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "tp", "fp", "fn", "tn", "precision", "recall", "f_measure", "mcc"])
        .expect("in-memory write");
    for r in reports {
        let c = r.confusion;
        w.write_record([
            r.descriptor.clone(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.tn.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f_measure.to_string(),
            r.mcc.to_string(),
        ])
        .expect("in-memory write");
    }
    write_file(path, &w.into_inner().expect("in-memory write"))
}

/// `repo_id,kind,week_start_date,value` for plotting.
pub fn write_series(path: &Path, series: &[MeasureSeries]) -> Result<bool, StoreError> {
    let mut out = String::from("repo_id,kind,week_start_date,value\n");
    for s in series {
        for (week, value) in s.weeks() {
            out.push_str(&format!("{},{},{},{}\n", s.repo, s.kind, week.start_date(), value));
        }
    }
    write_file(path, out.as_bytes())
}
