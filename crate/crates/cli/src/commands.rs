use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use phantom_core::evaluation::{evaluate as score, naive_baselines, select_best, sweep_with, EvalError, SweepResult};
use phantom_core::gitlog::{parse_manifest, ingest_corpus, IngestError, IngestOptions, LogFormat, ParseOptions};
use phantom_core::measures::MeasureKind;
use phantom_core::model::{fit_model_with, predict as classify, ClusterMapping, FitConfig, ModelError};
use phantom_core::pipeline::{extract_corpus, ExtractOptions};
use phantom_core::store::{self, BestModel, CorpusLayout, FeatureSet, Prediction, StoreError};

use crate::config::RunConfig;

pub fn error_kind(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if cause.is::<StoreError>() {
            return "store";
        }
        if cause.is::<IngestError>() {
            return "ingest";
        }
        if cause.is::<ModelError>() {
            return "model";
        }
        if cause.is::<EvalError>() {
            return "evaluation";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "usage"
}

fn layout(config: &RunConfig) -> CorpusLayout {
    CorpusLayout::new(&config.workdir)
}

fn status(changed: bool) -> &'static str {
    if changed { "written" } else { "unchanged" }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LogFormatArg {
    Comma,
    UnitSeparator,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// One URL or path per line, optionally followed by a tab and an id.
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "comma")]
    pub log_format: LogFormatArg,
    /// Keep metadata clones under clones/.
    #[arg(long)]
    pub keep_clones: bool,
}

pub fn ingest(config: &RunConfig, args: &IngestArgs) -> Result<()> {
    let text = fs::read_to_string(&args.manifest)
        .with_context(|| format!("reading manifest {}", args.manifest.display()))?;
    let repos = parse_manifest(&text)?;
    let options = IngestOptions {
        parallelism: config.parallelism,
        timeout: config.timeout,
        format: match args.log_format {
            LogFormatArg::Comma => LogFormat::Comma,
            LogFormatArg::UnitSeparator => LogFormat::UnitSeparator,
        },
        anonymize_salt: config.anonymize.then(|| config.salt.as_bytes().to_vec()),
        keep_clones: args.keep_clones,
    };
    let report = ingest_corpus(&repos, &layout(config), &options)?;
    let s = report.stats;
    println!(
        "{}",
        serde_json::json!({
            "requested": s.requested,
            "available": s.available,
            "unavailable": s.unavailable,
            "cloned": s.cloned,
            "elapsed_secs": s.elapsed.as_secs_f64(),
        })
    );
    for u in &report.unavailable {
        eprintln!("unavailable: {} ({})", u.repo_id, u.reason);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Feature CSV to write (default features/features.csv).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also dump weekly series to features/series.csv.
    #[arg(long)]
    pub series: bool,
}

fn read_labels(config: &RunConfig) -> Result<Option<HashMap<String, bool>>> {
    config
        .labels
        .as_ref()
        .map(|p| store::read_labels(p).map_err(Into::into))
        .transpose()
}

pub fn extract(config: &RunConfig, args: &ExtractArgs) -> Result<()> {
    let layout = layout(config);
    let options = ExtractOptions {
        parse: ParseOptions {
            format: None,
            discard_whole_log: config.discard_whole_log,
        },
        anonymize_salt: config.anonymize.then(|| config.salt.as_bytes().to_vec()),
        keep_series: args.series,
    };
    let mut extraction = extract_corpus(&layout, &options).context("reading stored logs")?;
    if extraction.repos == 0 {
        bail!("no logs under {}", layout.logs_dir().display());
    }
    if let Some(labels) = read_labels(config)? {
        extraction.features.attach_labels(&labels);
    }
    let output = args.output.clone().unwrap_or_else(|| layout.features_path());
    let changed = store::write_features(&output, &extraction.features)?;
    if args.series {
        store::write_series(&layout.series_path(), &extraction.series)?;
    }
    println!(
        "{} repos, {} feature rows, {} discarded log rows, {} empty logs -> {} ({})",
        extraction.repos,
        extraction.features.rows.len(),
        extraction.discarded_rows,
        extraction.empty_logs,
        output.display(),
        status(changed)
    );
    Ok(())
}

fn load_features(config: &RunConfig, path: Option<&PathBuf>) -> Result<FeatureSet> {
    let path = path.cloned().unwrap_or_else(|| layout(config).features_path());
    let mut set = store::read_features(&path)?;
    if let Some(labels) = read_labels(config)? {
        set.attach_labels(&labels);
    }
    Ok(set)
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Choose the engineered cluster by larger mean sum_y instead of labels.
    #[arg(long)]
    pub label_free: bool,
}

pub fn fit(config: &RunConfig, args: &FitArgs) -> Result<()> {
    let set = load_features(config, args.features.as_ref())?;
    let layout = layout(config);
    for &measure in &config.measures {
        let table = set.table(measure);
        let fit_config = FitConfig {
            mapping: if args.label_free { ClusterMapping::LargerSumY } else { ClusterMapping::BestFMeasure },
            provenance: format!("{} rows", table.len()),
            ..FitConfig::new(config.threshold, config.seed)
        };
        let fitted = fit_model_with(&table, &fit_config).with_context(|| format!("fitting {measure}"))?;
        let path = layout.model_path(measure);
        let changed = store::write_model(&path, &fitted.model)?;
        println!(
            "{measure}: {} features retained -> {} ({})",
            fitted.model.retained.len(),
            path.display(),
            status(changed)
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Score cells on this labelled feature CSV instead of the fitting data.
    #[arg(long)]
    pub holdout: Option<PathBuf>,
}

pub fn sweep(config: &RunConfig, args: &SweepArgs) -> Result<()> {
    let set = load_features(config, args.features.as_ref())?;
    let holdout = args.holdout.as_ref().map(|p| load_features(config, Some(p))).transpose()?;
    let layout = layout(config);
    let mut results: Vec<SweepResult> = Vec::new();
    for &measure in &config.measures {
        let table = set.table(measure);
        let holdout_table = holdout.as_ref().map(|h| h.table(measure));
        results.push(sweep_with(&table, &config.grid, config.seed, holdout_table.as_ref())?);
    }
    let sweep_path = layout.reports_dir().join("sweep.csv");
    store::write_sweep(&sweep_path, &results)?;
    println!("sweep -> {}", sweep_path.display());
    for result in &results {
        let measure = result.measure;
        match select_best(result) {
            Ok(cell) => {
                let model_path = layout.models_dir().join(format!("best-{measure}.json"));
                store::write_model(&model_path, cell.model().expect("successful cell"))?;
                let best = BestModel::from_cell(cell, model_path.clone()).expect("successful cell");
                store::write_best(&layout.reports_dir().join(format!("best-{measure}.json")), &best)?;
                println!(
                    "{measure}: best threshold {} ({} features) F={:.4} P={:.4} R={:.4} MCC={:.4}",
                    cell.threshold,
                    cell.n_features,
                    best.report.f_measure,
                    best.report.precision,
                    best.report.recall,
                    best.report.mcc
                );
            }
            Err(e) => println!("{measure}: {e}"),
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Model files; defaults to models/<measure>.json for each selected measure.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn predict(config: &RunConfig, args: &PredictArgs) -> Result<()> {
    let set = load_features(config, args.features.as_ref())?;
    let layout = layout(config);
    let model_paths: Vec<PathBuf> = if args.models.is_empty() {
        config
            .measures
            .iter()
            .map(|&m| layout.model_path(m))
            .filter(|p| p.exists())
            .collect()
    } else {
        args.models.iter().map(|p| config.resolve_path(p)).collect()
    };
    if model_paths.is_empty() {
        bail!("no model files found under {}; run fit or pass --model", layout.models_dir().display());
    }
    let mut predictions = Vec::new();
    for path in &model_paths {
        let model = store::read_model(path)?;
        let table = set.table(model.measure);
        for (repo_id, engineered) in table.repo_ids.iter().zip(classify(&model, &table.rows)) {
            predictions.push(Prediction {
                repo_id: repo_id.clone(),
                measure: model.measure,
                engineered,
            });
        }
    }
    let output = args.output.clone().unwrap_or_else(|| layout.reports_dir().join("predictions.csv"));
    let changed = store::write_predictions(&output, &predictions)?;
    println!("{} predictions -> {} ({})", predictions.len(), output.display(), status(changed));
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Add uniform, stratified and majority baseline rows.
    #[arg(long)]
    pub baselines: bool,
}

fn predictions_by_measure(predictions: Vec<Prediction>) -> BTreeMap<MeasureKind, Vec<Prediction>> {
    let mut by_measure: BTreeMap<MeasureKind, Vec<Prediction>> = BTreeMap::new();
    for p in predictions {
        by_measure.entry(p.measure).or_default().push(p);
    }
    by_measure
}

pub fn evaluate(config: &RunConfig, args: &EvaluateArgs) -> Result<()> {
    let Some(labels) = read_labels(config)? else {
        bail!("evaluate needs --labels");
    };
    let layout = layout(config);
    let path = args.predictions.clone().unwrap_or_else(|| layout.reports_dir().join("predictions.csv"));
    let mut reports = Vec::new();
    for (measure, preds) in predictions_by_measure(store::read_predictions(&path)?) {
        if !config.measures.contains(&measure) {
            continue;
        }
        let (predicted, actual): (Vec<bool>, Vec<bool>) = preds
            .iter()
            .filter_map(|p| labels.get(&p.repo_id).map(|&l| (p.engineered, l)))
            .unzip();
        let unlabelled = preds.len() - predicted.len();
        if unlabelled > 0 {
            eprintln!("{measure}: {unlabelled} predictions without a label skipped");
        }
        let report = score(&predicted, &actual, measure.name()).with_context(|| format!("evaluating {measure}"))?;
        println!(
            "{measure}: n={} P={:.4} R={:.4} F={:.4} MCC={:.4}",
            predicted.len(),
            report.precision,
            report.recall,
            report.f_measure,
            report.mcc
        );
        reports.push(report);
        if args.baselines {
            let b = naive_baselines(&actual, config.seed)?;
            for mut r in [b.uniform, b.stratified, b.majority] {
                r.descriptor = format!("{measure}:{}", r.descriptor);
                reports.push(r);
            }
        }
    }
    let output = args.output.clone().unwrap_or_else(|| layout.reports_dir().join("evaluation.csv"));
    store::write_evaluation(&output, &reports)?;
    println!("evaluation -> {}", output.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

pub fn summary_line(measure: MeasureKind, engineered: usize, total: usize) -> String {
    let pct = if total == 0 { 0.0 } else { 100.0 * engineered as f64 / total as f64 };
    format!("{measure}: {engineered} of {total} ({pct:.2}%) classified engineered")
}

pub fn report(config: &RunConfig, args: &ReportArgs) -> Result<()> {
    let path = args
        .predictions
        .clone()
        .unwrap_or_else(|| layout(config).reports_dir().join("predictions.csv"));
    let by_measure = predictions_by_measure(store::read_predictions(&path)?);
    if by_measure.is_empty() {
        bail!("{} holds no predictions", path.display());
    }
    for (measure, preds) in by_measure {
        let engineered = preds.iter().filter(|p| p.engineered).count();
        println!("{}", summary_line(measure, engineered, preds.len()));
    }
    Ok(())
}
