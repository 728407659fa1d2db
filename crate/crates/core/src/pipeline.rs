//! Stage glue: stored logs to feature rows.

use std::fs;
use std::io;

use rayon::prelude::*;

use crate::features::extract_features;
use crate::gitlog::{anonymize, parse_log_bytes, GitLog, ParseOptions, RepoRef};
use crate::measures::{build_all, MeasureSeries};
use crate::store::{CorpusLayout, FeatureRow, FeatureSet};

/// Five feature rows of one log, in measure order.
pub fn feature_rows(log: &GitLog) -> Vec<FeatureRow> {
    build_all(log)
        .iter()
        .map(|series| FeatureRow {
            repo_id: log.repo.id.clone(),
            measure: series.kind,
            vector: extract_features(series),
            label: None,
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct ExtractOptions {
    pub parse: ParseOptions,
    /// Pseudonymise identities before building series.
    pub anonymize_salt: Option<Vec<u8>>,
    /// Also return the weekly series.
    pub keep_series: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub features: FeatureSet,
    pub series: Vec<MeasureSeries>,
    pub repos: usize,
    pub discarded_rows: usize,
    /// Repositories whose log produced no records.
    pub empty_logs: usize,
}

/// Parses every stored log and extracts the five feature rows per repo.
/// Output is ordered by repo id and measure.
pub fn extract_corpus(layout: &CorpusLayout, options: &ExtractOptions) -> io::Result<Extraction> {
    let logs = layout.stored_logs()?;
    let parsed: Vec<(GitLog, Vec<MeasureSeries>, Vec<FeatureRow>)> = logs
        .par_iter()
        .map(|(id, path)| {
            let raw = fs::read(path)?;
            let mut log = parse_log_bytes(&raw, RepoRef::new(id.clone(), path.display().to_string()), options.parse);
            if let Some(salt) = &options.anonymize_salt {
                log = anonymize(&log, salt);
            }
            let rows = feature_rows(&log);
            let series = if options.keep_series { build_all(&log).to_vec() } else { Vec::new() };
            Ok((log, series, rows))
        })
        .collect::<io::Result<_>>()?;
    let mut out = Extraction {
        repos: parsed.len(),
        ..Default::default()
    };
    for (log, series, rows) in parsed {
        out.discarded_rows += log.discarded_rows;
        out.empty_logs += usize::from(log.records.is_empty());
        out.series.extend(series);
        out.features.rows.extend(rows);
    }
    Ok(out)
}
