use std::collections::HashSet;
use std::io;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use super::git::{clone_repository, generate_log_with, GitError};
use super::{anonymize, parse_log_with, render_log, IngestStats, LogFormat, ParseOptions, RepoRef};
use crate::store::{self, CorpusLayout};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parallelism must be at least 1")]
    InvalidParallelism,
    #[error("duplicate repository id {0:?} in manifest")]
    DuplicateId(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error(transparent)]
    Git(#[from] GitError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub parallelism: usize,
    pub timeout: Duration,
    pub format: LogFormat,
    /// Replace identities with salted pseudonyms before storing logs.
    pub anonymize_salt: Option<Vec<u8>>,
    /// Keep the metadata clones under `clones/` after the log is written.
    pub keep_clones: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            parallelism: 4,
            timeout: Duration::from_secs(600),
            format: LogFormat::Comma,
            anonymize_salt: None,
            keep_clones: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unavailable {
    pub repo_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub stats: IngestStats,
    /// In manifest order.
    pub unavailable: Vec<Unavailable>,
}

/// Builds a filesystem-safe id from a URL or path: the last two path
/// segments joined by `__`, without a `.git` suffix.
pub fn derive_repo_id(source: &str) -> String {
    let trimmed = source.trim_end_matches('/');
    let trimmed = trimmed.strip_suffix(".git").unwrap_or(trimmed);
    let segments: Vec<&str> = trimmed
        .split(['/', ':', '\\'])
        .filter(|s| !s.is_empty())
        .collect();
    let tail = &segments[segments.len().saturating_sub(2)..];
    sanitize_id(&tail.join("__"))
}

fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect::<String>()
        .trim_start_matches('.')
        .to_owned()
}

/// Reads a manifest: one source per line with an optional tab-separated id.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_manifest(text: &str) -> Result<Vec<RepoRef>, IngestError> {
    let mut seen = HashSet::new();
    let mut repos = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let source = parts.next().unwrap_or_default().trim().to_owned();
        let id = match parts.next().map(str::trim).filter(|s| !s.is_empty()) {
            Some(id) => sanitize_id(id),
            None => derive_repo_id(&source),
        };
        if source.is_empty() || id.is_empty() {
            return Err(IngestError::Manifest {
                line: i + 1,
                message: "empty source or id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId(id));
        }
        repos.push(RepoRef { id, source });
    }
    Ok(repos)
}

enum JobOutcome {
    Present,
    Cloned,
    Unavailable(String),
}

/// Clones every repository and stores its log under `logs/<id>.log`.
///
/// Repositories whose log already exists are skipped. Failures of single
/// repositories are collected into the report and written to the
/// unavailable sidecar; they never abort the run.
pub fn ingest_corpus(
    manifest: &[RepoRef],
    layout: &CorpusLayout,
    options: &IngestOptions,
) -> Result<IngestReport, IngestError> {
    if options.parallelism == 0 {
        return Err(IngestError::InvalidParallelism);
    }
    let mut ids = HashSet::new();
    for repo in manifest {
        if !ids.insert(repo.id.as_str()) {
            return Err(IngestError::DuplicateId(repo.id.clone()));
        }
    }
    let started = Instant::now();
    layout.ensure()?;

    let pending = manifest
        .iter()
        .any(|r| !layout.log_path(&r.id).exists());
    if pending {
        // Fail the whole run early rather than marking every repo unavailable.
        probe_git()?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()
        .map_err(|e| io::Error::other(e.to_string()))?;
    let outcomes: Vec<JobOutcome> =
        pool.install(|| manifest.par_iter().map(|r| ingest_one(r, layout, options)).collect());

    let mut stats = IngestStats {
        requested: manifest.len(),
        ..Default::default()
    };
    let mut unavailable = Vec::new();
    for (repo, outcome) in manifest.iter().zip(outcomes) {
        match outcome {
            JobOutcome::Present => stats.available += 1,
            JobOutcome::Cloned => {
                stats.available += 1;
                stats.cloned += 1;
            }
            JobOutcome::Unavailable(reason) => {
                stats.unavailable += 1;
                unavailable.push(Unavailable {
                    repo_id: repo.id.clone(),
                    reason,
                });
            }
        }
    }
    store::write_unavailable(&layout.unavailable_report(), &unavailable)?;
    stats.elapsed = started.elapsed();
    Ok(IngestReport { stats, unavailable })
}

fn probe_git() -> Result<(), GitError> {
    match std::process::Command::new("git")
        .arg("--version")
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
    {
        Ok(_) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(GitError::ToolMissing),
        Err(e) => Err(GitError::Io(e)),
    }
}

fn ingest_one(repo: &RepoRef, layout: &CorpusLayout, options: &IngestOptions) -> JobOutcome {
    let log_path = layout.log_path(&repo.id);
    if log_path.exists() {
        return JobOutcome::Present;
    }
    let clones = layout.clones_dir();
    let result = clone_repository(repo, &clones, options.timeout).and_then(|path| {
        let raw = generate_log_with(&path, options.format);
        if !options.keep_clones {
            let _ = std::fs::remove_dir_all(&path);
        }
        raw
    });
    let raw = match result {
        Ok(raw) => raw,
        Err(GitError::Unavailable { reason, .. }) => return JobOutcome::Unavailable(reason),
        Err(GitError::Timeout(t)) => {
            return JobOutcome::Unavailable(format!("timeout after {}s", t.as_secs_f64()))
        }
        Err(e) => return JobOutcome::Unavailable(e.to_string()),
    };
    let text = match &options.anonymize_salt {
        Some(salt) => {
            let options_parse = ParseOptions {
                format: Some(options.format),
                discard_whole_log: false,
            };
            let log = parse_log_with(&raw, repo.clone(), options_parse);
            render_log(&anonymize(&log, salt).records, options.format)
        }
        None => raw,
    };
    match store::write_atomic(&log_path, text.as_bytes()) {
        Ok(_) => JobOutcome::Cloned,
        Err(e) => JobOutcome::Unavailable(format!("storing log failed: {e}")),
    }
}
