//! Run configuration: flags over `PHANTOM_WORKDIR` over config file over
//! defaults.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use phantom_core::evaluation::default_grid;
use phantom_core::measures::MeasureKind;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Corpus directory holding logs/, features/, models/ and reports/.
    #[arg(long, global = true, env = "PHANTOM_WORKDIR")]
    pub workdir: Option<PathBuf>,
    /// key=value file supplying defaults for any of these flags.
    #[arg(long, global = true, env = "PHANTOM_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long = "timeout-secs", global = true)]
    pub timeout_secs: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// commits, integrations, committers, integrators, merges or all.
    #[arg(long, global = true)]
    pub measure: Option<String>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// `default` or comma-separated thresholds.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// CSV of `repo_id,engineered` ground truth.
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// Replace names and emails with salted pseudonyms.
    #[arg(long, global = true)]
    pub anonymize: bool,
    /// Salt for pseudonyms.
    #[arg(long, global = true)]
    pub salt: Option<String>,
    /// Drop a whole log when any row is malformed.
    #[arg(long = "replication-discard-logs", global = true)]
    pub replication_discard_logs: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workdir: PathBuf,
    pub parallelism: usize,
    pub timeout: Duration,
    pub seed: u64,
    pub grid: Vec<f64>,
    pub threshold: f64,
    pub measures: Vec<MeasureKind>,
    pub labels: Option<PathBuf>,
    pub anonymize: bool,
    pub salt: String,
    pub discard_whole_log: bool,
}

pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value", i + 1);
        };
        map.insert(k.trim().replace('-', "_"), v.trim().to_owned());
    }
    Ok(map)
}

pub fn parse_measures(s: &str) -> Result<Vec<MeasureKind>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(MeasureKind::ALL.to_vec());
    }
    s.split(',')
        .map(|m| m.parse::<MeasureKind>().map_err(anyhow::Error::msg))
        .collect()
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    if s.trim().eq_ignore_ascii_case("default") {
        return Ok(default_grid());
    }
    let grid: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad threshold {t:?}")))
        .collect::<Result<_>>()?;
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        bail!("grid thresholds must lie in (0, 1]");
    }
    Ok(grid)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("config {key}: expected a boolean, got {v:?}"),
    }
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(path) => parse_config_file(
                &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            )?,
            None => HashMap::new(),
        };
        if let Some(unknown) = file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            bail!("unknown config key {unknown:?}");
        }
        let get = |k: &str| file.get(k).map(String::as_str);
        let parse_num = |k: &str| -> Result<Option<f64>> {
            get(k).map(|v| v.parse::<f64>().with_context(|| format!("config {k}"))).transpose()
        };

        let workdir = args
            .workdir
            .clone()
            .or_else(|| get("workdir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let parallelism = match args.workers {
            Some(w) => w,
            None => parse_num("workers")?.map_or(4, |w| w as usize),
        };
        if parallelism == 0 {
            bail!("--workers must be at least 1");
        }
        let timeout_secs = match args.timeout_secs {
            Some(t) => t,
            None => parse_num("timeout_secs")?.map_or(600, |t| t as u64),
        };
        let seed = match args.seed {
            Some(s) => s,
            None => get("seed")
                .map(|s| s.parse::<u64>().context("config seed"))
                .transpose()?
                .unwrap_or(DEFAULT_SEED),
        };
        let threshold = match args.threshold {
            Some(t) => t,
            None => parse_num("threshold")?.unwrap_or(DEFAULT_THRESHOLD),
        };
        if !(threshold > 0.0 && threshold <= 1.0) {
            bail!("threshold must lie in (0, 1]");
        }
        let grid = parse_grid(args.grid.as_deref().or(get("grid")).unwrap_or("default"))?;
        let measures = parse_measures(args.measure.as_deref().or(get("measure")).unwrap_or("all"))?;
        let anonymize = args.anonymize || get("anonymize").map(|v| parse_bool("anonymize", v)).transpose()?.unwrap_or(false);
        let discard_whole_log = args.replication_discard_logs
            || get("replication_discard_logs")
                .map(|v| parse_bool("replication_discard_logs", v))
                .transpose()?
                .unwrap_or(false);
        Ok(RunConfig {
            workdir,
            parallelism,
            timeout: Duration::from_secs(timeout_secs),
            seed,
            grid,
            threshold,
            measures,
            labels: args.labels.clone().or_else(|| get("labels").map(PathBuf::from)),
            anonymize,
            salt: args.salt.clone().or_else(|| get("salt").map(str::to_owned)).unwrap_or_else(|| "phantom".into()),
            discard_whole_log,
        })
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.workdir.join(p)
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "workdir",
    "workers",
    "timeout_secs",
    "seed",
    "measure",
    "threshold",
    "grid",
    "labels",
    "anonymize",
    "salt",
    "replication_discard_logs",
];
