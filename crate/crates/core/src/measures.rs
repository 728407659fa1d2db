//! Weekly activity series derived from a commit log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::gitlog::{CommitRecord, GitLog};

/// The five per-week measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    /// Commits counted by author date.
    Commits,
    /// Commits counted by committer date.
    Integrations,
    /// Distinct author emails per week.
    Committers,
    /// Distinct committer emails per week.
    Integrators,
    /// Commits with two or more parents, by committer date.
    Merges,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 5] = [
        MeasureKind::Commits,
        MeasureKind::Integrations,
        MeasureKind::Committers,
        MeasureKind::Integrators,
        MeasureKind::Merges,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Commits => "commits",
            MeasureKind::Integrations => "integrations",
            MeasureKind::Committers => "committers",
            MeasureKind::Integrators => "integrators",
            MeasureKind::Merges => "merges",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MeasureKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown measure {s:?}"))
    }
}

const SECONDS_PER_DAY: i64 = 86_400;
/// 1970-01-01 was a Thursday; the first Monday is four days later.
const FIRST_MONDAY_DAY: i64 = 4;

/// Monday-aligned UTC week. Week 0 starts on Monday 1970-01-05.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeekIndex(pub i64);

impl WeekIndex {
    /// Date of the Monday that starts this week.
    pub fn start_date(self) -> NaiveDate {
        let epoch_monday = NaiveDate::from_ymd_opt(1970, 1, 5).expect("valid date");
        let days = self.0 * 7;
        if days >= 0 {
            epoch_monday + Days::new(days as u64)
        } else {
            epoch_monday - Days::new(days.unsigned_abs())
        }
    }
}

pub fn week_index(ts: i64) -> WeekIndex {
    let day = ts.div_euclid(SECONDS_PER_DAY);
    WeekIndex((day - FIRST_MONDAY_DAY).div_euclid(7))
}

/// Dense weekly series from the first to the last active week.
///
/// Interior inactive weeks hold zero. The merges series covers the whole
/// activity span of the log, so it may start or end with zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureSeries {
    pub repo: String,
    pub kind: MeasureKind,
    pub first_week: WeekIndex,
    pub values: Vec<u64>,
}

impl MeasureSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(week, value)` pairs including zero-filled weeks.
    pub fn weeks(&self) -> impl Iterator<Item = (WeekIndex, u64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (WeekIndex(self.first_week.0 + i as i64), *v))
    }
}

pub fn build_series(log: &GitLog, kind: MeasureKind) -> MeasureSeries {
    let buckets: BTreeMap<WeekIndex, u64> = match kind {
        MeasureKind::Commits => count_per_week(&log.records, |r| r.author_date),
        MeasureKind::Integrations => count_per_week(&log.records, |r| r.committer_date),
        MeasureKind::Merges => merges_per_week(&log.records),
        MeasureKind::Committers => {
            distinct_per_week(&log.records, |r| (r.author_date, r.author_email.as_str()))
        }
        MeasureKind::Integrators => {
            distinct_per_week(&log.records, |r| (r.committer_date, r.committer_email.as_str()))
        }
    };
    densify(log, kind, buckets)
}

/// All five series in [`MeasureKind::ALL`] order.
pub fn build_all(log: &GitLog) -> [MeasureSeries; 5] {
    MeasureKind::ALL.map(|kind| build_series(log, kind))
}

fn count_per_week<F>(records: &[CommitRecord], date: F) -> BTreeMap<WeekIndex, u64>
where
    F: Fn(&CommitRecord) -> i64,
{
    let mut buckets = BTreeMap::new();
    for r in records {
        *buckets.entry(week_index(date(r))).or_insert(0) += 1;
    }
    buckets
}

/// Merges are sparse, so their series spans every week touched by any
/// author or committer date and holds zeros where no merge landed.
fn merges_per_week(records: &[CommitRecord]) -> BTreeMap<WeekIndex, u64> {
    let mut buckets = BTreeMap::new();
    for r in records {
        buckets.entry(week_index(r.author_date)).or_insert(0);
        *buckets.entry(week_index(r.committer_date)).or_insert(0) += u64::from(r.is_merge());
    }
    buckets
}

fn distinct_per_week<'a, F>(records: &'a [CommitRecord], key: F) -> BTreeMap<WeekIndex, u64>
where
    F: Fn(&'a CommitRecord) -> (i64, &'a str),
{
    let mut sets: BTreeMap<WeekIndex, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        let (ts, email) = key(r);
        sets.entry(week_index(ts)).or_default().insert(email);
    }
    sets.into_iter().map(|(w, s)| (w, s.len() as u64)).collect()
}

fn densify(log: &GitLog, kind: MeasureKind, buckets: BTreeMap<WeekIndex, u64>) -> MeasureSeries {
    let (Some((&first, _)), Some((&last, _))) = (buckets.first_key_value(), buckets.last_key_value())
    else {
        return MeasureSeries {
            repo: log.repo.id.clone(),
            kind,
            first_week: WeekIndex(0),
            values: Vec::new(),
        };
    };
    let mut values = vec![0; (last.0 - first.0 + 1) as usize];
    for (w, v) in buckets {
        values[(w.0 - first.0) as usize] = v;
    }
    MeasureSeries {
        repo: log.repo.id.clone(),
        kind,
        first_week: first,
        values,
    }
}
