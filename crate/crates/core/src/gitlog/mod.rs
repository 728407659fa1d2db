//! Commit-log acquisition, parsing and anonymisation.
//!
//! A log has one line per commit with eight fields in this order: commit hash,
//! parent hashes (space separated), author name, author email, author date,
//! committer name, committer email, committer date. Dates are Unix seconds.
//! The interchange form separates fields with commas; [`LogFormat::UnitSeparator`]
//! uses `0x1F` instead so that names containing commas survive.

mod git;
mod ingest;

use std::collections::HashMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use git::{clone_repository, generate_log, generate_log_with, GitError};
pub use ingest::{
    derive_repo_id, ingest_corpus, parse_manifest, IngestError, IngestOptions, IngestReport,
    Unavailable,
};

/// Number of fields in one log row.
pub const FIELD_COUNT: usize = 8;

/// One repository of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepoRef {
    pub id: String,
    /// Clone URL or local path.
    pub source: String,
}

impl RepoRef {
    pub fn new(id: impl Into<String>, source: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            source: source.into(),
        }
    }
}

impl fmt::Display for RepoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.id, self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_hash: String,
    pub parent_hashes: Vec<String>,
    pub author_name: String,
    pub author_email: String,
    /// Unix seconds, UTC.
    pub author_date: i64,
    pub committer_name: String,
    pub committer_email: String,
    /// Unix seconds, UTC.
    pub committer_date: i64,
}

impl CommitRecord {
    pub fn is_merge(&self) -> bool {
        self.parent_hashes.len() >= 2
    }
}

/// Parsed log of one repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GitLog {
    pub repo: RepoRef,
    pub records: Vec<CommitRecord>,
    /// Rows that could not be split into exactly eight valid fields.
    pub discarded_rows: usize,
}

impl GitLog {
    pub fn empty(repo: RepoRef) -> Self {
        Self {
            repo,
            records: Vec::new(),
            discarded_rows: 0,
        }
    }
}

/// Outcome counters of one corpus ingestion run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct IngestStats {
    pub requested: usize,
    pub available: usize,
    pub unavailable: usize,
    /// Repositories cloned during this run; the rest of `available` already
    /// had a stored log.
    pub cloned: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Field separator of a log file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogFormat {
    #[default]
    Comma,
    UnitSeparator,
}

impl LogFormat {
    pub fn separator(self) -> char {
        match self {
            LogFormat::Comma => ',',
            LogFormat::UnitSeparator => '\u{1f}',
        }
    }

    /// `git log --pretty` format string producing this layout.
    pub fn pretty_format(self) -> &'static str {
        match self {
            LogFormat::Comma => "tformat:%H,%P,%an,%ae,%at,%cn,%ce,%ct",
            LogFormat::UnitSeparator => "tformat:%H%x1f%P%x1f%an%x1f%ae%x1f%at%x1f%cn%x1f%ce%x1f%ct",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Forced separator. `None` picks per row: unit separator when the row
    /// contains one, comma otherwise.
    pub format: Option<LogFormat>,
    /// Reject the whole log when any row is malformed, instead of only the
    /// offending rows.
    pub discard_whole_log: bool,
}

/// Parses a log with per-row separator detection and row-level discarding.
pub fn parse_log(raw: &str, repo: RepoRef) -> GitLog {
    parse_log_with(raw, repo, ParseOptions::default())
}

pub fn parse_log_bytes(raw: &[u8], repo: RepoRef, options: ParseOptions) -> GitLog {
    parse_log_with(&String::from_utf8_lossy(raw), repo, options)
}

pub fn parse_log_with(raw: &str, repo: RepoRef, options: ParseOptions) -> GitLog {
    let mut records = Vec::new();
    let mut discarded_rows = 0;
    let mut rows = 0;
    for line in raw.lines() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let format = options.format.unwrap_or(if line.contains('\u{1f}') {
            LogFormat::UnitSeparator
        } else {
            LogFormat::Comma
        });
        match parse_row(line, format.separator()) {
            Some(record) => records.push(record),
            None => discarded_rows += 1,
        }
    }
    if options.discard_whole_log && discarded_rows > 0 {
        records.clear();
        discarded_rows = rows;
    }
    GitLog {
        repo,
        records,
        discarded_rows,
    }
}

fn parse_row(line: &str, separator: char) -> Option<CommitRecord> {
    let fields: Vec<&str> = line.split(separator).collect();
    let [hash, parents, an, ae, at, cn, ce, ct] = fields.as_slice() else {
        return None;
    };
    if hash.is_empty() || !is_hex(hash) {
        return None;
    }
    let parent_hashes: Vec<String> = parents.split_whitespace().map(str::to_owned).collect();
    if !parent_hashes.iter().all(|p| is_hex(p)) {
        return None;
    }
    Some(CommitRecord {
        commit_hash: (*hash).to_owned(),
        parent_hashes,
        author_name: (*an).to_owned(),
        author_email: (*ae).to_owned(),
        author_date: parse_timestamp(at)?,
        committer_name: (*cn).to_owned(),
        committer_email: (*ce).to_owned(),
        committer_date: parse_timestamp(ct)?,
    })
}

fn is_hex(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_hexdigit())
}

fn parse_timestamp(s: &str) -> Option<i64> {
    s.trim().parse::<i64>().ok().filter(|t| *t >= 0)
}

/// Renders records back into log text. Names containing the separator are
/// not escaped; use [`LogFormat::UnitSeparator`] for such logs.
pub fn render_log(records: &[CommitRecord], format: LogFormat) -> String {
    let sep = format.separator();
    let mut out = String::new();
    for r in records {
        let parents = r.parent_hashes.join(" ");
        let fields = [
            r.commit_hash.as_str(),
            parents.as_str(),
            r.author_name.as_str(),
            r.author_email.as_str(),
            &r.author_date.to_string(),
            r.committer_name.as_str(),
            r.committer_email.as_str(),
            &r.committer_date.to_string(),
        ];
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                out.push(sep);
            }
            out.push_str(f);
        }
        out.push('\n');
    }
    out
}

/// Replaces every name and email with a salted SHA-256 pseudonym.
///
/// Equal inputs map to equal pseudonyms and distinct inputs to distinct ones
/// (up to hash collisions), so per-week distinct-identity counts survive.
/// Names and emails are hashed in separate domains.
pub fn anonymize(log: &GitLog, salt: &[u8]) -> GitLog {
    let mut pseudonyms = Pseudonyms::new(salt);
    let records = log
        .records
        .iter()
        .map(|r| CommitRecord {
            commit_hash: r.commit_hash.clone(),
            parent_hashes: r.parent_hashes.clone(),
            author_name: pseudonyms.name(&r.author_name),
            author_email: pseudonyms.email(&r.author_email),
            author_date: r.author_date,
            committer_name: pseudonyms.name(&r.committer_name),
            committer_email: pseudonyms.email(&r.committer_email),
            committer_date: r.committer_date,
        })
        .collect();
    GitLog {
        repo: log.repo.clone(),
        records,
        discarded_rows: log.discarded_rows,
    }
}

struct Pseudonyms<'a> {
    salt: &'a [u8],
    cache: HashMap<(u8, String), String>,
}

impl<'a> Pseudonyms<'a> {
    fn new(salt: &'a [u8]) -> Self {
        Self {
            salt,
            cache: HashMap::new(),
        }
    }

    fn digest(&mut self, domain: u8, value: &str) -> String {
        let salt = self.salt;
        self.cache
            .entry((domain, value.to_owned()))
            .or_insert_with(|| {
                let mut h = Sha256::new();
                h.update((salt.len() as u64).to_le_bytes());
                h.update(salt);
                h.update([domain]);
                h.update(value.as_bytes());
                hex::encode(&h.finalize()[..16])
            })
            .clone()
    }

    fn name(&mut self, value: &str) -> String {
        format!("dev-{}", self.digest(b'n', value))
    }

    fn email(&mut self, value: &str) -> String {
        format!("{}@example.invalid", self.digest(b'e', value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PAPER_LOG: &str = "\
b57f4f3,82c9f95,ab,a@b.com,1519904296,cd,c@d.com,1519904396
82c9f95,efaf9cd,ab,a@b.com,1519834072,ab,a@b.com,1519904296
efaf9cd,703b7b1,ab,a@b.com,1519404672,ab,a@b.com,1519824672
";

    fn repo() -> RepoRef {
        RepoRef::new("example", "/dev/null")
    }

    #[test]
    fn parses_example_log() {
        let log = parse_log(PAPER_LOG, repo());
        assert_eq!(log.records.len(), 3);
        assert_eq!(log.discarded_rows, 0);
        let first = &log.records[0];
        assert_eq!(first.commit_hash, "b57f4f3");
        assert_eq!(first.parent_hashes, vec!["82c9f95"]);
        assert_eq!(first.author_date, 1519904296);
        assert_eq!(first.committer_date, 1519904396);
        assert_eq!(first.committer_email, "c@d.com");
    }

    #[test]
    fn comma_in_name_discards_row_only() {
        let raw = format!("{PAPER_LOG}aaaa,bbbb,\"Doe, John\",j@d.com,1,Doe,j@d.com,2\n");
        let log = parse_log(&raw, repo());
        assert_eq!(log.records.len(), 3);
        assert_eq!(log.discarded_rows, 1);
    }

    #[test]
    fn whole_log_discard_mode() {
        let raw = format!("{PAPER_LOG}aaaa,bbbb,Doe, John,j@d.com,1,Doe,j@d.com,2\n");
        let options = ParseOptions {
            discard_whole_log: true,
            ..Default::default()
        };
        let log = parse_log_with(&raw, repo(), options);
        assert!(log.records.is_empty());
        assert_eq!(log.discarded_rows, 4);

        let clean = parse_log_with(PAPER_LOG, repo(), options);
        assert_eq!(clean.records.len(), 3);
    }

    #[test]
    fn empty_and_garbage_input() {
        let log = parse_log("", repo());
        assert!(log.records.is_empty());
        assert_eq!(log.discarded_rows, 0);

        let log = parse_log("hello\nworld\n,,,,,,,\n", repo());
        assert!(log.records.is_empty());
        assert_eq!(log.discarded_rows, 3);
    }

    #[test]
    fn root_and_merge_parents() {
        let raw = "aa,,x,x@y,5,x,x@y,6\nbb,aa cc,x,x@y,7,x,x@y,8\n";
        let log = parse_log(raw, repo());
        assert!(log.records[0].parent_hashes.is_empty());
        assert_eq!(log.records[1].parent_hashes, vec!["aa", "cc"]);
        assert!(log.records[1].is_merge());
    }

    #[test]
    fn negative_timestamp_rejected() {
        let log = parse_log("aa,,x,x@y,-5,x,x@y,6\n", repo());
        assert_eq!(log.discarded_rows, 1);
    }

    #[test]
    fn unit_separator_rows_keep_commas() {
        let records = vec![CommitRecord {
            commit_hash: "abc".into(),
            parent_hashes: vec![],
            author_name: "Doe, John".into(),
            author_email: "j@d.com".into(),
            author_date: 10,
            committer_name: "Doe, John".into(),
            committer_email: "j@d.com".into(),
            committer_date: 11,
        }];
        let raw = render_log(&records, LogFormat::UnitSeparator);
        let log = parse_log(&raw, repo());
        assert_eq!(log.records, records);
        assert_eq!(log.discarded_rows, 0);
    }

    #[test]
    fn pseudonyms_deterministic_and_distinct() {
        let log = parse_log(PAPER_LOG, repo());
        let anon = anonymize(&log, b"salt");
        let r = &anon.records;
        assert_eq!(r[0].author_email, r[1].author_email);
        assert_ne!(r[0].author_email, r[0].committer_email);
        assert_eq!(r[1].committer_email, r[1].author_email);
        assert!(!r[0].author_email.contains("a@b.com"));
        assert_eq!(anonymize(&log, b"salt"), anon);
        assert_ne!(anonymize(&log, b"pepper").records[0].author_email, r[0].author_email);
        for (a, b) in log.records.iter().zip(r) {
            assert_eq!(a.author_date, b.author_date);
            assert_eq!(a.committer_date, b.committer_date);
            assert_eq!(a.parent_hashes, b.parent_hashes);
        }
    }

    proptest::proptest! {
        #[test]
        fn parse_never_panics(bytes in proptest::collection::vec(proptest::num::u8::ANY, 0..512)) {
            let log = parse_log_bytes(&bytes, repo(), ParseOptions::default());
            let rows = String::from_utf8_lossy(&bytes).lines().filter(|l| !l.trim().is_empty()).count();
            proptest::prop_assert_eq!(log.records.len() + log.discarded_rows, rows);
        }

        #[test]
        fn render_parse_round_trip(
            rows in proptest::collection::vec(
                ("[0-9a-f]{7,40}", proptest::collection::vec("[0-9a-f]{7}", 0..3), "[a-zA-Z ]{0,12}", "[a-z@.]{0,12}", 0i64..4_000_000_000, 0i64..4_000_000_000),
                0..20,
            )
        ) {
            let records: Vec<CommitRecord> = rows
                .into_iter()
                .map(|(h, p, name, email, at, ct)| CommitRecord {
                    commit_hash: h,
                    parent_hashes: p,
                    author_name: name.clone(),
                    author_email: email.clone(),
                    author_date: at,
                    committer_name: name,
                    committer_email: email,
                    committer_date: ct,
                })
                .collect();
            for format in [LogFormat::Comma, LogFormat::UnitSeparator] {
                let log = parse_log(&render_log(&records, format), repo());
                proptest::prop_assert_eq!(&log.records, &records);
            }
        }
    }
}
