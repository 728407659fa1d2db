//! Scripted Git repositories built with `git fast-import`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct FixtureCommit {
    pub author: String,
    pub author_ts: i64,
    pub committer: String,
    pub committer_ts: i64,
    /// Indices of earlier commits; empty for a root commit.
    pub parents: Vec<usize>,
}

impl FixtureCommit {
    pub fn new(author: &str, ts: i64, parents: Vec<usize>) -> Self {
        Self {
            author: author.to_owned(),
            author_ts: ts,
            committer: author.to_owned(),
            committer_ts: ts,
            parents,
        }
    }
}

pub fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .output()
        .expect("git runs");
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Creates a repository at `dir` whose `main` branch ends at the last
/// commit. Parents are given explicitly, so any DAG works.
pub fn build_repo(dir: &Path, commits: &[FixtureCommit]) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    git(dir, &["init", "-q"]);
    git(dir, &["symbolic-ref", "HEAD", "refs/heads/main"]);
    if commits.is_empty() {
        return dir.to_path_buf();
    }
    let mut stream = String::new();
    for (i, c) in commits.iter().enumerate() {
        let msg = format!("commit {i}\n");
        let content = format!("line {i}\n");
        if c.parents.is_empty() && i > 0 {
            stream.push_str("reset refs/heads/main\n");
        }
        stream.push_str(&format!("commit refs/heads/main\nmark :{}\n", i + 1));
        stream.push_str(&format!("author {0} <{0}@example.org> {1} +0000\n", c.author, c.author_ts));
        stream.push_str(&format!("committer {0} <{0}@example.org> {1} +0000\n", c.committer, c.committer_ts));
        stream.push_str(&format!("data {}\n{}", msg.len(), msg));
        if let Some(p) = c.parents.first() {
            stream.push_str(&format!("from :{}\n", p + 1));
        }
        for p in c.parents.iter().skip(1) {
            stream.push_str(&format!("merge :{}\n", p + 1));
        }
        stream.push_str(&format!("M 644 inline file{}.txt\ndata {}\n{}\n", i % 7, content.len(), content));
    }
    let mut child = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["fast-import", "--quiet", "--force"])
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stream.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "fast-import: {}", String::from_utf8_lossy(&out.stderr));
    dir.to_path_buf()
}

/// Three linear commits by two people.
pub fn three_commit_repo(dir: &Path) -> PathBuf {
    build_repo(
        dir,
        &[
            FixtureCommit::new("ab", 1519404672, vec![]),
            FixtureCommit::new("ab", 1519834072, vec![0]),
            FixtureCommit {
                committer: "cd".into(),
                committer_ts: 1519904396,
                ..FixtureCommit::new("ab", 1519904296, vec![1])
            },
        ],
    )
}

/// Root, two branch tips and a merge of them.
pub fn merge_repo(dir: &Path) -> PathBuf {
    build_repo(
        dir,
        &[
            FixtureCommit::new("ab", 1_500_000_000, vec![]),
            FixtureCommit::new("ab", 1_500_100_000, vec![0]),
            FixtureCommit::new("cd", 1_500_200_000, vec![0]),
            FixtureCommit::new("ab", 1_500_300_000, vec![1, 2]),
        ],
    )
}

const WEEK: i64 = 7 * 86_400;

/// Long-lived project: several contributors, weekly activity with quiet
/// spells, feature branches merged by an integrator.
pub fn active_profile(seed: u64) -> Vec<FixtureCommit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let devs: Vec<String> = (0..rng.random_range(4..9)).map(|d| format!("dev{seed}-{d}")).collect();
    let weeks = rng.random_range(60..120);
    let start = 1_300_000_000 + rng.random_range(0..50) * WEEK;
    let mut commits: Vec<FixtureCommit> = vec![];
    let mut tip: Option<usize> = None;
    for w in 0..weeks {
        if rng.random_bool(0.15) && w > 0 && w + 1 < weeks {
            continue;
        }
        let n = rng.random_range(2..14);
        for k in 0..n {
            let ts = start + w * WEEK + rng.random_range(0..WEEK - 3600);
            let author = devs[rng.random_range(0..devs.len())].clone();
            let parents = tip.map(|t| vec![t]).unwrap_or_default();
            commits.push(FixtureCommit {
                committer: if k % 3 == 0 { devs[0].clone() } else { author.clone() },
                committer_ts: ts + rng.random_range(0..3600),
                ..FixtureCommit::new(&author, ts, parents)
            });
            let feature = commits.len() - 1;
            if let (true, Some(prev)) = (rng.random_bool(0.3), tip) {
                // Merge a side commit branching off the previous tip.
                let merge_ts = ts + 1800;
                commits.push(FixtureCommit {
                    committer: devs[0].clone(),
                    committer_ts: merge_ts + 60,
                    ..FixtureCommit::new(&devs[0], merge_ts, vec![prev, feature])
                });
            }
            tip = Some(commits.len() - 1);
        }
    }
    commits
}

/// Throw-away project: one author, a handful of commits within a few weeks.
pub fn burst_profile(seed: u64) -> Vec<FixtureCommit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0b);
    let author = format!("solo{seed}");
    let weeks = rng.random_range(1..4);
    let start = 1_400_000_000 + rng.random_range(0..50) * WEEK;
    let n = rng.random_range(3..25);
    let mut times: Vec<i64> = (0..n).map(|_| start + rng.random_range(0..weeks * WEEK)).collect();
    times.sort();
    times
        .iter()
        .enumerate()
        .map(|(i, &ts)| FixtureCommit::new(&author, ts, if i == 0 { vec![] } else { vec![i - 1] }))
        .collect()
}
