//! Synthetic inputs shared by the benchmarks.

use phantom_core::gitlog::{render_log, CommitRecord, LogFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A comma-format log of `commits` commits spread over about a year.
pub fn synthetic_log(seed: u64, commits: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts = 1_400_000_000i64 + rng.random_range(0..10_000_000);
    let records: Vec<CommitRecord> = (0..commits)
        .map(|i| {
            ts += rng.random_range(0..400_000);
            let dev = rng.random_range(0..5);
            let parents = if i == 0 {
                vec![]
            } else if rng.random_bool(0.1) {
                vec![format!("{:08x}", i - 1), format!("{:08x}", i + 7_000_000)]
            } else {
                vec![format!("{:08x}", i - 1)]
            };
            CommitRecord {
                commit_hash: format!("{i:08x}"),
                parent_hashes: parents,
                author_name: format!("dev{dev}"),
                author_email: format!("dev{dev}@example.org"),
                author_date: ts,
                committer_name: "ci".into(),
                committer_email: "ci@example.org".into(),
                committer_date: ts + rng.random_range(0..50_000),
            }
        })
        .collect();
    render_log(&records, LogFormat::Comma)
}
