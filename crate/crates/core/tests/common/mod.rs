#![allow(dead_code)]

pub mod fixtures;
pub mod oracle;

use phantom_core::features::{FeatureVector, FEATURE_COUNT};
use phantom_core::measures::MeasureKind;
use phantom_core::model::FeatureTable;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Two Gaussian blobs in 43 dimensions whose centres are `separation`
/// standard deviations apart. The first `n / 2` rows are labelled positive.
pub fn blob_table(n: usize, separation: f64, seed: u64) -> FeatureTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let shift = separation / (FEATURE_COUNT as f64).sqrt();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i < n / 2;
        let mut v = FeatureVector::zeros();
        for x in v.0.iter_mut() {
            *x = noise.sample(&mut rng) + if positive { shift } else { 0.0 };
        }
        rows.push(v);
        labels.push(positive);
    }
    FeatureTable {
        measure: MeasureKind::Commits,
        repo_ids: (0..n).map(|i| format!("blob-{i}")).collect(),
        rows,
        labels: Some(labels),
    }
}

/// Comma-format log with `commits` rows. Engineered logs spread work over
/// many weeks and contributors with regular merges; the others cluster
/// around a few weeks with one author.
pub fn synthetic_log(seed: u64, commits: usize, engineered: bool) -> String {
    use phantom_core::gitlog::{render_log, CommitRecord, LogFormat};
    use rand::Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let week = 7 * 86_400;
    let start = 1_300_000_000 + rng.random_range(0..200) * week;
    let (span_weeks, devs, merge_rate) = if engineered {
        (rng.random_range(40..200), rng.random_range(3..12), 0.15)
    } else {
        (rng.random_range(1..6), 1, 0.0)
    };
    let mut times: Vec<i64> = (0..commits)
        .map(|_| start + rng.random_range(0..span_weeks * week))
        .collect();
    times.sort_unstable();
    let records: Vec<CommitRecord> = times
        .iter()
        .enumerate()
        .map(|(i, &ts)| {
            let dev = rng.random_range(0..devs);
            let mut parents = if i == 0 { vec![] } else { vec![format!("{:010x}", seed * 1000 + i as u64 - 1)] };
            if i > 0 && rng.random_bool(merge_rate) {
                parents.push(format!("{:010x}", rng.random::<u32>()));
            }
            CommitRecord {
                commit_hash: format!("{:010x}", seed * 1000 + i as u64),
                parent_hashes: parents,
                author_name: format!("dev {dev}"),
                author_email: format!("dev{dev}@example.org"),
                author_date: ts,
                committer_name: if engineered { "integrator".into() } else { format!("dev {dev}") },
                committer_email: if engineered && dev % 2 == 0 { "ci@example.org".into() } else { format!("dev{dev}@example.org") },
                committer_date: ts + rng.random_range(0..20_000),
            }
        })
        .collect();
    render_log(&records, LogFormat::Comma)
}
