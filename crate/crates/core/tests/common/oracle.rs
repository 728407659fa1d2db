//! Direct, unoptimised restatements of the definitions, used as
//! independent references for the library implementations.

use std::collections::HashMap;

fn stats(values: &[f64]) -> [f64; 3] {
    if values.is_empty() {
        return [0.0; 3];
    }
    let mut min = values[0];
    let mut max = values[0];
    for &v in values {
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    [min, values.iter().sum::<f64>() / values.len() as f64, max]
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lower = h.floor() as usize;
    if lower + 1 >= sorted.len() {
        return sorted[lower];
    }
    sorted[lower] + (h - lower as f64) * (sorted[lower + 1] - sorted[lower])
}

/// Feature vector keyed by canonical name.
pub fn features(values: &[u64]) -> HashMap<&'static str, f64> {
    let mut f: HashMap<&'static str, f64> = HashMap::new();
    let n = values.len();
    let y: Vec<f64> = values.iter().map(|v| *v as f64).collect();
    let names = [
        "duration", "max_y", "max_y_pos", "mean_y", "sum_y", "q25", "q50", "q75", "std",
        "peak_down", "peak_none", "peak_up", "min_tbp_up", "avg_tbp_up", "max_tbp_up",
        "min_tbp_down", "avg_tbp_down", "max_tbp_down", "min_amp", "avg_amp", "max_amp",
        "min_ppd", "avg_ppd", "max_ppd", "min_npd", "avg_npd", "max_npd", "min_ps", "avg_ps",
        "max_ps", "sum_ps", "min_ns", "avg_ns", "max_ns", "sum_ns", "min_pg", "avg_pg", "max_pg",
        "min_ng", "avg_ng", "max_ng", "pg_count", "ng_count",
    ];
    for name in names {
        f.insert(name, 0.0);
    }
    if n == 0 {
        return f;
    }
    f.insert("duration", n as f64);
    let max_y = y.iter().cloned().fold(f64::MIN, f64::max);
    let max_pos = y.iter().position(|v| *v == max_y).unwrap();
    let sum: f64 = y.iter().sum();
    let mean = sum / n as f64;
    let var: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let mut sorted = y.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    f.insert("max_y", max_y);
    f.insert("max_y_pos", max_pos as f64);
    f.insert("mean_y", mean);
    f.insert("sum_y", sum);
    f.insert("q25", quantile(&sorted, 0.25));
    f.insert("q50", quantile(&sorted, 0.5));
    f.insert("q75", quantile(&sorted, 0.75));
    f.insert("std", var.sqrt());

    let mut ups = vec![];
    let mut downs = vec![];
    if n > 3 {
        for i in 1..n - 1 {
            if y[i] > y[i - 1] && y[i] > y[i + 1] {
                ups.push(i);
            }
            if y[i] < y[i - 1] && y[i] < y[i + 1] {
                downs.push(i);
            }
        }
    }
    f.insert("peak_up", ups.len() as f64);
    f.insert("peak_down", downs.len() as f64);
    f.insert("peak_none", (n - ups.len() - downs.len()) as f64);

    let put3 = |f: &mut HashMap<&'static str, f64>, keys: [&'static str; 3], vals: &[f64]| {
        for (k, v) in keys.iter().zip(stats(vals)) {
            f.insert(k, v);
        }
    };
    let tbp = |idx: &[usize]| -> Vec<f64> {
        (1..idx.len()).map(|k| (idx[k] - idx[k - 1]) as f64).collect()
    };
    put3(&mut f, ["min_tbp_up", "avg_tbp_up", "max_tbp_up"], &tbp(&ups));
    put3(&mut f, ["min_tbp_down", "avg_tbp_down", "max_tbp_down"], &tbp(&downs));
    if max_y > 0.0 {
        let amps: Vec<f64> = ups.iter().map(|&i| (y[i] - y[i - 1]) / max_y).collect();
        put3(&mut f, ["min_amp", "avg_amp", "max_amp"], &amps);
    }
    let ppd: Vec<f64> = ups.iter().map(|&i| y[i] - mean).collect();
    let npd: Vec<f64> = downs.iter().map(|&i| y[i] - mean).collect();
    put3(&mut f, ["min_ppd", "avg_ppd", "max_ppd"], &ppd);
    put3(&mut f, ["min_npd", "avg_npd", "max_npd"], &npd);

    // Sign string of gradients, then maximal runs of one character.
    let grads: Vec<f64> = (1..n).map(|i| y[i] - y[i - 1]).collect();
    let signs: String = grads
        .iter()
        .map(|g| if *g > 0.0 { '+' } else if *g < 0.0 { '-' } else { '0' })
        .collect();
    let mut runs: Vec<(char, usize)> = vec![];
    for c in signs.chars() {
        match runs.last_mut() {
            Some((last, len)) if *last == c => *len += 1,
            _ => runs.push((c, 1)),
        }
    }
    let ps: Vec<f64> = runs.iter().filter(|(c, l)| *c == '+' && *l >= 2).map(|(_, l)| *l as f64).collect();
    let ns: Vec<f64> = runs.iter().filter(|(c, l)| *c == '-' && *l >= 2).map(|(_, l)| *l as f64).collect();
    put3(&mut f, ["min_ps", "avg_ps", "max_ps"], &ps);
    f.insert("sum_ps", ps.iter().sum());
    put3(&mut f, ["min_ns", "avg_ns", "max_ns"], &ns);
    f.insert("sum_ns", ns.iter().sum());

    let pg: Vec<f64> = grads.iter().cloned().filter(|g| *g > 0.0).collect();
    let ng: Vec<f64> = grads.iter().cloned().filter(|g| *g < 0.0).collect();
    put3(&mut f, ["min_pg", "avg_pg", "max_pg"], &pg);
    put3(&mut f, ["min_ng", "avg_ng", "max_ng"], &ng);
    f.insert("pg_count", pg.len() as f64);
    f.insert("ng_count", ng.len() as f64);
    f
}

/// Textbook single-pass Pearson formula on two columns.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Precision, recall, F-measure and MCC straight from the formulas.
pub fn metrics(tp: f64, fp: f64, fn_: f64, tn: f64) -> [f64; 4] {
    let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    let d = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if d > 0.0 { (tp * tn - fp * fn_) / d.sqrt() } else { 0.0 };
    [p, r, f, mcc]
}

/// Minimum within-cluster sum of squares over every 2-partition.
pub fn best_two_partition(points: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut best = (f64::INFINITY, vec![]);
    // Point 0 always in cluster 0; at least one point in cluster 1.
    for mask in 1u32..(1 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize }).collect();
        let mut cost = 0.0;
        for c in 0..2 {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, l)| **l == c).map(|(p, _)| p).collect();
            let d = members[0].len();
            let centre: Vec<f64> = (0..d).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
            cost += members.iter().map(|p| p.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum::<f64>();
        }
        if cost < best.0 {
            best = (cost, labels);
        }
    }
    best
}
