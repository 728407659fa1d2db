//! Fixed-length characterisation of a weekly series.
//!
//! Every series, whatever its length, is reduced to the 43 values listed in
//! [`Feature::ALL`]. Values that cannot be measured on a given series (no
//! peaks, too short, all-zero) are exactly `0.0`.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::measures::MeasureSeries;

pub const FEATURE_COUNT: usize = 43;

/// Series no longer than this have no detectable peaks.
pub const MIN_PEAK_SERIES_LEN: usize = 4;

macro_rules! features {
    ($($variant:ident => $name:literal,)*) => {
        /// Slot of a [`FeatureVector`], in canonical order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Feature {
            $($variant,)*
        }

        impl Feature {
            pub const ALL: [Feature; FEATURE_COUNT] = [$(Feature::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => $name,)*
                }
            }
        }
    };
}

features! {
    Duration => "duration",
    MaxY => "max_y",
    MaxYPos => "max_y_pos",
    MeanY => "mean_y",
    SumY => "sum_y",
    Q25 => "q25",
    Q50 => "q50",
    Q75 => "q75",
    Std => "std",
    PeakDown => "peak_down",
    PeakNone => "peak_none",
    PeakUp => "peak_up",
    MinTbpUp => "min_tbp_up",
    AvgTbpUp => "avg_tbp_up",
    MaxTbpUp => "max_tbp_up",
    MinTbpDown => "min_tbp_down",
    AvgTbpDown => "avg_tbp_down",
    MaxTbpDown => "max_tbp_down",
    MinAmp => "min_amp",
    AvgAmp => "avg_amp",
    MaxAmp => "max_amp",
    MinPpd => "min_ppd",
    AvgPpd => "avg_ppd",
    MaxPpd => "max_ppd",
    MinNpd => "min_npd",
    AvgNpd => "avg_npd",
    MaxNpd => "max_npd",
    MinPs => "min_ps",
    AvgPs => "avg_ps",
    MaxPs => "max_ps",
    SumPs => "sum_ps",
    MinNs => "min_ns",
    AvgNs => "avg_ns",
    MaxNs => "max_ns",
    SumNs => "sum_ns",
    MinPg => "min_pg",
    AvgPg => "avg_pg",
    MaxPg => "max_pg",
    MinNg => "min_ng",
    AvgNg => "avg_ng",
    MaxNg => "max_ng",
    PgCount => "pg_count",
    NgCount => "ng_count",
}

impl Feature {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Feature> {
        Feature::ALL.get(i).copied()
    }

    pub fn names() -> impl Iterator<Item = &'static str> {
        Feature::ALL.into_iter().map(Feature::name)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(#[serde(with = "slots")] pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn zeros() -> Self {
        Self([0.0; FEATURE_COUNT])
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.0[feature.index()]
    }

    pub fn set(&mut self, feature: Feature, value: f64) {
        self.0[feature.index()] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Default for FeatureVector {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Index<Feature> for FeatureVector {
    type Output = f64;

    fn index(&self, feature: Feature) -> &f64 {
        &self.0[feature.index()]
    }
}

impl TryFrom<&[f64]> for FeatureVector {
    type Error = usize;

    /// Fails with the slice length when it is not 43.
    fn try_from(values: &[f64]) -> Result<Self, usize> {
        <[f64; FEATURE_COUNT]>::try_from(values)
            .map(FeatureVector)
            .map_err(|_| values.len())
    }
}

mod slots {
    use super::FEATURE_COUNT;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; FEATURE_COUNT], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; FEATURE_COUNT], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        let len = v.len();
        v.try_into()
            .map_err(|_| D::Error::invalid_length(len, &"43 feature values"))
    }
}

/// Interior extremum classification of one series point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Peak {
    Up,
    Down,
    None,
}

/// Classifies each point: up/down when strictly above/below both neighbours.
/// Endpoints are never peaks and series shorter than four points have none.
pub fn detect_peaks(values: &[u64]) -> Vec<Peak> {
    let mut peaks = vec![Peak::None; values.len()];
    if values.len() < MIN_PEAK_SERIES_LEN {
        return peaks;
    }
    for i in 1..values.len() - 1 {
        let (prev, cur, next) = (values[i - 1], values[i], values[i + 1]);
        if cur > prev && cur > next {
            peaks[i] = Peak::Up;
        } else if cur < prev && cur < next {
            peaks[i] = Peak::Down;
        }
    }
    peaks
}

/// Running min/avg/max/sum over a stream of values; all zero when empty.
#[derive(Debug, Clone, Copy)]
struct Summary {
    count: usize,
    min: f64,
    max: f64,
    sum: f64,
}

impl Summary {
    fn new() -> Self {
        Self {
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        self.count += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.sum += v;
    }

    fn min(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.min }
    }

    fn max(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.max }
    }

    fn avg(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.sum / self.count as f64 }
    }

    fn write(&self, v: &mut FeatureVector, min: Feature, avg: Feature, max: Feature) {
        v.set(min, self.min());
        v.set(avg, self.avg());
        v.set(max, self.max());
    }
}

/// Linear interpolation between closest ranks on sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn extract_features(series: &MeasureSeries) -> FeatureVector {
    extract_from_values(&series.values)
}

pub fn extract_from_values(values: &[u64]) -> FeatureVector {
    use Feature::*;

    let mut v = FeatureVector::zeros();
    let n = values.len();
    if n == 0 {
        return v;
    }
    let y: Vec<f64> = values.iter().map(|&x| x as f64).collect();

    v.set(Duration, n as f64);

    // Value statistics.
    let (max_pos, max_y) = y
        .iter()
        .copied()
        .enumerate()
        .fold((0, y[0]), |(bi, bv), (i, x)| if x > bv { (i, x) } else { (bi, bv) });
    let sum: f64 = y.iter().sum();
    let mean = sum / n as f64;
    let variance = y.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    v.set(MaxY, max_y);
    v.set(MaxYPos, max_pos as f64);
    v.set(MeanY, mean);
    v.set(SumY, sum);
    v.set(Q25, quantile(&sorted, 0.25));
    v.set(Q50, quantile(&sorted, 0.50));
    v.set(Q75, quantile(&sorted, 0.75));
    v.set(Std, variance.sqrt());

    // Peak families.
    let peaks = detect_peaks(values);
    let mut up = Vec::new();
    let mut down = Vec::new();
    for (i, p) in peaks.iter().enumerate() {
        match p {
            Peak::Up => up.push(i),
            Peak::Down => down.push(i),
            Peak::None => {}
        }
    }
    v.set(PeakUp, up.len() as f64);
    v.set(PeakDown, down.len() as f64);
    v.set(PeakNone, (n - up.len() - down.len()) as f64);

    let gaps = |idx: &[usize]| {
        let mut s = Summary::new();
        for w in idx.windows(2) {
            s.push((w[1] - w[0]) as f64);
        }
        s
    };
    gaps(&up).write(&mut v, MinTbpUp, AvgTbpUp, MaxTbpUp);
    gaps(&down).write(&mut v, MinTbpDown, AvgTbpDown, MaxTbpDown);

    if max_y > 0.0 {
        let mut amp = Summary::new();
        for &i in &up {
            amp.push((y[i] - y[i - 1]) / max_y);
        }
        amp.write(&mut v, MinAmp, AvgAmp, MaxAmp);
    }

    let deviation = |idx: &[usize]| {
        let mut s = Summary::new();
        for &i in idx {
            s.push(y[i] - mean);
        }
        s
    };
    deviation(&up).write(&mut v, MinPpd, AvgPpd, MaxPpd);
    deviation(&down).write(&mut v, MinNpd, AvgNpd, MaxNpd);

    // Gradient families.
    let mut pos_runs = Summary::new();
    let mut neg_runs = Summary::new();
    let mut pos_grad = Summary::new();
    let mut neg_grad = Summary::new();
    let mut run_sign = 0i8;
    let mut run_len = 0usize;
    let mut close_run = |sign: i8, len: usize| {
        if len >= 2 {
            match sign {
                1 => pos_runs.push(len as f64),
                -1 => neg_runs.push(len as f64),
                _ => {}
            }
        }
    };
    for w in y.windows(2) {
        let g = w[1] - w[0];
        let sign = if g > 0.0 {
            pos_grad.push(g);
            1
        } else if g < 0.0 {
            neg_grad.push(g);
            -1
        } else {
            0
        };
        if sign == run_sign && sign != 0 {
            run_len += 1;
        } else {
            close_run(run_sign, run_len);
            run_sign = sign;
            run_len = usize::from(sign != 0);
        }
    }
    close_run(run_sign, run_len);

    pos_runs.write(&mut v, MinPs, AvgPs, MaxPs);
    v.set(SumPs, pos_runs.sum);
    neg_runs.write(&mut v, MinNs, AvgNs, MaxNs);
    v.set(SumNs, neg_runs.sum);
    pos_grad.write(&mut v, MinPg, AvgPg, MaxPg);
    neg_grad.write(&mut v, MinNg, AvgNg, MaxNg);
    v.set(PgCount, pos_grad.count as f64);
    v.set(NgCount, neg_grad.count as f64);
    v
}
