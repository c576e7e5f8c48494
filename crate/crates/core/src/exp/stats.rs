use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

/// Mean with standard error and a normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let count = values.len();
        if count == 0 {
            return Summary { mean: f64::NAN, se: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN, count };
        }
        let n = count as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if count > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Summary { mean, se, ci_low: mean - Z95 * se, ci_high: mean + Z95 * se, count }
    }

    pub fn overlaps(&self, other: &Summary) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }

    pub fn contains(&self, v: f64) -> bool {
        self.ci_low <= v && v <= self.ci_high
    }
}

/// Direction of a series, judged on successive differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trend {
    Increasing,
    Decreasing,
    Mixed,
    InsufficientPoints,
}

impl Trend {
    pub fn of(series: &[f64]) -> Trend {
        if series.len() < 2 {
            return Trend::InsufficientPoints;
        }
        if series.windows(2).all(|w| w[1] > w[0]) {
            Trend::Increasing
        } else if series.windows(2).all(|w| w[1] < w[0]) {
            Trend::Decreasing
        } else {
            Trend::Mixed
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Mixed => "mixed",
            Trend::InsufficientPoints => "insufficient points",
        }
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation of `series` against its position. `None`
/// below two points or for a constant series.
pub fn spearman_vs_index(series: &[f64]) -> Option<f64> {
    if series.len() < 2 {
        return None;
    }
    let x: Vec<f64> = (1..=series.len()).map(|i| i as f64).collect();
    let y = ranks(series);
    let mean = (series.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    if syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Equal-width histogram over `[low, high]`; the top edge is inclusive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub low: f64,
    pub high: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `bins` equal-width bins over `[0, max(values)]`.
    pub fn from_zero_to_max(values: &[f64], bins: usize) -> Histogram {
        let high = values.iter().copied().fold(0.0, f64::max);
        let mut counts = vec![0u64; bins];
        for &v in values {
            let b = if high > 0.0 { ((v / high) * bins as f64) as usize } else { 0 };
            counts[b.min(bins - 1)] += 1;
        }
        Histogram { low: 0.0, high, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_edges(&self, b: usize) -> (f64, f64) {
        let w = (self.high - self.low) / self.counts.len() as f64;
        (self.low + w * b as f64, self.low + w * (b + 1) as f64)
    }

    pub fn fractions(&self) -> Vec<f64> {
        normalize(&self.counts)
    }
}

pub fn normalize(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect()
}

/// Total variation distance between two count vectors on the same
/// integer support (shorter vectors are zero-padded).
pub fn total_variation(a: &[u64], b: &[u64]) -> f64 {
    let (pa, pb) = (normalize(a), normalize(b));
    let len = pa.len().max(pb.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (get(&pa, i) - get(&pb, i)).abs()).sum::<f64>()
}
