//! Binned series and histograms for external plotting.

use std::io::Write;

use serde::Serialize;

use super::aggregate::algo_order;
use super::record::RunRecord;
use super::HarnessError;

/// Bin count of the α histograms unless overridden.
pub const HISTOGRAM_BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    Rho,
    K,
}

impl Axis {
    fn value(self, r: &RunRecord) -> f64 {
        match self {
            Axis::N => r.n as f64,
            Axis::Rho => r.rho,
            Axis::K => r.k as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::Rho => "rho",
            Axis::K => "k",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n" => Ok(Axis::N),
            "rho" => Ok(Axis::Rho),
            "k" => Ok(Axis::K),
            _ => Err(format!("unknown axis `{s}` (n, rho, k)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedPoint {
    pub algo: String,
    pub axis: &'static str,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub alpha_mean: Option<f64>,
    pub acd_mean: Option<f64>,
}

/// Index of `x` among `bins` equal-width bins over `[lo, hi]`; the last bin
/// is closed on the right.
fn bin_index(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((x - lo) / (hi - lo) * bins as f64).floor() as usize).min(bins - 1)
}

/// Per-algorithm means of α and ACD in `bins` equal-width bins spanning the
/// observed range of `axis`.
pub fn binned_series(records: &[RunRecord], axis: Axis, bins: usize) -> Vec<BinnedPoint> {
    let bins = bins.max(1);
    if records.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = records
        .iter()
        .map(|r| axis.value(r))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let width = (hi - lo) / bins as f64;
    let mut out = Vec::new();
    for algo in algo_order(records) {
        let mut alpha = vec![(0.0, 0usize); bins];
        let mut acd = vec![(0.0, 0usize); bins];
        for r in records.iter().filter(|r| r.algo == algo) {
            let b = bin_index(axis.value(r), lo, hi, bins);
            alpha[b].0 += r.alpha;
            alpha[b].1 += 1;
            if let Some(a) = r.acd {
                acd[b].0 += a;
                acd[b].1 += 1;
            }
        }
        for b in 0..bins {
            let mean = |(s, c): (f64, usize)| (c > 0).then(|| s / c as f64);
            out.push(BinnedPoint {
                algo: algo.clone(),
                axis: axis.name(),
                bin: b,
                lo: lo + width * b as f64,
                hi: if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 },
                count: alpha[b].1,
                alpha_mean: mean(alpha[b]),
                acd_mean: mean(acd[b]),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub algo: String,
    /// Counts over equal-width bins of [0, 1].
    pub counts: Vec<usize>,
    /// Mean α, the marker drawn over the histogram.
    pub mean: f64,
}

pub fn alpha_histograms(records: &[RunRecord], bins: usize) -> Vec<Histogram> {
    let bins = bins.max(1);
    algo_order(records)
        .into_iter()
        .map(|algo| {
            let mut counts = vec![0; bins];
            let (mut sum, mut n) = (0.0, 0usize);
            for r in records.iter().filter(|r| r.algo == algo) {
                counts[bin_index(r.alpha, 0.0, 1.0, bins)] += 1;
                sum += r.alpha;
                n += 1;
            }
            Histogram { algo, counts, mean: sum / n as f64 }
        })
        .collect()
}

pub fn write_series_csv<W: Write>(out: W, points: &[BinnedPoint]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct HistRow<'a> {
    algo: &'a str,
    bin: usize,
    lo: f64,
    hi: f64,
    count: usize,
    mean_alpha: f64,
}

pub fn write_histograms_csv<W: Write>(out: W, hists: &[Histogram]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for h in hists {
        let bins = h.counts.len();
        for (b, &count) in h.counts.iter().enumerate() {
            w.serialize(HistRow {
                algo: &h.algo,
                bin: b,
                lo: b as f64 / bins as f64,
                hi: (b + 1) as f64 / bins as f64,
                count,
                mean_alpha: h.mean,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
