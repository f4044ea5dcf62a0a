//! Per-algorithm, per-regime summaries of run records.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::record::RunRecord;
use super::stats::{mean_var, report_p, welch_t};
use super::HarnessError;
use crate::metrics::{MuRegime, XiRegime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// One group, 0 ≤ ρ ≤ 1.
    All,
    /// ρ ≤ ξ versus ρ > ξ.
    Xi,
    /// ρ < μ, μ ≤ ρ ≤ ξ̃, ρ > ξ̃.
    MuXiTilde,
}

impl std::str::FromStr for Grouping {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Grouping::All),
            "xi" => Ok(Grouping::Xi),
            "mu" | "mu-xitilde" => Ok(Grouping::MuXiTilde),
            _ => Err(format!("unknown grouping `{s}` (all, xi, mu-xitilde)")),
        }
    }
}

pub const UNCLASSIFIED: &str = "unclassified";

pub fn group_label(r: &RunRecord, grouping: Grouping) -> &'static str {
    match grouping {
        Grouping::All => "all",
        Grouping::Xi => r.regime_xi.map_or(UNCLASSIFIED, XiRegime::label),
        Grouping::MuXiTilde => r.regime_mu_xitilde.map_or(UNCLASSIFIED, MuRegime::label),
    }
}

fn group_rank(label: &str) -> usize {
    ["all", "below-mu", "mu-to-xitilde", "above-xitilde", "below-xi", "above-xi", UNCLASSIFIED]
        .iter()
        .position(|&l| l == label)
        .unwrap_or(usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub algo: String,
    pub group: String,
    pub count: usize,
    pub alpha_mean: f64,
    /// Sample standard deviation; 0 for single-record groups.
    pub alpha_sd: f64,
    pub single: bool,
    pub acd_mean: Option<f64>,
    /// Runs ending in a complete ρ-happy colouring, and the rest.
    pub complete: usize,
    pub incomplete: usize,
    /// Runs whose colouring matches the communities exactly, and the rest.
    pub acd_exact: usize,
    pub acd_inexact: usize,
    /// Mean ACD over the complete runs only.
    pub acd_mean_complete: Option<f64>,
}

fn mean_of(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Algorithms in first-appearance order.
pub fn algo_order(records: &[RunRecord]) -> Vec<String> {
    let mut order: Vec<String> = Vec::new();
    for r in records {
        if !order.contains(&r.algo) {
            order.push(r.algo.clone());
        }
    }
    order
}

pub fn aggregate(records: &[RunRecord], grouping: Grouping) -> Vec<GroupSummary> {
    let order = algo_order(records);
    let mut buckets: BTreeMap<(usize, usize), (String, Vec<&RunRecord>)> = BTreeMap::new();
    for r in records {
        let a = order.iter().position(|x| *x == r.algo).unwrap();
        let label = group_label(r, grouping);
        buckets
            .entry((a, group_rank(label)))
            .or_insert_with(|| (label.to_string(), Vec::new()))
            .1
            .push(r);
    }
    buckets
        .into_iter()
        .map(|((a, _), (group, rs))| {
            let alphas: Vec<f64> = rs.iter().map(|r| r.alpha).collect();
            let (alpha_mean, var) = mean_var(&alphas);
            let complete = rs.iter().filter(|r| r.complete).count();
            let acd_exact = rs.iter().filter(|r| r.acd_exact).count();
            GroupSummary {
                algo: order[a].clone(),
                group,
                count: rs.len(),
                alpha_mean,
                alpha_sd: var.sqrt(),
                single: rs.len() == 1,
                acd_mean: mean_of(rs.iter().filter_map(|r| r.acd)),
                complete,
                incomplete: rs.len() - complete,
                acd_exact,
                acd_inexact: rs.len() - acd_exact,
                acd_mean_complete: mean_of(rs.iter().filter(|r| r.complete).filter_map(|r| r.acd)),
            }
        })
        .collect()
}

/// Records per group (the "Totals" row). Each algorithm ran on the same
/// instances, so this counts the first algorithm's records.
pub fn group_totals(summary: &[GroupSummary]) -> BTreeMap<String, usize> {
    let mut totals = BTreeMap::new();
    if let Some(first) = summary.first() {
        for s in summary.iter().filter(|s| s.algo == first.algo) {
            totals.insert(s.group.clone(), s.count);
        }
    }
    totals
}

pub fn write_summary_csv<W: Write>(out: W, summary: &[GroupSummary]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for s in summary {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTest {
    pub algo_a: String,
    pub algo_b: String,
    pub metric: String,
    pub n1: usize,
    pub n2: usize,
    pub mean1: Option<f64>,
    pub mean2: Option<f64>,
    pub t: Option<f64>,
    pub df: Option<f64>,
    /// Two-sided p, with values below 1e-16 written as 0.
    pub p: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Alpha,
    Acd,
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "alpha" => Ok(Metric::Alpha),
            "acd" => Ok(Metric::Acd),
            _ => Err(format!("unknown metric `{s}` (alpha, acd)")),
        }
    }
}

fn sample(records: &[RunRecord], algo: &str, metric: Metric) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.algo == algo)
        .filter_map(|r| match metric {
            Metric::Alpha => Some(r.alpha),
            Metric::Acd => r.acd,
        })
        .collect()
}

/// Welch tests for the given ordered algorithm pairs.
pub fn pairwise_welch(records: &[RunRecord], pairs: &[(String, String)], metric: Metric) -> Vec<PairTest> {
    let name = match metric {
        Metric::Alpha => "alpha",
        Metric::Acd => "acd",
    };
    pairs
        .iter()
        .map(|(a, b)| {
            let (xa, xb) = (sample(records, a, metric), sample(records, b, metric));
            let base = PairTest {
                algo_a: a.clone(),
                algo_b: b.clone(),
                metric: name.into(),
                n1: xa.len(),
                n2: xb.len(),
                mean1: mean_of(xa.iter().copied()),
                mean2: mean_of(xb.iter().copied()),
                t: None,
                df: None,
                p: None,
                error: None,
            };
            match welch_t(&xa, &xb) {
                Ok(w) => PairTest { t: Some(w.t), df: Some(w.df), p: Some(report_p(w.p)), ..base },
                Err(e) => PairTest { error: Some(e.to_string()), ..base },
            }
        })
        .collect()
}

/// Every ordered pair of algorithms, diagonal included (a full matrix).
pub fn all_pairs(records: &[RunRecord]) -> Vec<(String, String)> {
    let order = algo_order(records);
    order
        .iter()
        .flat_map(|a| order.iter().map(move |b| (a.clone(), b.clone())))
        .collect()
}

pub fn write_pair_tests_csv<W: Write>(out: W, tests: &[PairTest]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for t in tests {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(algo: &str, alpha: f64, acd: f64, mu: MuRegime, xi: XiRegime) -> RunRecord {
        RunRecord {
            instance_id: "i".into(),
            algo: algo.into(),
            seed: 0,
            n: 10,
            k: 2,
            p: Some(0.5),
            q: Some(0.1),
            pcc: Some(1),
            rho: 0.5,
            mu: None,
            xi: None,
            xi_tilde: None,
            regime_mu_xitilde: Some(mu),
            regime_xi: Some(xi),
            alpha,
            acd: Some(acd),
            complete: alpha == 1.0,
            acd_exact: acd == 1.0,
            generations: 1,
            wall_ms: 0,
        }
    }

    #[test]
    fn single_record_group() {
        let s = aggregate(&[rec("A", 0.75, 0.5, MuRegime::BelowMu, XiRegime::BelowXi)], Grouping::All);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].alpha_mean, 0.75);
        assert_eq!(s[0].alpha_sd, 0.0);
        assert!(s[0].single);
    }

    #[test]
    fn all_complete() {
        let rs: Vec<_> = (0..4).map(|_| rec("A", 1.0, 1.0, MuRegime::MuToXiTilde, XiRegime::BelowXi)).collect();
        let s = &aggregate(&rs, Grouping::MuXiTilde)[0];
        assert_eq!((s.complete, s.incomplete, s.acd_exact, s.acd_inexact), (4, 0, 4, 0));
        assert_eq!(s.acd_mean_complete, Some(1.0));
    }

    #[test]
    fn recomputation_oracle() {
        // Hand-computed fixture: algorithm B in regime mu-to-xitilde holds
        // alphas {0.2, 0.4, 0.9} → mean 0.5, sample sd sqrt(0.13) ≈ 0.36056.
        let rs = vec![
            rec("A", 1.0, 1.0, MuRegime::BelowMu, XiRegime::BelowXi),
            rec("B", 0.2, 0.1, MuRegime::MuToXiTilde, XiRegime::AboveXi),
            rec("B", 0.4, 0.3, MuRegime::MuToXiTilde, XiRegime::AboveXi),
            rec("A", 0.5, 0.5, MuRegime::AboveXiTilde, XiRegime::AboveXi),
            rec("B", 0.9, 0.8, MuRegime::MuToXiTilde, XiRegime::BelowXi),
            rec("B", 1.0, 0.9, MuRegime::BelowMu, XiRegime::BelowXi),
        ];
        let s = aggregate(&rs, Grouping::MuXiTilde);
        let labels: Vec<(&str, &str)> = s.iter().map(|g| (g.algo.as_str(), g.group.as_str())).collect();
        assert_eq!(
            labels,
            vec![("A", "below-mu"), ("A", "above-xitilde"), ("B", "below-mu"), ("B", "mu-to-xitilde")]
        );
        let b = &s[3];
        assert_eq!(b.count, 3);
        assert!((b.alpha_mean - 0.5).abs() < 1e-12);
        assert!((b.alpha_sd - 0.13f64.sqrt()).abs() < 1e-12);
        assert!((b.acd_mean.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(b.acd_mean_complete, None);

        let xi = aggregate(&rs, Grouping::Xi);
        let b_below = xi.iter().find(|g| g.algo == "B" && g.group == "below-xi").unwrap();
        assert_eq!(b_below.count, 2);
        assert!((b_below.alpha_mean - 0.95).abs() < 1e-12);
        assert_eq!(b_below.complete, 1);
        assert_eq!(b_below.acd_mean_complete, Some(0.9));
    }

    #[test]
    fn totals_sum_to_records_per_algorithm() {
        let regimes = [MuRegime::BelowMu, MuRegime::MuToXiTilde, MuRegime::AboveXiTilde];
        let mut rs = Vec::new();
        for i in 0..30 {
            for a in ["A", "B"] {
                rs.push(rec(a, (i % 7) as f64 / 7.0, 0.5, regimes[i % 3], XiRegime::BelowXi));
            }
        }
        let s = aggregate(&rs, Grouping::MuXiTilde);
        let totals = group_totals(&s);
        assert_eq!(totals.values().sum::<usize>(), 30);
        for g in &s {
            assert_eq!(g.complete + g.incomplete, g.count);
            assert_eq!(g.acd_exact + g.acd_inexact, g.count);
            assert_eq!(totals[&g.group], g.count);
        }
    }

    #[test]
    fn pairwise_matrix() {
        let mut rs = Vec::new();
        for (i, x) in [1.0, 2.0, 3.0, 4.0, 5.0].iter().enumerate() {
            rs.push(rec("A", *x, 0.0, MuRegime::BelowMu, XiRegime::BelowXi));
            rs.push(rec("B", x + 1.0, i as f64, MuRegime::BelowMu, XiRegime::BelowXi));
        }
        let tests = pairwise_welch(&rs, &all_pairs(&rs), Metric::Alpha);
        assert_eq!(tests.len(), 4);
        let ab = tests.iter().find(|t| t.algo_a == "A" && t.algo_b == "B").unwrap();
        assert!((ab.t.unwrap() + 1.0).abs() < 1e-12);
        assert!((ab.p.unwrap() - 0.3466).abs() < 1e-3);
        let aa = tests.iter().find(|t| t.algo_a == "A" && t.algo_b == "A").unwrap();
        assert_eq!((aa.t, aa.p), (Some(0.0), Some(1.0)));
        let acd = pairwise_welch(&rs, &[("A".into(), "A".into())], Metric::Acd);
        assert!(acd[0].error.is_some());
    }
}
