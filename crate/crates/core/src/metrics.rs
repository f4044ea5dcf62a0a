//! ρ-happiness, community-detection accuracy and the theoretical thresholds
//! ξ, μ and ξ̃ that partition the ρ axis into regimes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::instance::Instance;

/// ε used in ξ when the caller does not supply one.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Slack subtracted before taking `⌈ρ·deg⌉`, so products such as
/// `0.1 * 30 = 3.0000000000000004` still round to the intended integer.
pub const CEIL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("colouring has {got} entries, instance has {n} vertices")]
    Length { got: usize, n: usize },
    #[error("vertex {vertex} has colour {colour}, outside 0..{k}")]
    ColourOutOfRange { vertex: usize, colour: u32, k: usize },
    #[error("vertex {vertex} is precoloured {expected} but the colouring gives {got}")]
    PrecolourViolated { vertex: usize, expected: u32, got: u32 },
    #[error("instance carries no community labels")]
    MissingCommunities,
    #[error("invalid threshold parameters: {0}")]
    Params(String),
}

/// A total colouring (`0..k` per vertex). Constructed through
/// [`Colouring::new`] it is guaranteed to extend the instance precolouring.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Colouring(Vec<u32>);

impl Colouring {
    pub fn new(inst: &Instance, colours: Vec<u32>) -> Result<Self, MetricsError> {
        let c = Colouring(colours);
        c.check(inst)?;
        Ok(c)
    }

    /// Wrap raw colours without validation. Callers own the invariants.
    pub fn from_raw(colours: Vec<u32>) -> Self {
        Colouring(colours)
    }

    /// The precolouring with every free vertex set to colour 0.
    pub fn precolour_or_zero(inst: &Instance) -> Self {
        Colouring(inst.precolour().iter().map(|c| c.unwrap_or(0)).collect())
    }

    pub fn check(&self, inst: &Instance) -> Result<(), MetricsError> {
        if self.0.len() != inst.n() {
            return Err(MetricsError::Length { got: self.0.len(), n: inst.n() });
        }
        for (v, &c) in self.0.iter().enumerate() {
            if c as usize >= inst.k() {
                return Err(MetricsError::ColourOutOfRange { vertex: v, colour: c, k: inst.k() });
            }
            if let Some(p) = inst.precolour()[v] {
                if p != c {
                    return Err(MetricsError::PrecolourViolated { vertex: v, expected: p, got: c });
                }
            }
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [u32] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for Colouring {
    type Output = u32;
    fn index(&self, v: usize) -> &u32 {
        &self.0[v]
    }
}

/// Same-colour neighbours needed for a vertex of degree `deg` to be ρ-happy.
#[inline]
pub fn happy_threshold(rho: f64, deg: usize) -> usize {
    let t = (rho * deg as f64 - CEIL_TOLERANCE).ceil();
    if t <= 0.0 {
        0
    } else {
        t as usize
    }
}

#[inline]
pub(crate) fn same_colour_neighbours(g: &Graph, colours: &[u32], v: usize) -> usize {
    let c = colours[v];
    g.adj(v).iter().filter(|&&u| colours[u] == c).count()
}

#[inline]
pub(crate) fn vertex_happy(g: &Graph, colours: &[u32], v: usize, rho: f64) -> bool {
    same_colour_neighbours(g, colours, v) >= happy_threshold(rho, g.degree(v))
}

pub fn is_rho_happy(inst: &Instance, sigma: &Colouring, v: usize, rho: f64) -> bool {
    vertex_happy(inst.graph(), sigma.as_slice(), v, rho)
}

/// H_ρ(σ): number of ρ-happy vertices, one pass over all adjacency lists.
pub fn happy_count(g: &Graph, colours: &[u32], rho: f64) -> usize {
    (0..g.n()).filter(|&v| vertex_happy(g, colours, v, rho)).count()
}

/// Position of ρ relative to μ and ξ̃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MuRegime {
    #[serde(rename = "below-mu")]
    BelowMu,
    #[serde(rename = "mu-to-xitilde")]
    MuToXiTilde,
    #[serde(rename = "above-xitilde")]
    AboveXiTilde,
}

/// Position of ρ relative to ξ (closed upper bound on the lower side).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum XiRegime {
    #[serde(rename = "below-xi")]
    BelowXi,
    #[serde(rename = "above-xi")]
    AboveXi,
}

impl MuRegime {
    pub fn label(self) -> &'static str {
        match self {
            MuRegime::BelowMu => "below-mu",
            MuRegime::MuToXiTilde => "mu-to-xitilde",
            MuRegime::AboveXiTilde => "above-xitilde",
        }
    }
}

impl XiRegime {
    pub fn label(self) -> &'static str {
        match self {
            XiRegime::BelowXi => "below-xi",
            XiRegime::AboveXi => "above-xi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub mu: MuRegime,
    pub xi: XiRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub xi: f64,
    pub mu: f64,
    pub xi_tilde: f64,
    pub epsilon: f64,
}

impl Thresholds {
    /// ξ, μ and ξ̃ for 𝒢(n, k, p, q).
    ///
    /// ξ = max{min{ln((k/n·ln ε + p·e + (k−1)q) / (p + (k−1)q)), ξ̃}, 0}; a
    /// non-positive log argument makes the log branch −∞, so ξ = 0.
    pub fn compute(n: usize, k: usize, p: f64, q: f64, epsilon: f64) -> Result<Self, MetricsError> {
        let bad = |m: String| Err(MetricsError::Params(m));
        if n == 0 {
            return bad("n must be positive".into());
        }
        if k < 2 {
            return bad(format!("k={k} below 2"));
        }
        if !(q > 0.0 && q < p && p <= 1.0) {
            return bad(format!("need 0 < q < p <= 1, got p={p} q={q}"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return bad(format!("epsilon={epsilon} outside (0,1)"));
        }
        let spread = p + (k as f64 - 1.0) * q;
        let xi_tilde = p / spread;
        let mu = q / spread;
        let arg = (k as f64 / n as f64 * epsilon.ln() + p * std::f64::consts::E + (k as f64 - 1.0) * q) / spread;
        let log_branch = if arg > 0.0 { arg.ln() } else { f64::NEG_INFINITY };
        let xi = log_branch.min(xi_tilde).max(0.0);
        Ok(Thresholds { xi, mu, xi_tilde, epsilon })
    }

    /// Thresholds from the instance's generator record, if it has p and q.
    pub fn for_instance(inst: &Instance, epsilon: f64) -> Option<Result<Self, MetricsError>> {
        let meta = inst.meta();
        Some(Self::compute(inst.n(), inst.k(), meta.p?, meta.q?, epsilon))
    }
}

pub fn classify_regime(rho: f64, th: &Thresholds) -> Regime {
    let mu = if rho < th.mu {
        MuRegime::BelowMu
    } else if rho <= th.xi_tilde {
        MuRegime::MuToXiTilde
    } else {
        MuRegime::AboveXiTilde
    };
    let xi = if rho <= th.xi { XiRegime::BelowXi } else { XiRegime::AboveXi };
    Regime { mu, xi }
}

/// ACD(σ): share of vertices whose colour equals their community id.
pub fn acd(inst: &Instance, sigma: &Colouring) -> Result<f64, MetricsError> {
    let comm = inst.community().ok_or(MetricsError::MissingCommunities)?;
    if inst.n() == 0 {
        return Ok(1.0);
    }
    let hits = comm.iter().zip(sigma.as_slice()).filter(|(g, c)| g == c).count();
    Ok(hits as f64 / inst.n() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub rho: f64,
    pub happy_count: usize,
    pub alpha: f64,
    pub complete: bool,
    /// Present when the instance carries community labels.
    pub acd: Option<f64>,
    /// Present when the instance records its generator p and q.
    pub thresholds: Option<Thresholds>,
    pub regime: Option<Regime>,
}

/// Full evaluation with the default ε.
pub fn count_happy(inst: &Instance, sigma: &Colouring, rho: f64) -> EvalReport {
    evaluate(inst, sigma, rho, DEFAULT_EPSILON)
}

pub fn evaluate(inst: &Instance, sigma: &Colouring, rho: f64, epsilon: f64) -> EvalReport {
    let n = inst.n();
    let happy = happy_count(inst.graph(), sigma.as_slice(), rho);
    let thresholds = Thresholds::for_instance(inst, epsilon).and_then(Result::ok);
    EvalReport {
        n,
        rho,
        happy_count: happy,
        alpha: if n == 0 { 1.0 } else { happy as f64 / n as f64 },
        complete: happy == n,
        acd: acd(inst, sigma).ok(),
        regime: thresholds.as_ref().map(|t| classify_regime(rho, t)),
        thresholds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::GeneratorMeta;

    fn inst(n: usize, edges: &[(usize, usize)], k: usize, community: Option<Vec<u32>>) -> Instance {
        let g = Graph::from_edges(n, edges.iter().copied()).unwrap();
        Instance::new(g, k, vec![None; n], community, GeneratorMeta::default()).unwrap()
    }

    fn star() -> (Instance, Colouring) {
        // centre 0, leaves 1..=3 coloured (1,1,2) on disk = (0,0,1) here
        let i = inst(4, &[(0, 1), (0, 2), (0, 3)], 2, None);
        let c = Colouring::new(&i, vec![0, 0, 0, 1]).unwrap();
        (i, c)
    }

    #[test]
    fn threshold_ceiling() {
        assert_eq!(happy_threshold(0.0, 7), 0);
        assert_eq!(happy_threshold(0.5, 3), 2);
        assert_eq!(happy_threshold(1.0, 4), 4);
        assert_eq!(happy_threshold(0.1, 30), 3);
        assert_eq!(happy_threshold(0.7, 10), 7);
        assert_eq!(happy_threshold(0.71, 10), 8);
        assert_eq!(happy_threshold(0.3, 0), 0);
    }

    #[test]
    fn rho_zero_everyone_happy() {
        let (i, c) = star();
        for v in 0..4 {
            assert!(is_rho_happy(&i, &c, v, 0.0));
        }
        let r = count_happy(&i, &c, 0.0);
        assert_eq!(r.happy_count, 4);
        assert!(r.complete);
    }

    #[test]
    fn monochrome_triangle_fully_happy() {
        let i = inst(3, &[(0, 1), (1, 2), (0, 2)], 2, None);
        let c = Colouring::new(&i, vec![0, 0, 0]).unwrap();
        assert!((0..3).all(|v| is_rho_happy(&i, &c, v, 1.0)));
    }

    #[test]
    fn star_example() {
        let (i, c) = star();
        assert!(is_rho_happy(&i, &c, 0, 0.5));
        assert!(!is_rho_happy(&i, &c, 3, 0.5));
        let r = count_happy(&i, &c, 0.5);
        assert_eq!(r.happy_count, 3);
        assert_eq!(r.alpha, 0.75);
        assert!(!r.complete);
        assert_eq!(r.acd, None);
        assert_eq!(r.regime, None);
    }

    #[test]
    fn path_example() {
        let i = inst(3, &[(0, 1), (1, 2)], 2, Some(vec![0, 0, 1]));
        let c = Colouring::new(&i, vec![0, 0, 1]).unwrap();
        let r = count_happy(&i, &c, 1.0);
        assert_eq!(r.happy_count, 1);
        assert!(is_rho_happy(&i, &c, 0, 1.0));
        assert_eq!(r.acd, Some(1.0));

        let c2 = Colouring::new(&i, vec![0, 1, 1]).unwrap();
        assert!((acd(&i, &c2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn acd_cases() {
        let i = inst(4, &[], 2, Some(vec![0, 0, 1, 1]));
        assert_eq!(acd(&i, &Colouring::new(&i, vec![0, 0, 0, 0]).unwrap()).unwrap(), 0.5);
        let bare = inst(2, &[], 2, None);
        assert_eq!(
            acd(&bare, &Colouring::new(&bare, vec![0, 0]).unwrap()),
            Err(MetricsError::MissingCommunities)
        );
    }

    #[test]
    fn colouring_validation() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let i = Instance::new(g, 2, vec![Some(1), None], None, GeneratorMeta::default()).unwrap();
        assert!(Colouring::new(&i, vec![1, 0]).is_ok());
        assert!(matches!(Colouring::new(&i, vec![0, 0]), Err(MetricsError::PrecolourViolated { .. })));
        assert!(matches!(Colouring::new(&i, vec![1, 2]), Err(MetricsError::ColourOutOfRange { .. })));
        assert!(matches!(Colouring::new(&i, vec![1]), Err(MetricsError::Length { .. })));
    }

    #[test]
    fn threshold_worked_example() {
        let t = Thresholds::compute(1000, 5, 0.4, 0.05, 0.1).unwrap();
        // log branch: ln((0.005·ln 0.1 + 0.4e + 0.2) / 0.6) ≈ 0.7546 > 2/3
        assert!((t.xi - 2.0 / 3.0).abs() < 1e-12);
        assert!((t.mu - 0.05 / 0.6).abs() < 1e-12);
        assert!((t.xi_tilde - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_ratio_cancels() {
        for p in [0.1, 0.5, 1.0] {
            let t = Thresholds::compute(500, 2, p, p / 2.0, 0.1).unwrap();
            assert!((t.mu - 1.0 / 3.0).abs() < 1e-12);
            assert!((t.xi_tilde - 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_log_clamp() {
        // Small n and tiny ε drive the log argument below zero: ξ = 0.
        let t = Thresholds::compute(2, 20, 0.01, 0.001, 1e-300).unwrap();
        assert_eq!(t.xi, 0.0);
        assert!(matches!(Thresholds::compute(10, 2, 0.3, 0.3, 0.1), Err(MetricsError::Params(_))));
        assert!(matches!(Thresholds::compute(10, 2, 0.3, 0.1, 1.0), Err(MetricsError::Params(_))));
        assert!(matches!(Thresholds::compute(10, 1, 0.3, 0.1, 0.5), Err(MetricsError::Params(_))));
    }

    #[test]
    fn regimes() {
        let t = Thresholds::compute(1000, 5, 0.4, 0.05, 0.1).unwrap();
        assert_eq!(classify_regime(0.0, &t), Regime { mu: MuRegime::BelowMu, xi: XiRegime::BelowXi });
        assert_eq!(classify_regime(t.mu, &t).mu, MuRegime::MuToXiTilde);
        assert_eq!(classify_regime(t.xi_tilde, &t).mu, MuRegime::MuToXiTilde);
        assert_eq!(classify_regime(t.xi, &t).xi, XiRegime::BelowXi);
        assert_eq!(classify_regime(1.0, &t), Regime { mu: MuRegime::AboveXiTilde, xi: XiRegime::AboveXi });
    }
}
