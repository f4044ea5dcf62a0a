//! Partially coloured instances and their line-oriented file format.
//!
//! ```text
//! c meta k=<int> [p=<float>] [q=<float>] [pcc=<int>] [seed=<u64>] [rho=<float>] [bridges=<int>]
//! c community <v> <g>
//! p edge <n> <m>
//! e <u> <v>
//! n <v> <c>
//! ```
//!
//! Vertex ids, colours and community ids are 1-based on disk and 0-based in
//! memory. Unknown `c` lines are ignored. [`write_instance`] emits the
//! canonical form: meta line, community lines by vertex, header, edges
//! sorted with `u < v`, precolour lines by vertex.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::metrics::Colouring;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("colour count k={0} is below 2")]
    TooFewColours(usize),
    /// Vertex and label fields hold in-memory (0-based) values; messages
    /// print them 1-based as they appear on disk.
    #[error("vertex {}: colour {} outside 1..{k}", .vertex + 1, .colour + 1)]
    ColourOutOfRange { vertex: usize, colour: i64, k: usize },
    #[error("vertex {}: community {} outside 1..{k}", .vertex + 1, .community + 1)]
    CommunityOutOfRange { vertex: usize, community: i64, k: usize },
    #[error("community {}: precoloured vertices {} and {} have different colours", .community + 1, .first + 1, .second + 1)]
    PrecolourConflict { community: usize, first: usize, second: usize },
    #[error("vertex {}: precolour {} differs from its community {}", .vertex + 1, .colour + 1, .community + 1)]
    PrecolourCommunityMismatch { vertex: usize, colour: usize, community: usize },
    #[error("community labels cover {got} of {n} vertices")]
    IncompleteCommunities { got: usize, n: usize },
    #[error("precolour map has length {got}, expected {n}")]
    PrecolourLength { got: usize, n: usize },
}

/// Generator record stored in the `c meta` line. Every field is optional so
/// hand-written instances can carry as much or as little as they like.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneratorMeta {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub pcc: Option<usize>,
    pub seed: Option<u64>,
    /// Suggested proportion of happiness drawn at generation time.
    pub rho: Option<f64>,
    /// Edges added to join components after the resampling budget ran out.
    pub bridges: Option<usize>,
}

/// A graph, a colour count `k`, a partial precolouring and (optionally) the
/// ground-truth communities. Colours and communities are `0..k` in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    graph: Graph,
    k: usize,
    precolour: Vec<Option<u32>>,
    community: Option<Vec<u32>>,
    meta: GeneratorMeta,
    free: Vec<usize>,
    precoloured: Vec<usize>,
}

impl Instance {
    pub fn new(
        graph: Graph,
        k: usize,
        precolour: Vec<Option<u32>>,
        community: Option<Vec<u32>>,
        meta: GeneratorMeta,
    ) -> Result<Self, InstanceError> {
        let n = graph.n();
        if k < 2 {
            return Err(InstanceError::TooFewColours(k));
        }
        if precolour.len() != n {
            return Err(InstanceError::PrecolourLength { got: precolour.len(), n });
        }
        for (v, c) in precolour.iter().enumerate() {
            if let Some(c) = *c {
                if c as usize >= k {
                    return Err(InstanceError::ColourOutOfRange {
                        vertex: v,
                        colour: c as i64,
                        k,
                    });
                }
            }
        }
        if let Some(comm) = &community {
            if comm.len() != n {
                return Err(InstanceError::IncompleteCommunities { got: comm.len(), n });
            }
            for (v, &g) in comm.iter().enumerate() {
                if g as usize >= k {
                    return Err(InstanceError::CommunityOutOfRange {
                        vertex: v,
                        community: g as i64,
                        k,
                    });
                }
            }
            // Conflicts inside a community are reported before label mismatches
            // so each invariant has its own error.
            let mut first_in: HashMap<u32, (usize, u32)> = HashMap::new();
            for (v, c) in precolour.iter().enumerate() {
                if let Some(c) = *c {
                    match first_in.get(&comm[v]) {
                        Some(&(u, cu)) if cu != c => {
                            return Err(InstanceError::PrecolourConflict {
                                community: comm[v] as usize,
                                first: u,
                                second: v,
                            })
                        }
                        Some(_) => {}
                        None => {
                            first_in.insert(comm[v], (v, c));
                        }
                    }
                }
            }
            for (v, c) in precolour.iter().enumerate() {
                if let Some(c) = *c {
                    if c != comm[v] {
                        return Err(InstanceError::PrecolourCommunityMismatch {
                            vertex: v,
                            colour: c as usize,
                            community: comm[v] as usize,
                        });
                    }
                }
            }
        }
        let (precoloured, free): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&v| precolour[v].is_some());
        Ok(Instance { graph, k, precolour, community, meta, free, precoloured })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn precolour(&self) -> &[Option<u32>] {
        &self.precolour
    }

    pub fn community(&self) -> Option<&[u32]> {
        self.community.as_deref()
    }

    pub fn meta(&self) -> &GeneratorMeta {
        &self.meta
    }

    /// Vertices not fixed by the precolouring, ascending.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    pub fn precoloured_vertices(&self) -> &[usize] {
        &self.precoloured
    }

    #[inline]
    pub fn is_free(&self, v: usize) -> bool {
        self.precolour[v].is_none()
    }
}

fn perr(line: usize, message: impl Into<String>) -> InstanceError {
    InstanceError::Parse { line, message: message.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, InstanceError> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} `{tok}`")))
}

fn one_based(v: usize, n: usize, line: usize) -> Result<usize, InstanceError> {
    if v == 0 || v > n {
        return Err(perr(line, format!("vertex {v} outside 1..{n}")));
    }
    Ok(v - 1)
}

/// Parse an instance from its text form and validate every invariant.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut k: Option<usize> = None;
    let mut meta = GeneratorMeta::default();
    let mut seen_meta = false;
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut edge_set = HashSet::new();
    // (line, vertex, label), range-checked once n is known.
    let mut communities: Vec<(usize, usize, usize)> = Vec::new();
    let mut precolours: Vec<(usize, usize, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut toks = raw.split_whitespace();
        let Some(kind) = toks.next() else { continue };
        match kind {
            "c" => match toks.next() {
                Some("meta") => {
                    if seen_meta {
                        return Err(perr(line, "repeated meta line"));
                    }
                    seen_meta = true;
                    for kv in toks {
                        let (key, val) = kv
                            .split_once('=')
                            .ok_or_else(|| perr(line, format!("meta entry `{kv}` is not key=value")))?;
                        let v = Some(val);
                        match key {
                            "k" => k = Some(field(v, line, "k")?),
                            "p" => meta.p = Some(field(v, line, "p")?),
                            "q" => meta.q = Some(field(v, line, "q")?),
                            "pcc" => meta.pcc = Some(field(v, line, "pcc")?),
                            "seed" => meta.seed = Some(field(v, line, "seed")?),
                            "rho" => meta.rho = Some(field(v, line, "rho")?),
                            "bridges" => meta.bridges = Some(field(v, line, "bridges")?),
                            _ => return Err(perr(line, format!("unknown meta key `{key}`"))),
                        }
                    }
                }
                Some("community") => {
                    let v: usize = field(toks.next(), line, "vertex")?;
                    let g: usize = field(toks.next(), line, "community")?;
                    if toks.next().is_some() {
                        return Err(perr(line, "trailing tokens"));
                    }
                    communities.push((line, v, g));
                }
                _ => {}
            },
            "p" => {
                if header.is_some() {
                    return Err(perr(line, "repeated problem line"));
                }
                if toks.next() != Some("edge") {
                    return Err(perr(line, "expected `p edge <n> <m>`"));
                }
                let n: usize = field(toks.next(), line, "vertex count")?;
                let m: usize = field(toks.next(), line, "edge count")?;
                header = Some((n, m));
            }
            "e" => {
                let (n, _) = header.ok_or_else(|| perr(line, "edge before problem line"))?;
                let u = one_based(field(toks.next(), line, "endpoint")?, n, line)?;
                let v = one_based(field(toks.next(), line, "endpoint")?, n, line)?;
                if toks.next().is_some() {
                    return Err(perr(line, "trailing tokens"));
                }
                if u == v {
                    return Err(perr(line, format!("self-loop on vertex {}", u + 1)));
                }
                let e = (u.min(v), u.max(v));
                if !edge_set.insert(e) {
                    return Err(perr(line, format!("duplicate edge {} {}", e.0 + 1, e.1 + 1)));
                }
                edges.push(e);
            }
            "n" => {
                let v: usize = field(toks.next(), line, "vertex")?;
                let c: usize = field(toks.next(), line, "colour")?;
                if toks.next().is_some() {
                    return Err(perr(line, "trailing tokens"));
                }
                precolours.push((line, v, c));
            }
            other => return Err(perr(line, format!("unknown line type `{other}`"))),
        }
    }

    let (n, m) = header.ok_or_else(|| perr(text.lines().count().max(1), "missing problem line"))?;
    if edges.len() != m {
        return Err(perr(
            text.lines().count().max(1),
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }

    let k = match k {
        Some(k) => k,
        None => communities
            .iter()
            .map(|c| c.2)
            .chain(precolours.iter().map(|c| c.2))
            .max()
            .unwrap_or(0),
    };
    let k_range = |c: usize| c >= 1 && c <= k;

    let mut precolour = vec![None; n];
    for &(line, v, c) in &precolours {
        let v = one_based(v, n, line)?;
        if !k_range(c) {
            return Err(InstanceError::ColourOutOfRange { vertex: v, colour: c as i64 - 1, k });
        }
        if precolour[v].is_some() {
            return Err(perr(line, format!("vertex {} precoloured twice", v + 1)));
        }
        precolour[v] = Some((c - 1) as u32);
    }

    let community = if communities.is_empty() {
        None
    } else {
        let mut comm = vec![None; n];
        for &(line, v, g) in &communities {
            let v = one_based(v, n, line)?;
            if !k_range(g) {
                return Err(InstanceError::CommunityOutOfRange { vertex: v, community: g as i64 - 1, k });
            }
            if comm[v].is_some() {
                return Err(perr(line, format!("vertex {} has two community lines", v + 1)));
            }
            comm[v] = Some((g - 1) as u32);
        }
        let got = comm.iter().filter(|c| c.is_some()).count();
        if got != n {
            return Err(InstanceError::IncompleteCommunities { got, n });
        }
        Some(comm.into_iter().map(Option::unwrap).collect())
    };

    let graph = Graph::from_canonical_unchecked(n, edges);
    Instance::new(graph, k, precolour, community, meta)
}

/// Canonical text form; `parse_instance(&write_instance(i)) == i`.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let meta = inst.meta();
    let _ = write!(out, "c meta k={}", inst.k());
    if let Some(p) = meta.p {
        let _ = write!(out, " p={p}");
    }
    if let Some(q) = meta.q {
        let _ = write!(out, " q={q}");
    }
    if let Some(pcc) = meta.pcc {
        let _ = write!(out, " pcc={pcc}");
    }
    if let Some(seed) = meta.seed {
        let _ = write!(out, " seed={seed}");
    }
    if let Some(rho) = meta.rho {
        let _ = write!(out, " rho={rho}");
    }
    if let Some(b) = meta.bridges {
        let _ = write!(out, " bridges={b}");
    }
    out.push('\n');
    if let Some(comm) = inst.community() {
        for (v, g) in comm.iter().enumerate() {
            let _ = writeln!(out, "c community {} {}", v + 1, g + 1);
        }
    }
    let g = inst.graph();
    let _ = writeln!(out, "p edge {} {}", g.n(), g.m());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "e {} {}", u + 1, v + 1);
    }
    for (v, c) in inst.precolour().iter().enumerate() {
        if let Some(c) = c {
            let _ = writeln!(out, "n {} {}", v + 1, c + 1);
        }
    }
    out
}

/// Read a colouring file: one `v colour` pair per line, both 1-based, `c`
/// lines and blank lines ignored. Precoloured vertices may be omitted and
/// take their precolour; every free vertex must appear exactly once.
pub fn parse_colouring(inst: &Instance, text: &str) -> Result<Colouring, InstanceError> {
    let n = inst.n();
    let mut colours: Vec<Option<u32>> = vec![None; n];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| InstanceError::Parse { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let (Some(v), Some(c), None) = (it.next(), it.next(), it.next()) else {
            return Err(err(format!("expected `<vertex> <colour>`, found `{trimmed}`")));
        };
        let v: usize = v.parse().map_err(|_| err(format!("bad vertex `{v}`")))?;
        let c: i64 = c.parse().map_err(|_| err(format!("bad colour `{c}`")))?;
        if v == 0 || v > n {
            return Err(err(format!("vertex {v} outside 1..{n}")));
        }
        if c < 1 || c > inst.k() as i64 {
            return Err(InstanceError::ColourOutOfRange { vertex: v - 1, colour: c - 1, k: inst.k() });
        }
        if colours[v - 1].replace((c - 1) as u32).is_some() {
            return Err(err(format!("vertex {v} coloured twice")));
        }
    }
    let mut out = Vec::with_capacity(n);
    for (v, (c, pre)) in colours.into_iter().zip(inst.precolour()).enumerate() {
        match (c, *pre) {
            (Some(c), Some(p)) if c != p => {
                return Err(InstanceError::Parse {
                    line: 0,
                    message: format!("vertex {} is precoloured {} but coloured {}", v + 1, p + 1, c + 1),
                })
            }
            (Some(c), _) | (None, Some(c)) => out.push(c),
            (None, None) => {
                return Err(InstanceError::Parse { line: 0, message: format!("free vertex {} has no colour", v + 1) })
            }
        }
    }
    Ok(Colouring::from_raw(out))
}

/// Every vertex as a 1-based `v colour` line.
pub fn write_colouring(sigma: &Colouring) -> String {
    let mut out = String::new();
    for (v, c) in sigma.as_slice().iter().enumerate() {
        let _ = writeln!(out, "{} {}", v + 1, c + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "c meta k=2\n\
                           c community 1 1\n\
                           c community 2 1\n\
                           c community 3 2\n\
                           p edge 3 2\n\
                           e 1 2\n\
                           e 2 3\n\
                           n 1 1\n";

    #[test]
    fn parses_minimal_file() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.k(), 2);
        assert_eq!(inst.graph().edges(), &[(0, 1), (1, 2)]);
        assert_eq!(inst.precolour(), &[Some(0), None, None]);
        assert_eq!(inst.community(), Some(&[0u32, 0, 1][..]));
        assert_eq!(inst.free_vertices(), &[1, 2]);
    }

    #[test]
    fn minimal_file_is_canonical() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(write_instance(&inst), MINIMAL);
    }

    #[test]
    fn non_canonical_input_normalises() {
        let messy = "c generated by hand\np edge 3 2\n\nc meta k=2\ne 3 2\ne 2 1\nc community 3 2\nc community 1 1\nc community 2 1\nn 1 1\n";
        let inst = parse_instance(messy).unwrap();
        assert_eq!(write_instance(&inst), MINIMAL);
    }

    #[test]
    fn conflicting_precolours_in_community() {
        let text = "c meta k=2\nc community 1 1\nc community 2 1\nc community 3 2\np edge 3 0\nn 1 1\nn 2 2\n";
        assert_eq!(
            parse_instance(text),
            Err(InstanceError::PrecolourConflict { community: 0, first: 0, second: 1 })
        );
    }

    #[test]
    fn precolour_must_match_community() {
        let text = "c meta k=2\nc community 1 1\nc community 2 2\np edge 2 0\nn 2 1\n";
        assert!(matches!(
            parse_instance(text),
            Err(InstanceError::PrecolourCommunityMismatch { vertex: 1, colour: 0, community: 1 })
        ));
    }

    #[test]
    fn out_of_range_labels() {
        let text = "c meta k=2\np edge 2 0\nn 1 3\n";
        assert!(matches!(parse_instance(text), Err(InstanceError::ColourOutOfRange { colour: 2, .. })));
        let text = "c meta k=2\nc community 1 1\nc community 2 0\np edge 2 0\n";
        assert!(matches!(parse_instance(text), Err(InstanceError::CommunityOutOfRange { community: -1, .. })));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            ("c meta k=2\np edge 2 1\ne 1 x\n", 3),
            ("c meta k=2\ne 1 2\np edge 2 1\n", 2),
            ("c meta k=2\np edge 2 2\ne 1 2\ne 2 1\n", 4),
            ("c meta k=2\np edge 2 1\ne 1 1\n", 3),
            ("c meta k=2\np edge 2 1\ne 1 3\n", 3),
            ("c meta k=2 z=1\np edge 2 0\n", 1),
            ("x 1 2\n", 1),
        ];
        for (text, line) in cases {
            match parse_instance(text) {
                Err(InstanceError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn edge_count_mismatch() {
        assert!(matches!(
            parse_instance("c meta k=2\np edge 3 2\ne 1 2\n"),
            Err(InstanceError::Parse { .. })
        ));
    }

    #[test]
    fn no_precolours_means_no_n_lines() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let inst = Instance::new(g, 3, vec![None; 3], None, GeneratorMeta::default()).unwrap();
        let text = write_instance(&inst);
        assert_eq!(text, "c meta k=3\np edge 3 1\ne 1 2\n");
        assert!(!text.lines().any(|l| l.starts_with("n ")));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn meta_round_trip() {
        let text = "c meta k=3 p=0.35 q=0.1 pcc=2 seed=18446744073709551615 rho=0.123456789 bridges=1\np edge 2 0\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.meta().seed, Some(u64::MAX));
        assert_eq!(write_instance(&inst), text);
    }

    #[test]
    fn k_inferred_without_meta() {
        let inst = parse_instance("p edge 2 1\ne 1 2\nn 1 3\n").unwrap();
        assert_eq!(inst.k(), 3);
        assert!(matches!(parse_instance("p edge 2 1\ne 1 2\n"), Err(InstanceError::TooFewColours(0))));
    }

    #[test]
    fn colouring_file() {
        let inst = parse_instance("c meta k=2\np edge 3 2\ne 1 2\ne 2 3\nn 1 1\n").unwrap();
        let sigma = parse_colouring(&inst, "c comment\n2 2\n\n3 1\n").unwrap();
        assert_eq!(sigma.as_slice(), &[0, 1, 0]);
        assert_eq!(write_colouring(&sigma), "1 1\n2 2\n3 1\n");
        assert_eq!(parse_colouring(&inst, &write_colouring(&sigma)).unwrap(), sigma);
        assert!(matches!(parse_colouring(&inst, "2 2\n"), Err(InstanceError::Parse { line: 0, .. })));
        assert!(matches!(parse_colouring(&inst, "1 2\n2 1\n3 1\n"), Err(InstanceError::Parse { .. })));
        assert!(matches!(parse_colouring(&inst, "2 3\n3 1\n"), Err(InstanceError::ColourOutOfRange { vertex: 1, .. })));
        assert!(matches!(parse_colouring(&inst, "2 1\n2 1\n"), Err(InstanceError::Parse { line: 2, .. })));
        assert!(matches!(parse_colouring(&inst, "4 1\n"), Err(InstanceError::Parse { line: 1, .. })));
    }
}
