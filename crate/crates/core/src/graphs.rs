//! Adjacency games on loopy undirected graphs.
//!
//! For `W = 2A` the demand slope on `S` is independent of the masses:
//! `K_S = 1^T (2 A_S)^{-1} 1`, which by the determinant lemma equals
//! `(det(A_S + 1 1^T) - det A_S) / (2 det A_S)`. The search evaluates this
//! exactly in integers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{Game, GroupPartition, NetworkEffects};

/// Largest node count accepted by [`search_graphs`].
pub const MAX_SEARCH_NODES: usize = 6;

/// Symmetric 0/1 adjacency matrix; diagonal entries are loops.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct LoopyGraph {
    adj: Vec<Vec<u8>>,
}

impl TryFrom<Vec<Vec<u8>>> for LoopyGraph {
    type Error = Error;

    fn try_from(adj: Vec<Vec<u8>>) -> Result<Self> {
        LoopyGraph::new(adj)
    }
}

impl From<LoopyGraph> for Vec<Vec<u8>> {
    fn from(g: LoopyGraph) -> Self {
        g.adj
    }
}

impl LoopyGraph {
    pub fn new(adj: Vec<Vec<u8>>) -> Result<Self> {
        let n = adj.len();
        if n == 0 {
            return Err(Error::EmptyPartition);
        }
        for (i, row) in adj.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    what: "adjacency row".into(),
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                if x > 1 {
                    return Err(Error::NonBinaryAdjacency(i, j, x as f64));
                }
                if adj[j][i] != x {
                    return Err(Error::NonSymmetricAdjacency(i.min(j), i.max(j)));
                }
            }
        }
        Ok(LoopyGraph { adj })
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension {
                what: "adjacency matrix".into(),
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let mut adj = vec![vec![0u8; m.cols()]; m.rows()];
        for (i, row) in adj.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let v = m[(i, j)];
                *x = if v == 0.0 {
                    0
                } else if v == 1.0 {
                    1
                } else {
                    return Err(Error::NonBinaryAdjacency(i, j, v));
                };
            }
        }
        LoopyGraph::new(adj)
    }

    /// Graph whose upper triangle (diagonal included, row-major) spells `code`
    /// with the first entry as the most significant bit.
    #[allow(clippy::needless_range_loop)]
    pub fn from_code(n: usize, code: u64) -> Self {
        let bits = n * (n + 1) / 2;
        let mut adj = vec![vec![0u8; n]; n];
        let mut b = 0;
        for i in 0..n {
            for j in i..n {
                let x = (code >> (bits - 1 - b) & 1) as u8;
                adj[i][j] = x;
                adj[j][i] = x;
                b += 1;
            }
        }
        LoopyGraph { adj }
    }

    pub fn code(&self) -> u64 {
        let n = self.n();
        let mut code = 0u64;
        for i in 0..n {
            for j in i..n {
                code = code << 1 | self.adj[i][j] as u64;
            }
        }
        code
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn adjacency(&self) -> &[Vec<u8>] {
        &self.adj
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i][j] == 1
    }

    /// Neighbors of `i`, itself included when it has a loop.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.has_edge(i, j)).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n(), self.n(), |i, j| self.adj[i][j] as f64)
    }

    pub fn induced(&self, nodes: &[usize]) -> LoopyGraph {
        LoopyGraph {
            adj: nodes
                .iter()
                .map(|&i| nodes.iter().map(|&j| self.adj[i][j]).collect())
                .collect(),
        }
    }

    /// Smallest code over all relabelings.
    pub fn canonical_code(&self) -> u64 {
        let n = self.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = u64::MAX;
        loop {
            best = best.min(self.induced(&perm).code());
            if !next_permutation(&mut perm) {
                return best;
            }
        }
    }

    pub fn is_isomorphic(&self, other: &LoopyGraph) -> bool {
        self.n() == other.n() && self.canonical_code() == other.canonical_code()
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    Complete { n: usize },
    /// Node 0 is the center; every node has a loop.
    StarWithLoops { n: usize },
    Figure1,
    FromMatrix { matrix: Vec<Vec<u8>> },
}

impl Structure {
    /// Parses `complete`, `star_with_loops` or `figure1`.
    pub fn parse(kind: &str, n: usize) -> Result<Self> {
        match kind {
            "complete" => Ok(Structure::Complete { n }),
            "star_with_loops" | "star-with-loops" | "star" => Ok(Structure::StarWithLoops { n }),
            "figure1" | "figure-1" => Ok(Structure::Figure1),
            other => Err(Error::UnknownStructure(other.to_string())),
        }
    }
}

const FIGURE1: [[u8; 5]; 5] = [
    [0, 0, 1, 0, 0],
    [0, 1, 0, 0, 1],
    [1, 0, 1, 0, 1],
    [0, 0, 0, 1, 1],
    [0, 1, 1, 1, 1],
];

pub fn make_structure(kind: &Structure) -> Result<LoopyGraph> {
    let positive = |n: usize| {
        if n == 0 {
            Err(Error::EmptyPartition)
        } else {
            Ok(n)
        }
    };
    match kind {
        Structure::Complete { n } => Ok(LoopyGraph {
            adj: vec![vec![1; positive(*n)?]; *n],
        }),
        Structure::StarWithLoops { n } => {
            let n = positive(*n)?;
            let adj = (0..n)
                .map(|i| (0..n).map(|j| (i == j || i == 0 || j == 0) as u8).collect())
                .collect();
            Ok(LoopyGraph { adj })
        }
        Structure::Figure1 => Ok(LoopyGraph {
            adj: FIGURE1.iter().map(|r| r.to_vec()).collect(),
        }),
        Structure::FromMatrix { matrix } => LoopyGraph::new(matrix.clone()),
    }
}

/// `Gamma(2A; g)`: multilinear with `alpha^a = alpha^b = A`.
pub fn adjacency_game(graph: &LoopyGraph, masses: &[f64]) -> Result<Game> {
    Game::new(
        GroupPartition::from_masses(masses)?,
        NetworkEffects::Adjacency {
            matrix: graph.to_matrix(),
        },
    )
}

/// Adjacency game on the subgraph induced by `nodes`, with their masses.
pub fn induced_subgraph_game(graph: &LoopyGraph, nodes: &[usize], masses: &[f64]) -> Result<Game> {
    if nodes.is_empty() {
        return Err(Error::EmptySplit);
    }
    if masses.len() != graph.n() {
        return Err(Error::Dimension {
            what: "masses".into(),
            expected: graph.n(),
            found: masses.len(),
        });
    }
    let m: Vec<f64> = nodes.iter().map(|&i| masses[i]).collect();
    adjacency_game(&graph.induced(nodes), &m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    /// `K_S` on `Gamma(2A)`.
    pub k_double: f64,
    /// `K_S` on `Gamma(A)`.
    pub k_single: f64,
    pub ratio: f64,
    /// `k` on `Gamma(2A)` and on `Gamma(A)`.
    pub k_vec_double: Vec<f64>,
    pub k_vec_single: Vec<f64>,
}

pub fn scaling_check(graph: &LoopyGraph, split: &[usize], masses: &[f64]) -> Result<ScalingCheck> {
    let double = adjacency_game(graph, masses)?;
    let single = Game::symmetric_multilinear(graph.to_matrix(), masses)?;
    let (k2, k_double) = calculus::affine_reaction(&double, split)?;
    let (k1, k_single) = calculus::affine_reaction(&single, split)?;
    Ok(ScalingCheck {
        k_double,
        k_single,
        ratio: k_double / k_single,
        k_vec_double: k2,
        k_vec_single: k1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    RealizableTotal,
    RealizablePartial,
    None,
}

/// `K_S` on `Gamma(2A)` as the exact fraction `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactSlope {
    pub num: i64,
    pub den: i64,
}

impl ExactSlope {
    /// Lowest terms with a positive denominator.
    fn reduced(num: i128, den: i128) -> Self {
        fn gcd(a: i128, b: i128) -> i128 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(num, den).max(1) * den.signum();
        ExactSlope {
            num: (num / g) as i64,
            den: (den / g) as i64,
        }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_negative(self) -> bool {
        self.num < 0
    }
}

impl std::fmt::Display for ExactSlope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Exact `K_S` for the adjacency game, or `None` when `A_S` is singular.
pub fn exact_slope(graph: &LoopyGraph, split: &[usize]) -> Option<ExactSlope> {
    let sub: Vec<Vec<i64>> = split
        .iter()
        .map(|&i| split.iter().map(|&j| graph.adj[i][j] as i64).collect())
        .collect();
    let plus: Vec<Vec<i64>> = sub.iter().map(|r| r.iter().map(|x| x + 1).collect()).collect();
    let det = linalg::det_exact(&sub);
    if det == 0 {
        return None;
    }
    let det_plus = linalg::det_exact(&plus);
    Some(ExactSlope::reduced(det_plus - det, 2 * det))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchCertificate {
    pub graph: LoopyGraph,
    pub code: u64,
    pub split: Vec<usize>,
    pub k_s: f64,
    pub exact: ExactSlope,
    pub kind: SplitKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Stop at the first graph (in code order) with a realizable split.
    First,
    All,
    /// Count only; certificates are not retained.
    NoneExists,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub nodes: usize,
    pub mode: SearchMode,
    pub graphs_checked: u64,
    pub subsets_checked: u64,
    pub singular_subsets: u64,
    pub realizable_splits: u64,
    pub graphs_with_realizable: u64,
    pub certificates: Vec<SearchCertificate>,
}

impl SearchSummary {
    pub fn none_exist(&self) -> bool {
        self.realizable_splits == 0
    }
}

#[derive(Default)]
struct GraphScan {
    subsets: u64,
    singular: u64,
    found: Vec<SearchCertificate>,
}

/// Every nonempty `S` of `graph` whose adjacency slope is negative.
pub fn realizable_splits(graph: &LoopyGraph) -> Vec<SearchCertificate> {
    scan_graph(graph).found
}

fn scan_graph(graph: &LoopyGraph) -> GraphScan {
    let n = graph.n();
    let mut scan = GraphScan::default();
    for mask in 1usize..(1 << n) {
        let split: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        scan.subsets += 1;
        match exact_slope(graph, &split) {
            None => scan.singular += 1,
            Some(k) if k.is_negative() => scan.found.push(SearchCertificate {
                graph: graph.clone(),
                code: graph.code(),
                kind: if split.len() == n {
                    SplitKind::RealizableTotal
                } else {
                    SplitKind::RealizablePartial
                },
                split,
                k_s: k.value(),
                exact: k,
            }),
            Some(_) => {}
        }
    }
    scan
}

/// Exhaustive search over all `2^{n(n+1)/2}` labeled loopy graphs on `n` nodes.
pub fn search_graphs(n: usize, mode: SearchMode) -> Result<SearchSummary> {
    if n == 0 {
        return Err(Error::EmptyPartition);
    }
    if n > MAX_SEARCH_NODES {
        return Err(Error::TooManyGroups {
            groups: n,
            limit: MAX_SEARCH_NODES,
        });
    }
    let total = 1u64 << (n * (n + 1) / 2);
    let scans: Vec<GraphScan> = match mode {
        SearchMode::First => {
            let hit = (0..total).into_par_iter().find_first(|&code| {
                !realizable_splits(&LoopyGraph::from_code(n, code)).is_empty()
            });
            let upto = hit.map_or(total, |c| c + 1);
            (0..upto)
                .into_par_iter()
                .map(|code| scan_graph(&LoopyGraph::from_code(n, code)))
                .collect()
        }
        _ => (0..total)
            .into_par_iter()
            .map(|code| scan_graph(&LoopyGraph::from_code(n, code)))
            .collect(),
    };
    let mut summary = SearchSummary {
        nodes: n,
        mode,
        graphs_checked: scans.len() as u64,
        subsets_checked: 0,
        singular_subsets: 0,
        realizable_splits: 0,
        graphs_with_realizable: 0,
        certificates: Vec::new(),
    };
    for scan in scans {
        summary.subsets_checked += scan.subsets;
        summary.singular_subsets += scan.singular;
        summary.realizable_splits += scan.found.len() as u64;
        summary.graphs_with_realizable += (!scan.found.is_empty()) as u64;
        if mode != SearchMode::NoneExists {
            summary.certificates.extend(scan.found);
        }
    }
    Ok(summary)
}
