//! Static quorum-system analysis: quorum enumeration for simple and weighted
//! majority systems, client quorum latency, and capacity under an optimal
//! quorum-selection strategy.
//!
//! Capacity solves
//!
//! ```text
//! maximize   C
//! subject to C * sum over quorums q containing node i of p_q  <=  capacity_i
//!            sum p_q = 1,  p >= 0
//! ```
//!
//! reformulated with `x_q = C * p_q` as the packing LP `maximize sum x` over
//! `Ax <= b, x >= 0`, and solved exactly by enumerating basic feasible
//! solutions. Instances here are tiny (a handful of nodes, at most a few
//! dozen quorums), so exhaustive vertex enumeration is both exact and
//! instant.

use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("quorum list is empty")]
    EmptyQuorumList,
    #[error("quorum #{0} is empty")]
    EmptyQuorum(usize),
    #[error("quorum #{0} names node {1} outside the system")]
    UnknownNode(usize, usize),
    #[error("quorums #{0} and #{1} do not intersect")]
    NonIntersecting(usize, usize),
    #[error("read_fraction {0} unsupported; only the read-only case (1.0) is implemented")]
    UnsupportedReadFraction(f64),
    #[error("node {0} has no capacity")]
    MissingCapacity(usize),
}

/// One storage node as the analysis sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    /// Sustainable throughput in ops/sec; needed only for capacity.
    pub capacity: Option<f64>,
    /// Voting weight; needed only when quorums are generated from weights.
    pub weight: Option<f64>,
}

/// A quorum system: nodes plus a list of quorums over node indices.
#[derive(Debug, Clone)]
pub struct QuorumSystem {
    pub nodes: Vec<Node>,
    pub quorums: Vec<BTreeSet<usize>>,
}

fn unnamed_nodes(n: usize) -> Vec<Node> {
    (0..n)
        .map(|i| Node {
            id: format!("p{}", i + 1),
            capacity: None,
            weight: None,
        })
        .collect()
}

/// All minimal majority quorums over `n` nodes: every subset of size
/// `floor(n/2) + 1`.
pub fn smqs(n: usize) -> QuorumSystem {
    let size = n / 2 + 1;
    QuorumSystem {
        nodes: unnamed_nodes(n),
        quorums: subsets_of_size(n, size),
    }
}

/// All minimal weighted quorums: subsets whose weight sum strictly exceeds
/// `n/2`, with dominated supersets removed.
pub fn wmqs(weights: &[f64]) -> QuorumSystem {
    assert!(weights.iter().all(|&w| w > 0.0), "weights must be positive");
    let n = weights.len();
    let threshold = n as f64 / 2.0;
    let mut minimal: Vec<BTreeSet<usize>> = Vec::new();
    // Ascending subset size: any superset of an already-found quorum is
    // dominated.
    for size in 1..=n {
        for q in subsets_of_size(n, size) {
            if minimal.iter().any(|m| m.is_subset(&q)) {
                continue;
            }
            let total: f64 = q.iter().map(|&i| weights[i]).sum();
            if total > threshold {
                minimal.push(q);
            }
        }
    }
    let mut nodes = unnamed_nodes(n);
    for (node, &w) in nodes.iter_mut().zip(weights) {
        node.weight = Some(w);
    }
    QuorumSystem {
        nodes,
        quorums: minimal,
    }
}

fn subsets_of_size(n: usize, size: usize) -> Vec<BTreeSet<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(start: usize, n: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<BTreeSet<usize>>) {
        if current.len() == size {
            out.push(current.iter().copied().collect());
            return;
        }
        for i in start..n {
            if n - i < size - current.len() {
                break;
            }
            current.push(i);
            rec(i + 1, n, size, current, out);
            current.pop();
        }
    }
    rec(0, n, size, &mut current, &mut out);
    out
}

impl QuorumSystem {
    /// Checks the structural invariants: quorums are nonempty, in range, and
    /// pairwise intersecting.
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.quorums.is_empty() {
            return Err(AnalysisError::EmptyQuorumList);
        }
        for (i, q) in self.quorums.iter().enumerate() {
            if q.is_empty() {
                return Err(AnalysisError::EmptyQuorum(i));
            }
            if let Some(&bad) = q.iter().find(|&&x| x >= self.nodes.len()) {
                return Err(AnalysisError::UnknownNode(i, bad));
            }
        }
        for i in 0..self.quorums.len() {
            for j in i + 1..self.quorums.len() {
                if self.quorums[i].is_disjoint(&self.quorums[j]) {
                    return Err(AnalysisError::NonIntersecting(i, j));
                }
            }
        }
        Ok(())
    }

    /// Drops quorums that contain another quorum as a proper subset.
    pub fn minimized(&self) -> QuorumSystem {
        let mut kept: Vec<BTreeSet<usize>> = Vec::new();
        let mut sorted = self.quorums.clone();
        sorted.sort_by_key(|q| q.len());
        for q in sorted {
            if !kept.iter().any(|m| m.is_subset(&q)) {
                kept.push(q);
            }
        }
        QuorumSystem {
            nodes: self.nodes.clone(),
            quorums: kept,
        }
    }

    /// Client quorum latency: the fastest fully-acknowledged quorum, i.e.
    /// the minimum over quorums of the maximum round trip inside the quorum.
    pub fn quorum_latency(&self, client_rtts_ms: &[f64]) -> Result<f64, AnalysisError> {
        self.validate()?;
        assert_eq!(client_rtts_ms.len(), self.nodes.len());
        assert!(client_rtts_ms.iter().all(|&r| r > 0.0));
        Ok(self
            .quorums
            .iter()
            .map(|q| {
                q.iter()
                    .map(|&i| client_rtts_ms[i])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min))
    }

    /// Maximum sustainable throughput over probability distributions on
    /// quorums. Only the read-only case is supported.
    pub fn capacity(&self, read_fraction: f64) -> Result<f64, AnalysisError> {
        if read_fraction != 1.0 {
            return Err(AnalysisError::UnsupportedReadFraction(read_fraction));
        }
        self.validate()?;
        let caps: Vec<f64> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| n.capacity.ok_or(AnalysisError::MissingCapacity(i)))
            .collect::<Result<_, _>>()?;
        Ok(packing_lp_max(&self.quorums, &caps))
    }
}

/// Maximizes `sum x` subject to `Ax <= b, x >= 0` where `A[i][q] = 1` iff
/// node `i` is in quorum `q`, by enumerating basic feasible solutions.
///
/// Every vertex of the feasible polytope has support of size at most the
/// number of nodes, with that many node constraints tight; enumerating
/// (support, tight-set) pairs and solving the square system visits every
/// vertex.
fn packing_lp_max(quorums: &[BTreeSet<usize>], caps: &[f64]) -> f64 {
    let m = caps.len();
    let k = quorums.len();
    let scale: f64 = caps.iter().fold(1.0f64, |a, &b| a.max(b));
    let tol = 1e-9 * scale;
    let mut best = 0.0f64;

    let max_support = m.min(k);
    for support in combinations(k, max_support) {
        let s = support.len();
        if s == 0 {
            continue;
        }
        for tight in combinations(m, s).into_iter().filter(|t| t.len() == s) {
            // Solve A[tight][support] * x = b[tight].
            let mut a = vec![vec![0.0f64; s]; s];
            let mut b = vec![0.0f64; s];
            for (row, &node) in tight.iter().enumerate() {
                b[row] = caps[node];
                for (col, &q) in support.iter().enumerate() {
                    if quorums[q].contains(&node) {
                        a[row][col] = 1.0;
                    }
                }
            }
            let Some(x) = solve_square(&mut a, &mut b) else {
                continue;
            };
            if x.iter().any(|&v| v < -tol) {
                continue;
            }
            // Global feasibility.
            let feasible = (0..m).all(|node| {
                let load: f64 = support
                    .iter()
                    .enumerate()
                    .filter(|(_, &q)| quorums[q].contains(&node))
                    .map(|(col, _)| x[col])
                    .sum();
                load <= caps[node] + tol
            });
            if feasible {
                let obj: f64 = x.iter().sum();
                if obj > best {
                    best = obj;
                }
            }
        }
    }
    best
}

/// All subsets of `0..n` of size 1 to `max_size`.
fn combinations(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=max_size.min(n) {
        for set in subsets_of_size(n, size) {
            out.push(set.into_iter().collect());
        }
    }
    out
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for col in row + 1..n {
            acc -= a[row][col] * x[col];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// On-disk description of one quorum system instance, as consumed by the
/// `analyze` subcommand. Quorums come from exactly one source: an explicit
/// list, the `majority` flag, or per-node weights.
#[derive(Debug, Clone, Deserialize)]
pub struct QuorumSpecFile {
    pub nodes: Vec<NodeSpecEntry>,
    /// Generate the simple majority system over the nodes.
    #[serde(default)]
    pub majority: bool,
    /// Explicit quorums, by node id.
    #[serde(default)]
    pub quorums: Option<Vec<Vec<String>>>,
    /// Client round-trip time to each node, for quorum latency.
    #[serde(default)]
    pub client_rtts_ms: Option<BTreeMap<String, f64>>,
    #[serde(default = "default_read_fraction")]
    pub read_fraction: f64,
}

fn default_read_fraction() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
pub struct NodeSpecEntry {
    pub id: String,
    #[serde(default)]
    pub capacity: Option<f64>,
    #[serde(default)]
    pub weight: Option<f64>,
}

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("node ids must be unique ({0} repeats)")]
    DuplicateNode(String),
    #[error("quorum references unknown node {0}")]
    UnknownNodeId(String),
    #[error("specify quorums exactly one way: explicit list, majority flag, or weights on every node")]
    AmbiguousQuorumSource,
    #[error("client_rtts_ms is missing node {0}")]
    MissingRtt(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl QuorumSpecFile {
    /// Builds the quorum system plus, when RTTs are present, the per-node
    /// client round-trip vector in node order.
    pub fn build(&self) -> Result<(QuorumSystem, Option<Vec<f64>>), SpecFileError> {
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if index.insert(node.id.as_str(), i).is_some() {
                return Err(SpecFileError::DuplicateNode(node.id.clone()));
            }
        }
        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id.clone(),
                capacity: n.capacity,
                weight: n.weight,
            })
            .collect();
        let all_weighted = self.nodes.iter().all(|n| n.weight.is_some());
        let qs = match (&self.quorums, self.majority, all_weighted) {
            (Some(lists), false, _) => {
                let mut quorums = Vec::new();
                for list in lists {
                    let mut q = BTreeSet::new();
                    for id in list {
                        let &i = index
                            .get(id.as_str())
                            .ok_or_else(|| SpecFileError::UnknownNodeId(id.clone()))?;
                        q.insert(i);
                    }
                    quorums.push(q);
                }
                QuorumSystem { nodes, quorums }
            }
            (None, true, _) => QuorumSystem {
                quorums: smqs(nodes.len()).quorums,
                nodes,
            },
            (None, false, true) => {
                let weights: Vec<f64> = self.nodes.iter().map(|n| n.weight.unwrap()).collect();
                QuorumSystem {
                    quorums: wmqs(&weights).quorums,
                    nodes,
                }
            }
            _ => return Err(SpecFileError::AmbiguousQuorumSource),
        };
        qs.validate()?;
        let rtts = match &self.client_rtts_ms {
            None => None,
            Some(map) => Some(
                qs.nodes
                    .iter()
                    .map(|n| {
                        map.get(&n.id)
                            .copied()
                            .ok_or_else(|| SpecFileError::MissingRtt(n.id.clone()))
                    })
                    .collect::<Result<Vec<f64>, _>>()?,
            ),
        };
        Ok((qs, rtts))
    }
}
