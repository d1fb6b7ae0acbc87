//! Graph and membership containers plus the structural computations shared by
//! the generator, the estimators and the evaluation code.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected, hollow, binary adjacency matrix stored as one bitset per row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Adjacency {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl std::fmt::Debug for Adjacency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Adjacency")
            .field("n", &self.n)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self { n, words, bits: vec![0; n * words] }
    }

    pub fn complete(n: usize) -> Self {
        let mut y = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                y.set(i, j, true);
            }
        }
        y
    }

    /// Builds a graph from an undirected edge list. Duplicate dyads collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut y = Self::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("edge ({i},{j}) outside 0..{n}")));
            }
            if i == j {
                return Err(Error::InvalidInput(format!("self-loop at node {i}")));
            }
            y.set(i, j, true);
        }
        Ok(y)
    }

    /// Builds a graph from a dense 0/1 matrix, validating symmetry and hollowness.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut y = Self::empty(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::InvalidInput(format!("entry ({i},{j}) = {v} is not binary")));
                }
                if v != rows[j][i] {
                    return Err(Error::InvalidInput(format!("matrix not symmetric at ({i},{j})")));
                }
                if i == j && v != 0 {
                    return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
                }
                if i < j && v == 1 {
                    y.set(i, j, true);
                }
            }
        }
        Ok(y)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    /// Sets dyad `(i, j)`; setting the diagonal is ignored.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, present: bool) {
        if i == j {
            return;
        }
        let (wi, bi) = (i * self.words + j / 64, j % 64);
        let (wj, bj) = (j * self.words + i / 64, i % 64);
        if present {
            self.bits[wi] |= 1 << bi;
            self.bits[wj] |= 1 << bj;
        } else {
            self.bits[wi] &= !(1 << bi);
            self.bits[wj] &= !(1 << bj);
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of nodes adjacent to both `i` and `j`.
    #[inline]
    pub fn common_neighbors(&self, i: usize, j: usize) -> usize {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn dyad_count(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    /// Number of dyads whose state differs between `self` and `other`.
    pub fn hamming(&self, other: &Adjacency) -> usize {
        debug_assert_eq!(self.n, other.n);
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// Edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
    }

    pub fn density(&self) -> f64 {
        let d = self.dyad_count();
        if d == 0 {
            0.0
        } else {
            self.edge_count() as f64 / d as f64
        }
    }
}

/// Row sums of the adjacency matrix.
pub fn degrees(y: &Adjacency) -> Vec<usize> {
    (0..y.n()).map(|i| y.degree(i)).collect()
}

pub fn triangle_count(y: &Adjacency) -> u64 {
    let per_edge: u64 = y.edges().map(|(i, j)| y.common_neighbors(i, j) as u64).sum();
    per_edge / 3
}

/// Counts of unordered node pairs by shortest-path length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicHistogram {
    /// `by_distance[d]` is the number of pairs at distance `d`; index 0 is unused.
    pub by_distance: Vec<u64>,
    pub unreachable: u64,
}

impl GeodesicHistogram {
    pub fn count(&self, distance: usize) -> u64 {
        self.by_distance.get(distance).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.by_distance.iter().sum::<u64>() + self.unreachable
    }
}

/// Breadth-first search from every node.
pub fn geodesic_histogram(y: &Adjacency) -> GeodesicHistogram {
    let n = y.n();
    let mut by_distance = vec![0u64; n.max(1)];
    let mut unreachable = 0u64;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for v in y.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for &d in &dist[(s + 1)..] {
            if d == usize::MAX {
                unreachable += 1;
            } else {
                by_distance[d] += 1;
            }
        }
    }
    GeodesicHistogram { by_distance, unreachable }
}

/// All-pairs shortest path lengths; `None` marks unreachable pairs.
pub fn geodesic_matrix(y: &Adjacency) -> Vec<Vec<Option<usize>>> {
    let n = y.n();
    let mut out = vec![vec![None; n]; n];
    let mut queue = VecDeque::with_capacity(n);
    for (s, row) in out.iter_mut().enumerate() {
        row[s] = Some(0);
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = row[u].unwrap_or(0);
            for v in y.neighbors(u) {
                if row[v].is_none() {
                    row[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    out
}

/// Restriction of `y` to `nodes`, keeping the given order.
pub fn subgraph(y: &Adjacency, nodes: &[usize]) -> Result<Adjacency> {
    if nodes.is_empty() {
        return Err(Error::InvalidInput("empty node set for subgraph".into()));
    }
    if let Some(&bad) = nodes.iter().find(|&&v| v >= y.n()) {
        return Err(Error::InvalidInput(format!("node {bad} outside 0..{}", y.n())));
    }
    Ok(restrict(y, nodes))
}

pub(crate) fn restrict(y: &Adjacency, nodes: &[usize]) -> Adjacency {
    let mut out = Adjacency::empty(nodes.len());
    for (a, &u) in nodes.iter().enumerate() {
        for (b, &v) in nodes.iter().enumerate().skip(a + 1) {
            if y.has_edge(u, v) {
                out.set(a, b, true);
            }
        }
    }
    out
}

/// An ordered series of graph snapshots on a fixed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicNetwork {
    slices: Vec<Adjacency>,
    node_ids: Vec<String>,
}

impl DynamicNetwork {
    pub fn new(slices: Vec<Adjacency>) -> Result<Self> {
        let n = slices.first().map(Adjacency::n).unwrap_or(0);
        let node_ids = (0..n).map(|i| i.to_string()).collect();
        Self::with_ids(slices, node_ids)
    }

    pub fn with_ids(slices: Vec<Adjacency>, node_ids: Vec<String>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::InvalidInput("dynamic network needs at least one slice".into()));
        }
        let n = slices[0].n();
        if let Some((t, s)) = slices.iter().enumerate().find(|(_, s)| s.n() != n) {
            return Err(Error::Dimension(format!("slice {t} has {} nodes, slice 0 has {n}", s.n())));
        }
        if node_ids.len() != n {
            return Err(Error::Dimension(format!("{} node ids for {n} nodes", node_ids.len())));
        }
        Ok(Self { slices, node_ids })
    }

    pub fn n(&self) -> usize {
        self.slices[0].n()
    }

    /// Number of snapshots, `T + 1`.
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Index of the last snapshot, `T`.
    pub fn last_time(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn slice(&self, t: usize) -> &Adjacency {
        &self.slices[t]
    }

    pub fn slices(&self) -> &[Adjacency] {
        &self.slices
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    /// The first `len` snapshots.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(Error::InvalidInput(format!("cannot keep {len} of {} slices", self.len())));
        }
        Self::with_ids(self.slices[..len].to_vec(), self.node_ids.clone())
    }
}

/// Cluster labels per node and time. Labels are zero-based internally
/// (`0..k`); file formats use `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipSeries {
    k: usize,
    /// `labels[t][i]`
    labels: Vec<Vec<usize>>,
}

impl MembershipSeries {
    pub fn new(labels: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("cluster count must be positive".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidInput("membership series needs at least one time point".into()));
        }
        let n = labels[0].len();
        for (t, row) in labels.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!("time {t} has {} labels, expected {n}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&l| l >= k) {
                return Err(Error::InvalidInput(format!("label {} at time {t} exceeds K={k}", bad + 1)));
            }
        }
        Ok(Self { k, labels })
    }

    /// The same labels at every one of `times` time points.
    pub fn constant(labels: Vec<usize>, times: usize, k: usize) -> Result<Self> {
        Self::new(vec![labels; times], k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels[0].len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn at(&self, t: usize) -> &[usize] {
        &self.labels[t]
    }

    pub fn get(&self, t: usize, i: usize) -> usize {
        self.labels[t][i]
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<Vec<usize>> {
        self.labels
    }

    /// Applies a relabelling `perm[old] = new` at every time point.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            k: self.k,
            labels: self.labels.iter().map(|row| row.iter().map(|&l| perm[l]).collect()).collect(),
        }
    }

    pub fn check_matches(&self, net: &DynamicNetwork) -> Result<()> {
        if self.n() != net.n() || self.len() != net.len() {
            return Err(Error::Dimension(format!(
                "membership is {}x{} (nodes x times), network is {}x{}",
                self.n(),
                self.len(),
                net.n(),
                net.len()
            )));
        }
        Ok(())
    }

    /// Node indices carrying label `k` at time `t`.
    pub fn members(&self, t: usize, k: usize) -> Vec<usize> {
        self.labels[t].iter().enumerate().filter(|(_, &l)| l == k).map(|(i, _)| i).collect()
    }
}

/// One cluster's view of the transition `t-1 -> t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterView {
    pub cluster: usize,
    /// Members at `t-1`, in node order.
    pub previous: Vec<usize>,
    /// Members at both `t-1` and `t`, in node order.
    pub remain: Vec<usize>,
    /// Members at `t` that were elsewhere at `t-1`.
    pub joiners: Vec<usize>,
    /// Slice `t-1` restricted to `remain`.
    pub prev_adj: Adjacency,
    /// Slice `t` restricted to `remain`.
    pub curr_adj: Adjacency,
}

/// Builds the per-cluster views of a single transition from explicit slices and labels.
pub fn transition_views(
    prev: &Adjacency,
    curr: &Adjacency,
    labels_prev: &[usize],
    labels_curr: &[usize],
    k: usize,
) -> Vec<ClusterView> {
    (0..k)
        .map(|c| {
            let previous: Vec<usize> = (0..labels_prev.len()).filter(|&i| labels_prev[i] == c).collect();
            let remain: Vec<usize> =
                previous.iter().copied().filter(|&i| labels_curr[i] == c).collect();
            let joiners: Vec<usize> = (0..labels_curr.len())
                .filter(|&i| labels_curr[i] == c && labels_prev[i] != c)
                .collect();
            ClusterView {
                cluster: c,
                prev_adj: restrict(prev, &remain),
                curr_adj: restrict(curr, &remain),
                previous,
                remain,
                joiners,
            }
        })
        .collect()
}

/// Per-cluster views of the transition into time `t` (`1 <= t <= T`).
pub fn cluster_views(net: &DynamicNetwork, m: &MembershipSeries, t: usize) -> Result<Vec<ClusterView>> {
    m.check_matches(net)?;
    if t == 0 || t > net.last_time() {
        return Err(Error::InvalidInput(format!("time {t} outside 1..={}", net.last_time())));
    }
    Ok(transition_views(net.slice(t - 1), net.slice(t), m.at(t - 1), m.at(t), m.k()))
}
