//! Scale-free topology generation and the influence matrices derived from it.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tolerance used when checking that a matrix is row-stochastic.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Undirected simple graph over `n` agents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    /// Canonical edges `(i, j)` with `i < j`, sorted.
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    /// Builds a graph from an edge list. Rejects self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGenerator(format!(
                    "edge ({a}, {b}) out of range for {n} agents"
                )));
            }
            if a == b {
                return Err(Error::InvalidGenerator(format!("self-loop on agent {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGenerator(format!("duplicate edge ({a}, {b})")));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { n, edges, neighbors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &self.neighbors[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n
    }
}

/// Number of edges produced by [`generate_scale_free`]: a complete seed graph
/// on `m + 1` nodes plus `m` edges for every later node.
pub fn scale_free_edge_count(n: usize, m: usize) -> usize {
    m * (m + 1) / 2 + (n - m - 1) * m
}

/// Preferential attachment (Barabási–Albert) growth.
///
/// Starts from a complete graph on `m + 1` nodes; each subsequent node links
/// to `m` distinct existing nodes chosen with probability proportional to
/// their current degree. Output is a pure function of `(n, m, seed)`.
pub fn generate_scale_free(n: usize, m: usize, seed: u64) -> Result<Adjacency> {
    if m < 1 {
        return Err(Error::InvalidGenerator(format!("m must be >= 1, got {m}")));
    }
    if n < 2 {
        return Err(Error::InvalidGenerator(format!("n must be >= 2, got {n}")));
    }
    if m >= n {
        return Err(Error::InvalidGenerator(format!("m must be < n, got m = {m}, n = {n}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(scale_free_edge_count(n, m));
    // Each node appears here once per incident edge, so a uniform draw is a
    // degree-proportional draw.
    let mut endpoints = Vec::with_capacity(2 * scale_free_edge_count(n, m));

    for j in 0..=m {
        for i in 0..j {
            edges.push((i, j));
            endpoints.push(i);
            endpoints.push(j);
        }
    }

    let mut chosen = Vec::with_capacity(m);
    for v in (m + 1)..n {
        chosen.clear();
        while chosen.len() < m {
            let target = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&target) {
                chosen.push(target);
            }
        }
        for &u in &chosen {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }

    Adjacency::from_edges(n, edges)
}

/// Dense row-stochastic matrix. `get(i, j)` is the weight agent `i` places on
/// agent `j`, so column sums measure influence over others.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceMatrix {
    n: usize,
    w: Vec<f64>,
}

impl InfluenceMatrix {
    /// Wraps row-major data without normalizing. Entries must be nonnegative
    /// and rows must already sum to 1 within [`ROW_SUM_TOL`].
    pub fn from_row_major(n: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::InvalidPopulation(format!(
                "matrix has {} entries, expected {}",
                w.len(),
                n * n
            )));
        }
        let m = Self { n, w };
        if let Some(i) = (0..n).find(|&i| m.row(i).iter().any(|&x| x.is_nan() || x < 0.0)) {
            return Err(Error::InvalidPopulation(format!("row {i} has a negative or NaN entry")));
        }
        if m.max_row_sum_deviation() > ROW_SUM_TOL {
            return Err(Error::InvalidPopulation("matrix is not row-stochastic".into()));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.w.chunks_exact(self.n.max(1))
    }

    /// Column sums over every row.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for row in self.rows() {
            for (s, &x) in sums.iter_mut().zip(row) {
                *s += x;
            }
        }
        sums
    }

    pub fn max_row_sum_deviation(&self) -> f64 {
        self.rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.w
    }
}

/// Uniform weights over neighbors with `self_weight` mass on the diagonal.
pub fn init_influence_matrix(adj: &Adjacency, self_weight: f64) -> Result<InfluenceMatrix> {
    if !(0.0..1.0).contains(&self_weight) {
        return Err(crate::error::invalid(
            "self_weight",
            format!("must lie in [0, 1), got {self_weight}"),
        ));
    }
    let n = adj.n();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        let nbrs = adj.neighbors(i);
        if nbrs.is_empty() {
            return Err(Error::IsolatedNode(i));
        }
        let share = (1.0 - self_weight) / nbrs.len() as f64;
        let row = &mut w[i * n..(i + 1) * n];
        for &j in nbrs {
            row[j] = share;
        }
        row[i] = self_weight;
    }
    Ok(InfluenceMatrix { n, w })
}

/// Divides each row by its sum. A row summing to zero becomes the unit
/// vector on the diagonal.
pub fn row_normalize(n: usize, mut data: Vec<f64>) -> InfluenceMatrix {
    assert_eq!(data.len(), n * n, "row_normalize: expected {n}x{n} data");
    for (i, row) in data.chunks_exact_mut(n.max(1)).enumerate() {
        normalize_row_in_place(row, i);
    }
    InfluenceMatrix { n, w: data }
}

pub(crate) fn normalize_row_in_place(row: &mut [f64], diag: usize) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        for x in row.iter_mut() {
            *x /= sum;
        }
    } else {
        row.fill(0.0);
        row[diag] = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: usize) -> Adjacency {
        Adjacency::from_edges(leaves + 1, (1..=leaves).map(|l| (0, l))).unwrap()
    }

    #[test]
    fn m1_yields_tree() {
        let g = generate_scale_free(10, 1, 7).unwrap();
        assert_eq!(g.edges().len(), 9);
        assert!(g.is_connected());
    }

    #[test]
    fn grid_maximum_size_is_valid() {
        let g = generate_scale_free(150, 2, 1).unwrap();
        assert_eq!(g.n(), 150);
        assert_eq!(g.edges().len(), scale_free_edge_count(150, 2));
        assert!(g.is_connected());
    }

    #[test]
    fn hubs_dominate_median_degree() {
        let g = generate_scale_free(1000, 2, 3).unwrap();
        let mut degrees: Vec<_> = (0..g.n()).map(|i| g.degree(i)).collect();
        degrees.sort_unstable();
        let median = degrees[degrees.len() / 2];
        let max = *degrees.last().unwrap();
        assert!(max >= 5 * median, "max {max}, median {median}");
    }

    #[test]
    fn rejects_bad_generator_args() {
        assert!(generate_scale_free(1, 1, 0).is_err());
        assert!(generate_scale_free(10, 0, 0).is_err());
        assert!(generate_scale_free(3, 3, 0).is_err());
        assert!(generate_scale_free(2, 1, 0).is_ok());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scale_free(200, 3, 42).unwrap();
        let b = generate_scale_free(200, 3, 42).unwrap();
        let c = generate_scale_free(200, 3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn star_uniform_split() {
        let w = init_influence_matrix(&star(4), 0.0).unwrap();
        assert_eq!(w.row(0), &[0.0, 0.25, 0.25, 0.25, 0.25]);
        for leaf in 1..=4 {
            assert_eq!(w.get(leaf, 0), 1.0);
            assert_eq!(w.row(leaf).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn path_with_self_weight() {
        let path = Adjacency::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let w = init_influence_matrix(&path, 0.5).unwrap();
        assert_eq!(w.row(1), &[0.25, 0.5, 0.25]);
        assert_eq!(w.row(0), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn zero_self_weight_has_empty_diagonal() {
        let g = generate_scale_free(50, 2, 9).unwrap();
        let w = init_influence_matrix(&g, 0.0).unwrap();
        assert!((0..50).all(|i| w.get(i, i) == 0.0));
        assert!(w.max_row_sum_deviation() < ROW_SUM_TOL);
    }

    #[test]
    fn isolated_node_rejected() {
        let g = Adjacency::from_edges(3, [(0, 1)]).unwrap();
        assert!(matches!(init_influence_matrix(&g, 0.0), Err(Error::IsolatedNode(2))));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            row_normalize(2, vec![2.0, 2.0, 1.0, 3.0]).as_slice(),
            &[0.5, 0.5, 0.25, 0.75]
        );
        assert_eq!(
            row_normalize(2, vec![1.0, 0.0, 0.0, 1.0]).as_slice(),
            &[1.0, 0.0, 0.0, 1.0]
        );
        // degenerate row falls back to the diagonal
        assert_eq!(
            row_normalize(2, vec![0.0, 0.0, 1.0, 1.0]).as_slice(),
            &[1.0, 0.0, 0.5, 0.5]
        );
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(Adjacency::from_edges(3, [(1, 1)]).is_err());
        assert!(Adjacency::from_edges(3, [(0, 1), (1, 0)]).is_err());
        assert!(Adjacency::from_edges(3, [(0, 3)]).is_err());
    }
}
