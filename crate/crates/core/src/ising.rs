//! Ferromagnetic Ising models on graphs.
//!
//! `Pr[S = s]` is proportional to `exp(sum_{(i,j) in E} beta_ij s_i s_j +
//! sum_i alpha_i s_i)` with `beta, alpha >= 0`. Small graphs are solved by
//! exact enumeration; larger ones are sampled with single-site heat-bath
//! (Glauber) updates. The bound calculators work with the ratio
//! `rho = Pr[S_i = 1 | .] / Pr[S_i = -1 | .]`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::dominance::{is_uniformly_dominant, DominanceReport, TripleDistribution};
use crate::error::{Error, Result};
use crate::payments::read_int_rows;
use crate::signal::Signal;

/// Largest graph solved by enumeration (2^22 configurations).
pub const MAX_EXACT_NODES: usize = 22;

/// Simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Duplicate edges (in either orientation) are merged; self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::invalid(format!("self-loop at node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) outside {n} nodes")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &set {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj.iter_mut().for_each(|a| a.sort_unstable());
        Ok(Graph { n, adj, edges: set.into_iter().collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// Nodes other than `i` that are not adjacent to `i`.
    pub fn non_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&k| k != i && !self.has_edge(i, k)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    /// True when the graph has no cycle.
    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
        }
        true
    }

    /// Reads an undirected `u,v` edge list (0-based). The node count is one
    /// more than the largest id unless `n` is given.
    pub fn load(path: &Path, n: Option<usize>) -> Result<Self> {
        let rows = read_int_rows(path, 2)?;
        let mut edges = Vec::with_capacity(rows.len());
        for (line, r) in &rows {
            if r[0] < 0 || r[1] < 0 {
                return Err(Error::Parse { path: path.into(), line: *line, message: "negative node id".into() });
            }
            if r[0] == r[1] {
                return Err(Error::Parse { path: path.into(), line: *line, message: format!("self-loop at {}", r[0]) });
            }
            edges.push((r[0] as usize, r[1] as usize));
        }
        let max_id = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Graph::from_edges(n.unwrap_or(max_id).max(max_id), &edges)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("u,v\n");
        for (u, v) in &self.edges {
            s.push_str(&format!("{u},{v}\n"));
        }
        s
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).expect("valid path")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Graph::from_edges(n, &edges).expect("valid cycle")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
        Graph::from_edges(n, &edges).expect("valid complete graph")
    }

    /// Complete `d`-ary tree of the given depth, root 0, breadth-first ids.
    pub fn dary_tree(d: usize, depth: usize) -> Self {
        let mut edges = Vec::new();
        let mut frontier = vec![0usize];
        let mut next_id = 1;
        for _ in 0..depth {
            let mut next = Vec::new();
            for &p in &frontier {
                for _ in 0..d {
                    edges.push((p, next_id));
                    next.push(next_id);
                    next_id += 1;
                }
            }
            frontier = next;
        }
        Graph::from_edges(next_id, &edges).expect("valid tree")
    }

    /// Erdos-Renyi `G(n, p)`.
    pub fn random_gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &edges).expect("valid random graph")
    }

    /// Random graph with every degree at most `d`: a configuration-model
    /// pairing of `d` stubs per node with self-loops and repeats dropped, so
    /// most nodes end with degree exactly `d`.
    pub fn random_regularish<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Self {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        stubs.shuffle(rng);
        let edges: Vec<_> = stubs
            .chunks_exact(2)
            .filter(|c| c[0] != c[1])
            .map(|c| (c[0], c[1]))
            .collect();
        Graph::from_edges(n, &edges).expect("valid pairing")
    }

    /// Random graph with `max_degree <= d`, built by proposing uniform node
    /// pairs until `target_edges` are placed or proposals run out.
    pub fn random_bounded_degree<R: Rng + ?Sized>(n: usize, d: usize, target_edges: usize, rng: &mut R) -> Self {
        let mut deg = vec![0usize; n];
        let mut set = BTreeSet::new();
        let mut proposals = 0;
        while set.len() < target_edges && proposals < 50 * target_edges.max(1) {
            proposals += 1;
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v || deg[u] >= d || deg[v] >= d || !set.insert((u.min(v), u.max(v))) {
                continue;
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let edges: Vec<_> = set.into_iter().collect();
        Graph::from_edges(n, &edges).expect("valid bounded graph")
    }
}

/// Two hubs `v_0`, `v_{n-1}` joined through `n - 2` common friends and not
/// adjacent to each other.
pub fn counterexample_graph(n: usize) -> Result<Graph> {
    if n < 4 {
        return Err(Error::invalid("counterexample graph needs n >= 4"));
    }
    let edges: Vec<_> = (1..n - 1).flat_map(|l| [(0, l), (l, n - 1)]).collect();
    Graph::from_edges(n, &edges)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    graph: Graph,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    couplings: Vec<Vec<(usize, f64)>>,
}

impl IsingModel {
    /// `beta[e]` is the coupling of `graph.edges()[e]`.
    pub fn new(graph: Graph, beta: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if beta.len() != graph.edges().len() {
            return Err(Error::invalid(format!("{} couplings for {} edges", beta.len(), graph.edges().len())));
        }
        if alpha.len() != graph.n() {
            return Err(Error::invalid(format!("{} biases for {} nodes", alpha.len(), graph.n())));
        }
        if beta.iter().chain(&alpha).any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::invalid("couplings and biases must be finite and nonnegative"));
        }
        let mut couplings = vec![Vec::new(); graph.n()];
        for (&(u, v), &b) in graph.edges().iter().zip(&beta) {
            couplings[u].push((v, b));
            couplings[v].push((u, b));
        }
        Ok(IsingModel { graph, beta, alpha, couplings })
    }

    /// Uniform coupling, zero bias.
    pub fn uniform(graph: Graph, beta: f64) -> Result<Self> {
        let m = graph.edges().len();
        let n = graph.n();
        Self::new(graph, vec![beta; m], vec![0.0; n])
    }

    /// Uniform coupling with per-edge overrides.
    pub fn with_overrides(graph: Graph, beta: f64, overrides: &BTreeMap<(usize, usize), f64>, alpha: f64) -> Result<Self> {
        let mut b = vec![beta; graph.edges().len()];
        for (&(u, v), &val) in overrides {
            let e = graph
                .edge_index(u, v)
                .ok_or_else(|| Error::invalid(format!("coupling override for missing edge ({u}, {v})")))?;
            b[e] = val;
        }
        let n = graph.n();
        Self::new(graph, b, vec![alpha; n])
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn beta_min(&self) -> f64 {
        self.beta.iter().copied().fold(f64::INFINITY, f64::min).min(self.beta_max())
    }

    pub fn beta_max(&self) -> f64 {
        self.beta.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.alpha.iter().all(|&a| a == 0.0)
    }

    /// Returns a copy with one coupling replaced.
    pub fn with_beta(&self, edge: usize, value: f64) -> Result<Self> {
        let mut beta = self.beta.clone();
        beta[edge] = value;
        Self::new(self.graph.clone(), beta, self.alpha.clone())
    }

    /// Returns a copy with one bias replaced.
    pub fn with_alpha(&self, node: usize, value: f64) -> Result<Self> {
        let mut alpha = self.alpha.clone();
        alpha[node] = value;
        Self::new(self.graph.clone(), self.beta.clone(), alpha)
    }

    /// `H(s)` for a configuration encoded with bit `i` set iff `s_i = +1`.
    pub fn energy(&self, config: u64) -> f64 {
        let spin = |i: usize| if config >> i & 1 == 1 { 1.0 } else { -1.0 };
        let pair: f64 = self
            .graph
            .edges()
            .iter()
            .zip(&self.beta)
            .map(|(&(u, v), &b)| b * spin(u) * spin(v))
            .sum();
        let bias: f64 = self.alpha.iter().enumerate().map(|(i, &a)| a * spin(i)).sum();
        pair + bias
    }

    /// Local field `alpha_i + sum_j beta_ij s_j`.
    fn local_field(&self, i: usize, state: &[Signal]) -> f64 {
        self.alpha[i] + self.couplings[i].iter().map(|&(j, b)| b * state[j].as_f64()).sum::<f64>()
    }
}

/// Exact law over `{-1, 1}^V`; configuration `c` has bit `i` set iff `s_i = +1`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    n: usize,
    probs: Vec<f64>,
}

/// Enumerates all `2^n` configurations with log-domain normalization.
pub fn exact_joint(model: &IsingModel) -> Result<JointTable> {
    let n = model.n();
    if n > MAX_EXACT_NODES {
        return Err(Error::precondition(format!("exact enumeration limited to {MAX_EXACT_NODES} nodes, got {n}")));
    }
    let size = 1usize << n;
    let log_w: Vec<f64> = (0..size as u64).into_par_iter().map(|c| model.energy(c)).collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = log_w.par_iter().map(|&h| (h - max).exp()).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(JointTable { n, probs })
}

impl JointTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of the event `S_u = s_u` for all `(u, s_u)` in `condition`.
    pub fn event_prob(&self, condition: &[(usize, Signal)]) -> Result<f64> {
        let (mask, want) = self.mask(condition)?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(c, _)| (*c as u64) & mask == want)
            .map(|(_, p)| p)
            .sum())
    }

    fn mask(&self, condition: &[(usize, Signal)]) -> Result<(u64, u64)> {
        let mut mask = 0u64;
        let mut want = 0u64;
        for &(u, s) in condition {
            if u >= self.n {
                return Err(Error::invalid(format!("node {u} not in model")));
            }
            let bit = 1u64 << u;
            if mask & bit != 0 && (want & bit != 0) != (s == Signal::Pos) {
                return Ok((mask | bit, u64::MAX));
            }
            mask |= bit;
            if s == Signal::Pos {
                want |= bit;
            }
        }
        Ok((mask, want))
    }

    /// `Pr[S_i = 1 | S_U = s_U]`.
    pub fn conditional_prob(&self, i: usize, condition: &[(usize, Signal)]) -> Result<f64> {
        let denom = self.event_prob(condition)?;
        if denom <= 0.0 {
            return Err(Error::Degenerate(format!("conditioning event {condition:?} has probability 0")));
        }
        let mut joint = condition.to_vec();
        joint.push((i, Signal::Pos));
        Ok(self.event_prob(&joint)? / denom)
    }

    /// `rho = Pr[S_i = 1 | S_U = s_U] / Pr[S_i = -1 | S_U = s_U]`.
    pub fn conditional_ratio(&self, i: usize, condition: &[(usize, Signal)]) -> Result<f64> {
        let mut pos = condition.to_vec();
        pos.push((i, Signal::Pos));
        let mut neg = condition.to_vec();
        neg.push((i, Signal::Neg));
        let (p, q) = (self.event_prob(&pos)?, self.event_prob(&neg)?);
        if p + q <= 0.0 {
            return Err(Error::Degenerate(format!("conditioning event {condition:?} has probability 0")));
        }
        Ok(p / q)
    }

    /// `E[S_i]`.
    pub fn mean(&self, i: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(c, p)| if c >> i & 1 == 1 { *p } else { -*p })
            .sum()
    }

    /// `E[S_i S_j]`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(c, p)| if (c >> i & 1) == (c >> j & 1) { *p } else { -*p })
            .sum()
    }

    /// Joint law of `(S_i, S_j, S_k)`.
    pub fn triple(&self, i: usize, j: usize, k: usize) -> Result<TripleDistribution> {
        if i >= self.n || j >= self.n || k >= self.n {
            return Err(Error::invalid("triple node out of range"));
        }
        let mut p = [0.0; 8];
        for (c, &w) in self.probs.iter().enumerate() {
            let idx = ((c >> i & 1) << 2) | ((c >> j & 1) << 1) | (c >> k & 1);
            p[idx] += w;
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        TripleDistribution::new(p)
    }
}

/// Heat-bath chain with systematic sweeps over sites `0..n`.
#[derive(Clone, Debug)]
pub struct GlauberChain<'a> {
    model: &'a IsingModel,
    state: Vec<Signal>,
}

impl<'a> GlauberChain<'a> {
    /// Starts from a uniformly random configuration.
    pub fn new<R: Rng + ?Sized>(model: &'a IsingModel, rng: &mut R) -> Self {
        let state = (0..model.n()).map(|_| Signal::from_bool(rng.random())).collect();
        GlauberChain { model, state }
    }

    pub fn state(&self) -> &[Signal] {
        &self.state
    }

    /// One full sweep; site `i` becomes `+1` with probability
    /// `1 / (1 + exp(-2 (alpha_i + sum_j beta_ij s_j)))`.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.state.len() {
            let h = self.model.local_field(i, &self.state);
            let p = crate::sst::sigmoid(2.0 * h);
            self.state[i] = Signal::from_bool(rng.random::<f64>() < p);
        }
    }
}

/// Runs `burn_in` sweeps, then records the configuration after each of the
/// next `sweeps` sweeps.
pub fn glauber_sample<R: Rng + ?Sized>(
    model: &IsingModel,
    sweeps: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<Vec<Signal>>> {
    if sweeps == 0 || burn_in == 0 {
        return Err(Error::invalid("sweeps and burn-in must be at least 1"));
    }
    let mut chain = GlauberChain::new(model, rng);
    for _ in 0..burn_in {
        chain.sweep(rng);
    }
    Ok((0..sweeps)
        .map(|_| {
            chain.sweep(rng);
            chain.state.clone()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeCondition {
    /// `2 beta_min / d`.
    pub lhs: f64,
    /// `ln((e^{2(d+1) beta_max} + 1) / (e^{2 beta_max} + e^{2 d beta_max}))`.
    pub rhs: f64,
    pub holds: bool,
}

fn log_sum_exp2(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

fn dary_log_factor(beta_max: f64, d: usize) -> f64 {
    let d = d as f64;
    log_sum_exp2(2.0 * (d + 1.0) * beta_max, 0.0) - log_sum_exp2(2.0 * beta_max, 2.0 * d * beta_max)
}

fn check_bound_args(beta_min: f64, beta_max: f64, d: usize) -> Result<()> {
    if !(0.0 <= beta_min && beta_min <= beta_max && beta_max.is_finite()) || d < 1 {
        return Err(Error::invalid(format!(
            "need 0 <= beta_min <= beta_max and d >= 1, got ({beta_min}, {beta_max}, {d})"
        )));
    }
    Ok(())
}

/// Sufficient condition on couplings and maximum degree under which every
/// friend's signal uniformly dominates every non-friend's.
pub fn degree_condition(beta_min: f64, beta_max: f64, d: usize) -> Result<DegreeCondition> {
    check_bound_args(beta_min, beta_max, d)?;
    let lhs = 2.0 * beta_min / d as f64;
    let rhs = dary_log_factor(beta_max, d);
    Ok(DegreeCondition { lhs, rhs, holds: lhs > rhs })
}

/// Ratio at the root of a complete `d`-ary tree with coupling `beta_max`
/// and depth-two leaves pinned to `+1`; bounds `rho_{i | S_k = 1}` for any
/// non-neighbor `k` on graphs of maximum degree `d` with zero bias.
pub fn dary_upper_bound(beta_max: f64, d: usize) -> Result<f64> {
    check_bound_args(0.0, beta_max, d)?;
    Ok((d as f64 * dary_log_factor(beta_max, d)).exp())
}

/// Root ratio on a tree (or forest) by the children recursion
/// `rho_v = e^{2 alpha_v} prod_l (rho_l e^{2 beta} + 1) / (e^{2 beta} + rho_l)`.
/// Pinned nodes contribute the limits `e^{2 beta}` (`+1`) and `e^{-2 beta}`
/// (`-1`) and cut their subtrees.
pub fn tree_ratio(model: &IsingModel, root: usize, boundary: &[(usize, Signal)]) -> Result<f64> {
    let g = model.graph();
    if root >= g.n() {
        return Err(Error::invalid(format!("root {root} not in graph")));
    }
    if !g.is_forest() {
        return Err(Error::precondition("tree recursion needs an acyclic graph"));
    }
    let pinned: BTreeMap<usize, Signal> = boundary.iter().copied().collect();
    if pinned.contains_key(&root) {
        return Err(Error::invalid("root cannot carry a boundary condition"));
    }
    // post-order over the root's component
    let mut order = Vec::new();
    let mut parent = vec![usize::MAX; g.n()];
    let mut stack = vec![root];
    parent[root] = root;
    while let Some(v) = stack.pop() {
        order.push(v);
        if v != root && pinned.contains_key(&v) {
            continue;
        }
        for &w in g.neighbors(v) {
            if parent[w] == usize::MAX {
                parent[w] = v;
                stack.push(w);
            }
        }
    }
    let mut rho = vec![1.0f64; g.n()];
    for &v in order.iter().rev() {
        if pinned.contains_key(&v) {
            continue;
        }
        let mut r = (2.0 * model.alpha()[v]).exp();
        for &w in g.neighbors(v) {
            if parent[w] != v || w == v {
                continue;
            }
            let e = g.edge_index(v, w).expect("edge exists");
            let t = (2.0 * model.beta()[e]).exp();
            r *= match pinned.get(&w) {
                Some(Signal::Pos) => t,
                Some(Signal::Neg) => 1.0 / t,
                None => (rho[w] * t + 1.0) / (t + rho[w]),
            };
        }
        rho[v] = r;
    }
    Ok(rho[root])
}

fn check_network_triple(model: &IsingModel, i: usize, j: usize, k: usize) -> Result<()> {
    let g = model.graph();
    if i >= g.n() || j >= g.n() || k >= g.n() {
        return Err(Error::invalid("node out of range"));
    }
    if !g.has_edge(i, j) {
        return Err(Error::precondition(format!("({i}, {j}) is not an edge")));
    }
    if k == i || k == j || g.has_edge(i, k) {
        return Err(Error::precondition(format!("{k} is not a non-friend of {i}")));
    }
    if !model.is_symmetric() {
        return Err(Error::precondition("network dominance check requires zero bias"));
    }
    Ok(())
}

/// Dominance of friend `j` over non-friend `k` for node `i`, from the exact
/// joint law.
pub fn uniform_dominance_network(model: &IsingModel, i: usize, j: usize, k: usize) -> Result<DominanceReport> {
    check_network_triple(model, i, j, k)?;
    let table = exact_joint(model)?;
    uniform_dominance_network_with(&table, model, i, j, k)
}

/// As [`uniform_dominance_network`] with a precomputed joint table.
pub fn uniform_dominance_network_with(
    table: &JointTable,
    model: &IsingModel,
    i: usize,
    j: usize,
    k: usize,
) -> Result<DominanceReport> {
    check_network_triple(model, i, j, k)?;
    is_uniformly_dominant(&table.triple(i, j, k)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkAudit {
    pub checked: usize,
    /// Every `(i, j, k)` whose report is not dominant, with the report.
    pub failures: Vec<((usize, usize, usize), DominanceReport)>,
}

/// Checks every `(i, friend j, non-friend k)` on a symmetric model.
pub fn network_dominance_audit(model: &IsingModel) -> Result<NetworkAudit> {
    let table = exact_joint(model)?;
    let g = model.graph();
    let mut audit = NetworkAudit { checked: 0, failures: Vec::new() };
    for i in 0..g.n() {
        for &j in g.neighbors(i) {
            for k in g.non_neighbors(i) {
                if k == j {
                    continue;
                }
                let r = uniform_dominance_network_with(&table, model, i, j, k)?;
                audit.checked += 1;
                if !r.dominant {
                    audit.failures.push(((i, j, k), r));
                }
            }
        }
    }
    Ok(audit)
}

/// Majority of `i`'s neighbors' reports; ties go to `+1` and are flagged.
pub fn majority_report(graph: &Graph, reports: &[Signal], i: usize) -> Result<(Signal, bool)> {
    let nb = graph.neighbors(i);
    if nb.is_empty() {
        return Err(Error::precondition(format!("node {i} has no neighbors")));
    }
    let sum: i32 = nb.iter().map(|&j| reports[j].value()).sum();
    Ok((Signal::from_bool(sum >= 0), sum == 0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MajorityDominance {
    pub report: DominanceReport,
    /// Probability that the neighbor vote is tied.
    pub tie_probability: f64,
}

/// Dominance of the neighbor majority over non-friend `k` for node `i`.
pub fn majority_dominance_network(table: &JointTable, model: &IsingModel, i: usize, k: usize) -> Result<MajorityDominance> {
    let g = model.graph();
    if k == i || g.has_edge(i, k) || k >= g.n() {
        return Err(Error::precondition(format!("{k} is not a non-friend of {i}")));
    }
    let nb = g.neighbors(i);
    if nb.is_empty() {
        return Err(Error::precondition(format!("node {i} has no neighbors")));
    }
    let mut p = [0.0; 8];
    let mut tie = 0.0;
    for (c, &w) in table.probs().iter().enumerate() {
        let sum: i32 = nb.iter().map(|&j| if c >> j & 1 == 1 { 1 } else { -1 }).sum();
        if sum == 0 {
            tie += w;
        }
        let maj = usize::from(sum >= 0);
        p[((c >> i & 1) << 2) | (maj << 1) | (c >> k & 1)] += w;
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(MajorityDominance {
        report: is_uniformly_dominant(&TripleDistribution::new(p)?)?,
        tie_probability: tie,
    })
}
