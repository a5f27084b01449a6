use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ising::{glauber_sample, Graph, IsingModel};
use crate::payments::{read_int_records, read_int_rows, AgentId};
use crate::signal::Signal;
use crate::sst::{sample_mallows_ranking, ItemId, Ranking};

/// One complete ranking per agent over a shared item universe.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingDataset {
    agents: Vec<AgentId>,
    rankings: Vec<Ranking>,
    n_items: usize,
}

impl RankingDataset {
    pub fn new(agents: Vec<AgentId>, rankings: Vec<Ranking>) -> Result<Self> {
        if agents.len() != rankings.len() {
            return Err(Error::invalid("one ranking per agent required"));
        }
        let n_items = rankings.first().map_or(0, Ranking::len);
        if rankings.iter().any(|r| r.len() != n_items) {
            return Err(Error::invalid("rankings cover different item sets"));
        }
        let unique: BTreeSet<_> = agents.iter().collect();
        if unique.len() != agents.len() {
            return Err(Error::invalid("duplicate agent id"));
        }
        Ok(RankingDataset { agents, rankings, n_items })
    }

    /// Rows `agent_id,item_0,item_1,...`, items best-to-worst.
    pub fn load(path: &Path) -> Result<Self> {
        let rows = read_int_records(path, None)?;
        let mut agents = Vec::with_capacity(rows.len());
        let mut rankings = Vec::with_capacity(rows.len());
        let mut seen = BTreeSet::new();
        let mut width = None;
        for (line, row) in rows {
            let err = |message: String| Error::Parse { path: path.into(), line, message };
            if row.len() < 2 {
                return Err(err("row needs an agent id and at least one item".into()));
            }
            if *width.get_or_insert(row.len()) != row.len() {
                return Err(err(format!("expected {} items, found {}", width.unwrap_or(0) - 1, row.len() - 1)));
            }
            if row[0] < 0 {
                return Err(err(format!("negative agent id {}", row[0])));
            }
            if !seen.insert(row[0]) {
                return Err(err(format!("duplicate agent id {}", row[0])));
            }
            let m = row.len() - 1;
            let mut items = Vec::with_capacity(m);
            let mut used = vec![false; m];
            for &v in &row[1..] {
                if v < 0 || v as usize >= m {
                    return Err(err(format!("item {v} outside 0..{m}")));
                }
                if std::mem::replace(&mut used[v as usize], true) {
                    return Err(err(format!("item {v} repeated")));
                }
                items.push(v as ItemId);
            }
            agents.push(row[0] as AgentId);
            rankings.push(Ranking::from_order(items).map_err(|e| err(e.to_string()))?);
        }
        Self::new(agents, rankings)
    }

    /// Agents draw independent Mallows rankings around one uniformly random
    /// reference.
    pub fn synthetic_mallows<R: Rng + ?Sized>(n_agents: usize, n_items: usize, eta: f64, rng: &mut R) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid(format!("eta = {eta} must be finite and nonnegative")));
        }
        let mut order: Vec<ItemId> = (0..n_items).collect();
        order.shuffle(rng);
        let reference = Ranking::from_order(order)?;
        let rankings = (0..n_agents).map(|_| sample_mallows_ranking(eta, &reference, rng)).collect();
        Self::new((0..n_agents).collect(), rankings)
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Keeps the agents for which `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(AgentId, &Ranking) -> bool) -> Self {
        let (agents, rankings) = self
            .agents
            .iter()
            .zip(&self.rankings)
            .filter(|(a, r)| keep(**a, r))
            .map(|(a, r)| (*a, r.clone()))
            .unzip();
        RankingDataset { agents, rankings, n_items: self.n_items }
    }

    /// `p[a][b]`: fraction of rankings placing `a` above `b`.
    pub fn preference_matrix(&self) -> Vec<Vec<f64>> {
        let m = self.n_items;
        let mut counts = vec![vec![0usize; m]; m];
        for r in &self.rankings {
            let order = r.order();
            for (x, &a) in order.iter().enumerate() {
                for &b in &order[x + 1..] {
                    counts[a][b] += 1;
                }
            }
        }
        let n = self.rankings.len().max(1) as f64;
        counts.into_iter().map(|row| row.into_iter().map(|c| c as f64 / n).collect()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (a, r) in self.agents.iter().zip(&self.rankings) {
            out.push_str(&a.to_string());
            for item in r.order() {
                out.push_str(&format!(",{item}"));
            }
            out.push('\n');
        }
        out
    }
}

/// A social graph with one binary label per node.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkDataset {
    graph: Graph,
    labels: Vec<Signal>,
    prior: f64,
    /// Set when labels were read as `{0, 1}` and mapped to `{-1, 1}`.
    pub labels_remapped: bool,
}

impl NetworkDataset {
    /// The prior defaults to the fraction of `+1` labels.
    pub fn new(graph: Graph, labels: Vec<Signal>) -> Result<Self> {
        if labels.len() != graph.n() {
            return Err(Error::invalid(format!("{} labels for {} nodes", labels.len(), graph.n())));
        }
        let prior = if labels.is_empty() {
            0.5
        } else {
            labels.iter().filter(|&&s| s == Signal::Pos).count() as f64 / labels.len() as f64
        };
        Ok(NetworkDataset { graph, labels, prior, labels_remapped: false })
    }

    pub fn with_prior(mut self, prior: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prior) {
            return Err(Error::invalid(format!("prior {prior} outside [0, 1]")));
        }
        self.prior = prior;
        Ok(self)
    }

    /// Edge CSV `u,v` and label CSV `agent_id,label` with labels in
    /// `{-1, 1}` or `{0, 1}`; every node needs a label.
    pub fn load(edge_path: &Path, label_path: &Path) -> Result<Self> {
        let rows = read_int_rows(label_path, 2)?;
        let mut raw = std::collections::BTreeMap::new();
        for (line, r) in &rows {
            let err = |message: String| Error::Parse { path: label_path.into(), line: *line, message };
            if r[0] < 0 {
                return Err(err(format!("negative agent id {}", r[0])));
            }
            if !matches!(r[1], -1..=1) {
                return Err(err(format!("label {} outside {{-1, 1}}", r[1])));
            }
            if raw.insert(r[0] as usize, r[1]).is_some() {
                return Err(err(format!("duplicate label for agent {}", r[0])));
            }
        }
        let has_zero = raw.values().any(|&v| v == 0);
        if has_zero && raw.values().any(|&v| v == -1) {
            return Err(Error::Parse {
                path: label_path.into(),
                line: 0,
                message: "labels mix {0, 1} and {-1, 1} encodings".into(),
            });
        }
        let n_labels = raw.keys().next_back().map_or(0, |&k| k + 1);
        let graph = Graph::load(edge_path, Some(n_labels))?;
        let mut labels = Vec::with_capacity(graph.n());
        for node in 0..graph.n() {
            let v = *raw.get(&node).ok_or_else(|| Error::Parse {
                path: label_path.into(),
                line: 0,
                message: format!("no label for node {node}"),
            })?;
            labels.push(Signal::from_bool(v == 1));
        }
        let mut ds = Self::new(graph, labels)?;
        ds.labels_remapped = has_zero;
        Ok(ds)
    }

    /// Labels from one Glauber configuration after `burn_in` sweeps.
    pub fn synthetic_ising<R: Rng + ?Sized>(model: &IsingModel, burn_in: usize, rng: &mut R) -> Result<Self> {
        let mut samples = glauber_sample(model, 1, burn_in, rng)?;
        Self::new(model.graph().clone(), samples.pop().expect("one sample"))
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn labels(&self) -> &[Signal] {
        &self.labels
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }
}
