use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::data::{NetworkDataset, RankingDataset};
use super::stats::{summarize, SummaryStats};
use crate::error::{Error, Result};
use crate::ising::{GlauberChain, IsingModel};
use crate::payments::{bpp, format_sig, AgentId};
use crate::rng::{derived, seeded};
use crate::signal::Signal;

pub const DEFAULT_TRIALS: usize = 100;

// stream tags keep the per-task seeds of different pipelines apart
const COMPARISON_STREAM: u64 = 1;
const NETWORK_STREAM: u64 = 2;
const MODEL_STREAM: u64 = 3;

/// Which reports enter the payment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Setting {
    /// Everyone reports their signal.
    Truth,
    /// Everyone reports noise independent of their signal.
    Uninformed,
    /// Only the paid agent reports a fair coin.
    Deviation,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Truth, Setting::Uninformed, Setting::Deviation];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Truth => "truth",
            Setting::Uninformed => "uninformed",
            Setting::Deviation => "deviation",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truth" => Ok(Setting::Truth),
            "uninformed" => Ok(Setting::Uninformed),
            "deviation" => Ok(Setting::Deviation),
            other => Err(Error::invalid(format!("unknown setting `{other}`"))),
        }
    }
}

/// Trial-averaged payment per agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentPayments {
    pub setting: Setting,
    pub agents: Vec<AgentId>,
    pub payments: Vec<f64>,
    /// Agents without the peers the pipeline needs.
    pub skipped: Vec<AgentId>,
    pub trials: usize,
}

impl AgentPayments {
    pub fn summary(&self) -> Result<SummaryStats> {
        summarize(&self.payments)
    }

    pub fn shifted(mut self, shift: f64) -> Self {
        self.payments.iter_mut().for_each(|p| *p += shift);
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent_id,setting,payment\n");
        self.append_rows(&mut out);
        out
    }

    /// Rows without the header.
    pub fn append_rows(&self, out: &mut String) {
        for (a, p) in self.agents.iter().zip(&self.payments) {
            out.push_str(&format!("{a},{},{}\n", self.setting, format_sig(*p, 12)));
        }
    }
}

fn coin<R: Rng + ?Sized>(rng: &mut R) -> Signal {
    Signal::from_bool(rng.random())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    Ok(())
}

/// Per agent and trial: three distinct items `a, a', a''` and two distinct
/// other agents `j, k`. Agent `i` compares `(a, a')`; the bonus signal is
/// `j`'s comparison of `(a'', a')` and the penalty signal `k`'s comparison of
/// `(a'', a)`. Payments are averaged over trials.
pub fn experiment_comparison(dataset: &RankingDataset, setting: Setting, trials: usize, seed: u64) -> Result<AgentPayments> {
    check_trials(trials)?;
    let n = dataset.n_agents();
    let m = dataset.n_items();
    if n < 3 || m < 3 {
        return Err(Error::precondition(format!("need at least 3 agents and 3 items, got {n} and {m}")));
    }
    let positions: Vec<Vec<usize>> = dataset.rankings().iter().map(|r| r.positions()).collect();
    let above = |agent: usize, a: usize, b: usize| Signal::from_bool(positions[agent][a] < positions[agent][b]);
    let payments = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut total = 0.0;
            for t in 0..trials {
                let mut rng = derived(seed, &[COMPARISON_STREAM, i as u64, t as u64]);
                let items = sample(&mut rng, m, 3);
                let (a, a1, a2) = (items.index(0), items.index(1), items.index(2));
                let peers = sample(&mut rng, n - 1, 2);
                let skip_self = |x: usize| if x >= i { x + 1 } else { x };
                let (j, k) = (skip_self(peers.index(0)), skip_self(peers.index(1)));
                let mut si = above(i, a, a1);
                let mut sj = above(j, a2, a1);
                let mut sk = above(k, a2, a);
                debug_assert_eq!(
                    crate::payments::nae(si, -sj, sk),
                    0.25 * bpp(si, sj, sk) + 0.75 + 0.25 * (sj.value() * sk.value()) as f64
                );
                match setting {
                    Setting::Truth => {}
                    Setting::Uninformed => {
                        si = coin(&mut rng);
                        sj = coin(&mut rng);
                        sk = coin(&mut rng);
                    }
                    Setting::Deviation => si = coin(&mut rng),
                }
                total += bpp(si, sj, sk);
            }
            total / trials as f64
        })
        .collect();
    Ok(AgentPayments { setting, agents: dataset.agents().to_vec(), payments, skipped: Vec::new(), trials })
}

fn random_non_friend<R: Rng + ?Sized>(graph: &crate::ising::Graph, i: usize, rng: &mut R) -> usize {
    loop {
        let k = rng.random_range(0..graph.n());
        if k != i && !graph.has_edge(i, k) {
            return k;
        }
    }
}

fn has_peers(graph: &crate::ising::Graph, i: usize) -> bool {
    let d = graph.degree(i);
    d >= 1 && d + 1 < graph.n()
}

fn network_reports<R: Rng + ?Sized>(setting: Setting, labels: [Signal; 3], prior: f64, rng: &mut R) -> [Signal; 3] {
    match setting {
        Setting::Truth => labels,
        Setting::Uninformed => [0; 3].map(|_| Signal::from_bool(rng.random::<f64>() < prior)),
        Setting::Deviation => [coin(rng), labels[1], labels[2]],
    }
}

/// Per agent and trial: a uniformly random friend `j` and non-friend `k` of
/// the fixed labels. Uninformed reports are iid with `Pr[+1]` equal to the
/// dataset prior. Agents lacking a friend or a non-friend are skipped.
pub fn experiment_network(dataset: &NetworkDataset, setting: Setting, trials: usize, seed: u64) -> Result<AgentPayments> {
    check_trials(trials)?;
    let g = dataset.graph();
    let labels = dataset.labels();
    let prior = dataset.prior();
    let (eligible, skipped): (Vec<usize>, Vec<usize>) = (0..g.n()).partition(|&i| has_peers(g, i));
    let payments = eligible
        .par_iter()
        .map(|&i| {
            let mut total = 0.0;
            for t in 0..trials {
                let mut rng = derived(seed, &[NETWORK_STREAM, i as u64, t as u64]);
                let nb = g.neighbors(i);
                let j = nb[rng.random_range(0..nb.len())];
                let k = random_non_friend(g, i, &mut rng);
                let [si, sj, sk] = network_reports(setting, [labels[i], labels[j], labels[k]], prior, &mut rng);
                total += bpp(si, sj, sk);
            }
            total / trials as f64
        })
        .collect();
    Ok(AgentPayments { setting, agents: eligible, payments, skipped, trials })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelRunConfig {
    pub trials: usize,
    pub burn_in: usize,
    /// Sweeps between the configurations used by consecutive trials.
    pub thinning: usize,
}

impl Default for ModelRunConfig {
    fn default() -> Self {
        ModelRunConfig { trials: DEFAULT_TRIALS, burn_in: 200, thinning: 10 }
    }
}

/// Like [`experiment_network`], but every trial draws a fresh label
/// configuration from the Ising model by continuing one Glauber chain.
/// Uninformed reports are fair coins (the symmetric model's prior).
pub fn experiment_network_model(model: &IsingModel, setting: Setting, config: &ModelRunConfig, seed: u64) -> Result<AgentPayments> {
    check_trials(config.trials)?;
    if config.burn_in == 0 || config.thinning == 0 {
        return Err(Error::invalid("burn-in and thinning must be at least 1"));
    }
    let g = model.graph();
    let (eligible, skipped): (Vec<usize>, Vec<usize>) = (0..g.n()).partition(|&i| has_peers(g, i));
    let mut chain_rng = seeded(crate::rng::derive_seed(seed, &[MODEL_STREAM]));
    let mut chain = GlauberChain::new(model, &mut chain_rng);
    for _ in 0..config.burn_in {
        chain.sweep(&mut chain_rng);
    }
    let mut totals = vec![0.0; eligible.len()];
    for t in 0..config.trials {
        if t > 0 {
            for _ in 0..config.thinning {
                chain.sweep(&mut chain_rng);
            }
        }
        let labels = chain.state();
        let trial: Vec<f64> = eligible
            .par_iter()
            .map(|&i| {
                let mut rng = derived(seed, &[MODEL_STREAM, i as u64, t as u64]);
                let nb = g.neighbors(i);
                let j = nb[rng.random_range(0..nb.len())];
                let k = random_non_friend(g, i, &mut rng);
                let [si, sj, sk] = network_reports(setting, [labels[i], labels[j], labels[k]], 0.5, &mut rng);
                bpp(si, sj, sk)
            })
            .collect();
        totals.iter_mut().zip(trial).for_each(|(acc, x)| *acc += x);
    }
    let payments = totals.into_iter().map(|x| x / config.trials as f64).collect();
    Ok(AgentPayments { setting, agents: eligible, payments, skipped, trials: config.trials })
}
