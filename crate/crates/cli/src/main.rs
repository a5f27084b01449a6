use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bpp_core::dominance::{is_uniformly_dominant, triple_from_model, TripleDistribution, TripleMode};
use bpp_core::harness::{
    dominance_test, experiment_comparison, experiment_network, experiment_network_model, AgentPayments, Ecdf,
    ModelRunConfig, NetworkDataset, RankingDataset, Setting, DEFAULT_TRIALS,
};
use bpp_core::ising::{
    glauber_sample, network_dominance_audit, degree_condition, dary_upper_bound, Graph, IsingModel,
    MAX_EXACT_NODES,
};
use bpp_core::payments::{format_sig, load_reports, pay_all, Assignment, PeerSelection, SelectionMode};
use bpp_core::rng::{derive_seed, seeded};
use bpp_core::sst::{check_sst, check_weak_st, pairwise_matrix, sample_theta, ModelConfig, PairwiseMatrix, TransitivityCheck};
use bpp_core::strategies::classify_symmetric_equilibria;
use bpp_core::uniqueness::{uniqueness_search, PaymentFunction, SearchConfig, SearchOutcome, WITNESS_GRID};

#[derive(Parser)]
#[command(name = "bpp", version, about = "Bonus-penalty peer prediction toolkit")]
struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Trials per agent for experiments.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Sample comparison functions from a model config and print them.
    Model {
        #[arg(long)]
        config: PathBuf,
        /// Number of states to draw.
        #[arg(long, default_value_t = 1)]
        states: usize,
    },
    /// Check strong (and weak) stochastic transitivity.
    CheckSst {
        /// Model config; sampled states are checked.
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        config: Option<PathBuf>,
        /// Square CSV matrix of win probabilities `p(a beats b)`.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        states: usize,
    },
    /// Uniform dominance of a signal triple.
    CheckUd {
        /// File with eight probabilities.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        triple: Option<PathBuf>,
        #[arg(long, requires = "items")]
        config: Option<PathBuf>,
        /// Items `a,a',a''` for the model triple.
        #[arg(long, value_parser = parse_triple_items)]
        items: Option<(usize, usize, usize)>,
        /// Monte Carlo samples; exact when omitted.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Pay every agent from their reports.
    Pay {
        #[arg(long)]
        reports: PathBuf,
        /// `agent_id,item_u,item_v` assignment (comparison data).
        #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
        assignment: Option<PathBuf>,
        /// Edge list (network data).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Pick peers uniformly (seeded) instead of the smallest valid ids.
        #[arg(long)]
        random_peers: bool,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        shift: f64,
    },
    /// Classify symmetric equilibria of a triple over a strategy grid.
    Equilibria {
        #[arg(long)]
        triple: PathBuf,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Degree condition, bounds, dominance audit or samples of an Ising model.
    Ising {
        #[command(flatten)]
        model: IsingArgs,
        /// Print this many Glauber samples instead of the summary.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 200)]
        burn_in: usize,
    },
    Uniqueness {
        #[command(subcommand)]
        command: UniquenessCommand,
    },
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// ECDF points of an `agent_id,setting,payment` file, per setting.
    Ecdf {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum UniquenessCommand {
    /// Certify a payment function as affine BPP or find a counterexample.
    Audit {
        #[arg(long)]
        payment: PathBuf,
        /// Random dominant distributions tried after the witness families.
        #[arg(long, default_value_t = 1000)]
        random_draws: usize,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Rankings dataset (or synthetic Mallows rankings).
    Comparison {
        #[arg(long, required_unless_present = "synthetic_agents")]
        rankings: Option<PathBuf>,
        #[arg(long, conflicts_with = "rankings", requires = "items")]
        synthetic_agents: Option<usize>,
        #[arg(long)]
        items: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[command(flatten)]
        common: ExperimentArgs,
    },
    /// Fixed labels on a graph, or fresh Ising draws when no labels are given.
    Network {
        #[command(flatten)]
        model: IsingArgs,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Uninformed report probability of +1 (default: label fraction).
        #[arg(long)]
        prior: Option<f64>,
        #[arg(long, default_value_t = 200)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        thinning: usize,
        #[command(flatten)]
        common: ExperimentArgs,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Settings to run; all three by default.
    #[arg(long, value_delimiter = ',', default_value = "truth,uninformed,deviation")]
    settings: Vec<Setting>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    shift: f64,
}

#[derive(Args)]
struct IsingArgs {
    /// Edge list `u,v`.
    #[arg(long)]
    graph: PathBuf,
    /// Node count when isolated nodes trail the edge list.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Coupling override `u,v,value`; repeatable.
    #[arg(long, value_parser = parse_edge_override)]
    beta_edge: Vec<(usize, usize, f64)>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
}

impl IsingArgs {
    fn build(&self) -> anyhow::Result<IsingModel> {
        let graph = Graph::load(&self.graph, self.nodes)?;
        let overrides: BTreeMap<_, _> = self.beta_edge.iter().map(|&(u, v, b)| ((u.min(v), u.max(v)), b)).collect();
        Ok(IsingModel::with_overrides(graph, self.beta, &overrides, self.alpha)?)
    }
}

fn parse_triple_items(s: &str) -> Result<(usize, usize, usize), String> {
    let v: Vec<usize> = s.split(',').map(|x| x.trim().parse().map_err(|e| format!("{e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err("expected three comma-separated items".into()),
    }
}

fn parse_edge_override(s: &str) -> Result<(usize, usize, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [u, v, b] = parts[..] else {
        return Err("expected u,v,value".into());
    };
    let node = |x: &str| x.parse::<usize>().map_err(|e| format!("node `{x}`: {e}"));
    Ok((node(u)?, node(v)?, b.parse().map_err(|e| format!("value `{b}`: {e}"))?))
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: &Path) -> anyhow::Result<ModelConfig> {
    ModelConfig::parse(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_matrix(path: &Path) -> anyhow::Result<PairwiseMatrix> {
    let mut rows = Vec::new();
    for (idx, line) in read(path)?.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|x| x.trim().parse::<f64>().map(|p| 2.0 * p - 1.0))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bpp_core::Error::Parse { path: path.into(), line: idx as u64 + 1, message: e.to_string() })?;
        rows.push(row);
    }
    Ok(PairwiseMatrix::from_rows(rows)?)
}

fn sst_line(check: TransitivityCheck) -> String {
    match check {
        TransitivityCheck::Pass => "pass".into(),
        TransitivityCheck::Witness(a, b, c) => format!("{a}>{b}>{c}"),
    }
}

fn run(cli: Cli) -> anyhow::Result<String> {
    let Format::Csv = cli.format;
    let seed = cli.seed;
    let mut out = String::new();
    match cli.command {
        Command::Model { config, states } => {
            let cfg = load_config(&config)?;
            let mut rng = seeded(derive_seed(seed, &[cfg.seed]));
            out.push_str("state,a,b,prob\n");
            for s in 0..states {
                let q = pairwise_matrix(&cfg.model, &sample_theta(&cfg.model, &mut rng))?;
                for a in 0..q.n_items() {
                    for b in (0..q.n_items()).filter(|&b| b != a) {
                        out.push_str(&format!("{s},{a},{b},{}\n", format_sig(q.prob(a, b), 12)));
                    }
                }
            }
        }
        Command::CheckSst { config, matrix, states } => {
            out.push_str("state,sst,weak_st\n");
            let mut push = |s: usize, q: &PairwiseMatrix| {
                out.push_str(&format!("{s},{},{}\n", sst_line(check_sst(q)), sst_line(check_weak_st(q))));
            };
            if let Some(path) = matrix {
                push(0, &load_matrix(&path)?);
            } else if let Some(path) = config {
                let cfg = load_config(&path)?;
                let mut rng = seeded(derive_seed(seed, &[cfg.seed]));
                for s in 0..states {
                    push(s, &pairwise_matrix(&cfg.model, &sample_theta(&cfg.model, &mut rng))?);
                }
            }
        }
        Command::CheckUd { triple, config, items, samples } => {
            let (dist, n) = match (triple, config, items) {
                (Some(path), _, _) => (TripleDistribution::parse_csv(&read(&path)?)?, None),
                (None, Some(path), Some(items)) => {
                    let cfg = load_config(&path)?;
                    let mode = samples.map_or(TripleMode::Exact, |samples| TripleMode::MonteCarlo { samples });
                    let est = triple_from_model(&cfg.model, items, mode, &mut seeded(derive_seed(seed, &[cfg.seed])))?;
                    (est.dist, est.samples)
                }
                _ => bail!(bpp_core::Error::Invalid("need --triple or --config with --items".into())),
            };
            let r = is_uniformly_dominant(&dist)?;
            out.push_str("delta_plus,delta_minus,dominant,samples\n");
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_sig(r.delta_plus, 12),
                format_sig(r.delta_minus, 12),
                r.dominant,
                n.map_or("exact".to_string(), |n| n.to_string())
            ));
        }
        Command::Pay { reports, assignment, graph, random_peers, shift } => {
            let reports = load_reports(&reports)?;
            let mut rng = seeded(seed);
            let mut mode = if random_peers { SelectionMode::Seeded(&mut rng) } else { SelectionMode::Deterministic };
            let selection = match (assignment, graph) {
                (Some(path), _) => PeerSelection::for_assignment(&Assignment::load(&path)?, &mut mode)?,
                (None, Some(path)) => PeerSelection::for_graph(&Graph::load(&path, None)?, &mut mode)?,
                (None, None) => bail!(bpp_core::Error::Invalid("need --assignment or --graph".into())),
            };
            out = pay_all(&reports, &selection)?.shifted(shift).to_csv();
        }
        Command::Equilibria { triple, resolution } => {
            let p = TripleDistribution::parse_csv(&read(&triple)?)?;
            out = classify_symmetric_equilibria(&p, resolution)?.to_csv();
        }
        Command::Ising { model, samples, burn_in } => {
            let m = model.build()?;
            if let Some(sweeps) = samples {
                let draws = glauber_sample(&m, sweeps, burn_in, &mut seeded(seed))?;
                out.push_str("sample,node,label\n");
                for (s, x) in draws.iter().enumerate() {
                    for (v, l) in x.iter().enumerate() {
                        out.push_str(&format!("{s},{v},{l}\n"));
                    }
                }
            } else {
                let g = m.graph();
                let d = g.max_degree().max(1);
                let cond = degree_condition(m.beta_min(), m.beta_max(), d)?;
                let bound = dary_upper_bound(m.beta_max(), d)?;
                let (checked, failures) = if m.n() <= MAX_EXACT_NODES {
                    let audit = network_dominance_audit(&m)?;
                    (audit.checked.to_string(), audit.failures.len().to_string())
                } else {
                    ("NA".into(), "NA".into())
                };
                out.push_str("nodes,edges,max_degree,lhs,rhs,condition_holds,dary_bound,tuples_checked,tuples_failing\n");
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{checked},{failures}\n",
                    g.n(),
                    g.edges().len(),
                    g.max_degree(),
                    format_sig(cond.lhs, 12),
                    format_sig(cond.rhs, 12),
                    cond.holds,
                    format_sig(bound, 12)
                ));
            }
        }
        Command::Uniqueness { command: UniquenessCommand::Audit { payment, random_draws } } => {
            let u = PaymentFunction::load(&payment)?;
            let config = SearchConfig { grid: &WITNESS_GRID, random_draws, ..SearchConfig::default() };
            out.push_str("verdict,detail\n");
            match uniqueness_search(&u, &config, &mut seeded(seed))? {
                SearchOutcome::Certificate(c) => {
                    let mu = c.mu.iter().map(|x| format_sig(*x, 12)).collect::<Vec<_>>().join(" ");
                    out.push_str(&format!("affine_bpp,lambda={} mu={mu}\n", format_sig(c.lambda, 12)));
                }
                SearchOutcome::Counterexample { family, parameter, distribution, audit } => {
                    out.push_str(&format!(
                        "counterexample,family={family} parameter={} gain={}/{} p={}\n",
                        format_sig(parameter, 12),
                        format_sig(audit.gain[0], 12),
                        format_sig(audit.gain[1], 12),
                        distribution.to_csv().replace(',', " ")
                    ));
                }
                SearchOutcome::Inconclusive { tested } => out.push_str(&format!("inconclusive,tested={tested}\n")),
            }
        }
        Command::Experiment { command } => {
            let (settings, shift, run): (_, _, Box<dyn Fn(Setting) -> bpp_core::Result<AgentPayments>>) = match command {
                ExperimentCommand::Comparison { rankings, synthetic_agents, items, eta, common } => {
                    let ds = match (rankings, synthetic_agents, items) {
                        (Some(path), _, _) => RankingDataset::load(&path)?,
                        (None, Some(agents), Some(items)) => {
                            let mut rng = seeded(derive_seed(seed, &[u64::MAX]));
                            RankingDataset::synthetic_mallows(agents, items, eta, &mut rng)?
                        }
                        _ => bail!(bpp_core::Error::Invalid("need --rankings or --synthetic-agents with --items".into())),
                    };
                    let trials = cli.trials;
                    (common.settings, common.shift, Box::new(move |s| experiment_comparison(&ds, s, trials, seed)))
                }
                ExperimentCommand::Network { model, labels, prior, burn_in, thinning, common } => {
                    if let Some(labels) = labels {
                        let mut ds = NetworkDataset::load(&model.graph, &labels)?;
                        if let Some(p) = prior {
                            ds = ds.with_prior(p)?;
                        }
                        let trials = cli.trials;
                        (common.settings, common.shift, Box::new(move |s| experiment_network(&ds, s, trials, seed)))
                    } else {
                        if prior.is_some() {
                            bail!(bpp_core::Error::Invalid("--prior applies only with --labels".into()));
                        }
                        let m = model.build()?;
                        let cfg = ModelRunConfig { trials: cli.trials, burn_in, thinning };
                        (common.settings, common.shift, Box::new(move |s| experiment_network_model(&m, s, &cfg, seed)))
                    }
                }
            };
            out.push_str("agent_id,setting,payment\n");
            for s in settings {
                run(s)?.shifted(shift).append_rows(&mut out);
            }
        }
        Command::Ecdf { input } => {
            let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&input)?;
            let headers = rdr.headers()?.clone();
            let col = |name: &str| headers.iter().position(|h| h == name);
            let pay = col("payment").ok_or_else(|| bpp_core::Error::Invalid("input has no `payment` column".into()))?;
            let set = col("setting");
            for (idx, rec) in rdr.records().enumerate() {
                let rec = rec?;
                let line = idx as u64 + 2;
                let x: f64 = rec[pay].parse().map_err(|e: std::num::ParseFloatError| bpp_core::Error::Parse {
                    path: input.clone(),
                    line,
                    message: e.to_string(),
                })?;
                let key = set.map_or("all".to_string(), |c| rec[c].to_string());
                groups.entry(key).or_default().push(x);
            }
            let ecdfs: BTreeMap<String, Ecdf> =
                groups.into_iter().map(|(k, v)| Ok((k, Ecdf::new(v)?))).collect::<bpp_core::Result<_>>()?;
            out.push_str("setting,value,cdf\n");
            for (k, e) in &ecdfs {
                for (x, f) in e.points() {
                    out.push_str(&format!("{k},{},{}\n", format_sig(x, 12), format_sig(f, 12)));
                }
            }
            if let Some(truth) = ecdfs.get("truth") {
                for (k, e) in ecdfs.iter().filter(|(k, _)| k.as_str() != "truth") {
                    eprintln!("truth dominates {k}: {}", dominance_test(truth, e).dominated());
                }
            }
        }
    }
    Ok(out)
}

fn is_validation(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<bpp_core::Error>().is_some_and(bpp_core::Error::is_validation)
            || c.downcast_ref::<csv::Error>().is_some_and(|e| !e.is_io_error())
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let output = cli.output.clone();
    let result = run(cli).and_then(|text| match &output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_validation(&e) { 1 } else { 2 })
        }
    }
}
