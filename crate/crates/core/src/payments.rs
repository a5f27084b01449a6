//! The bonus-penalty payment, its transitivity reading, admissible
//! assignments and peer selection for comparison and network data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ising::Graph;
use crate::signal::Signal;
use crate::sst::ItemId;

pub type AgentId = usize;

/// `s_i s_j - s_i s_k`: rewards agreement with the bonus peer `j` and
/// penalizes agreement with the penalty peer `k`.
pub fn bpp(si: Signal, sj: Signal, sk: Signal) -> f64 {
    (si.value() * sj.value() - si.value() * sk.value()) as f64
}

/// [`bpp`] on raw integers; rejects anything outside `{-1, 1}`.
pub fn bpp_checked(si: i32, sj: i32, sk: i32) -> Result<f64> {
    Ok(bpp(si.try_into()?, sj.try_into()?, sk.try_into()?))
}

/// Not-all-equal indicator, `3/4 - (w1 w2 + w1 w3 + w2 w3) / 4`.
pub fn nae(w1: Signal, w2: Signal, w3: Signal) -> f64 {
    let (a, b, c) = (w1.value(), w2.value(), w3.value());
    0.75 - 0.25 * (a * b + a * c + b * c) as f64
}

/// Ordered pair `(u, v)`; a `+1` signal means `u` is preferred.
pub type ItemPair = (ItemId, ItemId);

/// Agent-to-pair assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    entries: BTreeMap<AgentId, ItemPair>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, agent: AgentId, pair: ItemPair) -> Result<()> {
        if pair.0 == pair.1 {
            return Err(Error::invalid(format!("agent {agent} assigned degenerate pair {pair:?}")));
        }
        if self.entries.insert(agent, pair).is_some() {
            return Err(Error::invalid(format!("agent {agent} assigned twice")));
        }
        Ok(())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (AgentId, ItemPair)>) -> Result<Self> {
        let mut a = Self::new();
        for (agent, pair) in pairs {
            a.insert(agent, pair)?;
        }
        Ok(a)
    }

    /// One agent per pair, numbered in set order.
    pub fn one_agent_per_pair(pairs: &BTreeSet<ItemPair>) -> Self {
        Assignment {
            entries: pairs.iter().copied().enumerate().collect(),
        }
    }

    pub fn get(&self, agent: AgentId) -> Option<ItemPair> {
        self.entries.get(&agent).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, ItemPair)> + '_ {
        self.entries.iter().map(|(&a, &p)| (a, p))
    }

    pub fn pair_set(&self) -> BTreeSet<ItemPair> {
        self.entries.values().copied().collect()
    }

    /// Reads `agent_id,item_u,item_v` rows.
    pub fn load(path: &Path) -> Result<Self> {
        let rows = read_int_rows(path, 3)?;
        let mut a = Self::new();
        for (line, r) in rows {
            a.insert(r[0] as usize, (r[1] as usize, r[2] as usize))
                .map_err(|e| Error::Parse { path: path.into(), line, message: e.to_string() })?;
        }
        Ok(a)
    }
}

/// Reads CSV rows of exactly `width` integers, skipping `#` comments and a
/// non-numeric header row.
pub(crate) fn read_int_rows(path: &Path, width: usize) -> Result<Vec<(u64, Vec<i64>)>> {
    read_int_records(path, Some(width))
}

/// Integer CSV rows with their line numbers. A non-numeric first row is
/// treated as a header; `#` lines are comments.
pub(crate) fn read_int_records(path: &Path, width: Option<usize>) -> Result<Vec<(u64, Vec<i64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(idx as u64 + 1, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<i64>, _> = rec.iter().map(|f| f.parse::<i64>()).collect();
        match parsed {
            Ok(vals) => {
                if let Some(width) = width {
                    if vals.len() != width {
                        return Err(Error::Parse {
                            path: path.into(),
                            line,
                            message: format!("expected {width} fields, found {}", vals.len()),
                        });
                    }
                }
                out.push((line, vals));
            }
            // header row
            Err(_) if out.is_empty() && idx == 0 => {}
            Err(e) => {
                return Err(Error::Parse { path: path.into(), line, message: e.to_string() });
            }
        }
    }
    Ok(out)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.into(), source },
        other => Error::Parse { path: path.into(), line, message: format!("{other:?}") },
    }
}

/// First pair without a pivot, if any: admissibility requires for every
/// `(a, a')` some `a''` with both `(a'', a')` and `(a'', a)` present.
pub fn check_admissible(pairs: &BTreeSet<ItemPair>) -> Option<ItemPair> {
    pairs.iter().copied().find(|&(a, a1)| find_pivots(pairs, a, a1).next().is_none())
}

fn find_pivots(pairs: &BTreeSet<ItemPair>, a: ItemId, a1: ItemId) -> impl Iterator<Item = ItemId> + '_ {
    pairs
        .iter()
        .filter(move |&&(x, y)| y == a1 && x != a)
        .map(|&(x, _)| x)
        .filter(move |&x| pairs.contains(&(x, a)))
}

/// Admissible superset of `base`: each pair without a pivot in `base` is
/// closed with some `a'' != a, a'` into all six ordered pairs on
/// `{a, a', a''}`. The pivot is the smallest valid index, or uniform when
/// `rng` is given. Admissible input comes back unchanged.
pub fn make_admissible<R: Rng + ?Sized>(
    base: &BTreeSet<ItemPair>,
    n_items: usize,
    mut rng: Option<&mut R>,
) -> Result<BTreeSet<ItemPair>> {
    if n_items < 3 {
        return Err(Error::invalid("admissible assignments need at least three items"));
    }
    let mut out = base.clone();
    for &(a, a1) in base {
        if a == a1 || a >= n_items || a1 >= n_items {
            return Err(Error::invalid(format!("pair ({a}, {a1}) invalid for {n_items} items")));
        }
        // closing only adds pairs, so existing pivots survive
        if find_pivots(base, a, a1).next().is_some() {
            continue;
        }
        let candidates: Vec<ItemId> = (0..n_items).filter(|&x| x != a && x != a1).collect();
        let pivot = match rng.as_deref_mut() {
            Some(r) => *candidates.choose(r).expect("at least one candidate"),
            None => candidates[0],
        };
        for p in [(a, a1), (a1, a), (a, pivot), (pivot, a), (a1, pivot), (pivot, a1)] {
            out.insert(p);
        }
    }
    Ok(out)
}

/// One scoring tuple for agent `i`: bonus peer `j`, penalty peer `k`, and for
/// comparison data the pivot item.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeerTuple {
    pub bonus: AgentId,
    pub penalty: AgentId,
    pub pivot: Option<ItemId>,
}

/// Tie-break rule for peer selection.
pub enum SelectionMode<'a, R: Rng + ?Sized> {
    /// Smallest pivot, then smallest agent ids.
    Deterministic,
    /// Uniform among all valid tuples.
    Seeded(&'a mut R),
}

impl<R: Rng + ?Sized> SelectionMode<'_, R> {
    fn pick<T: Copy>(&mut self, options: &[T]) -> Option<T> {
        match self {
            SelectionMode::Deterministic => options.first().copied(),
            SelectionMode::Seeded(rng) => options.choose(*rng).copied(),
        }
    }
}

pub fn deterministic() -> SelectionMode<'static, crate::rng::SeededRng> {
    SelectionMode::Deterministic
}

/// Finds `(j, k, a'')` with `e_j = (a'', a')` and `e_k = (a'', a)` for the
/// agent holding `e_i = (a, a')`. `j` and `k` always differ from `i`.
pub fn select_peers_comparison<R: Rng + ?Sized>(
    assignment: &Assignment,
    agent: AgentId,
    mode: &mut SelectionMode<'_, R>,
) -> Result<PeerTuple> {
    let (a, a1) = assignment
        .get(agent)
        .ok_or_else(|| Error::invalid(format!("agent {agent} has no assigned pair")))?;
    let mut holders: BTreeMap<ItemPair, Vec<AgentId>> = BTreeMap::new();
    for (other, pair) in assignment.iter() {
        if other != agent {
            holders.entry(pair).or_default().push(other);
        }
    }
    let mut tuples = Vec::new();
    let pivots: BTreeSet<ItemId> = holders.keys().filter(|&&(_, y)| y == a1).map(|&(x, _)| x).collect();
    for pivot in pivots {
        if pivot == a {
            continue;
        }
        let (Some(js), Some(ks)) = (holders.get(&(pivot, a1)), holders.get(&(pivot, a))) else {
            continue;
        };
        for &j in js {
            for &k in ks {
                tuples.push(PeerTuple { bonus: j, penalty: k, pivot: Some(pivot) });
            }
        }
    }
    mode.pick(&tuples).ok_or_else(|| {
        Error::precondition(format!("no pivot with assigned peers for agent {agent} holding ({a}, {a1})"))
    })
}

/// Finds a friend `j` and a non-friend `k != i` of node `i`.
pub fn select_peers_network<R: Rng + ?Sized>(
    graph: &Graph,
    agent: AgentId,
    mode: &mut SelectionMode<'_, R>,
) -> Result<PeerTuple> {
    if agent >= graph.n() {
        return Err(Error::invalid(format!("node {agent} not in graph")));
    }
    let friends = graph.neighbors(agent);
    let strangers = graph.non_neighbors(agent);
    if friends.is_empty() {
        return Err(Error::precondition(format!("node {agent} has no friends")));
    }
    if strangers.is_empty() {
        return Err(Error::precondition(format!("node {agent} has no non-friends")));
    }
    let j = mode.pick(friends).expect("nonempty");
    let k = mode.pick(&strangers).expect("nonempty");
    Ok(PeerTuple { bonus: j, penalty: k, pivot: None })
}

/// Scoring tuples per agent; payments average over an agent's tuples.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PeerSelection {
    pub entries: BTreeMap<AgentId, Vec<PeerTuple>>,
}

impl PeerSelection {
    pub fn insert(&mut self, agent: AgentId, tuple: PeerTuple) {
        self.entries.entry(agent).or_default().push(tuple);
    }

    /// One tuple per agent for a whole assignment.
    pub fn for_assignment<R: Rng + ?Sized>(assignment: &Assignment, mode: &mut SelectionMode<'_, R>) -> Result<Self> {
        let mut sel = PeerSelection::default();
        for (agent, _) in assignment.iter() {
            sel.insert(agent, select_peers_comparison(assignment, agent, mode)?);
        }
        Ok(sel)
    }

    /// One tuple per node of a graph.
    pub fn for_graph<R: Rng + ?Sized>(graph: &Graph, mode: &mut SelectionMode<'_, R>) -> Result<Self> {
        let mut sel = PeerSelection::default();
        for agent in 0..graph.n() {
            sel.insert(agent, select_peers_network(graph, agent, mode)?);
        }
        Ok(sel)
    }
}

/// Payment per agent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PaymentVector {
    pub payments: BTreeMap<AgentId, f64>,
}

impl PaymentVector {
    pub fn values(&self) -> Vec<f64> {
        self.payments.values().copied().collect()
    }

    /// Adds a constant to every payment.
    pub fn shifted(&self, shift: f64) -> Self {
        PaymentVector {
            payments: self.payments.iter().map(|(&a, &p)| (a, p + shift)).collect(),
        }
    }

    /// `agent_id,payment` rows with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("agent_id,payment\n");
        for (a, p) in &self.payments {
            s.push_str(&format!("{a},{}\n", format_sig(*p, 12)));
        }
        s
    }
}

/// `M_i = (1 / l_i) sum_l bpp(r_i, r_{j_l}, r_{k_l})`.
pub fn pay_all(reports: &BTreeMap<AgentId, Signal>, selection: &PeerSelection) -> Result<PaymentVector> {
    let get = |a: AgentId| {
        reports
            .get(&a)
            .copied()
            .ok_or_else(|| Error::invalid(format!("missing report for agent {a}")))
    };
    let mut out = PaymentVector::default();
    for (&agent, tuples) in &selection.entries {
        if tuples.is_empty() {
            return Err(Error::invalid(format!("agent {agent} has no scoring tuples")));
        }
        let ri = get(agent)?;
        let mut total = 0.0;
        for t in tuples {
            total += bpp(ri, get(t.bonus)?, get(t.penalty)?);
        }
        out.payments.insert(agent, total / tuples.len() as f64);
    }
    Ok(out)
}

/// Reads `agent_id,report` rows with reports in `{-1, 1}`.
pub fn load_reports(path: &Path) -> Result<BTreeMap<AgentId, Signal>> {
    let mut out = BTreeMap::new();
    for (line, r) in read_int_rows(path, 2)? {
        let err = |message: String| Error::Parse { path: path.into(), line, message };
        if r[0] < 0 {
            return Err(err(format!("negative agent id {}", r[0])));
        }
        let s = Signal::try_from(r[1] as i32).map_err(|e| err(e.to_string()))?;
        if out.insert(r[0] as usize, s).is_some() {
            return Err(err(format!("duplicate report for agent {}", r[0])));
        }
    }
    Ok(out)
}

/// `%.{digits}g`-style formatting.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}
