//! Bayesian comparison models with strong stochastic transitivity.
//!
//! A model is a prior over a latent state `theta` together with, for every
//! state, the probability that item `a` is preferred to item `a'`. Comparisons
//! are conditionally independent given `theta`. Signals use the convention
//! `+1` = "first item preferred".

use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Normal, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::signal::Signal;

pub type ItemId = usize;

/// Largest item universe accepted by dense pairwise storage.
pub const MAX_ITEMS: usize = 10_000;

/// Largest ranking universe enumerated exactly (7! = 5040 states).
pub const MAX_EXACT_RANKING_ITEMS: usize = 7;

const LINK_SYMMETRY_TOL: f64 = 1e-10;

/// Dense antisymmetric matrix of conditional expected comparisons,
/// `q[a][a'] = E[T(a, a') | theta] = 2 Pr[T(a, a') = 1] - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseMatrix {
    n: usize,
    q: Vec<f64>,
}

impl PairwiseMatrix {
    pub fn zeros(n: usize) -> Self {
        PairwiseMatrix { n, q: vec![0.0; n * n] }
    }

    /// Builds the matrix from `Pr[T(a, a') = 1]` for `a < a'`; the lower
    /// triangle is filled by antisymmetry.
    pub fn from_upper_probabilities(n: usize, mut prob: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for a in 0..n {
            for b in (a + 1)..n {
                m.set(a, b, 2.0 * prob(a, b) - 1.0);
            }
        }
        m
    }

    /// Validates a full row-major table of `q` values.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut q = Vec::with_capacity(n * n);
        for (a, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "pairwise matrix row {a} has {} entries, expected {n}",
                    row.len()
                )));
            }
            q.extend_from_slice(row);
        }
        let m = PairwiseMatrix { n, q };
        m.validate()?;
        Ok(m)
    }

    pub fn n_items(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: ItemId, b: ItemId) -> f64 {
        self.q[a * self.n + b]
    }

    /// Sets `q[a][b] = v` and `q[b][a] = -v`.
    pub fn set(&mut self, a: ItemId, b: ItemId, v: f64) {
        self.q[a * self.n + b] = v;
        self.q[b * self.n + a] = -v;
    }

    /// `Pr[T(a, b) = 1]`.
    pub fn prob(&self, a: ItemId, b: ItemId) -> f64 {
        0.5 * (1.0 + self.get(a, b))
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..self.n {
            for b in 0..self.n {
                let v = self.get(a, b);
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("q[{a}][{b}] = {v} outside [-1, 1]")));
                }
                if a != b && (v + self.get(b, a)).abs() > 1e-12 {
                    return Err(Error::invalid(format!("q is not antisymmetric at ({a}, {b})")));
                }
            }
        }
        Ok(())
    }
}

/// Symmetric link `F` with `F(t) = 1 - F(-t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum LinkFunction {
    /// Logistic sigmoid (Bradley-Terry-Luce).
    Btl,
    /// Standard Gaussian CDF (Thurstone case V).
    Thurstone,
    Custom(TabulatedLink),
}

impl LinkFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            LinkFunction::Btl => sigmoid(t),
            LinkFunction::Thurstone => gaussian_cdf(t),
            LinkFunction::Custom(tab) => tab.eval(t),
        }
    }
}

/// Piecewise-linear link through tabulated knots, clamped outside the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedLink {
    knots: Vec<(f64, f64)>,
}

impl TabulatedLink {
    /// Knots must be strictly increasing in both coordinates and symmetric:
    /// for every knot `(t, F)` the knot `(-t, 1 - F)` is present.
    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::invalid("tabulated link needs at least two knots"));
        }
        knots.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(Error::invalid("tabulated link must be strictly increasing"));
            }
        }
        let link = TabulatedLink { knots };
        for &(t, f) in &link.knots {
            if (link.eval(-t) - (1.0 - f)).abs() > LINK_SYMMETRY_TOL {
                return Err(Error::invalid(format!("tabulated link violates F(t) = 1 - F(-t) at t = {t}")));
            }
        }
        Ok(link)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let hi = k.partition_point(|&(x, _)| x < t);
        let (x0, y0) = k[hi - 1];
        let (x1, y1) = k[hi];
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Standard normal CDF via the complementary error function.
pub fn gaussian_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// Non-atomic prior for iid item scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScorePrior {
    StandardNormal,
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ScorePrior {
    fn validate(&self) -> Result<()> {
        match *self {
            ScorePrior::StandardNormal => Ok(()),
            ScorePrior::Normal { mean, sd } if mean.is_finite() && sd > 0.0 && sd.is_finite() => Ok(()),
            ScorePrior::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            _ => Err(Error::invalid(format!("invalid score prior {self:?}"))),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScorePrior::StandardNormal => rng.sample(StandardNormal),
            ScorePrior::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            ScorePrior::Uniform { lo, hi } => Uniform::new(lo, hi).expect("validated").sample(rng),
        }
    }
}

/// A full ranking, stored best-to-worst.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ranking {
    order: Vec<ItemId>,
}

impl Ranking {
    pub fn identity(n: usize) -> Self {
        Ranking { order: (0..n).collect() }
    }

    /// `order` lists items best-to-worst and must be a permutation of `0..n`.
    pub fn from_order(order: Vec<ItemId>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &item in &order {
            if item >= n || seen[item] {
                return Err(Error::invalid(format!("{order:?} is not a permutation of 0..{n}")));
            }
            seen[item] = true;
        }
        Ok(Ranking { order })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[ItemId] {
        &self.order
    }

    /// `positions()[a]` is the rank of item `a`, 0 = best.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &item) in self.order.iter().enumerate() {
            pos[item] = p;
        }
        pos
    }

    /// Number of item pairs ordered differently by the two rankings.
    pub fn kendall_tau(&self, other: &Ranking) -> usize {
        assert_eq!(self.len(), other.len(), "rankings over different universes");
        let pos = other.positions();
        let mapped: Vec<usize> = self.order.iter().map(|&item| pos[item]).collect();
        mapped
            .iter()
            .enumerate()
            .map(|(i, &x)| mapped[i + 1..].iter().filter(|&&y| y < x).count())
            .sum()
    }

    /// `+1` if `a` is ranked above `b`.
    pub fn compare(&self, a: ItemId, b: ItemId) -> Signal {
        let pos = self.order.iter().position(|&x| x == a).expect("item in ranking");
        let pos_b = self.order.iter().position(|&x| x == b).expect("item in ranking");
        Signal::from_bool(pos < pos_b)
    }

    /// All `n!` rankings, lexicographic in `order`.
    pub fn all(n: usize) -> impl Iterator<Item = Ranking> {
        (0..n).permutations(n).map(|order| Ranking { order })
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.order.iter().join(">"))
    }
}

/// Latent state drawn from a model's prior.
#[derive(Clone, Debug, PartialEq)]
pub enum Theta {
    Scores(Vec<f64>),
    Ranking(Ranking),
    Mixture(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ComparisonModel {
    Parametric {
        link: LinkFunction,
        prior: ScorePrior,
        n_items: usize,
    },
    Mallows {
        eta: f64,
        n_items: usize,
    },
    /// Fixed-accuracy comparisons: the item ranked higher by the uniformly
    /// random reference wins with probability `1/2 + gamma`.
    NoisySort {
        gamma: f64,
        n_items: usize,
    },
    FiniteMixture {
        thetas: Vec<PairwiseMatrix>,
        weights: Vec<f64>,
    },
}

impl ComparisonModel {
    pub fn parametric(link: LinkFunction, prior: ScorePrior, n_items: usize) -> Result<Self> {
        let m = ComparisonModel::Parametric { link, prior, n_items };
        m.validate()?;
        Ok(m)
    }

    pub fn btl(n_items: usize) -> Result<Self> {
        Self::parametric(LinkFunction::Btl, ScorePrior::StandardNormal, n_items)
    }

    pub fn thurstone(n_items: usize) -> Result<Self> {
        Self::parametric(LinkFunction::Thurstone, ScorePrior::StandardNormal, n_items)
    }

    pub fn mallows(eta: f64, n_items: usize) -> Result<Self> {
        let m = ComparisonModel::Mallows { eta, n_items };
        m.validate()?;
        Ok(m)
    }

    pub fn noisy_sort(gamma: f64, n_items: usize) -> Result<Self> {
        let m = ComparisonModel::NoisySort { gamma, n_items };
        m.validate()?;
        Ok(m)
    }

    pub fn mixture(thetas: Vec<PairwiseMatrix>, weights: Vec<f64>) -> Result<Self> {
        let m = ComparisonModel::FiniteMixture { thetas, weights };
        m.validate()?;
        Ok(m)
    }

    /// Uniform mixture over all rankings of three items where adjacent pairs
    /// are won by the higher-ranked item with probability `adjacent` and the
    /// extreme pair with probability `extreme`. With `(0.9, 0.6)` this is
    /// weakly but not strongly stochastically transitive.
    pub fn three_item_ranked(adjacent: f64, extreme: f64) -> Result<Self> {
        let thetas = Ranking::all(3)
            .map(|r| {
                let pos = r.positions();
                PairwiseMatrix::from_upper_probabilities(3, |a, b| {
                    let gap = pos[a].abs_diff(pos[b]);
                    let p = if gap == 1 { adjacent } else { extreme };
                    if pos[a] < pos[b] {
                        p
                    } else {
                        1.0 - p
                    }
                })
            })
            .collect::<Vec<_>>();
        let w = vec![1.0 / 6.0; 6];
        Self::mixture(thetas, w)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_items();
        if !(2..=MAX_ITEMS).contains(&n) {
            return Err(Error::invalid(format!("item count {n} outside 2..={MAX_ITEMS}")));
        }
        match self {
            ComparisonModel::Parametric { prior, .. } => prior.validate(),
            ComparisonModel::Mallows { eta, .. } => {
                if *eta > 0.0 && eta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("Mallows eta must be positive, got {eta}")))
                }
            }
            ComparisonModel::NoisySort { gamma, .. } => {
                if *gamma > 0.0 && *gamma < 0.5 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("noisy-sort gamma must lie in (0, 1/2), got {gamma}")))
                }
            }
            ComparisonModel::FiniteMixture { thetas, weights } => {
                if thetas.is_empty() || thetas.len() != weights.len() {
                    return Err(Error::invalid("mixture needs one weight per component"));
                }
                if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                    return Err(Error::invalid("mixture weights must be nonnegative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("mixture weights sum to {total}, expected 1")));
                }
                for q in thetas {
                    if q.n_items() != n {
                        return Err(Error::invalid("mixture components over different item sets"));
                    }
                    q.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn n_items(&self) -> usize {
        match self {
            ComparisonModel::Parametric { n_items, .. }
            | ComparisonModel::Mallows { n_items, .. }
            | ComparisonModel::NoisySort { n_items, .. } => *n_items,
            ComparisonModel::FiniteMixture { thetas, .. } => thetas.first().map_or(0, |q| q.n_items()),
        }
    }

    /// Whether the prior has finite support small enough to enumerate.
    pub fn has_exact_support(&self) -> bool {
        match self {
            ComparisonModel::Parametric { .. } => false,
            ComparisonModel::Mallows { n_items, .. } | ComparisonModel::NoisySort { n_items, .. } => {
                *n_items <= MAX_EXACT_RANKING_ITEMS
            }
            ComparisonModel::FiniteMixture { .. } => true,
        }
    }
}

/// Draws `theta` from the model's prior.
pub fn sample_theta<R: Rng + ?Sized>(model: &ComparisonModel, rng: &mut R) -> Theta {
    match model {
        ComparisonModel::Parametric { prior, n_items, .. } => loop {
            let scores: Vec<f64> = (0..*n_items).map(|_| prior.draw(rng)).collect();
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).all(|w| w[0] < w[1]) {
                break Theta::Scores(scores);
            }
        },
        ComparisonModel::Mallows { n_items, .. } | ComparisonModel::NoisySort { n_items, .. } => {
            let mut order: Vec<usize> = (0..*n_items).collect();
            order.shuffle(rng);
            Theta::Ranking(Ranking { order })
        }
        ComparisonModel::FiniteMixture { weights, .. } => {
            let dist = WeightedIndex::new(weights).expect("validated weights");
            Theta::Mixture(dist.sample(rng))
        }
    }
}

fn check_pair(n: usize, a: ItemId, b: ItemId) -> Result<()> {
    if a == b {
        return Err(Error::invalid(format!("comparison of item {a} with itself")));
    }
    if a >= n || b >= n {
        return Err(Error::invalid(format!("item out of range: ({a}, {b}) with {n} items")));
    }
    Ok(())
}

/// `Pr[T_theta(a, b) = 1]`. Computed for the ordered pair with `a < b` and
/// complemented otherwise, so `p(a, b) + p(b, a) = 1` exactly.
pub fn pairwise_prob(model: &ComparisonModel, theta: &Theta, a: ItemId, b: ItemId) -> Result<f64> {
    check_pair(model.n_items(), a, b)?;
    if a > b {
        return Ok(1.0 - pairwise_prob(model, theta, b, a)?);
    }
    match (model, theta) {
        (ComparisonModel::Parametric { link, .. }, Theta::Scores(s)) => Ok(link.eval(s[a] - s[b])),
        (ComparisonModel::Mallows { eta, .. }, Theta::Ranking(r)) => {
            let pos = r.positions();
            Ok(mallows_pair(*eta, pos[a], pos[b]))
        }
        (ComparisonModel::NoisySort { gamma, .. }, Theta::Ranking(r)) => {
            let pos = r.positions();
            Ok(if pos[a] < pos[b] { 0.5 + gamma } else { 0.5 - gamma })
        }
        (ComparisonModel::FiniteMixture { thetas, .. }, Theta::Mixture(idx)) => thetas
            .get(*idx)
            .map(|q| q.prob(a, b))
            .ok_or_else(|| Error::invalid(format!("mixture index {idx} out of range"))),
        _ => Err(Error::invalid("theta does not belong to this model")),
    }
}

fn mallows_pair(eta: f64, pos_a: usize, pos_b: usize) -> f64 {
    if pos_a < pos_b {
        mallows_gap(eta, pos_b - pos_a)
    } else {
        1.0 - mallows_gap(eta, pos_a - pos_b)
    }
}

/// Conditional pairwise matrix for a given state.
pub fn pairwise_matrix(model: &ComparisonModel, theta: &Theta) -> Result<PairwiseMatrix> {
    if let (ComparisonModel::FiniteMixture { thetas, .. }, Theta::Mixture(idx)) = (model, theta) {
        return thetas
            .get(*idx)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("mixture index {idx} out of range")));
    }
    let n = model.n_items();
    let mut m = PairwiseMatrix::zeros(n);
    let pos = match theta {
        Theta::Ranking(r) => Some(r.positions()),
        _ => None,
    };
    for a in 0..n {
        for b in (a + 1)..n {
            let p = match (model, &pos) {
                (ComparisonModel::Mallows { eta, .. }, Some(pos)) => mallows_pair(*eta, pos[a], pos[b]),
                _ => pairwise_prob(model, theta, a, b)?,
            };
            m.set(a, b, 2.0 * p - 1.0);
        }
    }
    Ok(m)
}

/// `h_eta(x) = x / (1 - exp(-eta x))`.
pub fn h_eta(eta: f64, x: f64) -> f64 {
    x / -(-eta * x).exp_m1()
}

fn mallows_gap(eta: f64, gap: usize) -> f64 {
    let g = gap as f64;
    h_eta(eta, g + 1.0) - h_eta(eta, g)
}

/// Probability that the item ranked `rank_gap` places above another in the
/// reference is preferred under the Mallows model: `h(g + 1) - h(g)`.
pub fn mallows_pairwise_marginal(eta: f64, rank_gap: usize) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    if rank_gap < 1 {
        return Err(Error::invalid("rank gap must be at least 1"));
    }
    Ok(mallows_gap(eta, rank_gap))
}

/// Exact Mallows sampler by repeated insertion: the `k`-th reference item is
/// inserted at slot `j` of the partial list with weight `exp(-eta (k - j))`,
/// the number of reference-earlier items it jumps over.
pub fn sample_mallows_ranking<R: Rng + ?Sized>(eta: f64, reference: &Ranking, rng: &mut R) -> Ranking {
    let n = reference.len();
    let q = (-eta).exp();
    let mut order = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (k, &item) in reference.order.iter().enumerate() {
        // slot j = k appends at the bottom (no inversions)
        weights.clear();
        let mut w = 1.0;
        for _ in 0..=k {
            weights.push(w);
            w *= q;
        }
        weights.reverse();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut slot = k;
        for (j, &wj) in weights.iter().enumerate() {
            if u < wj {
                slot = j;
                break;
            }
            u -= wj;
        }
        order.insert(slot, item);
    }
    Ranking { order }
}

/// Outcome of a transitivity check over all ordered item triples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransitivityCheck {
    Pass,
    /// `(a, a', a'')` with `a` beating `a'` and `a'` beating `a''` but the
    /// required inequality on `(a, a'')` failing.
    Witness(ItemId, ItemId, ItemId),
}

impl TransitivityCheck {
    pub fn passed(&self) -> bool {
        matches!(self, TransitivityCheck::Pass)
    }
}

fn transitivity(q: &PairwiseMatrix, strong: bool) -> TransitivityCheck {
    let n = q.n_items();
    for a in 0..n {
        for b in 0..n {
            if b == a || q.get(a, b) <= 0.0 {
                continue;
            }
            for c in 0..n {
                if c == a || c == b || q.get(b, c) <= 0.0 {
                    continue;
                }
                let ac = q.get(a, c);
                let ok = if strong {
                    ac > q.get(a, b).max(q.get(b, c))
                } else {
                    ac > 0.0
                };
                if !ok {
                    return TransitivityCheck::Witness(a, b, c);
                }
            }
        }
    }
    TransitivityCheck::Pass
}

/// Strong stochastic transitivity of one comparison function.
pub fn check_sst(q: &PairwiseMatrix) -> TransitivityCheck {
    transitivity(q, true)
}

/// Weak stochastic transitivity of one comparison function.
pub fn check_weak_st(q: &PairwiseMatrix) -> TransitivityCheck {
    transitivity(q, false)
}

/// Finite prior support as `(weight, Q_theta)` pairs.
pub fn theta_support(model: &ComparisonModel) -> Result<Vec<(f64, PairwiseMatrix)>> {
    match model {
        ComparisonModel::FiniteMixture { thetas, weights } => {
            Ok(weights.iter().copied().zip(thetas.iter().cloned()).collect())
        }
        ComparisonModel::Mallows { n_items, .. } | ComparisonModel::NoisySort { n_items, .. }
            if *n_items <= MAX_EXACT_RANKING_ITEMS =>
        {
            let count = (1..=*n_items).product::<usize>() as f64;
            Ranking::all(*n_items)
                .map(|r| Ok((1.0 / count, pairwise_matrix(model, &Theta::Ranking(r))?)))
                .collect()
        }
        _ => Err(Error::precondition(
            "exact mode needs a finite prior (mixture, or ranking model with at most 7 items)",
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AprioriMode {
    Exact,
    MonteCarlo { samples: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AprioriCheck {
    Pass,
    /// `E_theta[Q(a, a')]` is not zero for the reported pair.
    Biased { pair: (ItemId, ItemId), residual: f64 },
    /// Some state makes the pair indistinguishable, `Q_theta(a, a') = 0`.
    Indistinct { pair: (ItemId, ItemId) },
}

impl AprioriCheck {
    pub fn passed(&self) -> bool {
        matches!(self, AprioriCheck::Pass)
    }
}

/// Checks that items look identical a priori (`E[Q(a, a')] = 0`) but are
/// distinguishable under every state (`Q_theta(a, a') != 0`).
pub fn check_apriori_similar<R: Rng + ?Sized>(
    model: &ComparisonModel,
    mode: AprioriMode,
    rng: &mut R,
) -> Result<AprioriCheck> {
    let n = model.n_items();
    match mode {
        AprioriMode::Exact => {
            let support = theta_support(model)?;
            for a in 0..n {
                for b in (a + 1)..n {
                    let mean: f64 = support.iter().map(|(w, q)| w * q.get(a, b)).sum();
                    if mean.abs() > 1e-10 {
                        return Ok(AprioriCheck::Biased { pair: (a, b), residual: mean });
                    }
                }
            }
            for (w, q) in &support {
                if *w == 0.0 {
                    continue;
                }
                for a in 0..n {
                    for b in (a + 1)..n {
                        if q.get(a, b) == 0.0 {
                            return Ok(AprioriCheck::Indistinct { pair: (a, b) });
                        }
                    }
                }
            }
            Ok(AprioriCheck::Pass)
        }
        AprioriMode::MonteCarlo { samples } => {
            if samples < 2 {
                return Err(Error::invalid("Monte Carlo mode needs at least two samples"));
            }
            let pairs = n * (n - 1) / 2;
            let mut sum = vec![0.0; pairs];
            let mut sum_sq = vec![0.0; pairs];
            for _ in 0..samples {
                let theta = sample_theta(model, rng);
                let q = pairwise_matrix(model, &theta)?;
                let mut idx = 0;
                for a in 0..n {
                    for b in (a + 1)..n {
                        let v = q.get(a, b);
                        if v == 0.0 {
                            return Ok(AprioriCheck::Indistinct { pair: (a, b) });
                        }
                        sum[idx] += v;
                        sum_sq[idx] += v * v;
                        idx += 1;
                    }
                }
            }
            let m = samples as f64;
            let mut idx = 0;
            for a in 0..n {
                for b in (a + 1)..n {
                    let mean = sum[idx] / m;
                    let var = ((sum_sq[idx] / m - mean * mean) * m / (m - 1.0)).max(0.0);
                    let se = (var / m).sqrt();
                    if mean.abs() > 3.0 * se {
                        return Ok(AprioriCheck::Biased { pair: (a, b), residual: mean });
                    }
                    idx += 1;
                }
            }
            Ok(AprioriCheck::Pass)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClaimCheck {
    /// All gaps exceed 1/2 and increase; carries `h(2) - h(1)`.
    Pass { first_gap: f64 },
    Witness { x: usize },
}

/// Verifies that `h_eta(x + 1) - h_eta(x)` exceeds 1/2 and strictly increases
/// for `x = 1..=x_max`.
pub fn h_eta_claim_check(eta: f64, x_max: usize) -> Result<ClaimCheck> {
    if !(eta > 0.0) || x_max < 2 {
        return Err(Error::invalid("need eta > 0 and x_max >= 2"));
    }
    let first_gap = mallows_gap(eta, 1);
    let mut prev = f64::INFINITY;
    for x in 1..=x_max {
        // gap > 1/2 and increasing <=> deficit < 1/2 and decreasing
        let deficit = ln_gap_deficit(eta, x);
        if !(deficit < 0.5f64.ln()) || !(deficit < prev) {
            return Ok(ClaimCheck::Witness { x });
        }
        prev = deficit;
    }
    Ok(ClaimCheck::Pass { first_gap })
}

/// `ln(e^y - 1)` without overflow or cancellation.
fn ln_expm1(y: f64) -> f64 {
    if y > 1.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// `ln(1 - (h(g + 1) - h(g)))`. Since `h(x) = x + x / (e^{eta x} - 1)`, the
/// deficit is `g / (e^{eta g} - 1) - (g + 1) / (e^{eta (g + 1)} - 1)`, which
/// underflows long before the gap itself stops being representable as
/// different from one.
fn ln_gap_deficit(eta: f64, gap: usize) -> f64 {
    let g = gap as f64;
    let lead = g.ln() - ln_expm1(eta * g);
    let ratio = ((g + 1.0).ln() - ln_expm1(eta * (g + 1.0)) - lead).exp();
    lead + (-ratio).ln_1p()
}

/// Model fixture parsed from `key=value` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub model: ComparisonModel,
    pub seed: u64,
}

impl ModelConfig {
    /// Recognized keys: `variant` (`btl`, `thurstone`, `mallows`,
    /// `noisy_sort`), `n_items`, `eta`, `gamma`, `seed`, and for parametric
    /// variants `prior` (`normal` or `uniform`). Blank lines and `#` comments
    /// are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected key=value", lineno + 1)))?;
            kv.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
        let get_f64 = |key: &str| -> Result<f64> {
            kv.get(key)
                .ok_or_else(|| Error::invalid(format!("missing key `{key}`")))?
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("`{key}`: {e}")))
        };
        let n_items: usize = kv
            .get("n_items")
            .ok_or_else(|| Error::invalid("missing key `n_items`"))?
            .parse()
            .map_err(|e| Error::invalid(format!("`n_items`: {e}")))?;
        let seed: u64 = match kv.get("seed") {
            Some(s) => s.parse().map_err(|e| Error::invalid(format!("`seed`: {e}")))?,
            None => 0,
        };
        let prior = match kv.get("prior").map(String::as_str) {
            None | Some("normal") => ScorePrior::StandardNormal,
            Some("uniform") => ScorePrior::Uniform { lo: 0.0, hi: 1.0 },
            Some(other) => return Err(Error::invalid(format!("unknown prior `{other}`"))),
        };
        let variant = kv.get("variant").ok_or_else(|| Error::invalid("missing key `variant`"))?;
        let model = match variant.as_str() {
            "btl" => ComparisonModel::parametric(LinkFunction::Btl, prior, n_items)?,
            "thurstone" => ComparisonModel::parametric(LinkFunction::Thurstone, prior, n_items)?,
            "mallows" => ComparisonModel::mallows(get_f64("eta")?, n_items)?,
            "noisy_sort" => ComparisonModel::noisy_sort(get_f64("gamma")?, n_items)?,
            other => return Err(Error::invalid(format!("unknown variant `{other}`"))),
        };
        Ok(ModelConfig { model, seed })
    }
}
