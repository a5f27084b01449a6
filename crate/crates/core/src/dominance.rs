//! Joint distributions of three signals `(S_i, S_j, S_k)` and uniform
//! dominance: `S_j` agrees with `S_i` more often than `S_k` does, for every
//! realization of `S_i`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::signal::{triple_index, triple_signals, Signal};
use crate::sst::{pairwise_prob, sample_theta, theta_support, ComparisonModel, ItemId, PairwiseMatrix};

/// Margins must exceed this to count as strictly dominant.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Distribution over `{-1, 1}^3`, lexicographic with `-1 < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleDistribution {
    p: [f64; 8],
}

impl TripleDistribution {
    pub fn new(p: [f64; 8]) -> Result<Self> {
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::invalid(format!("triple probabilities must be nonnegative: {p:?}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("triple probabilities sum to {total}")));
        }
        Ok(TripleDistribution { p })
    }

    pub fn from_fn(mut f: impl FnMut(Signal, Signal, Signal) -> f64) -> Result<Self> {
        let mut p = [0.0; 8];
        for (idx, cell) in p.iter_mut().enumerate() {
            let (a, b, c) = triple_signals(idx);
            *cell = f(a, b, c);
        }
        Self::new(p)
    }

    /// Builds a distribution from `Pr[S_i = 1]` and the two conditional
    /// 2x2 tables `p^{s}(s_j, s_k) = Pr[S_j = s_j, S_k = s_k | S_i = s]`,
    /// each laid out `[[(1,1), (1,-1)], [(-1,1), (-1,-1)]]`.
    pub fn from_conditionals(prob_pos: f64, pos: [[f64; 2]; 2], neg: [[f64; 2]; 2]) -> Result<Self> {
        let cell = |t: &[[f64; 2]; 2], sj: Signal, sk: Signal| t[1 - sj.bit()][1 - sk.bit()];
        Self::from_fn(|si, sj, sk| match si {
            Signal::Pos => prob_pos * cell(&pos, sj, sk),
            Signal::Neg => (1.0 - prob_pos) * cell(&neg, sj, sk),
        })
    }

    /// Independent uniform signals.
    pub fn uniform() -> Self {
        TripleDistribution { p: [0.125; 8] }
    }

    pub fn probs(&self) -> &[f64; 8] {
        &self.p
    }

    pub fn get(&self, si: Signal, sj: Signal, sk: Signal) -> f64 {
        self.p[triple_index(si, sj, sk)]
    }

    pub fn prob_i(&self, si: Signal) -> f64 {
        Signal::ALL
            .iter()
            .flat_map(|&sj| Signal::ALL.map(move |sk| (sj, sk)))
            .map(|(sj, sk)| self.get(si, sj, sk))
            .sum()
    }

    fn require_i(&self, si: Signal) -> Result<f64> {
        let m = self.prob_i(si);
        if m <= 0.0 {
            return Err(Error::Degenerate(format!("Pr[S_i = {si}] = 0")));
        }
        Ok(m)
    }

    /// `Pr[S_j = sj | S_i = si]`.
    pub fn cond_j(&self, sj: Signal, si: Signal) -> Result<f64> {
        let m = self.require_i(si)?;
        Ok((self.get(si, sj, Signal::Neg) + self.get(si, sj, Signal::Pos)) / m)
    }

    /// `Pr[S_k = sk | S_i = si]`.
    pub fn cond_k(&self, sk: Signal, si: Signal) -> Result<f64> {
        let m = self.require_i(si)?;
        Ok((self.get(si, Signal::Neg, sk) + self.get(si, Signal::Pos, sk)) / m)
    }

    /// `Pr[S_j = sj, S_k = sk | S_i = si]`.
    pub fn cond_jk(&self, sj: Signal, sk: Signal, si: Signal) -> Result<f64> {
        let m = self.require_i(si)?;
        Ok(self.get(si, sj, sk) / m)
    }

    /// Global sign flip `s -> -s`.
    pub fn flip(&self) -> Self {
        let mut p = [0.0; 8];
        for (idx, cell) in p.iter_mut().enumerate() {
            *cell = self.p[7 - idx];
        }
        TripleDistribution { p }
    }

    /// Parses eight comma-separated probabilities.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let vals = parse_reals(text, 8)?;
        let mut p = [0.0; 8];
        p.copy_from_slice(&vals);
        Self::new(p)
    }

    pub fn to_csv(&self) -> String {
        self.p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for TripleDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

pub(crate) fn parse_reals(text: &str, expected: usize) -> Result<Vec<f64>> {
    let vals = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Error::invalid(format!("`{t}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != expected {
        return Err(Error::invalid(format!("expected {expected} values, found {}", vals.len())));
    }
    Ok(vals)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominanceReport {
    /// `Pr[S_j = 1 | S_i = 1] - Pr[S_k = 1 | S_i = 1]`.
    pub delta_plus: f64,
    /// `Pr[S_j = -1 | S_i = -1] - Pr[S_k = -1 | S_i = -1]`.
    pub delta_minus: f64,
    pub dominant: bool,
}

impl DominanceReport {
    /// Margin at signal `s`.
    pub fn margin(&self, s: Signal) -> f64 {
        match s {
            Signal::Pos => self.delta_plus,
            Signal::Neg => self.delta_minus,
        }
    }
}

pub fn is_uniformly_dominant(p: &TripleDistribution) -> Result<DominanceReport> {
    let delta_plus = p.cond_j(Signal::Pos, Signal::Pos)? - p.cond_k(Signal::Pos, Signal::Pos)?;
    let delta_minus = p.cond_j(Signal::Neg, Signal::Neg)? - p.cond_k(Signal::Neg, Signal::Neg)?;
    Ok(DominanceReport {
        delta_plus,
        delta_minus,
        dominant: delta_plus > STRICT_MARGIN && delta_minus > STRICT_MARGIN,
    })
}

/// How [`triple_from_model`] obtains the joint distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TripleMode {
    /// Enumerate the finite prior.
    Exact,
    MonteCarlo { samples: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripleEstimate {
    pub dist: TripleDistribution,
    /// Sample count for Monte Carlo estimates; `None` when exact.
    pub samples: Option<usize>,
}

/// Joint law of `(S(a, a'), S(a'', a'), S(a'', a))` under a comparison model.
///
/// Exact mode sums the product of the three conditional laws over the finite
/// prior; Monte Carlo mode samples `theta` and then the three comparisons.
pub fn triple_from_model<R: Rng + ?Sized>(
    model: &ComparisonModel,
    items: (ItemId, ItemId, ItemId),
    mode: TripleMode,
    rng: &mut R,
) -> Result<TripleEstimate> {
    let (a, a1, a2) = items;
    let n = model.n_items();
    if a == a1 || a == a2 || a1 == a2 || a >= n || a1 >= n || a2 >= n {
        return Err(Error::invalid(format!("need three distinct items below {n}, got {items:?}")));
    }
    match mode {
        TripleMode::Exact => {
            let support = theta_support(model)?;
            let dist = exact_triple(&support, items)?;
            Ok(TripleEstimate { dist, samples: None })
        }
        TripleMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::invalid("Monte Carlo mode needs a positive sample budget"));
            }
            let mut counts = [0usize; 8];
            for _ in 0..samples {
                let theta = sample_theta(model, rng);
                let draw = |rng: &mut R, x: ItemId, y: ItemId| -> Result<Signal> {
                    let p = pairwise_prob(model, &theta, x, y)?;
                    Ok(Signal::from_bool(rng.random::<f64>() < p))
                };
                let si = draw(rng, a, a1)?;
                let sj = draw(rng, a2, a1)?;
                let sk = draw(rng, a2, a)?;
                counts[triple_index(si, sj, sk)] += 1;
            }
            let mut p = [0.0; 8];
            for (cell, c) in p.iter_mut().zip(counts) {
                *cell = c as f64 / samples as f64;
            }
            // renormalize away rounding in the division
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
            Ok(TripleEstimate {
                dist: TripleDistribution::new(p)?,
                samples: Some(samples),
            })
        }
    }
}

fn exact_triple(support: &[(f64, PairwiseMatrix)], (a, a1, a2): (ItemId, ItemId, ItemId)) -> Result<TripleDistribution> {
    let mut p = [0.0; 8];
    for (w, q) in support {
        let pi = q.prob(a, a1);
        let pj = q.prob(a2, a1);
        let pk = q.prob(a2, a);
        let pr = |prob: f64, s: Signal| if s == Signal::Pos { prob } else { 1.0 - prob };
        for (idx, cell) in p.iter_mut().enumerate() {
            let (si, sj, sk) = triple_signals(idx);
            *cell += w * pr(pi, si) * pr(pj, sj) * pr(pk, sk);
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    TripleDistribution::new(p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloDominance {
    pub delta_plus: Interval,
    pub delta_minus: Interval,
}

/// Normal-approximation confidence intervals (`mean +- z * se`) for both
/// dominance margins of a sampled triple.
pub fn monte_carlo_dominance(est: &TripleEstimate, z: f64) -> Result<MonteCarloDominance> {
    let samples = est
        .samples
        .ok_or_else(|| Error::invalid("confidence intervals need a Monte Carlo estimate"))? as f64;
    let interval = |s: Signal| -> Result<Interval> {
        let d = &est.dist;
        // X = 1[S_j = s] - 1[S_k = s] conditional on S_i = s
        let plus = d.cond_jk(s, -s, s)?;
        let minus = d.cond_jk(-s, s, s)?;
        let mean = plus - minus;
        let var = (plus + minus - mean * mean).max(0.0);
        let n = (d.prob_i(s) * samples).max(1.0);
        let half = z * (var / n).sqrt();
        Ok(Interval { lo: mean - half, hi: mean + half })
    };
    Ok(MonteCarloDominance {
        delta_plus: interval(Signal::Pos)?,
        delta_minus: interval(Signal::Neg)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClaimOutcome {
    Pass,
    Fail,
    /// `Q(a, a') = 0`: the inequality is vacuous.
    Degenerate,
}

/// Checks `Q(a, a') Q(a'', a') > Q(a, a') Q(a'', a)`, the per-state inequality
/// behind dominance for comparison data.
pub fn claim_transitive_check(q: &PairwiseMatrix, a: ItemId, a1: ItemId, a2: ItemId) -> ClaimOutcome {
    let base = q.get(a, a1);
    if base == 0.0 {
        return ClaimOutcome::Degenerate;
    }
    if base * q.get(a2, a1) > base * q.get(a2, a) {
        ClaimOutcome::Pass
    } else {
        ClaimOutcome::Fail
    }
}

/// Distribution over `Omega^3` for a finite alphabet indexed `0..omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralTriple {
    omega: usize,
    p: Vec<f64>,
}

impl GeneralTriple {
    /// `p` is indexed `(s_i * omega + s_j) * omega + s_k`.
    pub fn new(omega: usize, p: Vec<f64>) -> Result<Self> {
        if omega < 2 {
            return Err(Error::invalid("alphabet needs at least two symbols"));
        }
        if p.len() != omega.pow(3) {
            return Err(Error::invalid(format!("expected {} cells, got {}", omega.pow(3), p.len())));
        }
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::invalid("probabilities must be nonnegative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(GeneralTriple { omega, p })
    }

    pub fn from_fn(omega: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut p = Vec::with_capacity(omega.pow(3));
        for si in 0..omega {
            for sj in 0..omega {
                for sk in 0..omega {
                    p.push(f(si, sj, sk));
                }
            }
        }
        Self::new(omega, p)
    }

    /// Binary distribution with `-1 -> 0`, `+1 -> 1`.
    pub fn from_binary(t: &TripleDistribution) -> Self {
        GeneralTriple { omega: 2, p: t.probs().to_vec() }
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn get(&self, si: usize, sj: usize, sk: usize) -> f64 {
        self.p[(si * self.omega + sj) * self.omega + sk]
    }

    pub fn prob_i(&self, si: usize) -> f64 {
        let w = self.omega * self.omega;
        self.p[si * w..(si + 1) * w].iter().sum()
    }

    /// Row `s` of `Pr[S_j = . | S_i = s]` and `Pr[S_k = . | S_i = s]`.
    pub fn conditionals(&self, si: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.prob_i(si);
        if m <= 0.0 {
            return Err(Error::Degenerate(format!("Pr[S_i = {si}] = 0")));
        }
        let mut cj = vec![0.0; self.omega];
        let mut ck = vec![0.0; self.omega];
        for sj in 0..self.omega {
            for sk in 0..self.omega {
                let v = self.get(si, sj, sk) / m;
                cj[sj] += v;
                ck[sk] += v;
            }
        }
        Ok((cj, ck))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralDominanceReport {
    /// `margins[s][s'] = Pr[S_j = s' | S_i = s] - Pr[S_k = s' | S_i = s]`.
    pub margins: Vec<Vec<f64>>,
    pub dominant: bool,
}

/// Uniform dominance over a finite alphabet: the diagonal margins are
/// positive and every off-diagonal margin is negative.
pub fn is_uniformly_dominant_general(p: &GeneralTriple) -> Result<GeneralDominanceReport> {
    let mut margins = Vec::with_capacity(p.omega);
    let mut dominant = true;
    for s in 0..p.omega {
        let (cj, ck) = p.conditionals(s)?;
        let row: Vec<f64> = cj.iter().zip(&ck).map(|(x, y)| x - y).collect();
        for (s1, &m) in row.iter().enumerate() {
            let ok = if s1 == s { m > STRICT_MARGIN } else { m < -STRICT_MARGIN };
            dominant &= ok;
        }
        margins.push(row);
    }
    Ok(GeneralDominanceReport { margins, dominant })
}

/// Rejection-samples a distribution whose two dominance margins both exceed
/// `min_margin`; cells are normalized standard exponentials (a flat
/// Dirichlet draw).
pub fn sample_dominant_triple<R: Rng + ?Sized>(min_margin: f64, rng: &mut R) -> Result<TripleDistribution> {
    if !(0.0..0.5).contains(&min_margin) {
        return Err(Error::invalid(format!("margin threshold {min_margin} outside [0, 0.5)")));
    }
    loop {
        let mut p = [0.0; 8];
        for cell in p.iter_mut() {
            *cell = rng.sample::<f64, _>(rand_distr::Exp1);
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let Ok(t) = TripleDistribution::new(p) else { continue };
        if let Ok(r) = is_uniformly_dominant(&t) {
            if r.delta_plus > min_margin && r.delta_minus > min_margin {
                return Ok(t);
            }
        }
    }
}
