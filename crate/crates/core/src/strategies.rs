//! Report strategies, expected BPP payments, best responses and the
//! classification of symmetric equilibria.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::dominance::{is_uniformly_dominant, is_uniformly_dominant_general, GeneralTriple, TripleDistribution, STRICT_MARGIN};
use crate::error::{Error, Result};
use crate::payments::bpp;
use crate::signal::Signal;

/// Rows of a strategy must sum to one within this.
pub const ROW_TOLERANCE: f64 = 1e-12;
/// Rows closer than this count as equal (uninformed).
pub const UNINFORMED_TOLERANCE: f64 = 1e-9;
/// Best-response consistency tolerance for the equilibrium sweep.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-9;

/// Binary report strategy, `sigma(s, r) = Pr[report r | signal s]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Strategy {
    /// Indexed `[s.bit()][r.bit()]`.
    sigma: [[f64; 2]; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyClass {
    Truthful,
    Flip,
    Uninformed,
    OtherInformed,
}

impl StrategyClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyClass::Truthful => "truthful",
            StrategyClass::Flip => "flip",
            StrategyClass::Uninformed => "uninformed",
            StrategyClass::OtherInformed => "other_informed",
        }
    }
}

impl fmt::Display for StrategyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Strategy {
    /// `rows[0]` is the report law after signal `-1`, `rows[1]` after `+1`;
    /// columns are reports `-1`, `+1`.
    pub fn new(rows: [[f64; 2]; 2]) -> Result<Self> {
        for row in &rows {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (row[0] + row[1] - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::invalid(format!("strategy rows must be probability vectors: {rows:?}")));
            }
        }
        Ok(Strategy { sigma: rows })
    }

    /// Symmetric parameterization by `x = sigma(1, 1)` and `y = sigma(-1, 1)`.
    pub fn from_params(x: f64, y: f64) -> Result<Self> {
        Self::new([[1.0 - y, y], [1.0 - x, x]])
    }

    pub fn truthful() -> Self {
        Strategy { sigma: [[1.0, 0.0], [0.0, 1.0]] }
    }

    pub fn flip() -> Self {
        Strategy { sigma: [[0.0, 1.0], [1.0, 0.0]] }
    }

    /// Reports `+1` with probability `q` regardless of the signal.
    pub fn uninformed(q: f64) -> Result<Self> {
        Self::from_params(q, q)
    }

    pub fn constant(r: Signal) -> Self {
        let q = if r == Signal::Pos { 1.0 } else { 0.0 };
        Strategy { sigma: [[1.0 - q, q], [1.0 - q, q]] }
    }

    pub fn prob(&self, s: Signal, r: Signal) -> f64 {
        self.sigma[s.bit()][r.bit()]
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.sigma
    }

    pub fn classify(&self) -> StrategyClass {
        let close = |a: f64, b: f64| (a - b).abs() <= ROW_TOLERANCE;
        let x = self.prob(Signal::Pos, Signal::Pos);
        let y = self.prob(Signal::Neg, Signal::Pos);
        if close(x, 1.0) && close(y, 0.0) {
            StrategyClass::Truthful
        } else if close(x, 0.0) && close(y, 1.0) {
            StrategyClass::Flip
        } else if (x - y).abs() <= UNINFORMED_TOLERANCE {
            StrategyClass::Uninformed
        } else {
            StrategyClass::OtherInformed
        }
    }
}

/// Expected payment of agent `i` and the per-signal conditional values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedPayment {
    pub total: f64,
    /// `conditional[s.bit()][r.bit()] = E[bpp(r, R_j, R_k) | S_i = s]`; zero
    /// for a signal of probability zero.
    pub conditional: [[f64; 2]; 2],
}

impl ExpectedPayment {
    pub fn conditional(&self, s: Signal, r: Signal) -> f64 {
        self.conditional[s.bit()][r.bit()]
    }
}

/// `E[bpp(r, R_j, R_k) | S_i = s]` for each `(s, r)` by enumerating signals
/// and peer reports.
pub fn conditional_payments(p: &TripleDistribution, sigma_j: &Strategy, sigma_k: &Strategy) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for s in Signal::ALL {
        let mass = p.prob_i(s);
        if mass <= 0.0 {
            continue;
        }
        for r in Signal::ALL {
            let mut acc = 0.0;
            for sj in Signal::ALL {
                for sk in Signal::ALL {
                    let w = p.get(s, sj, sk) / mass;
                    if w == 0.0 {
                        continue;
                    }
                    for rj in Signal::ALL {
                        for rk in Signal::ALL {
                            acc += w * sigma_j.prob(sj, rj) * sigma_k.prob(sk, rk) * bpp(r, rj, rk);
                        }
                    }
                }
            }
            out[s.bit()][r.bit()] = acc;
        }
    }
    out
}

pub fn expected_payment(p: &TripleDistribution, sigma_i: &Strategy, sigma_j: &Strategy, sigma_k: &Strategy) -> ExpectedPayment {
    let conditional = conditional_payments(p, sigma_j, sigma_k);
    let total = Signal::ALL
        .iter()
        .flat_map(|&s| Signal::ALL.map(move |r| (s, r)))
        .map(|(s, r)| p.prob_i(s) * sigma_i.prob(s, r) * conditional[s.bit()][r.bit()])
        .sum();
    ExpectedPayment { total, conditional }
}

/// Payment when all three agents play `sigma`.
pub fn symmetric_payment(p: &TripleDistribution, sigma: &Strategy) -> f64 {
    expected_payment(p, sigma, sigma, sigma).total
}

/// `2 delta_s (sigma(s, r) - sigma(-s, r))`, the conditional payment of
/// report `r` when both peers play `sigma`.
pub fn closed_form_conditional(margin_s: f64, sigma: &Strategy, s: Signal, r: Signal) -> f64 {
    2.0 * margin_s * (sigma.prob(s, r) - sigma.prob(-s, r))
}

/// `2 sum_s Pr[S_i = s] delta_s`.
pub fn truthful_closed_form(p: &TripleDistribution) -> Result<f64> {
    let rep = is_uniformly_dominant(p)?;
    Ok(2.0 * Signal::ALL.iter().map(|&s| p.prob_i(s) * rep.margin(s)).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BestReply {
    Report(Signal),
    Indifferent,
}

/// Best response of `i` to peers who both play `sigma`, indexed by
/// `s.bit()`. Requires a uniformly dominant `p`.
pub fn best_response(p: &TripleDistribution, sigma: &Strategy) -> Result<[BestReply; 2]> {
    let rep = is_uniformly_dominant(p)?;
    if !rep.dominant {
        return Err(Error::precondition(format!(
            "distribution is not uniformly dominant (margins {}, {})",
            rep.delta_plus, rep.delta_minus
        )));
    }
    Ok(Signal::ALL.map(|s| {
        let d = sigma.prob(s, Signal::Pos) - sigma.prob(-s, Signal::Pos);
        if d.abs() <= EQUILIBRIUM_TOLERANCE {
            BestReply::Indifferent
        } else {
            BestReply::Report(Signal::from_bool(d > 0.0))
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumEntry {
    pub sigma_11: f64,
    pub sigma_m11: f64,
    pub is_equilibrium: bool,
    pub classification: StrategyClass,
    pub expected_payment: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub entries: Vec<EquilibriumEntry>,
}

impl EquilibriumReport {
    pub fn equilibria(&self) -> impl Iterator<Item = &EquilibriumEntry> {
        self.entries.iter().filter(|e| e.is_equilibrium)
    }

    /// True when every equilibrium found is truthful, flip or uninformed.
    pub fn all_classified(&self) -> bool {
        self.equilibria().all(|e| e.classification != StrategyClass::OtherInformed)
    }

    pub fn find(&self, class: StrategyClass) -> Option<&EquilibriumEntry> {
        self.equilibria().find(|e| e.classification == class)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma_11,sigma_m11,is_eq,classification,expected_payment\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.sigma_11,
                e.sigma_m11,
                e.is_equilibrium,
                e.classification,
                crate::payments::format_sig(e.expected_payment, 12)
            ));
        }
        out
    }
}

/// Whether `sigma` is a symmetric equilibrium: every report in the support of
/// `sigma(s, .)` attains the best conditional payment within tolerance.
pub fn is_symmetric_equilibrium(p: &TripleDistribution, sigma: &Strategy) -> (bool, f64) {
    let pay = expected_payment(p, sigma, sigma, sigma);
    let ok = Signal::ALL.iter().all(|&s| {
        if p.prob_i(s) <= 0.0 {
            return true;
        }
        let best = pay.conditional(s, Signal::Pos).max(pay.conditional(s, Signal::Neg));
        Signal::ALL
            .iter()
            .all(|&r| sigma.prob(s, r) == 0.0 || pay.conditional(s, r) >= best - EQUILIBRIUM_TOLERANCE)
    });
    (ok, pay.total)
}

/// Sweeps `sigma(1,1), sigma(-1,1)` over `k / (resolution - 1)`; the grid
/// contains the four deterministic corners.
pub fn classify_symmetric_equilibria(p: &TripleDistribution, resolution: usize) -> Result<EquilibriumReport> {
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    let step = (resolution - 1) as f64;
    let entries = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| {
            let x = (idx / resolution) as f64 / step;
            let y = (idx % resolution) as f64 / step;
            let sigma = Strategy::from_params(x, y).expect("grid point is a valid strategy");
            let (is_equilibrium, expected_payment) = is_symmetric_equilibrium(p, &sigma);
            EquilibriumEntry { sigma_11: x, sigma_m11: y, is_equilibrium, classification: sigma.classify(), expected_payment }
        })
        .collect();
    Ok(EquilibriumReport { entries })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Audit {
    Pass,
    Diagnostic(Vec<String>),
}

impl Audit {
    pub fn passed(&self) -> bool {
        matches!(self, Audit::Pass)
    }

    fn from_problems(problems: Vec<String>) -> Self {
        if problems.is_empty() {
            Audit::Pass
        } else {
            Audit::Diagnostic(problems)
        }
    }
}

impl fmt::Display for Audit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Audit::Pass => f.write_str("pass"),
            Audit::Diagnostic(d) => write!(f, "fail: {}", d.join("; ")),
        }
    }
}

/// Checks that truth is a strict equilibrium with positive payment equal to
/// the flip payment, that uninformed play pays zero, and that no symmetric
/// equilibrium on a coarse grid beats truth.
pub fn strongly_truthful_audit(p: &TripleDistribution) -> Audit {
    let mut problems = Vec::new();
    let truth = expected_payment(p, &Strategy::truthful(), &Strategy::truthful(), &Strategy::truthful());
    for s in Signal::ALL {
        if p.prob_i(s) <= 0.0 {
            continue;
        }
        let gain = truth.conditional(s, s) - truth.conditional(s, -s);
        if gain <= STRICT_MARGIN {
            problems.push(format!("truth not a best response at signal {s} (gain {gain:.6})"));
        }
    }
    if truth.total <= STRICT_MARGIN {
        problems.push(format!("truthful payment {} not positive", truth.total));
    }
    let flip = symmetric_payment(p, &Strategy::flip());
    if (flip - truth.total).abs() > 1e-10 {
        problems.push(format!("flip payment {flip} differs from truthful {}", truth.total));
    }
    for q in [0.0, 0.3, 0.5, 1.0] {
        let u = symmetric_payment(p, &Strategy::uninformed(q).expect("valid coin"));
        if u.abs() > 1e-10 {
            problems.push(format!("uninformed payment {u} at q = {q}"));
        }
    }
    if problems.is_empty() {
        let grid = classify_symmetric_equilibria(p, 21).expect("valid resolution");
        if !grid.all_classified() {
            problems.push("an informed equilibrium other than truth or flip exists".into());
        }
        let richer = grid.equilibria().find(|e| e.expected_payment > truth.total + 1e-10).copied();
        if let Some(e) = richer {
            problems.push(format!("equilibrium ({}, {}) pays more than truth", e.sigma_11, e.sigma_m11));
        }
    }
    Audit::from_problems(problems)
}

/// Strategy over a finite alphabet, row-major `sigma[s * omega + r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralStrategy {
    omega: usize,
    sigma: Vec<f64>,
}

impl GeneralStrategy {
    pub fn new(omega: usize, sigma: Vec<f64>) -> Result<Self> {
        if omega < 2 || sigma.len() != omega * omega {
            return Err(Error::invalid(format!("need an {omega}x{omega} matrix")));
        }
        for row in sigma.chunks(omega) {
            let total: f64 = row.iter().sum();
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (total - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::invalid(format!("strategy row {row:?} is not a probability vector")));
            }
        }
        Ok(GeneralStrategy { omega, sigma })
    }

    pub fn truthful(omega: usize) -> Self {
        Self::deterministic(&(0..omega).collect::<Vec<_>>())
    }

    /// Signal `s` is reported as `map[s]`.
    pub fn deterministic(map: &[usize]) -> Self {
        let omega = map.len();
        let mut sigma = vec![0.0; omega * omega];
        for (s, &r) in map.iter().enumerate() {
            sigma[s * omega + r] = 1.0;
        }
        GeneralStrategy { omega, sigma }
    }

    /// Every signal is reported according to `dist`.
    pub fn uninformed(dist: &[f64]) -> Result<Self> {
        let omega = dist.len();
        Self::new(omega, dist.repeat(omega))
    }

    /// Rows are normalized standard exponentials.
    pub fn random<R: Rng + ?Sized>(omega: usize, rng: &mut R) -> Self {
        let mut sigma = Vec::with_capacity(omega * omega);
        for _ in 0..omega {
            let row: Vec<f64> = (0..omega).map(|_| rng.sample::<f64, _>(rand_distr::Exp1)).collect();
            let total: f64 = row.iter().sum();
            sigma.extend(row.iter().map(|x| x / total));
        }
        GeneralStrategy { omega, sigma }
    }

    /// All `omega^omega` deterministic maps.
    pub fn all_deterministic(omega: usize) -> Vec<Self> {
        let count = omega.pow(omega as u32);
        (0..count)
            .map(|mut code| {
                let map: Vec<usize> = (0..omega)
                    .map(|_| {
                        let r = code % omega;
                        code /= omega;
                        r
                    })
                    .collect();
                Self::deterministic(&map)
            })
            .collect()
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn prob(&self, s: usize, r: usize) -> f64 {
        self.sigma[s * self.omega + r]
    }

    pub fn is_uninformed(&self) -> bool {
        let first = &self.sigma[..self.omega];
        self.sigma
            .chunks(self.omega)
            .all(|row| row.iter().zip(first).all(|(a, b)| (a - b).abs() <= UNINFORMED_TOLERANCE))
    }
}

/// `2 (1[r_i = r_j] - 1[r_i = r_k])`.
pub fn bpp_general(ri: usize, rj: usize, rk: usize) -> f64 {
    2.0 * (f64::from(u8::from(ri == rj)) - f64::from(u8::from(ri == rk)))
}

/// `E[U(r, R_j, R_k) | S_i = s]` for every `(s, r)`, row-major; zero rows
/// for signals of probability zero.
pub fn conditional_payments_general(p: &GeneralTriple, sigma_j: &GeneralStrategy, sigma_k: &GeneralStrategy) -> Result<Vec<f64>> {
    let w = p.omega();
    if sigma_j.omega() != w || sigma_k.omega() != w {
        return Err(Error::invalid("strategy alphabet does not match the distribution"));
    }
    let mut out = vec![0.0; w * w];
    for s in 0..w {
        let mass = p.prob_i(s);
        if mass <= 0.0 {
            continue;
        }
        for sj in 0..w {
            for sk in 0..w {
                let q = p.get(s, sj, sk) / mass;
                if q == 0.0 {
                    continue;
                }
                for rj in 0..w {
                    for rk in 0..w {
                        let m = q * sigma_j.prob(sj, rj) * sigma_k.prob(sk, rk);
                        if m == 0.0 {
                            continue;
                        }
                        for r in 0..w {
                            out[s * w + r] += m * bpp_general(r, rj, rk);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn expected_payment_general(
    p: &GeneralTriple,
    sigma_i: &GeneralStrategy,
    sigma_j: &GeneralStrategy,
    sigma_k: &GeneralStrategy,
) -> Result<f64> {
    let w = p.omega();
    if sigma_i.omega() != w {
        return Err(Error::invalid("strategy alphabet does not match the distribution"));
    }
    let cond = conditional_payments_general(p, sigma_j, sigma_k)?;
    let mut total = 0.0;
    for s in 0..w {
        for r in 0..w {
            total += p.prob_i(s) * sigma_i.prob(s, r) * cond[s * w + r];
        }
    }
    Ok(total)
}

/// Seeded random strategies plus, for alphabets of size at most four, every
/// deterministic map.
pub fn audit_strategy_set<R: Rng + ?Sized>(omega: usize, random: usize, rng: &mut R) -> Vec<GeneralStrategy> {
    let mut set: Vec<_> = (0..random).map(|_| GeneralStrategy::random(omega, rng)).collect();
    if omega <= 4 {
        set.extend(GeneralStrategy::all_deterministic(omega));
    }
    set
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralAuditReport {
    pub audit: Audit,
    pub truthful_payment: f64,
    /// Largest symmetric payment over the strategy set.
    pub best_other: f64,
    /// Largest absolute payment of an uninformed strategy in the set.
    pub uninformed_max_abs: f64,
}

/// Truth is a strict equilibrium, pays at least every symmetric profile in
/// `strategies`, and strictly more than the uninformed ones, which pay zero.
pub fn informed_truthfulness_audit_general(p: &GeneralTriple, strategies: &[GeneralStrategy]) -> Result<GeneralAuditReport> {
    let w = p.omega();
    let mut problems = Vec::new();
    let dom = is_uniformly_dominant_general(p)?;
    if !dom.dominant {
        problems.push("distribution is not uniformly dominant".to_string());
    }
    let truth = GeneralStrategy::truthful(w);
    let cond = conditional_payments_general(p, &truth, &truth)?;
    for s in 0..w {
        if p.prob_i(s) <= 0.0 {
            continue;
        }
        for r in (0..w).filter(|&r| r != s) {
            let gain = cond[s * w + s] - cond[s * w + r];
            if gain <= STRICT_MARGIN {
                problems.push(format!("truth not a strict best response at signal {s} against report {r}"));
            }
        }
    }
    let truthful_payment = expected_payment_general(p, &truth, &truth, &truth)?;
    let mut best_other = f64::NEG_INFINITY;
    let mut uninformed_max_abs: f64 = 0.0;
    for sigma in strategies {
        let pay = expected_payment_general(p, sigma, sigma, sigma)?;
        best_other = best_other.max(pay);
        if sigma.is_uninformed() {
            uninformed_max_abs = uninformed_max_abs.max(pay.abs());
        }
        if pay > truthful_payment + 1e-12 {
            problems.push(format!("strategy {:?} pays {pay} > truthful {truthful_payment}", sigma.sigma));
        }
    }
    if uninformed_max_abs > 1e-10 {
        problems.push(format!("uninformed strategy pays {uninformed_max_abs}"));
    }
    if truthful_payment <= uninformed_max_abs + STRICT_MARGIN {
        problems.push(format!("truthful payment {truthful_payment} not above uninformed"));
    }
    Ok(GeneralAuditReport { audit: Audit::from_problems(problems), truthful_payment, best_other, uninformed_max_abs })
}
