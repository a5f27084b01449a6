//! Audits of arbitrary payment functions `U: {-1, 1}^3 -> R` for strict
//! truthfulness under uniform dominance, and the affine-BPP test.
//!
//! Any `U` splits as `U(s_i, s_j, s_k) = s_i D(s_j, s_k) + mu(s_j, s_k)`;
//! only `D` affects which report is best.

use std::fmt;
use std::path::Path;

use rand::Rng;

use crate::dominance::{is_uniformly_dominant, parse_reals, sample_dominant_triple, TripleDistribution};
use crate::error::{Error, Result};
use crate::payments::bpp;
use crate::signal::{triple_index, triple_signals, Signal};

/// Structural zero and strictness tolerance.
pub const TOLERANCE: f64 = 1e-10;

/// Default witness parameter grid.
pub const WITNESS_GRID: [f64; 5] = [0.5, 0.25, 0.1, 0.01, 0.001];

/// Eight payments in lexicographic `(s_i, s_j, s_k)` order, `-1` first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PaymentFunction {
    u: [f64; 8],
}

impl PaymentFunction {
    pub fn new(u: [f64; 8]) -> Result<Self> {
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("payments must be finite: {u:?}")));
        }
        Ok(PaymentFunction { u })
    }

    pub fn from_fn(mut f: impl FnMut(Signal, Signal, Signal) -> f64) -> Result<Self> {
        let mut u = [0.0; 8];
        for (idx, cell) in u.iter_mut().enumerate() {
            let (a, b, c) = triple_signals(idx);
            *cell = f(a, b, c);
        }
        Self::new(u)
    }

    pub fn bpp() -> Self {
        Self::from_fn(bpp).expect("finite")
    }

    /// `lambda * bpp + mu(s_j, s_k)`, with `mu` laid out like [`Decomposition::mu`].
    pub fn affine_bpp(lambda: f64, mu: [f64; 4]) -> Result<Self> {
        Self::from_fn(|si, sj, sk| lambda * bpp(si, sj, sk) + mu[pair_index(sj, sk)])
    }

    pub fn values(&self) -> &[f64; 8] {
        &self.u
    }

    pub fn get(&self, si: Signal, sj: Signal, sk: Signal) -> f64 {
        self.u[triple_index(si, sj, sk)]
    }

    pub fn parse(text: &str) -> Result<Self> {
        let vals = parse_reals(text, 8)?;
        let mut u = [0.0; 8];
        u.copy_from_slice(&vals);
        Self::new(u)
    }

    /// Reads a file of eight reals; lines starting with `#` are ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        let body: String = text.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join("\n");
        Self::parse(&body)
    }
}

/// Index of `(s_j, s_k)` in the four-cell tables, lexicographic with `-1` first.
pub fn pair_index(sj: Signal, sk: Signal) -> usize {
    (sj.bit() << 1) | sk.bit()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition {
    /// `D(s_j, s_k) = (U(1, s_j, s_k) - U(-1, s_j, s_k)) / 2`.
    pub d: [f64; 4],
    /// `mu(s_j, s_k) = (U(1, s_j, s_k) + U(-1, s_j, s_k)) / 2`.
    pub mu: [f64; 4],
}

impl Decomposition {
    pub fn d(&self, sj: Signal, sk: Signal) -> f64 {
        self.d[pair_index(sj, sk)]
    }

    pub fn mu(&self, sj: Signal, sk: Signal) -> f64 {
        self.mu[pair_index(sj, sk)]
    }

    pub fn recombine(&self) -> PaymentFunction {
        PaymentFunction::from_fn(|si, sj, sk| si.as_f64() * self.d(sj, sk) + self.mu(sj, sk)).expect("finite")
    }
}

pub fn decompose(u: &PaymentFunction) -> Decomposition {
    let mut d = [0.0; 4];
    let mut mu = [0.0; 4];
    for sj in Signal::ALL {
        for sk in Signal::ALL {
            let (hi, lo) = (u.get(Signal::Pos, sj, sk), u.get(Signal::Neg, sj, sk));
            d[pair_index(sj, sk)] = 0.5 * (hi - lo);
            mu[pair_index(sj, sk)] = 0.5 * (hi + lo);
        }
    }
    Decomposition { d, mu }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineBpp {
    pub lambda: f64,
    pub mu: [f64; 4],
}

/// `Some((lambda, mu))` when `U = lambda * bpp + mu(s_j, s_k)` with
/// `lambda > 0`.
pub fn is_affine_bpp(u: &PaymentFunction) -> Option<AffineBpp> {
    use Signal::{Neg, Pos};
    let dec = decompose(u);
    let diag_zero = dec.d(Pos, Pos).abs() <= TOLERANCE && dec.d(Neg, Neg).abs() <= TOLERANCE;
    let antisym = (dec.d(Pos, Neg) + dec.d(Neg, Pos)).abs() <= TOLERANCE;
    let positive = dec.d(Pos, Neg) > TOLERANCE;
    (diag_zero && antisym && positive).then(|| AffineBpp { lambda: dec.d(Pos, Neg) / 2.0, mu: dec.mu })
}

fn check_param(name: &str, x: f64, lo_open: bool, lo: f64, hi: f64) -> Result<()> {
    let lo_ok = if lo_open { x > lo } else { x >= lo };
    if !(lo_ok && x <= hi) {
        return Err(Error::invalid(format!("{name} = {x} out of range")));
    }
    Ok(())
}

/// `p^1 = [[0, 1/2 + delta], [1/2 - delta, 0]]` and `p^{-1}` its mirror,
/// with `S_i` uniform; both margins equal `2 delta`.
pub fn witness_p1(delta: f64) -> Result<TripleDistribution> {
    check_param("delta", delta, true, 0.0, 0.5)?;
    TripleDistribution::from_conditionals(
        0.5,
        [[0.0, 0.5 + delta], [0.5 - delta, 0.0]],
        [[0.0, 0.5 - delta], [0.5 + delta, 0.0]],
    )
}

/// `p^1 = [[1 - eps, 3 eps / 4], [eps / 4, 0]]`,
/// `p^{-1} = [[1 - eps, eps / 4], [3 eps / 4, 0]]`; margins `eps / 2`.
pub fn witness_p2(epsilon: f64) -> Result<TripleDistribution> {
    check_param("epsilon", epsilon, false, 0.0, 1.0)?;
    let e = epsilon;
    TripleDistribution::from_conditionals(
        0.5,
        [[1.0 - e, 0.75 * e], [0.25 * e, 0.0]],
        [[1.0 - e, 0.25 * e], [0.75 * e, 0.0]],
    )
}

/// Global sign flip of [`witness_p2`]; mass concentrates on `S_j = S_k = -1`.
pub fn witness_p2_mirror(epsilon: f64) -> Result<TripleDistribution> {
    Ok(witness_p2(epsilon)?.flip())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Strict,
    Weak,
    Violated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthfulnessAudit {
    /// Indexed by `s.bit()`.
    pub per_signal: [Verdict; 2],
    /// `E[U(s, S_j, S_k) | S_i = s] - E[U(-s, S_j, S_k) | S_i = s]`.
    pub gain: [f64; 2],
}

impl TruthfulnessAudit {
    pub fn is_strict(&self) -> bool {
        self.per_signal.iter().all(|&v| v == Verdict::Strict)
    }

    pub fn verdict(&self, s: Signal) -> Verdict {
        self.per_signal[s.bit()]
    }
}

/// `E[U(r, S_j, S_k) | S_i = s]`, indexed `[s.bit()][r.bit()]`.
pub fn conditional_expectations(u: &PaymentFunction, p: &TripleDistribution) -> Result<[[f64; 2]; 2]> {
    let mut out = [[0.0; 2]; 2];
    for s in Signal::ALL {
        for r in Signal::ALL {
            let mut acc = 0.0;
            for sj in Signal::ALL {
                for sk in Signal::ALL {
                    acc += p.cond_jk(sj, sk, s)? * u.get(r, sj, sk);
                }
            }
            out[s.bit()][r.bit()] = acc;
        }
    }
    Ok(out)
}

pub fn truthfulness_audit(u: &PaymentFunction, p: &TripleDistribution) -> Result<TruthfulnessAudit> {
    let e = conditional_expectations(u, p)?;
    let gain = Signal::ALL.map(|s| e[s.bit()][s.bit()] - e[s.bit()][(-s).bit()]);
    let per_signal = gain.map(|g| {
        if g > TOLERANCE {
            Verdict::Strict
        } else if g >= -TOLERANCE {
            Verdict::Weak
        } else {
            Verdict::Violated
        }
    });
    Ok(TruthfulnessAudit { per_signal, gain })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessFamily {
    P1,
    P2,
    P2Mirror,
    Random,
}

impl fmt::Display for WitnessFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessFamily::P1 => "p1",
            WitnessFamily::P2 => "p2",
            WitnessFamily::P2Mirror => "p2_mirror",
            WitnessFamily::Random => "random",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    Certificate(AffineBpp),
    Counterexample {
        family: WitnessFamily,
        /// Grid parameter, or the draw index for random distributions.
        parameter: f64,
        distribution: TripleDistribution,
        audit: TruthfulnessAudit,
    },
    /// Not affine, yet no tested distribution broke strict truthfulness.
    Inconclusive { tested: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig<'a> {
    pub grid: &'a [f64],
    pub random_draws: usize,
    pub random_margin: f64,
}

impl Default for SearchConfig<'static> {
    fn default() -> Self {
        SearchConfig { grid: &WITNESS_GRID, random_draws: 1000, random_margin: 0.05 }
    }
}

/// Certifies affine BPP or looks for a dominant distribution on which `U` is
/// not strictly truthful: the three witness families over `grid`, then
/// random dominant distributions.
pub fn uniqueness_search<R: Rng + ?Sized>(u: &PaymentFunction, config: &SearchConfig<'_>, rng: &mut R) -> Result<SearchOutcome> {
    if let Some(cert) = is_affine_bpp(u) {
        return Ok(SearchOutcome::Certificate(cert));
    }
    type Builder = fn(f64) -> Result<TripleDistribution>;
    let families: [(WitnessFamily, Builder); 3] = [
        (WitnessFamily::P1, witness_p1),
        (WitnessFamily::P2, witness_p2),
        (WitnessFamily::P2Mirror, witness_p2_mirror),
    ];
    let mut tested = 0;
    for (family, build) in families {
        for &x in config.grid {
            let Ok(p) = build(x) else { continue };
            if !is_uniformly_dominant(&p)?.dominant {
                continue;
            }
            tested += 1;
            let audit = truthfulness_audit(u, &p)?;
            if !audit.is_strict() {
                return Ok(SearchOutcome::Counterexample { family, parameter: x, distribution: p, audit });
            }
        }
    }
    for draw in 0..config.random_draws {
        let p = sample_dominant_triple(config.random_margin, rng)?;
        tested += 1;
        let audit = truthfulness_audit(u, &p)?;
        if !audit.is_strict() {
            return Ok(SearchOutcome::Counterexample {
                family: WitnessFamily::Random,
                parameter: draw as f64,
                distribution: p,
                audit,
            });
        }
    }
    Ok(SearchOutcome::Inconclusive { tested })
}
