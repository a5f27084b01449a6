use crate::error::{Error, Result};

use super::data::RankingDataset;

pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

/// Empirical distribution function of a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("ECDF of an empty sample"));
        }
        if values.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("ECDF sample contains NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Jump points `(x, F(x))`, one per distinct value.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (idx, &x) in self.sorted.iter().enumerate() {
            let f = (idx + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,cdf\n");
        for (x, f) in self.points() {
            s.push_str(&format!(
                "{},{}\n",
                crate::payments::format_sig(x, 12),
                crate::payments::format_sig(f, 12)
            ));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DominanceOutcome {
    /// `F1 <= F2` everywhere, so the first sample is stochastically larger.
    Dominated { equal: bool },
    /// `F1(x) > F2(x)` somewhere; `x` is the first such point.
    Crossed { at: f64, excess: f64 },
}

impl DominanceOutcome {
    pub fn dominated(&self) -> bool {
        matches!(self, DominanceOutcome::Dominated { .. })
    }
}

/// Whether `e1 <= e2` pointwise on the merged support.
pub fn dominance_test(e1: &Ecdf, e2: &Ecdf) -> DominanceOutcome {
    let mut equal = true;
    let support = e1.values().iter().chain(e2.values());
    let mut xs: Vec<f64> = support.copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let (f1, f2) = (e1.eval(x), e2.eval(x));
        if f1 > f2 + DOMINANCE_TOLERANCE {
            return DominanceOutcome::Crossed { at: x, excess: f1 - f2 };
        }
        if (f1 - f2).abs() > DOMINANCE_TOLERANCE {
            equal = false;
        }
    }
    DominanceOutcome::Dominated { equal }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Fraction strictly above zero.
    pub fraction_positive: f64,
    /// Sample standard deviation (zero for a single value).
    pub std_dev: f64,
}

impl SummaryStats {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.n as f64).sqrt()
    }
}

pub fn summarize(payments: &[f64]) -> Result<SummaryStats> {
    if payments.is_empty() {
        return Err(Error::invalid("summary of an empty sample"));
    }
    let n = payments.len();
    let mean = payments.iter().sum::<f64>() / n as f64;
    let fraction_positive = payments.iter().filter(|&&x| x > 0.0).count() as f64 / n as f64;
    let var = if n > 1 {
        payments.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(SummaryStats { n, mean, fraction_positive, std_dev: var.sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitivityStats {
    /// Triples without a pairwise tie.
    pub triples: usize,
    /// Triples with some pairwise proportion exactly one half.
    pub ties: usize,
    pub weak_fraction: f64,
    pub strong_fraction: f64,
    /// Mean of `p(a > a'') - max(p(a > a'), p(a' > a''))`.
    pub mean_excess: f64,
}

/// Over item triples oriented so that `p(a > a') > 1/2` and
/// `p(a' > a'') > 1/2`: the fraction with `p(a > a'') > 1/2` (weak) and the
/// fraction with `p(a > a'')` above both (strong), comparisons strict.
pub fn empirical_transitivity(dataset: &RankingDataset) -> Result<TransitivityStats> {
    let m = dataset.n_items();
    if m < 3 {
        return Err(Error::precondition(format!("need at least 3 items, got {m}")));
    }
    if dataset.n_agents() == 0 {
        return Err(Error::precondition("dataset has no rankings"));
    }
    let p = dataset.preference_matrix();
    let (mut triples, mut ties, mut weak, mut strong) = (0usize, 0usize, 0usize, 0usize);
    let mut excess = 0.0;
    for x in 0..m {
        for y in (x + 1)..m {
            for z in (y + 1)..m {
                if [(x, y), (y, z), (x, z)].iter().any(|&(u, v)| p[u][v] == 0.5) {
                    ties += 1;
                    continue;
                }
                let perms = [(x, y, z), (x, z, y), (y, x, z), (y, z, x), (z, x, y), (z, y, x)];
                let Some(&(a, a1, a2)) = perms.iter().find(|&&(a, a1, a2)| p[a][a1] > 0.5 && p[a1][a2] > 0.5) else {
                    unreachable!("a tie-free tournament on three items has a two-step chain");
                };
                triples += 1;
                let top = p[a][a1].max(p[a1][a2]);
                weak += usize::from(p[a][a2] > 0.5);
                strong += usize::from(p[a][a2] > top);
                excess += p[a][a2] - top;
            }
        }
    }
    let frac = |k: usize| if triples == 0 { 0.0 } else { k as f64 / triples as f64 };
    Ok(TransitivityStats {
        triples,
        ties,
        weak_fraction: frac(weak),
        strong_fraction: frac(strong),
        mean_excess: if triples == 0 { 0.0 } else { excess / triples as f64 },
    })
}
