//! Confederate selection and per-step Confederate stance overrides.
//!
//! Influence of agent `k` is measured on the non-Confederate rows of the
//! influence matrix only: `Σ_j w[j][k]` for non-Confederate `j`. Both the
//! global and the local (top-`m` ego network) measures are normalized by the
//! maximum of the same quantity over all agents.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{mean_nonconfederate_stance, ModelParams, Population, StanceOverride};
use crate::error::{invalid, Error, Result};
use crate::netgen::InfluenceMatrix;

/// The stance Confederates push the network towards.
pub const TARGET_STANCE: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SelectionStrategy {
    #[serde(rename = "max-influence")]
    MaxInfluence,
    #[serde(rename = "min-susceptibility")]
    MinSusceptibility,
    #[serde(rename = "random")]
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationStrategy {
    Conservative,
    Conversion,
    Cascade,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 3] = [
        SelectionStrategy::MaxInfluence,
        SelectionStrategy::MinSusceptibility,
        SelectionStrategy::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionStrategy::MaxInfluence => "max-influence",
            SelectionStrategy::MinSusceptibility => "min-susceptibility",
            SelectionStrategy::Random => "random",
        }
    }
}

impl PerturbationStrategy {
    pub const ALL: [PerturbationStrategy; 3] = [
        PerturbationStrategy::Conservative,
        PerturbationStrategy::Conversion,
        PerturbationStrategy::Cascade,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbationStrategy::Conservative => "conservative",
            PerturbationStrategy::Conversion => "conversion",
            PerturbationStrategy::Cascade => "cascade",
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for PerturbationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            invalid(
                "selection",
                format!("expected max-influence|min-susceptibility|random, got `{s}`"),
            )
        })
    }
}

impl FromStr for PerturbationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            invalid(
                "perturbation",
                format!("expected conservative|conversion|cascade, got `{s}`"),
            )
        })
    }
}

/// Indices of the `k` largest (or smallest) scores, ties broken by lowest
/// index, returned in ascending index order.
pub fn rank_top_k(scores: &[f64], k: usize, largest: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let by_score = scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal);
        let by_score = if largest { by_score.reverse() } else { by_score };
        by_score.then(a.cmp(&b))
    });
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Picks `count` Confederates. Returned ids are sorted ascending.
///
/// * `MaxInfluence`: largest column sums of the initial matrix.
/// * `MinSusceptibility`: smallest susceptibilities.
/// * `Random`: uniform sample without replacement, driven by `seed`.
pub fn select_confederates(
    w0: &InfluenceMatrix,
    susceptibility: &[f64],
    strategy: SelectionStrategy,
    count: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let n = w0.n();
    if susceptibility.len() != n {
        return Err(Error::InvalidPopulation(format!(
            "{} susceptibilities for {n} agents",
            susceptibility.len()
        )));
    }
    if count == 0 || count >= n {
        return Err(Error::InfeasibleConfederates { count, n });
    }
    Ok(match strategy {
        SelectionStrategy::MaxInfluence => rank_top_k(&w0.column_sums(), count, true),
        SelectionStrategy::MinSusceptibility => rank_top_k(susceptibility, count, false),
        SelectionStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = index::sample(&mut rng, n, count).into_vec();
            picked.sort_unstable();
            picked
        }
    })
}

/// Raw column sums restricted to the given rows.
pub fn influence_column_sums(w: &InfluenceMatrix, rows: &[usize]) -> Vec<f64> {
    let mut sums = vec![0.0; w.n()];
    for &j in rows {
        for (s, &x) in sums.iter_mut().zip(w.row(j)) {
            *s += x;
        }
    }
    sums
}

fn normalize_by_max(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        values.iter().map(|v| v / max).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Normalized global influence of every agent.
pub fn global_influence_all(w: &InfluenceMatrix, non_confederates: &[usize]) -> Vec<f64> {
    normalize_by_max(&influence_column_sums(w, non_confederates))
}

/// Global influence of agent `i`: its column sum over the non-Confederate
/// rows divided by the largest such sum over all agents.
pub fn global_influence(w: &InfluenceMatrix, i: usize, non_confederates: &[usize]) -> f64 {
    global_influence_all(w, non_confederates)[i]
}

/// For column `k`, the `m` non-Confederates placing the most weight on `k`
/// (ties by lowest id), sorted by id, plus their summed weight.
fn top_m_column(
    w: &InfluenceMatrix,
    k: usize,
    rows: &[usize],
    m: usize,
    scratch: &mut Vec<(f64, usize)>,
) -> (f64, Vec<usize>) {
    scratch.clear();
    scratch.extend(rows.iter().map(|&j| (w.get(j, k), j)));
    let cmp = |a: &(f64, usize), b: &(f64, usize)| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
    let m = m.min(scratch.len());
    if m < scratch.len() {
        scratch.select_nth_unstable_by(m, cmp);
    }
    let mut top: Vec<usize> = scratch[..m].iter().map(|&(_, j)| j).collect();
    // summing in id order makes m = |rows| reproduce the column sum exactly
    top.sort_unstable();
    let sum = top.iter().map(|&j| w.get(j, k)).sum();
    (sum, top)
}

/// Top-`m` sums for every column.
fn top_m_sums(w: &InfluenceMatrix, rows: &[usize], m: usize) -> Vec<f64> {
    let mut scratch = Vec::with_capacity(rows.len());
    (0..w.n())
        .map(|k| top_m_column(w, k, rows, m, &mut scratch).0)
        .collect()
}

/// Local influence of agent `i` over its `m` most influenced non-Confederates,
/// normalized by the largest top-`m` sum over all agents. Also returns that
/// top set in ascending id order.
pub fn local_influence(w: &InfluenceMatrix, i: usize, non_confederates: &[usize], m: usize) -> (f64, Vec<usize>) {
    let mut scratch = Vec::new();
    let (own, top) = top_m_column(w, i, non_confederates, m, &mut scratch);
    let max = top_m_sums(w, non_confederates, m).into_iter().fold(0.0, f64::max);
    let normalized = if max > 0.0 { own / max } else { 0.0 };
    (normalized, top)
}

/// `-1` while raw influence exceeds `theta`, otherwise blend in at `mu`.
pub fn conservative_stance(raw_influence: f64, theta: f64, mu: f64) -> f64 {
    if raw_influence > theta {
        TARGET_STANCE
    } else {
        mu
    }
}

/// Interpolates from `mu` towards `-1` in proportion to `influence`.
pub fn nudged_stance(mu: f64, influence: f64) -> f64 {
    mu + influence * (TARGET_STANCE - mu)
}

pub fn perturb_conservative(w: &InfluenceMatrix, pop: &Population, i: usize, theta: f64) -> Result<f64> {
    let raw = influence_column_sums(w, pop.non_confederates())[i];
    Ok(conservative_stance(raw, theta, mean_nonconfederate_stance(pop)?))
}

pub fn perturb_conversion(w: &InfluenceMatrix, pop: &Population, i: usize) -> Result<f64> {
    let wg = global_influence(w, i, pop.non_confederates());
    Ok(nudged_stance(mean_nonconfederate_stance(pop)?, wg))
}

pub fn perturb_cascade(w: &InfluenceMatrix, pop: &Population, i: usize, m: usize) -> Result<f64> {
    let (wl, top) = local_influence(w, i, pop.non_confederates(), m);
    Ok(nudged_stance(mean_of(pop.stances(), &top)?, wl))
}

fn mean_of(y: &[f64], ids: &[usize]) -> Result<f64> {
    if ids.is_empty() {
        return Err(Error::NoNonConfederates);
    }
    Ok(ids.iter().map(|&j| y[j]).sum::<f64>() / ids.len() as f64)
}

/// Default cascade ego-network size: `floor(m_frac * non_confederates)`,
/// at least 1 and at most the non-Confederate count.
pub fn ego_size(m_frac: f64, non_confederates: usize) -> usize {
    ((m_frac * non_confederates as f64).floor() as usize).clamp(1, non_confederates.max(1))
}

/// A perturbation strategy bound to one run.
#[derive(Clone, Debug)]
pub struct Perturber {
    kind: PerturbationStrategy,
    /// Per-agent threshold; only Confederate entries are meaningful.
    theta: Vec<f64>,
    m: usize,
}

impl Perturber {
    /// Resolves the run-level constants from the initial matrix: thresholds
    /// default to each Confederate's raw influence at `t = 0`.
    pub fn new(kind: PerturbationStrategy, w0: &InfluenceMatrix, pop: &Population, params: &ModelParams) -> Self {
        let theta = match params.theta {
            Some(theta) => vec![theta; w0.n()],
            None => influence_column_sums(w0, pop.non_confederates()),
        };
        Self {
            kind,
            theta,
            m: ego_size(params.m_frac, pop.non_confederates().len()),
        }
    }

    /// Overrides the cascade ego-network size.
    pub fn with_ego_size(mut self, m: usize) -> Self {
        self.m = m.max(1);
        self
    }

    pub fn kind(&self) -> PerturbationStrategy {
        self.kind
    }

    pub fn ego_size(&self) -> usize {
        self.m
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.theta[i]
    }
}

impl StanceOverride for Perturber {
    fn override_stances(&self, w: &InfluenceMatrix, pop: &Population) -> Vec<(usize, f64)> {
        let confederates = pop.confederates();
        if confederates.is_empty() {
            return Vec::new();
        }
        let rows = pop.non_confederates();
        let y = pop.stances();
        let mu = rows.iter().map(|&j| y[j]).sum::<f64>() / rows.len() as f64;
        match self.kind {
            PerturbationStrategy::Conservative => {
                let raw = influence_column_sums(w, rows);
                confederates
                    .iter()
                    .map(|&i| (i, conservative_stance(raw[i], self.theta[i], mu)))
                    .collect()
            }
            PerturbationStrategy::Conversion => {
                let wg = global_influence_all(w, rows);
                confederates.iter().map(|&i| (i, nudged_stance(mu, wg[i]))).collect()
            }
            PerturbationStrategy::Cascade => {
                let sums = top_m_sums(w, rows, self.m);
                let max = sums.iter().copied().fold(0.0, f64::max);
                let mut scratch = Vec::with_capacity(rows.len());
                confederates
                    .iter()
                    .map(|&i| {
                        let (own, top) = top_m_column(w, i, rows, self.m, &mut scratch);
                        let wl = if max > 0.0 { own / max } else { 0.0 };
                        let local_mu = top.iter().map(|&j| y[j]).sum::<f64>() / top.len() as f64;
                        (i, nudged_stance(local_mu, wl))
                    })
                    .collect()
            }
        }
    }
}
