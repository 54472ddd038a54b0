//! Coupled stance/influence recurrences and convergence detection.
//!
//! One timestep runs, in order:
//!
//! 1. the stance update for every non-Confederate, a Friedkin-style pull
//!    towards the weighted average of the agents it listens to;
//! 2. the Confederate overrides, computed from the current influence matrix
//!    and the freshly updated non-Confederate stances;
//! 3. the homophily update of the influence matrix, clipped to nonnegative
//!    weights and renormalized per row;
//! 4. bookkeeping (`t += 1`, convergence history).

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::netgen::{init_influence_matrix, normalize_row_in_place, Adjacency, InfluenceMatrix};
use crate::strategies::global_influence_all;

/// Which stance the non-Confederates are anchored to in the stance update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StanceForm {
    /// `y(t) = αA W y(t-1) + (I - αA) y(1)`: pulled back to the initial stance.
    Anchored,
    /// `y(t) = αA W y(t-1) + (I - αA) y(t-1)`: drifts from the previous stance.
    Incremental,
}

/// Which influence entries the homophily update may populate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMask {
    /// Only entries nonzero in the initial matrix (the network's edges, plus
    /// the diagonal when it starts with self-weight).
    Sparse,
    /// Every entry, so the outer product may connect any pair.
    Dense,
}

impl fmt::Display for StanceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StanceForm::Anchored => "anchored",
            StanceForm::Incremental => "incremental",
        })
    }
}

impl FromStr for StanceForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anchored" => Ok(StanceForm::Anchored),
            "incremental" => Ok(StanceForm::Incremental),
            other => Err(invalid(
                "stance_form",
                format!("expected anchored|incremental, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for EdgeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeMask::Sparse => "sparse",
            EdgeMask::Dense => "dense",
        })
    }
}

impl FromStr for EdgeMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" | "existing-edges-only" => Ok(EdgeMask::Sparse),
            "dense" => Ok(EdgeMask::Dense),
            other => Err(invalid("edge_mask", format!("expected sparse|dense, got `{other}`"))),
        }
    }
}

/// Update rates, strategy constants and stopping rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Multiplier on each agent's susceptibility in the stance update.
    pub alpha: f64,
    /// Rate of structural learning in the influence update.
    pub lambda: f64,
    /// Conservative-strategy threshold. `None` means each Confederate's own
    /// raw influence at `t = 0`.
    pub theta: Option<f64>,
    /// Cascade ego-network size as a fraction of the non-Confederate count.
    pub m_frac: f64,
    pub conv_window: usize,
    pub conv_tol: f64,
    pub max_steps: usize,
    pub stance_form: StanceForm,
    pub edge_mask: EdgeMask,
    /// Diagonal mass of the initial influence matrix.
    pub self_weight: f64,
}

/// Default multiplier on susceptibility. With the susceptibility scale
/// (`s ~ N(0.1, 0.1)`) this already gives a per-step coupling of ~0.1; a
/// further factor of 1e-3 leaves every stance within 2e-4 of its previous
/// value, below the convergence tolerance.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Stance update rate quoted alongside `λ = 0.01`; usable via `--alpha`.
pub const LITERAL_ALPHA: f64 = 0.001;

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            lambda: 0.01,
            theta: None,
            m_frac: 0.1,
            conv_window: 30,
            conv_tol: 0.001,
            max_steps: 5000,
            stance_form: StanceForm::Incremental,
            edge_mask: EdgeMask::Sparse,
            self_weight: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(invalid("lambda", format!("must lie in [0, 1], got {}", self.lambda)));
        }
        if let Some(theta) = self.theta {
            if theta.is_nan() || theta < 0.0 {
                return Err(invalid("theta", format!("must be >= 0, got {theta}")));
            }
        }
        if !(self.m_frac > 0.0 && self.m_frac <= 1.0) {
            return Err(invalid("m_frac", format!("must lie in (0, 1], got {}", self.m_frac)));
        }
        if self.conv_window < 1 {
            return Err(invalid("conv_window", "must be >= 1"));
        }
        if self.conv_tol.is_nan() || self.conv_tol < 0.0 {
            return Err(invalid("conv_tol", format!("must be >= 0, got {}", self.conv_tol)));
        }
        if self.max_steps <= self.conv_window {
            return Err(invalid(
                "max_steps",
                format!("must exceed conv_window ({}), got {}", self.conv_window, self.max_steps),
            ));
        }
        if !(0.0..1.0).contains(&self.self_weight) {
            return Err(invalid(
                "self_weight",
                format!("must lie in [0, 1), got {}", self.self_weight),
            ));
        }
        Ok(())
    }
}

/// Per-agent stances, anchors, susceptibilities and Confederate flags.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    y: Vec<f64>,
    anchor: Vec<f64>,
    s: Vec<f64>,
    confederate: Vec<bool>,
    confederates: Vec<usize>,
    others: Vec<usize>,
}

impl Population {
    /// `stances` doubles as the anchor `y(1)`. Confederates must have zero
    /// susceptibility.
    pub fn new(stances: Vec<f64>, susceptibility: Vec<f64>, confederate: Vec<bool>) -> Result<Self> {
        let n = stances.len();
        if susceptibility.len() != n || confederate.len() != n {
            return Err(Error::InvalidPopulation(format!(
                "length mismatch: {} stances, {} susceptibilities, {} flags",
                n,
                susceptibility.len(),
                confederate.len()
            )));
        }
        if let Some(i) = stances.iter().position(|y| !(-1.0..=1.0).contains(y)) {
            return Err(Error::InvalidPopulation(format!(
                "stance of agent {i} outside [-1, 1]: {}",
                stances[i]
            )));
        }
        if let Some(i) = susceptibility.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidPopulation(format!(
                "susceptibility of agent {i} outside [0, 1]: {}",
                susceptibility[i]
            )));
        }
        if let Some(i) = (0..n).find(|&i| confederate[i] && susceptibility[i] != 0.0) {
            return Err(Error::InvalidPopulation(format!(
                "Confederate {i} has nonzero susceptibility"
            )));
        }
        let (confederates, others) = (0..n).partition(|&i| confederate[i]);
        Ok(Self {
            anchor: stances.clone(),
            y: stances,
            s: susceptibility,
            confederate,
            confederates,
            others,
        })
    }

    /// Consensus at `+1` for everyone, `-1` for the Confederates, whose
    /// susceptibility is forced to zero.
    pub fn consensus(mut susceptibility: Vec<f64>, confederates: &[usize]) -> Result<Self> {
        let n = susceptibility.len();
        let mut flags = vec![false; n];
        let mut y = vec![1.0; n];
        for &c in confederates {
            if c >= n {
                return Err(Error::InvalidPopulation(format!("Confederate id {c} out of range")));
            }
            flags[c] = true;
            y[c] = -1.0;
            susceptibility[c] = 0.0;
        }
        Self::new(y, susceptibility, flags)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn stances(&self) -> &[f64] {
        &self.y
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn susceptibility(&self) -> &[f64] {
        &self.s
    }

    pub fn is_confederate(&self, i: usize) -> bool {
        self.confederate[i]
    }

    /// Confederate ids in ascending order.
    pub fn confederates(&self) -> &[usize] {
        &self.confederates
    }

    /// Non-Confederate ids in ascending order.
    pub fn non_confederates(&self) -> &[usize] {
        &self.others
    }

    pub(crate) fn set_stance(&mut self, i: usize, y: f64) {
        self.y[i] = y.clamp(-1.0, 1.0);
    }
}

/// Everything that evolves during a run.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: usize,
    pub w: InfluenceMatrix,
    pub pop: Population,
    /// Entries the homophily update may keep nonzero; `None` means dense.
    allowed: Option<Vec<bool>>,
    /// Absolute per-step changes of the non-Confederate mean, newest last.
    history: VecDeque<f64>,
    last_mu: f64,
}

impl SimState {
    /// Initial state on a network, with the influence matrix built from the
    /// topology and `params.self_weight`.
    pub fn new(adj: &Adjacency, pop: Population, params: &ModelParams) -> Result<Self> {
        if adj.n() != pop.n() {
            return Err(Error::InvalidPopulation(format!(
                "network has {} agents, population has {}",
                adj.n(),
                pop.n()
            )));
        }
        let w = init_influence_matrix(adj, params.self_weight)?;
        Self::from_parts(w, pop, params.edge_mask)
    }

    /// Initial state from an explicit matrix. In sparse mode the allowed
    /// pattern is the matrix's nonzero pattern.
    pub fn from_parts(w: InfluenceMatrix, pop: Population, mask: EdgeMask) -> Result<Self> {
        if w.n() != pop.n() {
            return Err(Error::InvalidPopulation(format!(
                "matrix is {0}x{0}, population has {1} agents",
                w.n(),
                pop.n()
            )));
        }
        let allowed = match mask {
            EdgeMask::Sparse => Some(w.as_slice().iter().map(|&x| x > 0.0).collect()),
            EdgeMask::Dense => None,
        };
        let last_mu = mean_nonconfederate_stance(&pop)?;
        Ok(Self {
            t: 0,
            w,
            pop,
            allowed,
            history: VecDeque::new(),
            last_mu,
        })
    }

    /// Whether the homophily update may populate `(i, j)`.
    pub fn is_allowed(&self, i: usize, j: usize) -> bool {
        self.allowed.as_ref().is_none_or(|a| a[i * self.w.n() + j])
    }

    /// Mean stance of the non-Confederates after the latest step.
    pub fn mu(&self) -> f64 {
        self.last_mu
    }

    /// Absolute per-step changes of the mean over the trailing window.
    pub fn history(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    fn is_converged(&self, params: &ModelParams) -> bool {
        self.t >= params.conv_window
            && self.history.len() == params.conv_window
            && self.history.iter().sum::<f64>() / (params.conv_window as f64) < params.conv_tol
    }
}

/// Sets Confederate stances once the non-Confederates have moved.
pub trait StanceOverride {
    /// Returns `(agent, stance)` for every Confederate, computed from the
    /// current matrix and stances.
    fn override_stances(&self, w: &InfluenceMatrix, pop: &Population) -> Vec<(usize, f64)>;
}

/// Leaves Confederate stances where they are.
#[derive(Clone, Copy, Debug, Default)]
pub struct Hold;

impl StanceOverride for Hold {
    fn override_stances(&self, _: &InfluenceMatrix, _: &Population) -> Vec<(usize, f64)> {
        Vec::new()
    }
}

/// New stance vector after the non-Confederate update. Confederate entries
/// are copied through unchanged.
pub fn stance_step(state: &SimState, params: &ModelParams) -> Vec<f64> {
    let pop = &state.pop;
    let y = pop.stances();
    let base = match params.stance_form {
        StanceForm::Anchored => pop.anchor(),
        StanceForm::Incremental => y,
    };
    let mut next = y.to_vec();
    for &i in pop.non_confederates() {
        let a = params.alpha * pop.susceptibility()[i];
        // a·Wy + (1 - a)·base rewritten as base + a·Σ w (y - base), which
        // equals it for stochastic rows and keeps consensus an exact fixed point
        let b = base[i];
        let pull: f64 = state.w.row(i).iter().zip(y).map(|(w, y)| w * (y - b)).sum();
        next[i] = (b + a * pull).clamp(-1.0, 1.0);
    }
    next
}

/// Homophily update `λ y yᵀ + (1 - λ) W`, clipped at zero, masked, and
/// renormalized row by row.
pub fn influence_step(state: &SimState, params: &ModelParams) -> InfluenceMatrix {
    let n = state.w.n();
    let y = state.pop.stances();
    let lambda = params.lambda;
    let mut next = state.w.clone();
    let data = next.as_mut_slice();
    for i in 0..n {
        let row = &mut data[i * n..(i + 1) * n];
        for (j, x) in row.iter_mut().enumerate() {
            *x = if state.is_allowed(i, j) {
                (lambda * y[i] * y[j] + (1.0 - lambda) * *x).max(0.0)
            } else {
                0.0
            };
        }
        normalize_row_in_place(row, i);
    }
    next
}

/// Mean stance over the non-Confederates.
pub fn mean_nonconfederate_stance(pop: &Population) -> Result<f64> {
    let others = pop.non_confederates();
    if others.is_empty() {
        return Err(Error::NoNonConfederates);
    }
    let y = pop.stances();
    Ok(others.iter().map(|&i| y[i]).sum::<f64>() / others.len() as f64)
}

/// Advances the state by one timestep.
pub fn step(state: &mut SimState, params: &ModelParams, strategy: &dyn StanceOverride) -> Result<()> {
    let next = stance_step(state, params);
    state.pop.y = next;
    for (i, y) in strategy.override_stances(&state.w, &state.pop) {
        debug_assert!(state.pop.is_confederate(i));
        state.pop.set_stance(i, y);
    }
    state.w = influence_step(state, params);
    state.t += 1;

    let mu = mean_nonconfederate_stance(&state.pop)?;
    state.history.push_back((mu - state.last_mu).abs());
    if state.history.len() > params.conv_window {
        state.history.pop_front();
    }
    state.last_mu = mu;
    Ok(())
}

/// How much of the run to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Recording {
    /// Mean stance per step only.
    #[default]
    Summary,
    /// Per-agent stances and global influence at every step as well.
    Full,
}

/// Per-agent series indexed by timestep, starting at `t = 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub stances: Vec<Vec<f64>>,
    pub global_influence: Vec<Vec<f64>>,
    pub confederate: Vec<bool>,
}

/// Result of [`run_until_convergence`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub converged: bool,
    /// Step at which the run stopped (`max_steps` if it did not converge).
    pub convergence_t: usize,
    /// Mean non-Confederate stance at the final step.
    pub mu_hat: f64,
    /// Mean non-Confederate stance at every step, starting at `t = 0`.
    pub mu: Vec<f64>,
    pub trajectory: Option<Trajectory>,
}

/// Steps until the mean absolute per-step change of the non-Confederate mean
/// over the trailing `conv_window` steps drops below `conv_tol`, or until
/// `max_steps`.
pub fn run_until_convergence(
    mut state: SimState,
    params: &ModelParams,
    strategy: &dyn StanceOverride,
    recording: Recording,
) -> Result<RunOutput> {
    params.validate()?;
    let mut mu = vec![state.mu()];
    let mut trajectory = match recording {
        Recording::Summary => None,
        Recording::Full => Some(Trajectory {
            confederate: (0..state.pop.n()).map(|i| state.pop.is_confederate(i)).collect(),
            ..Trajectory::default()
        }),
    };
    let record = |traj: &mut Option<Trajectory>, state: &SimState| {
        if let Some(traj) = traj {
            traj.stances.push(state.pop.stances().to_vec());
            traj.global_influence
                .push(global_influence_all(&state.w, state.pop.non_confederates()));
        }
    };
    record(&mut trajectory, &state);

    let mut converged = false;
    while state.t < params.max_steps {
        step(&mut state, params, strategy)?;
        mu.push(state.mu());
        record(&mut trajectory, &state);
        if state.is_converged(params) {
            converged = true;
            break;
        }
    }

    Ok(RunOutput {
        converged,
        convergence_t: state.t,
        mu_hat: state.mu(),
        mu,
        trajectory,
    })
}
