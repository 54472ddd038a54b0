//! Simulation of intentional stance perturbation on scale-free influence
//! networks.
//!
//! Agents hold a stance in `[-1, 1]` and listen to their neighbors through a
//! row-stochastic influence matrix. Stances drift towards what agents hear;
//! the influence matrix drifts towards like-minded agents (homophily). A set
//! of Confederates overrides its own stances every step to drag the network
//! towards `-1` without losing the influence that makes this possible.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod netgen;
pub mod strategies;

pub use dynamics::{
    influence_step, mean_nonconfederate_stance, run_until_convergence, stance_step, step, EdgeMask, Hold, ModelParams,
    Population, Recording, RunOutput, SimState, StanceForm, StanceOverride, Trajectory,
};
pub use error::{Error, Result};
pub use experiment::{
    detect_tipping_point, run_cell, run_on_network, sweep, sweep_with, tipping_curve, tradeoff_scenario, Cell,
    CellSummary, ExperimentGrid, MeanStd, RunRecord, RunSettings, RunSummary, SweepResult, TippingPoint,
    TradeoffSeries,
};
pub use netgen::{generate_scale_free, init_influence_matrix, row_normalize, Adjacency, InfluenceMatrix};
pub use strategies::{
    global_influence, local_influence, perturb_cascade, perturb_conservative, perturb_conversion, select_confederates,
    PerturbationStrategy, Perturber, SelectionStrategy,
};
