//! Factorial sweeps over network size, Confederate share and strategies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_until_convergence, ModelParams, Population, Recording, SimState, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::netgen::{generate_scale_free, init_influence_matrix, Adjacency};
use crate::strategies::{select_confederates, PerturbationStrategy, Perturber, SelectionStrategy};

/// Mean and standard deviation of the susceptibility distribution.
pub const SUSCEPTIBILITY_MEAN: f64 = 0.1;
pub const SUSCEPTIBILITY_SD: f64 = 0.1;

/// Preferential-attachment edges per new node used by the experiments.
pub const DEFAULT_ATTACH: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub sizes: Vec<usize>,
    pub pcts: Vec<f64>,
    pub selections: Vec<SelectionStrategy>,
    pub perturbations: Vec<PerturbationStrategy>,
    pub replicates: usize,
    pub base_seed: u64,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            sizes: (1..=15).map(|k| k * 10).collect(),
            pcts: (1..=8).map(|k| (k * 5) as f64).collect(),
            selections: SelectionStrategy::ALL.to_vec(),
            perturbations: PerturbationStrategy::ALL.to_vec(),
            replicates: 5,
            base_seed: 1,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        let empty = |field, len: usize| {
            if len == 0 {
                Err(invalid(field, "must not be empty"))
            } else {
                Ok(())
            }
        };
        empty("sizes", self.sizes.len())?;
        empty("pcts", self.pcts.len())?;
        empty("selections", self.selections.len())?;
        empty("perturbations", self.perturbations.len())?;
        if self.replicates < 1 {
            return Err(invalid("replicates", "must be >= 1"));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 2) {
            return Err(invalid("sizes", format!("network sizes must be >= 2, got {n}")));
        }
        if let Some(&p) = self.pcts.iter().find(|p| !(**p >= 0.0 && **p <= 100.0)) {
            return Err(invalid("pcts", format!("percentages must lie in [0, 100], got {p}")));
        }
        Ok(())
    }

    /// Cells in canonical order: size, then percentage, selection, perturbation.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.sizes {
            for &pct in &self.pcts {
                for &selection in &self.selections {
                    for &perturbation in &self.perturbations {
                        cells.push(Cell {
                            n,
                            pct,
                            selection,
                            perturbation,
                        });
                    }
                }
            }
        }
        cells
    }
}

/// One configuration of the independent variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub pct: f64,
    pub selection: SelectionStrategy,
    pub perturbation: PerturbationStrategy,
}

impl Cell {
    /// `round(pct * n / 100)`, at least 1 unless `pct` is zero.
    pub fn confederate_count(&self) -> usize {
        if self.pct == 0.0 {
            0
        } else {
            ((self.pct * self.n as f64 / 100.0).round() as usize).max(1)
        }
    }
}

/// Run-level settings shared by every cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub params: ModelParams,
    /// Preferential-attachment edges per new node.
    pub attach: usize,
    /// Share network and susceptibility draws across strategy arms and
    /// Confederate shares of the same size and replicate.
    pub paired: bool,
    pub recording: Recording,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            attach: DEFAULT_ATTACH,
            paired: false,
            recording: Recording::Summary,
        }
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of words; stable across platforms and
/// releases.
pub fn mix_seed(words: &[u64]) -> u64 {
    words.iter().fold(0x5EED_u64, |h, &w| splitmix64(h ^ splitmix64(w)))
}

fn selection_tag(s: SelectionStrategy) -> u64 {
    s as u64 + 1
}

fn perturbation_tag(p: PerturbationStrategy) -> u64 {
    p as u64 + 11
}

/// Seed of one run: a hash of every coordinate of the run.
pub fn run_seed(base_seed: u64, cell: &Cell, replicate: usize) -> u64 {
    mix_seed(&[
        base_seed,
        cell.n as u64,
        cell.pct.to_bits(),
        selection_tag(cell.selection),
        perturbation_tag(cell.perturbation),
        replicate as u64,
    ])
}

/// Seed for the network and susceptibility draws. Depends only on size and
/// replicate when paired.
fn environment_seed(base_seed: u64, cell: &Cell, replicate: usize, paired: bool) -> u64 {
    if paired {
        mix_seed(&[base_seed, cell.n as u64, replicate as u64, 0xE7])
    } else {
        mix_seed(&[run_seed(base_seed, cell, replicate), 0xE7])
    }
}

/// Draws `n` susceptibilities from a normal distribution clamped to `[0, 1]`.
pub fn sample_susceptibility(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(SUSCEPTIBILITY_MEAN, SUSCEPTIBILITY_SD).expect("valid normal");
    (0..n).map(|_| normal.sample(&mut rng).clamp(0.0, 1.0)).collect()
}

/// Outcome of one simulation run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub cell: Cell,
    pub replicate: usize,
    pub seed: u64,
    pub confederates: Vec<usize>,
    pub converged: bool,
    pub convergence_t: usize,
    pub mu_hat: f64,
    /// Mean non-Confederate stance per step.
    pub mu: Vec<f64>,
    pub trajectory: Option<Trajectory>,
}

/// The per-run JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub n: usize,
    pub strategy: PerturbationStrategy,
    pub selection: SelectionStrategy,
    pub pct_confederates: f64,
    pub converged: bool,
    pub convergence_t: usize,
    pub mu_hat: f64,
}

impl RunRecord {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            seed: self.seed,
            n: self.cell.n,
            strategy: self.cell.perturbation,
            selection: self.cell.selection,
            pct_confederates: self.cell.pct,
            converged: self.converged,
            convergence_t: self.convergence_t,
            mu_hat: self.mu_hat,
        }
    }

    /// Fraction of non-Confederate final stances within `tol` of either pole.
    /// Needs a full trajectory.
    pub fn polarized_fraction(&self, tol: f64) -> Option<f64> {
        let traj = self.trajectory.as_ref()?;
        let last = traj.stances.last()?;
        let others: Vec<f64> = last
            .iter()
            .zip(&traj.confederate)
            .filter(|(_, &c)| !c)
            .map(|(&y, _)| y)
            .collect();
        let near = others
            .iter()
            .filter(|&&y| (1.0 - y).abs() <= tol || (y + 1.0).abs() <= tol)
            .count();
        Some(near as f64 / others.len() as f64)
    }
}

/// Builds and runs one replicate of a cell.
pub fn run_cell(cell: &Cell, replicate: usize, base_seed: u64, settings: &RunSettings) -> Result<RunRecord> {
    check_feasible(cell)?;
    let env = environment_seed(base_seed, cell, replicate, settings.paired);
    let adj = generate_scale_free(cell.n, settings.attach, mix_seed(&[env, 1]))?;
    run_on_network(&adj, cell, replicate, base_seed, settings)
}

fn check_feasible(cell: &Cell) -> Result<()> {
    let count = cell.confederate_count();
    if count >= cell.n {
        return Err(Error::InfeasibleConfederates { count, n: cell.n });
    }
    Ok(())
}

/// Like [`run_cell`] but on a given network; `cell.n` must match it.
pub fn run_on_network(
    adj: &Adjacency,
    cell: &Cell,
    replicate: usize,
    base_seed: u64,
    settings: &RunSettings,
) -> Result<RunRecord> {
    if adj.n() != cell.n {
        return Err(invalid(
            "n",
            format!("network has {} agents, cell expects {}", adj.n(), cell.n),
        ));
    }
    check_feasible(cell)?;
    let count = cell.confederate_count();
    let seed = run_seed(base_seed, cell, replicate);
    let env = environment_seed(base_seed, cell, replicate, settings.paired);

    let susceptibility = sample_susceptibility(cell.n, mix_seed(&[env, 2]));
    let w0 = init_influence_matrix(adj, settings.params.self_weight)?;
    let confederates = if count == 0 {
        Vec::new()
    } else {
        select_confederates(&w0, &susceptibility, cell.selection, count, mix_seed(&[seed, 3]))?
    };

    let pop = Population::consensus(susceptibility, &confederates)?;
    let state = SimState::new(adj, pop, &settings.params)?;
    let perturber = Perturber::new(cell.perturbation, &state.w, &state.pop, &settings.params);
    let out = run_until_convergence(state, &settings.params, &perturber, settings.recording)?;

    Ok(RunRecord {
        cell: *cell,
        replicate,
        seed,
        confederates,
        converged: out.converged,
        convergence_t: out.convergence_t,
        mu_hat: out.mu_hat,
        mu: out.mu,
        trajectory: out.trajectory,
    })
}

/// Replicate aggregates for one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub replicates: usize,
    /// Completed runs; `None` statistics when every run was skipped.
    pub mu_hat: Option<MeanStd>,
    pub convergence_t: Option<MeanStd>,
    pub skipped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub cell: Cell,
    pub replicate: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<CellSummary>,
    /// Completed runs in canonical (cell, replicate) order.
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl SweepResult {
    /// Cell summary lookup.
    pub fn cell(
        &self,
        n: usize,
        pct: f64,
        selection: SelectionStrategy,
        perturbation: PerturbationStrategy,
    ) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.cell.n == n && c.cell.pct == pct && c.cell.selection == selection && c.cell.perturbation == perturbation
        })
    }
}

/// Runs every (cell, replicate) pair on `workers` threads and aggregates per
/// cell. Output does not depend on `workers`.
pub fn sweep(grid: &ExperimentGrid, settings: &RunSettings, workers: usize) -> Result<SweepResult> {
    sweep_with(grid, settings, workers, |_| Ok(()))
}

/// [`sweep`] with a hook called on every completed run from the worker that
/// produced it. Trajectories are dropped after the hook returns; a hook
/// error counts as a failed run.
pub fn sweep_with<F>(grid: &ExperimentGrid, settings: &RunSettings, workers: usize, on_run: F) -> Result<SweepResult>
where
    F: Fn(&RunRecord) -> Result<()> + Sync,
{
    grid.validate()?;
    settings.params.validate()?;
    let cells = grid.cells();
    let units: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..grid.replicates).map(move |r| (c, r)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let outcomes: Vec<Result<RunRecord>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(c, r)| {
                let mut record = run_cell(&cells[c], r, grid.base_seed, settings)?;
                on_run(&record)?;
                record.trajectory = None;
                Ok(record)
            })
            .collect()
    });

    let mut summaries = Vec::with_capacity(cells.len());
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut outcomes = outcomes.into_iter();
    for cell in &cells {
        let mut mu = Vec::new();
        let mut conv = Vec::new();
        let mut skipped = 0;
        for replicate in 0..grid.replicates {
            match outcomes.next().expect("one outcome per unit") {
                Ok(record) => {
                    mu.push(record.mu_hat);
                    conv.push(record.convergence_t as f64);
                    runs.push(record);
                }
                Err(e) => {
                    skipped += 1;
                    failures.push(RunFailure {
                        cell: *cell,
                        replicate,
                        reason: e.to_string(),
                    });
                }
            }
        }
        summaries.push(CellSummary {
            cell: *cell,
            replicates: grid.replicates,
            mu_hat: MeanStd::of(&mu),
            convergence_t: MeanStd::of(&conv),
            skipped,
        });
    }

    Ok(SweepResult {
        cells: summaries,
        runs,
        failures,
    })
}

/// Where the mean stance flips as the Confederate share grows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TippingPoint {
    /// Consecutive levels `(p, p_next)` with the largest drop in mean stance.
    pub largest_drop: (f64, f64),
    pub drop: f64,
    /// First level whose mean stance is negative, if any.
    pub crossing: Option<f64>,
}

/// Locates the tipping point of a mean-stance curve over ascending
/// percentage levels.
pub fn detect_tipping_point(pcts: &[f64], means: &[f64]) -> Result<TippingPoint> {
    if pcts.len() != means.len() {
        return Err(invalid("pcts", "one mean per percentage level is required"));
    }
    if pcts.len() < 3 {
        return Err(Error::TooFewLevels(pcts.len()));
    }
    if pcts
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(invalid("pcts", "percentage levels must be strictly ascending"));
    }
    let mut best = 0;
    let mut drop = f64::NEG_INFINITY;
    for k in 0..pcts.len() - 1 {
        let d = means[k] - means[k + 1];
        if d > drop {
            drop = d;
            best = k;
        }
    }
    Ok(TippingPoint {
        largest_drop: (pcts[best], pcts[best + 1]),
        drop,
        crossing: pcts.iter().zip(means).find(|(_, &m)| m < 0.0).map(|(&p, _)| p),
    })
}

/// Mean-stance curve over percentage for one (n, selection, perturbation)
/// slice of a sweep, ascending in percentage. Cells without completed runs
/// are left out.
pub fn tipping_curve(
    result: &SweepResult,
    n: usize,
    selection: SelectionStrategy,
    perturbation: PerturbationStrategy,
) -> (Vec<f64>, Vec<f64>) {
    let mut points: Vec<(f64, f64)> = result
        .cells
        .iter()
        .filter(|c| c.cell.n == n && c.cell.selection == selection && c.cell.perturbation == perturbation)
        .filter_map(|c| c.mu_hat.map(|m| (c.cell.pct, m.mean)))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    points.into_iter().unzip()
}

/// Confederate stance and global influence over time, for the single
/// Confederate trade-off scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffSeries {
    pub confederate: usize,
    pub stance: Vec<f64>,
    pub influence: Vec<f64>,
    pub record: RunRecord,
}

impl TradeoffSeries {
    /// Number of times the stance leaves `-1` (by more than `tol`) and later
    /// returns to it.
    pub fn excursions(&self, tol: f64) -> usize {
        let mut away = false;
        let mut count = 0;
        for &y in &self.stance {
            let at_target = y <= -1.0 + tol;
            if away && at_target {
                count += 1;
            }
            away = !at_target;
        }
        count
    }
}

/// One max-influence Confederate using the conversion strategy on an
/// `n`-agent network, with the full trajectory recorded.
pub fn tradeoff_scenario(n: usize, seed: u64, settings: &RunSettings) -> Result<TradeoffSeries> {
    let cell = Cell {
        n,
        pct: 100.0 / n as f64,
        selection: SelectionStrategy::MaxInfluence,
        perturbation: PerturbationStrategy::Conversion,
    };
    let settings = RunSettings {
        recording: Recording::Full,
        ..settings.clone()
    };
    let record = run_cell(&cell, 0, seed, &settings)?;
    let confederate = record.confederates[0];
    let traj = record.trajectory.as_ref().expect("full recording");
    let stance = traj.stances.iter().map(|y| y[confederate]).collect();
    let influence = traj.global_influence.iter().map(|g| g[confederate]).collect();
    Ok(TradeoffSeries {
        confederate,
        stance,
        influence,
        record,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(n: usize, pct: f64) -> Cell {
        Cell {
            n,
            pct,
            selection: SelectionStrategy::MaxInfluence,
            perturbation: PerturbationStrategy::Cascade,
        }
    }

    #[test]
    fn default_grid_shape() {
        let grid = ExperimentGrid::default();
        assert_eq!(grid.sizes.len(), 15);
        assert_eq!(grid.pcts, vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]);
        assert_eq!(grid.cells().len(), 1080);
    }

    #[test]
    fn confederate_rounding() {
        assert_eq!(cell(10, 5.0).confederate_count(), 1);
        assert_eq!(cell(80, 20.0).confederate_count(), 16);
        assert_eq!(cell(30, 5.0).confederate_count(), 2);
        assert_eq!(cell(80, 0.0).confederate_count(), 0);
        assert_eq!(cell(80, 1.25).confederate_count(), 1);
    }

    #[test]
    fn no_confederates_is_consensus() {
        let settings = RunSettings::default();
        let rec = run_cell(&cell(80, 0.0), 0, 7, &settings).unwrap();
        assert_eq!(rec.mu_hat, 1.0);
        assert!(rec.converged);
        assert_eq!(rec.convergence_t, settings.params.conv_window);
    }

    #[test]
    fn run_cell_is_deterministic() {
        let settings = RunSettings::default();
        let a = run_cell(&cell(80, 20.0), 2, 7, &settings).unwrap();
        let b = run_cell(&cell(80, 20.0), 2, 7, &settings).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.confederates.len(), 16);
    }

    #[test]
    fn infeasible_cell_is_an_error() {
        let err = run_cell(&cell(10, 100.0), 0, 1, &RunSettings::default()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleConfederates { count: 10, n: 10 }));
    }

    #[test]
    fn seeds_differ_across_coordinates() {
        let base = run_seed(1, &cell(80, 20.0), 0);
        assert_ne!(base, run_seed(1, &cell(80, 20.0), 1));
        assert_ne!(base, run_seed(2, &cell(80, 20.0), 0));
        assert_ne!(base, run_seed(1, &cell(80, 25.0), 0));
        let mut other = cell(80, 20.0);
        other.perturbation = PerturbationStrategy::Conversion;
        assert_ne!(base, run_seed(1, &other, 0));
    }

    #[test]
    fn paired_runs_share_susceptibility() {
        let settings = RunSettings {
            paired: true,
            ..RunSettings::default()
        };
        let a = cell(40, 20.0);
        let b = Cell {
            perturbation: PerturbationStrategy::Conservative,
            pct: 10.0,
            ..a
        };
        assert_eq!(
            environment_seed(3, &a, 1, settings.paired),
            environment_seed(3, &b, 1, settings.paired)
        );
        assert_ne!(environment_seed(3, &a, 1, false), environment_seed(3, &b, 1, false));
    }

    #[test]
    fn susceptibility_is_clamped() {
        let s = sample_susceptibility(5000, 4);
        assert!(s.iter().all(|&x| (0.0..=1.0).contains(&x)));
        // about 16% of N(0.1, 0.1) draws are negative
        let zeros = s.iter().filter(|&&x| x == 0.0).count() as f64 / 5000.0;
        assert!((0.12..0.20).contains(&zeros), "{zeros}");
    }

    #[test]
    fn single_cell_sweep_aggregates() {
        let grid = ExperimentGrid {
            sizes: vec![20],
            pcts: vec![20.0],
            selections: vec![SelectionStrategy::Random],
            perturbations: vec![PerturbationStrategy::Conversion],
            replicates: 5,
            base_seed: 3,
        };
        let res = sweep(&grid, &RunSettings::default(), 2).unwrap();
        assert_eq!(res.runs.len(), 5);
        assert_eq!(res.cells.len(), 1);
        let c = &res.cells[0];
        let mean = res.runs.iter().map(|r| r.mu_hat).sum::<f64>() / 5.0;
        assert!((c.mu_hat.unwrap().mean - mean).abs() < 1e-15);
        assert!(c.mu_hat.unwrap().std >= 0.0);
        assert_eq!(c.skipped, 0);
    }

    #[test]
    fn sweep_records_skips() {
        let grid = ExperimentGrid {
            sizes: vec![4],
            pcts: vec![100.0],
            replicates: 2,
            selections: vec![SelectionStrategy::Random],
            perturbations: vec![PerturbationStrategy::Cascade],
            base_seed: 0,
        };
        let res = sweep(&grid, &RunSettings::default(), 1).unwrap();
        assert_eq!(res.cells[0].skipped, 2);
        assert!(res.cells[0].mu_hat.is_none());
        assert_eq!(res.failures.len(), 2);
    }

    #[test]
    fn tipping_examples() {
        let pcts = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
        let tp = detect_tipping_point(&pcts, &[1.0, 1.0, 1.0, -0.8, -0.9, -0.95]).unwrap();
        assert_eq!(tp.largest_drop, (15.0, 20.0));
        assert_eq!(tp.crossing, Some(20.0));

        let flat = detect_tipping_point(&pcts, &[1.0; 6]).unwrap();
        assert_eq!(flat.crossing, None);

        assert!(matches!(
            detect_tipping_point(&[5.0, 10.0], &[1.0, 0.0]),
            Err(Error::TooFewLevels(2))
        ));
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std, 1.0);
        assert_eq!(MeanStd::of(&[4.0]).unwrap().std, 0.0);
        assert!(MeanStd::of(&[]).is_none());
    }

    #[test]
    fn tradeoff_shapes() {
        let series = tradeoff_scenario(80, 1, &RunSettings::default()).unwrap();
        assert_eq!(series.stance.len(), series.influence.len());
        assert_eq!(series.stance.len(), series.record.convergence_t + 1);
        assert_eq!(series.record.confederates.len(), 1);
        assert_eq!(series.stance[0], -1.0);
        let again = tradeoff_scenario(80, 1, &RunSettings::default()).unwrap();
        assert_eq!(series, again);
    }

    #[test]
    fn excursion_counting() {
        let series = TradeoffSeries {
            confederate: 0,
            stance: vec![-1.0, -0.5, -1.0, -1.0, 0.2, -1.0, 0.0],
            influence: vec![0.0; 7],
            record: run_cell(&cell(20, 0.0), 0, 0, &RunSettings::default()).unwrap(),
        };
        assert_eq!(series.excursions(1e-9), 2);
    }
}
