#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stance_core::experiment::sample_susceptibility;
use stance_core::{
    generate_scale_free, init_influence_matrix, select_confederates, step, EdgeMask, Hold, InfluenceMatrix,
    ModelParams, PerturbationStrategy, Perturber, Population, SelectionStrategy, SimState, StanceForm,
};

/// Direct matrix translation of the model without Confederates:
/// `y' = a∘(W y) + (1 - a)∘base`, `W' = rownorm(max(0, λ y' y'ᵀ + (1 - λ) W))`.
pub struct Oracle {
    pub w: DMatrix<f64>,
    pub y: DVector<f64>,
    anchor: DVector<f64>,
    a: DVector<f64>,
    lambda: f64,
    form: StanceForm,
}

impl Oracle {
    pub fn new(w: &[f64], y: &[f64], s: &[f64], alpha: f64, lambda: f64, form: StanceForm) -> Self {
        let n = y.len();
        let y = DVector::from_column_slice(y);
        Self {
            w: DMatrix::from_row_slice(n, n, w),
            anchor: y.clone(),
            y,
            a: DVector::from_iterator(n, s.iter().map(|s| alpha * s)),
            lambda,
            form,
        }
    }

    pub fn step(&mut self) {
        let n = self.y.len();
        let base = match self.form {
            StanceForm::Anchored => self.anchor.clone(),
            StanceForm::Incremental => self.y.clone(),
        };
        let heard = &self.w * &self.y;
        let ones = DVector::from_element(n, 1.0);
        let y = self.a.component_mul(&heard) + (ones - &self.a).component_mul(&base);
        self.y = y.map(|v| v.clamp(-1.0, 1.0));

        let mut w = (&self.y * self.y.transpose()) * self.lambda + &self.w * (1.0 - self.lambda);
        w.apply(|x| *x = x.max(0.0));
        for i in 0..n {
            let sum: f64 = w.row(i).sum();
            if sum > 0.0 {
                let mut row = w.row_mut(i);
                row /= sum;
            } else {
                w[(i, i)] = 1.0;
            }
        }
        self.w = w;
    }
}

/// Random dense row-stochastic matrix.
pub fn random_stochastic(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.05..1.0)).collect();
    for row in w.chunks_mut(n) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    w
}

/// Largest absolute difference between engine and oracle over `steps`
/// steps on a random dense instance with `n` agents.
pub fn oracle_max_error(n: usize, steps: usize, form: StanceForm, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_stochastic(n, &mut rng);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    let alpha = rng.random_range(0.1..=1.0);
    let lambda = rng.random_range(0.0..=0.5);

    let params = ModelParams {
        alpha,
        lambda,
        stance_form: form,
        edge_mask: EdgeMask::Dense,
        ..ModelParams::default()
    };
    let pop = Population::new(y.clone(), s.clone(), vec![false; n]).unwrap();
    let matrix = InfluenceMatrix::from_row_major(n, w.clone()).unwrap();
    let mut state = SimState::from_parts(matrix, pop, EdgeMask::Dense).unwrap();
    let mut oracle = Oracle::new(&w, &y, &s, alpha, lambda, form);

    let mut worst = 0.0f64;
    for _ in 0..steps {
        step(&mut state, &params, &Hold).unwrap();
        oracle.step();
        for i in 0..n {
            worst = worst.max((state.pop.stances()[i] - oracle.y[i]).abs());
            for j in 0..n {
                worst = worst.max((state.w.get(i, j) - oracle.w[(i, j)]).abs());
            }
        }
    }
    worst
}

/// Counts of invariant violations over a whole run.
#[derive(Debug, Default, Clone, Copy)]
pub struct Violations {
    pub steps: usize,
    pub stance_bounds: usize,
    pub row_sums: usize,
    pub negative: usize,
    pub sparsity: usize,
}

impl Violations {
    pub fn total(&self) -> usize {
        self.stance_bounds + self.row_sums + self.negative + self.sparsity
    }
}

/// Runs a full simulation step by step, checking the structural invariants
/// after every step.
pub fn checked_run(
    n: usize,
    pct: f64,
    selection: SelectionStrategy,
    perturbation: PerturbationStrategy,
    params: &ModelParams,
    seed: u64,
) -> Violations {
    let adj = generate_scale_free(n, 2, seed).unwrap();
    let s = sample_susceptibility(n, seed ^ 0xA5);
    let w0 = init_influence_matrix(&adj, params.self_weight).unwrap();
    let count = ((pct * n as f64 / 100.0).round() as usize).max(1);
    let confederates = select_confederates(&w0, &s, selection, count, seed).unwrap();
    let pop = Population::consensus(s, &confederates).unwrap();
    let mut state = SimState::new(&adj, pop, params).unwrap();
    let perturber = Perturber::new(perturbation, &state.w, &state.pop, params);
    let initial: Vec<bool> = w0.as_slice().iter().map(|&x| x > 0.0).collect();

    let mut v = Violations::default();
    loop {
        step(&mut state, params, &perturber).unwrap();
        v.steps += 1;
        if state.pop.stances().iter().any(|y| !(-1.0..=1.0).contains(y)) {
            v.stance_bounds += 1;
        }
        if state.w.max_row_sum_deviation() > 1e-9 {
            v.row_sums += 1;
        }
        if state.w.min_entry() < 0.0 {
            v.negative += 1;
        }
        if params.edge_mask == EdgeMask::Sparse {
            let grew = state
                .w
                .as_slice()
                .iter()
                .enumerate()
                // a row that collapses to zero falls back to a self-loop
                .any(|(k, &x)| x != 0.0 && !initial[k] && k / n != k % n);
            if grew {
                v.sparsity += 1;
            }
        }
        let window = params.conv_window;
        let converged = state.t >= window
            && state.history().len() == window
            && state.history().sum::<f64>() / (window as f64) < params.conv_tol;
        if converged || state.t >= params.max_steps {
            return v;
        }
    }
}
