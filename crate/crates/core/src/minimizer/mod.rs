//! Independent estimate of `inf J_ε` over equal-mass point-cloud maps.
//!
//! A discrete map is a permutation pairing source points with target points,
//! so the pushforward constraint holds exactly. The objective is
//! `(1/N) Σ|x_i − y_{σ(i)}| + ε D(σ)` with the k-NN Dirichlet energy `D`.

pub mod anneal;
pub mod assignment;
pub mod cloud;
pub mod dirichlet;
pub mod fit;

pub use anneal::{anneal_j_eps, AnnealResult, AnnealSchedule};
pub use assignment::{solve_assignment_exact, solve_assignment_greedy, solve_assignment_monge, Assignment, N_EXACT};
pub use cloud::{rectangle_instance, sample_clouds, Cloud, Potential};
pub use dirichlet::{discrete_dirichlet, nearest_neighbors, DirichletModel, DirichletReport, FitState};
pub use fit::{fit_asymptotics, FitResult};

use crate::domain::Problem;
use crate::error::Result;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub k: usize,
    /// Weight of the fit-residual term of the discrete Dirichlet energy.
    pub residual_weight: f64,
    pub n_exact: usize,
    pub schedule: AnnealSchedule,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { k: 10, residual_weight: 1.0, n_exact: N_EXACT, schedule: AnnealSchedule::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeRow {
    pub eps: f64,
    pub j: f64,
    pub monge: f64,
    pub dirichlet: f64,
    pub accept_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeRun {
    pub rows: Vec<MinimizeRow>,
    /// Cost of the initial (optimal or near-optimal) assignment.
    pub monge_optimum: f64,
    /// Dual lower bound of the cloud; equals `monge_optimum` when the gap is zero.
    pub dual_bound: f64,
    /// Dirichlet energy of the initial assignment.
    pub init_dirichlet: f64,
    pub init_exact: bool,
}

/// Samples one cloud, solves the assignment problem once and anneals from the
/// optimal assignment for every `ε` (jobs run in parallel, results in input order).
pub fn minimize(
    problem: &Problem,
    n: usize,
    eps_list: &[f64],
    seed: u64,
    opts: &MinimizeOptions,
) -> Result<MinimizeRun> {
    let c = sample_clouds(&problem.densities, &problem.target, n, seed)?;
    let model = DirichletModel::new(&c, opts.k, opts.residual_weight)?;
    let init = solve_assignment_monge(&c, opts.n_exact);
    let init_dirichlet = model.energy(&c, &init.sigma);
    let rows = eps_list
        .par_iter()
        .map(|&eps| -> Result<MinimizeRow> {
            let schedule = AnnealSchedule { seed, ..opts.schedule.clone() };
            let r = anneal_j_eps(&c, &model, eps, &init, &schedule)?;
            Ok(MinimizeRow { eps, j: r.objective, monge: r.monge, dirichlet: r.dirichlet, accept_rate: r.accept_rate })
        })
        .collect::<Result<_>>()?;
    Ok(MinimizeRun {
        rows,
        monge_optimum: init.monge,
        dual_bound: c.dual_bound(),
        init_dirichlet,
        init_exact: init.exact,
    })
}

/// Dirichlet energies of three optimal assignments of the rectangle instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionResult {
    /// Row-wise monotone pairing.
    pub monotone: f64,
    /// Pairing by the tent map, as built.
    pub tent: f64,
    /// Annealed from the monotone pairing at the given `ε`.
    pub annealed: f64,
    pub annealed_monge_excess: f64,
}

pub fn selection_experiment(
    alpha: f64,
    rows: usize,
    cols: usize,
    eps: f64,
    opts: &MinimizeOptions,
) -> Result<SelectionResult> {
    let c = rectangle_instance(alpha, rows, cols)?;
    let model = DirichletModel::new(&c, opts.k, opts.residual_weight)?;
    let schedule = &opts.schedule;
    let mono = solve_assignment_greedy(&c, 0);
    let tent = Assignment::identity(&c);
    let r = anneal_j_eps(&c, &model, eps, &mono, schedule)?;
    Ok(SelectionResult {
        monotone: model.energy(&c, &mono.sigma),
        tent: model.energy(&c, &tent.sigma),
        annealed: r.dirichlet,
        annealed_monge_excess: r.monge - mono.monge,
    })
}
