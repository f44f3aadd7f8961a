//! Simulated annealing over permutations for the discrete `J_ε`.

use super::assignment::{monge_cost, Assignment};
use super::cloud::Cloud;
use super::dirichlet::{nearest_neighbors, DirichletModel, FitState, Touch};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    /// Temperature factor between levels.
    pub cooling: f64,
    /// Number of levels; each level makes `N` proposals.
    pub proposals_per_point: usize,
    /// Probability of drawing the partner among the `k` nearest neighbours
    /// rather than among the `wide` nearest.
    pub local_fraction: f64,
    pub wide: usize,
    /// Zero-temperature proposals per point after the last level.
    pub greedy_tail_per_point: usize,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            cooling: 0.95,
            proposals_per_point: 200,
            local_fraction: 0.8,
            wide: 30,
            greedy_tail_per_point: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    pub assignment: Assignment,
    /// `monge + ε · dirichlet`.
    pub objective: f64,
    pub monge: f64,
    pub dirichlet: f64,
    pub init_objective: f64,
    /// Accepted fraction of the proposals made at positive temperature.
    pub accept_rate: f64,
}

struct State<'a> {
    c: &'a Cloud,
    model: &'a DirichletModel,
    eps: f64,
    sigma: Vec<usize>,
    fit: FitState,
    effect: Vec<Touch>,
}

impl State<'_> {
    fn dist(&self, i: usize, s: usize) -> f64 {
        let (x, y) = (self.c.source[i], self.c.target[s]);
        (x[0] - y[0]).hypot(x[1] - y[1])
    }

    /// Objective change of exchanging the targets of `a` and `b`; fills the effect list.
    fn delta(&mut self, a: usize, b: usize) -> f64 {
        let (sa, sb) = (self.sigma[a], self.sigma[b]);
        let n = self.c.len() as f64;
        let dm = (self.dist(a, sb) + self.dist(b, sa) - self.dist(a, sa) - self.dist(b, sb)) / n;
        if self.eps == 0.0 {
            return dm;
        }
        let (ya, yb) = (self.c.target[sa], self.c.target[sb]);
        self.model.swap_effect(a, b, &mut self.effect);
        dm + self.eps * self.model.swap_delta(&self.fit, &self.effect, [yb[0] - ya[0], yb[1] - ya[1]])
    }

    /// Applies the swap whose effect list was filled by the last `delta` call.
    fn apply(&mut self, a: usize, b: usize) {
        if self.eps != 0.0 {
            let (ya, yb) = (self.c.target[self.sigma[a]], self.c.target[self.sigma[b]]);
            self.model.apply_swap(&mut self.fit, &self.effect, [yb[0] - ya[0], yb[1] - ya[1]]);
        }
        self.sigma.swap(a, b);
    }
}

fn objective(c: &Cloud, model: &DirichletModel, sigma: &[usize]) -> (f64, f64) {
    let m = monge_cost(c, sigma);
    let d = model.energy(c, sigma);
    (m, d)
}

/// Minimizes `monge + ε · dirichlet` by exchanging pairs of targets. The
/// best state seen is returned, so the result is never worse than `init`.
pub fn anneal_j_eps(
    c: &Cloud,
    model: &DirichletModel,
    eps: f64,
    init: &Assignment,
    s: &AnnealSchedule,
) -> Result<AnnealResult> {
    if !(eps >= 0.0) {
        return Err(Error::Validation(format!("epsilon {eps} must be non-negative")));
    }
    if init.sigma.len() != c.len() {
        return Err(Error::Validation("initial assignment does not match the cloud".into()));
    }
    let n = c.len();
    let wide = nearest_neighbors(&c.source, s.wide.max(model.k) + 1);
    let local: Vec<Vec<usize>> = wide.iter().map(|l| l[1..model.k.min(l.len())].to_vec()).collect();
    let wide: Vec<Vec<usize>> = wide.into_iter().map(|l| l[1..].to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ eps.to_bits().rotate_left(17));
    let mut st =
        State { c, model, eps, sigma: init.sigma.clone(), fit: model.state(c, &init.sigma), effect: Vec::new() };
    let (m0, d0) = objective(c, model, &init.sigma);
    let init_objective = m0 + eps * d0;
    let mut current = init_objective;
    let mut best = current;
    let mut best_sigma = st.sigma.clone();

    let propose = |rng: &mut ChaCha8Rng| {
        let a = rng.random_range(0..n);
        let list = if rng.random::<f64>() < s.local_fraction { &local[a] } else { &wide[a] };
        (a, list[rng.random_range(0..list.len())])
    };

    // Initial temperature: mean uphill step of random proposals.
    let mut up = (0.0, 0usize);
    for _ in 0..n.min(2000) {
        let (a, b) = propose(&mut rng);
        let d = st.delta(a, b);
        if d > 0.0 {
            up = (up.0 + d, up.1 + 1);
        }
    }
    let mut temp = if up.1 > 0 { up.0 / up.1 as f64 } else { 0.0 };
    let (mut accepted, mut proposed) = (0usize, 0usize);
    for _ in 0..s.proposals_per_point {
        for _ in 0..n {
            let (a, b) = propose(&mut rng);
            let d = st.delta(a, b);
            proposed += 1;
            if d <= 0.0 || (temp > 0.0 && rng.random::<f64>() < (-d / temp).exp()) {
                st.apply(a, b);
                current += d;
                accepted += 1;
            }
        }
        if current < best {
            best = current;
            best_sigma.clone_from(&st.sigma);
        }
        temp *= s.cooling;
    }
    // Zero temperature: strictly improving exchanges only, starting from the best state.
    if best < current {
        st.sigma.clone_from(&best_sigma);
        st.fit = model.state(c, &st.sigma);
        current = best;
    }
    for _ in 0..s.greedy_tail_per_point * n {
        let (a, b) = propose(&mut rng);
        let d = st.delta(a, b);
        if d < 0.0 {
            st.apply(a, b);
            current += d;
        }
    }
    let _ = current;
    let (m, dir) = objective(c, model, &st.sigma);
    let (sigma, monge, dirichlet) =
        if m + eps * dir <= init_objective { (st.sigma, m, dir) } else { (init.sigma.clone(), m0, d0) };
    let assignment = Assignment::from_sigma(c, sigma, false)?;
    Ok(AnnealResult {
        assignment,
        objective: monge + eps * dirichlet,
        monge,
        dirichlet,
        init_objective,
        accept_rate: if proposed > 0 { accepted as f64 / proposed as f64 } else { 0.0 },
    })
}
