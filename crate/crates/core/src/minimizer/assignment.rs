//! Discrete Monge problem on equal-weight clouds.

use super::cloud::Cloud;
use crate::error::{Error, Result};

/// Default size limit of the exact solver.
pub const N_EXACT: usize = 2000;

/// `T(x_i) = y_{σ(i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub sigma: Vec<usize>,
    /// `(1/N) Σ |x_i − y_{σ(i)}|`.
    pub monge: f64,
    /// `monge − dual bound`; zero certifies optimality.
    pub gap: f64,
    pub exact: bool,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn monge_cost(c: &Cloud, sigma: &[usize]) -> f64 {
    c.source.iter().zip(sigma).map(|(&x, &s)| dist(x, c.target[s])).sum::<f64>() / c.len() as f64
}

pub fn is_permutation(sigma: &[usize]) -> bool {
    let mut seen = vec![false; sigma.len()];
    sigma.iter().all(|&s| s < seen.len() && !std::mem::replace(&mut seen[s], true))
}

impl Assignment {
    pub fn from_sigma(c: &Cloud, sigma: Vec<usize>, exact: bool) -> Result<Self> {
        if sigma.len() != c.len() || !is_permutation(&sigma) {
            return Err(Error::Validation("assignment is not a permutation of the cloud".into()));
        }
        let monge = monge_cost(c, &sigma);
        Ok(Self { gap: monge - c.dual_bound(), sigma, monge, exact })
    }

    pub fn identity(c: &Cloud) -> Self {
        Self::from_sigma(c, (0..c.len()).collect(), false).expect("identity is a permutation")
    }
}

/// Shortest augmenting path with row and column potentials (`O(N³)`).
pub fn solve_assignment_exact(cost: impl Fn(usize, usize) -> f64, n: usize) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row matched to column j (1-based, 0 = free); way[j]: previous column on the path.
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|m| *m = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut sigma = vec![0; n];
    for j in 1..=n {
        sigma[p[j] - 1] = j - 1;
    }
    sigma
}

/// Within each stratum, sources and targets sorted by the potential are
/// paired in order; then pairwise 2-opt exchanges inside strata until no
/// exchange lowers the cost or `max_passes` is reached.
pub fn solve_assignment_greedy(c: &Cloud, max_passes: usize) -> Assignment {
    let pot = c.potential;
    let n_strata = c.stratum_counts().len();
    let mut members = vec![Vec::new(); n_strata];
    for (i, &s) in c.stratum.iter().enumerate() {
        members[s].push(i);
    }
    let mut sigma = vec![0; c.len()];
    for m in &members {
        let mut src = m.clone();
        let mut dst = m.clone();
        src.sort_by(|&a, &b| pot.value(c.source[a]).total_cmp(&pot.value(c.source[b])).then(a.cmp(&b)));
        dst.sort_by(|&a, &b| pot.value(c.target[a]).total_cmp(&pot.value(c.target[b])).then(a.cmp(&b)));
        for (a, b) in src.into_iter().zip(dst) {
            sigma[a] = b;
        }
    }
    for _ in 0..max_passes {
        let mut improved = false;
        for m in &members {
            for (ia, &a) in m.iter().enumerate() {
                for &b in &m[ia + 1..] {
                    let before = dist(c.source[a], c.target[sigma[a]]) + dist(c.source[b], c.target[sigma[b]]);
                    let after = dist(c.source[a], c.target[sigma[b]]) + dist(c.source[b], c.target[sigma[a]]);
                    if after < before - 1e-15 {
                        sigma.swap(a, b);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    Assignment::from_sigma(c, sigma, false).expect("greedy builds a permutation")
}

/// Exact solver up to `n_exact` points, greedy with 2-opt above.
pub fn solve_assignment_monge(c: &Cloud, n_exact: usize) -> Assignment {
    if c.len() <= n_exact {
        let sigma = solve_assignment_exact(|i, j| dist(c.source[i], c.target[j]), c.len());
        Assignment::from_sigma(c, sigma, true).expect("solver returns a permutation")
    } else {
        solve_assignment_greedy(c, 4)
    }
}
