//! The constant `K` and curve `Φ`: the smallest discrete `H¹(0, π/2)` norm
//! among curves lying above `R₁`.
//!
//! The quadratic form is tridiagonal, `E(φ) = φᵀAφ` with `A = M + S`
//! (trapezoid mass plus forward-difference stiffness), so a primal-dual
//! active-set iteration solves one tridiagonal system per step and terminates
//! in finitely many steps for this M-matrix. An accelerated projected
//! gradient method serves as fallback and as an independent cross-check.

use crate::domain::AngularGrid;
use crate::error::{Error, Result};
use crate::stencil;

/// Samples of a function of `θ` on a uniform angular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    values: Vec<f64>,
    dtheta: f64,
}

impl Curve {
    pub fn new(grid: &AngularGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples on a {}-node grid", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("curve values must be finite".into()));
        }
        Ok(Self { values, dtheta: grid.dtheta() })
    }

    pub fn from_fn(grid: &AngularGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { values: grid.nodes().iter().map(|&t| f(t)).collect(), dtheta: grid.dtheta() }
    }

    pub fn constant(grid: &AngularGrid, c: f64) -> Self {
        Self { values: vec![c; grid.len()], dtheta: grid.dtheta() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn shares_grid(&self, other: &Curve) -> bool {
        self.values.len() == other.values.len() && self.dtheta == other.dtheta
    }

    fn check(&self, other: &Curve) -> Result<()> {
        if self.shares_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch("curves live on different angular grids".into()))
        }
    }

    pub fn zip_with(&self, other: &Curve, f: impl Fn(f64, f64) -> f64) -> Result<Curve> {
        self.check(other)?;
        Ok(Curve {
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
            dtheta: self.dtheta,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Curve {
        Curve { values: self.values.iter().map(|&v| f(v)).collect(), dtheta: self.dtheta }
    }

    pub fn h1_norm_sq(&self) -> f64 {
        stencil::h1_inner(&self.values, &self.values, self.dtheta)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        stencil::l2_inner(&self.values, &self.values, self.dtheta)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Discrete `H¹` inner product of two curves.
pub fn h1_inner(a: &Curve, b: &Curve) -> Result<f64> {
    a.check(b)?;
    Ok(stencil::h1_inner(&a.values, &b.values, a.dtheta))
}

/// `G(φ) = ‖φ‖²_{H¹} − K`.
pub fn g_value(phi: &Curve, k: f64) -> f64 {
    phi.h1_norm_sq() - k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleMethod {
    ActiveSet,
    ProjectedGradient,
}

#[derive(Debug, Clone)]
pub struct ObstacleSolution {
    pub phi: Curve,
    pub k: f64,
    pub r1: Curve,
    pub active: Vec<bool>,
    /// Multipliers scaled by the nodal mass, i.e. in units of `−φ″ + φ`.
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub method: ObstacleMethod,
}

/// Rows of the tridiagonal operator `A`.
struct Operator {
    diag: Vec<f64>,
    off: f64,
    mass: Vec<f64>,
}

impl Operator {
    fn new(n: usize, h: f64) -> Self {
        let mass: Vec<f64> = (0..n).map(|j| stencil::trap_weight(j, n) * h).collect();
        let diag = (0..n)
            .map(|j| {
                let edges = if j == 0 || j + 1 == n { 1.0 } else { 2.0 };
                mass[j] + edges / h
            })
            .collect();
        Self { diag, off: -1.0 / h, mass }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|j| {
                let mut v = self.diag[j] * x[j];
                if j > 0 {
                    v += self.off * x[j - 1];
                }
                if j + 1 < n {
                    v += self.off * x[j + 1];
                }
                v
            })
            .collect()
    }

    /// Residual `(Aφ)_j / m_j`, the `−φ″ + φ` stencil.
    fn scaled_residual(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x).iter().zip(&self.mass).map(|(a, m)| a / m).collect()
    }
}

/// Thomas algorithm for rows `lower[j] x_{j−1} + diag[j] x_j + upper[j] x_{j+1} = rhs[j]`.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for j in 1..n {
        let m = diag[j] - lower[j] * c[j - 1];
        c[j] = if j + 1 < n { upper[j] / m } else { 0.0 };
        d[j] = (rhs[j] - lower[j] * d[j - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for j in (0..n - 1).rev() {
        x[j] = d[j] - c[j] * x[j + 1];
    }
    x
}

/// Worst KKT violation and the multipliers. Stationarity and the multiplier
/// sign are measured relative to `diag(A) · max|φ|`, which keeps the test
/// meaningful at rounding level on fine grids where `A` has entries of size `1/Δθ`.
fn kkt_residual(op: &Operator, phi: &[f64], r1: &[f64], active: &[bool]) -> (f64, Vec<f64>) {
    let grad = op.apply(phi);
    let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    let mut mult = vec![0.0; phi.len()];
    for j in 0..phi.len() {
        let rel = grad[j] / (op.diag[j] * scale);
        if active[j] {
            mult[j] = grad[j] / op.mass[j];
            worst = worst.max(-rel).max((phi[j] - r1[j]).abs() / scale);
        } else {
            worst = worst.max(rel.abs()).max((r1[j] - phi[j]) / scale);
        }
    }
    (worst, mult)
}

/// Nodes within rounding distance of the obstacle and pushed against it.
fn identify_active(op: &Operator, x: &[f64], obs: &[f64]) -> Vec<bool> {
    let grad = op.apply(x);
    x.iter().zip(obs).zip(&grad).map(|((a, o), g)| a - o <= 1e-9 * (1.0 + o.abs()) && *g >= 0.0).collect()
}

const MAX_ACTIVE_SET_ITERATIONS: usize = 500;

/// Minimises `‖φ‖²_{H¹}` subject to `φ ≥ R₁` with free ends.
pub fn solve_obstacle(r1: &Curve, tol: f64) -> Result<ObstacleSolution> {
    let n = r1.len();
    if n < 3 {
        return Err(Error::Validation("obstacle needs at least 3 nodes".into()));
    }
    let h = r1.dtheta;
    let op = Operator::new(n, h);
    let obs = &r1.values;
    let mut phi = obs.clone();
    let res0 = op.scaled_residual(&phi);
    let mut active: Vec<bool> = res0.iter().map(|&l| l > 0.0).collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for j in 0..n {
            if active[j] {
                rhs[j] = obs[j];
            } else {
                diag[j] = op.diag[j];
                if j > 0 {
                    lower[j] = op.off;
                }
                if j + 1 < n {
                    upper[j] = op.off;
                }
            }
        }
        phi = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        let res = op.scaled_residual(&phi);
        let next: Vec<bool> = (0..n)
            .map(|j| {
                let lam = if active[j] { res[j] } else { 0.0 };
                lam + (obs[j] - phi[j]) > 0.0
            })
            .collect();
        if next == active || iterations >= MAX_ACTIVE_SET_ITERATIONS {
            break;
        }
        active = next;
    }
    for j in 0..n {
        if !active[j] && phi[j] < obs[j] {
            phi[j] = obs[j];
        }
    }
    let (resid, mult) = kkt_residual(&op, &phi, obs, &active);
    if resid <= tol {
        let phi = Curve { values: phi, dtheta: h };
        return Ok(ObstacleSolution {
            k: phi.h1_norm_sq(),
            phi,
            r1: r1.clone(),
            active,
            multipliers: mult,
            kkt_residual: resid,
            iterations,
            method: ObstacleMethod::ActiveSet,
        });
    }
    solve_obstacle_projected_gradient(r1, tol, 200_000)
}

/// Accelerated projected gradient with adaptive restart. Slow on fine grids
/// (the condition number grows like `Δθ⁻²`) but independent of the active-set logic.
pub fn solve_obstacle_projected_gradient(r1: &Curve, tol: f64, max_iter: usize) -> Result<ObstacleSolution> {
    let n = r1.len();
    let h = r1.dtheta;
    let op = Operator::new(n, h);
    let obs = &r1.values;
    // Gershgorin bound on the largest eigenvalue of 2A.
    let lip = 2.0 * (0..n).map(|j| op.diag[j] + 2.0 * op.off.abs()).fold(0.0, f64::max);
    let project = |x: &mut Vec<f64>| {
        for (v, o) in x.iter_mut().zip(obs) {
            *v = v.max(*o);
        }
    };
    let energy = |x: &[f64]| -> f64 { x.iter().zip(op.apply(x)).map(|(a, b)| a * b).sum() };
    let mut x = obs.clone();
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut e_prev = energy(&x);
    let mut resid = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let grad = op.apply(&y);
        let mut xn: Vec<f64> = y.iter().zip(&grad).map(|(v, g)| v - 2.0 * g / lip).collect();
        project(&mut xn);
        let e = energy(&xn);
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if e > e_prev {
            // Restart momentum.
            t = 1.0;
            y = x.clone();
            continue;
        }
        y = xn.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / tn * (a - b)).collect();
        x = xn;
        t = tn;
        e_prev = e;
        if it % 50 == 0 {
            let active = identify_active(&op, &x, obs);
            resid = kkt_residual(&op, &x, obs, &active).0;
            if resid <= tol {
                break;
            }
        }
    }
    let active = identify_active(&op, &x, obs);
    for j in 0..n {
        if active[j] {
            x[j] = obs[j];
        }
    }
    let (r, mult) = kkt_residual(&op, &x, obs, &active);
    resid = resid.min(r);
    if r > tol {
        return Err(Error::NonConvergence { iterations: it, residual: resid });
    }
    let phi = Curve { values: x, dtheta: h };
    Ok(ObstacleSolution {
        k: phi.h1_norm_sq(),
        phi,
        r1: r1.clone(),
        active,
        multipliers: mult,
        kkt_residual: r,
        iterations: it,
        method: ObstacleMethod::ProjectedGradient,
    })
}

/// `G(φ) − ‖φ − Φ‖²_{H¹}`, which equals `2⟨Φ, φ − Φ⟩` and is non-negative for feasible `φ`.
pub fn projection_gap(phi: &Curve, sol: &ObstacleSolution) -> Result<f64> {
    phi.check(&sol.phi)?;
    let tol = 1e-12;
    if let Some(j) = (0..phi.len()).find(|&j| phi.values[j] < sol.r1.values[j] - tol) {
        return Err(Error::Infeasible(format!("phi below the obstacle at node {j}")));
    }
    let diff = phi.zip_with(&sol.phi, |a, b| a - b)?;
    Ok(g_value(phi, sol.k) - diff.h1_norm_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::notched_r1;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_obstacle_gives_nine_pi_over_eight() {
        let g = AngularGrid::new(2001).unwrap();
        let sol = solve_obstacle(&Curve::constant(&g, 1.5), 1e-10).unwrap();
        assert!(((sol.k - 9.0 * PI / 8.0) / (9.0 * PI / 8.0)).abs() < 1e-4);
        assert!(sol.phi.values().iter().all(|&v| (v - 1.5).abs() < 1e-14));
        assert_eq!(sol.method, ObstacleMethod::ActiveSet);
    }

    #[test]
    fn zero_obstacle_is_inactive() {
        let g = AngularGrid::new(51).unwrap();
        let sol = solve_obstacle(&Curve::constant(&g, 0.0), 1e-10).unwrap();
        assert!(sol.k.abs() < 1e-20);
        assert!(sol.phi.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn projected_gradient_agrees_with_active_set() {
        let g = AngularGrid::new(61).unwrap();
        let r1 = Curve::from_fn(&g, notched_r1);
        let a = solve_obstacle(&r1, 1e-10).unwrap();
        let b = solve_obstacle_projected_gradient(&r1, 1e-8, 2_000_000).unwrap();
        assert!((a.k - b.k).abs() < 1e-8);
        for (x, y) in a.phi.values().iter().zip(b.phi.values()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    /// On every inactive run the solution solves `φ″ = φ`; compare with the
    /// closed-form sinh bridge through the bounding contact values.
    fn bridge_error(sol: &ObstacleSolution, grid: &AngularGrid) -> f64 {
        let th = grid.nodes();
        let (phi, r1) = (sol.phi.values(), sol.r1.values());
        let n = th.len();
        let mut worst: f64 = 0.0;
        let mut j = 0;
        while j < n {
            if sol.active[j] {
                j += 1;
                continue;
            }
            let start = j;
            while j < n && !sol.active[j] {
                j += 1;
            }
            assert!(start > 0 && j < n, "inactive run touches the boundary");
            let (a, b) = (th[start - 1], th[j]);
            let (va, vb) = (r1[start - 1], r1[j]);
            for k in start..j {
                let t = th[k];
                let exact = (va * (b - t).sinh() + vb * (t - a).sinh()) / (b - a).sinh();
                worst = worst.max((phi[k] - exact).abs());
            }
        }
        worst
    }

    #[test]
    fn notched_obstacle_bridge() {
        let g = AngularGrid::new(2001).unwrap();
        let sol = solve_obstacle(&Curve::from_fn(&g, notched_r1), 1e-10).unwrap();
        assert!(sol.active.iter().any(|a| !a));
        assert!(bridge_error(&sol, &g) < 1e-4);
        assert!(sol.kkt_residual < 1e-10);
        // Φ sits above the obstacle and dips into the notch.
        assert!(sol.phi.values().iter().zip(sol.r1.values()).all(|(p, o)| p >= o));
        assert!(sol.phi.min() < 1.5 - 1e-3);
    }

    #[test]
    fn inner_product_examples() {
        let g = AngularGrid::new(2001).unwrap();
        let one = Curve::constant(&g, 1.0);
        assert!((h1_inner(&one, &one).unwrap() - PI / 2.0).abs() < 1e-14);
        let s = Curve::from_fn(&g, f64::sin);
        let c = Curve::from_fn(&g, f64::cos);
        assert!(h1_inner(&s, &c).unwrap().abs() < 1e-6);
        assert!((h1_inner(&s, &s).unwrap() - s.h1_norm_sq()).abs() < 1e-15);
        let other = Curve::constant(&AngularGrid::new(11).unwrap(), 1.0);
        assert!(h1_inner(&one, &other).is_err());
    }

    #[test]
    fn g_value_examples() {
        let g = AngularGrid::new(401).unwrap();
        let sol = solve_obstacle(&Curve::from_fn(&g, notched_r1), 1e-10).unwrap();
        assert!(g_value(&sol.phi, sol.k).abs() < 1e-10);
        let up = sol.phi.map(|v| v + 1.0);
        let expect = 2.0 * h1_inner(&sol.phi, &Curve::constant(&g, 1.0)).unwrap() + PI / 2.0;
        assert!((g_value(&up, sol.k) - expect).abs() < 1e-10);
        let twice = sol.phi.map(|v| 2.0 * v);
        assert!((g_value(&twice, sol.k) - 3.0 * sol.k).abs() < 1e-10);
    }

    #[test]
    fn projection_gap_examples() {
        let g = AngularGrid::new(401).unwrap();
        let sol = solve_obstacle(&Curve::from_fn(&g, notched_r1), 1e-10).unwrap();
        assert!(projection_gap(&sol.phi, &sol).unwrap().abs() < 1e-10);
        let c = 0.3;
        let gap = projection_gap(&sol.phi.map(|v| v + c), &sol).unwrap();
        let expect = 2.0 * h1_inner(&sol.phi, &Curve::constant(&g, c)).unwrap();
        assert!((gap - expect).abs() < 1e-10);
        assert!(projection_gap(&sol.phi.map(|v| v - 0.5), &sol).is_err());
    }

    #[test]
    fn complementary_slackness() {
        let g = AngularGrid::new(801).unwrap();
        let sol = solve_obstacle(&Curve::from_fn(&g, notched_r1), 1e-10).unwrap();
        let op = Operator::new(g.len(), g.dtheta());
        let grad = op.apply(sol.phi.values());
        for (j, gj) in grad.iter().enumerate() {
            let rel = gj / (op.diag[j] * sol.phi.max());
            assert!(((sol.phi.values()[j] - sol.r1.values()[j]) * rel).abs() < 1e-10);
        }
    }

    #[test]
    fn k_is_monotone_in_the_obstacle() {
        let g = AngularGrid::new(301).unwrap();
        let hi = solve_obstacle(&Curve::from_fn(&g, notched_r1), 1e-10).unwrap();
        let lo = solve_obstacle(&Curve::from_fn(&g, |t| notched_r1(t) - 0.1 * t.sin()), 1e-10).unwrap();
        assert!(lo.k < hi.k);
    }

    #[test]
    fn k_converges_at_second_order() {
        let k = |n: usize| {
            let g = AngularGrid::new(n).unwrap();
            solve_obstacle(&Curve::from_fn(&g, |t| 1.5 + 0.2 * (3.0 * t).cos()), 1e-10).unwrap().k
        };
        let (a, b, c) = (k(101), k(201), k(401));
        let ratio = (a - b) / (b - c);
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn projection_gap_is_nonnegative(
            coeffs in proptest::collection::vec(0.0f64..0.5, 6),
            lift in 0.0f64..0.2,
        ) {
            let g = AngularGrid::new(161).unwrap();
            let sol = solve_obstacle(&Curve::from_fn(&g, notched_r1), 1e-10).unwrap();
            // Non-negative combination of hat functions on a coarse partition.
            let bump = |t: f64| -> f64 {
                let x = t / (PI / 2.0) * 5.0;
                coeffs.iter().enumerate().map(|(k, c)| c * (1.0 - (x - k as f64).abs()).max(0.0)).sum()
            };
            let phi = Curve::from_fn(&g, |t| bump(t) + lift).zip_with(&sol.phi, |a, b| a + b).unwrap();
            prop_assert!(projection_gap(&phi, &sol).unwrap() >= -1e-8);
        }
    }
}
