//! Moser flow on the unit square.
//!
//! Densities are sampled on the `(n+1)²` nodes of a uniform grid. The potential
//! solves `Δp = f₁ − f₂` with homogeneous Neumann data (node-centred control
//! volumes, 5-point stencil, conjugate gradients). The velocity `∇p` is
//! corrected by the curl of `ψ_s = G(u₂) u₁(u₁ − 1)`, `G = ∂₂p(1, ·)`, which
//! leaves the divergence untouched and cancels the tangential velocity on the
//! side `u₁ = 1`, so that side is fixed pointwise. Points are moved by
//! `dX/dt = v(X)/((1−t) f₁(X) + t f₂(X))`, `t ∈ [0, 1]`, with classical RK4.

use crate::domain::Field2;
use crate::error::{Error, Result};
use crate::transport1d::wasserstein1_weighted;
use rayon::prelude::*;
use std::f64::consts::PI;

pub const POISSON_TOL: f64 = 1e-10;
pub const RK4_STEPS: usize = 32;
pub const SLICE_DIRECTIONS: usize = 16;

/// Node values on the `(n+1) × (n+1)` grid of `[0,1]²`, indexed `(i, k)` ↔ `(u₁, u₂) = (i h, k h)`.
pub fn sample_on_square(n: usize, f: impl Fn([f64; 2]) -> f64) -> Field2 {
    let h = 1.0 / n as f64;
    Field2::from_fn(n + 1, n + 1, |i, k| f([i as f64 * h, k as f64 * h]))
}

fn node_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        0.5
    } else {
        1.0
    }
}

/// Trapezoid integral of node values over the square.
pub fn square_mass(v: &Field2) -> f64 {
    let n = v.rows() - 1;
    let h = 1.0 / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        for k in 0..=n {
            s += node_weight(i, n) * node_weight(k, n) * v.get(i, k);
        }
    }
    s * h * h
}

/// Bilinear interpolation of node values.
pub fn bilinear(v: &Field2, q: [f64; 2]) -> f64 {
    let n = v.rows() - 1;
    let s = (q[0].clamp(0.0, 1.0) * n as f64, q[1].clamp(0.0, 1.0) * n as f64);
    let i = (s.0.floor() as usize).min(n - 1);
    let k = (s.1.floor() as usize).min(n - 1);
    let (a, b) = (s.0 - i as f64, s.1 - k as f64);
    (1.0 - a) * ((1.0 - b) * v.get(i, k) + b * v.get(i, k + 1))
        + a * ((1.0 - b) * v.get(i + 1, k) + b * v.get(i + 1, k + 1))
}

/// `K p` for the Neumann stiffness matrix (edges on the boundary carry weight ½).
fn apply_stiffness(p: &[f64], n: usize, out: &mut [f64]) {
    let m = n + 1;
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..m {
        for k in 0..m {
            let id = i * m + k;
            if i < n {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                let d = w * (p[id] - p[id + m]);
                out[id] += d;
                out[id + m] -= d;
            }
            if k < n {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let d = w * (p[id] - p[id + 1]);
                out[id] += d;
                out[id + 1] -= d;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `Δp = rhs` with zero Neumann data; `rhs` must integrate to zero.
/// Returns the potential (zero weighted mean) and the number of CG iterations.
pub fn solve_neumann_poisson(rhs: &Field2, tol: f64) -> Result<(Field2, usize)> {
    let n = rhs.rows() - 1;
    let m = n + 1;
    let h2 = 1.0 / (n * n) as f64;
    let w: Vec<f64> = (0..m * m).map(|id| node_weight(id / m, n) * node_weight(id % m, n)).collect();
    // −Δp = −rhs, multiplied by the control-volume area.
    let mut b: Vec<f64> = (0..m * m).map(|id| -w[id] * h2 * rhs.data()[id]).collect();
    let mean = b.iter().sum::<f64>() / w.iter().sum::<f64>();
    b.iter_mut().zip(&w).for_each(|(v, wi)| *v -= mean * wi);
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; m * m];
    if bnorm == 0.0 {
        return Ok((Field2::zeros(m, m), 0));
    }
    let mut r = b.clone();
    let mut d = r.clone();
    let mut kd = vec![0.0; m * m];
    let mut rr = dot(&r, &r);
    let max_iter = 20 * m * m.max(50);
    for it in 1..=max_iter {
        apply_stiffness(&d, n, &mut kd);
        let alpha = rr / dot(&d, &kd);
        x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += alpha * di);
        r.iter_mut().zip(&kd).for_each(|(ri, ki)| *ri -= alpha * ki);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * bnorm {
            let xm = dot(&x, &w) / w.iter().sum::<f64>();
            let p = Field2::from_fn(m, m, |i, k| x[i * m + k] - xm);
            return Ok((p, it));
        }
        let beta = rr_new / rr;
        d.iter_mut().zip(&r).for_each(|(di, ri)| *di = ri + beta * *di);
        rr = rr_new;
    }
    Err(Error::NonConvergence { iterations: max_iter, residual: rr.sqrt() / bnorm })
}

/// Measure-matching flow between two node-sampled densities of equal mass.
#[derive(Debug, Clone)]
pub struct MoserFlow {
    n: usize,
    f1: Field2,
    f2: Field2,
    vx: Field2,
    vy: Field2,
    pub cg_iterations: usize,
}

impl MoserFlow {
    pub fn new(f1: Field2, f2: Field2) -> Result<Self> {
        let n = f1.rows() - 1;
        if n < 2 || f1.cols() != n + 1 || f2.rows() != n + 1 || f2.cols() != n + 1 {
            return Err(Error::GridMismatch("densities must share an (n+1)×(n+1) node grid".into()));
        }
        if f1.min() <= 0.0 || f2.min() <= 0.0 {
            return Err(Error::Validation("densities must be positive".into()));
        }
        let (m1, m2) = (square_mass(&f1), square_mass(&f2));
        if (m1 - m2).abs() > 1e-10 * m1 {
            return Err(Error::MassMismatch { src: m1, dst: m2 });
        }
        let rhs = Field2::from_fn(n + 1, n + 1, |i, k| f1.get(i, k) - f2.get(i, k));
        let (p, cg_iterations) = solve_neumann_poisson(&rhs, POISSON_TOL)?;
        let h = 1.0 / n as f64;
        let d1 =
            |i: usize, k: usize| if i == 0 || i == n { 0.0 } else { (p.get(i + 1, k) - p.get(i - 1, k)) / (2.0 * h) };
        let d2 =
            |i: usize, k: usize| if k == 0 || k == n { 0.0 } else { (p.get(i, k + 1) - p.get(i, k - 1)) / (2.0 * h) };
        let g: Vec<f64> = (0..=n).map(|k| d2(n, k)).collect();
        let dg = |k: usize| {
            if k == 0 {
                (g[1] - g[0]) / h
            } else if k == n {
                (g[n] - g[n - 1]) / h
            } else {
                (g[k + 1] - g[k - 1]) / (2.0 * h)
            }
        };
        let vx = Field2::from_fn(n + 1, n + 1, |i, k| {
            let u = i as f64 * h;
            d1(i, k) + dg(k) * u * (u - 1.0)
        });
        let vy = Field2::from_fn(n + 1, n + 1, |i, k| {
            let u = i as f64 * h;
            d2(i, k) - g[k] * (2.0 * u - 1.0)
        });
        Ok(Self { n, f1, f2, vx, vy, cg_iterations })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    fn velocity(&self, q: [f64; 2], t: f64) -> [f64; 2] {
        let rho = (1.0 - t) * bilinear(&self.f1, q) + t * bilinear(&self.f2, q);
        [bilinear(&self.vx, q) / rho, bilinear(&self.vy, q) / rho]
    }

    /// Image of `q` at `t = 1`, and whether the path had to be clamped back into the square.
    pub fn transport(&self, q: [f64; 2]) -> ([f64; 2], bool) {
        let dt = 1.0 / RK4_STEPS as f64;
        let mut x = q;
        let mut escaped = false;
        let add = |x: [f64; 2], v: [f64; 2], s: f64| [x[0] + s * v[0], x[1] + s * v[1]];
        for step in 0..RK4_STEPS {
            let t = step as f64 * dt;
            let k1 = self.velocity(x, t);
            let k2 = self.velocity(add(x, k1, 0.5 * dt), t + 0.5 * dt);
            let k3 = self.velocity(add(x, k2, 0.5 * dt), t + 0.5 * dt);
            let k4 = self.velocity(add(x, k3, dt), t + dt);
            for c in 0..2 {
                x[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                if !(-1e-12..=1.0 + 1e-12).contains(&x[c]) {
                    escaped = true;
                }
                x[c] = x[c].clamp(0.0, 1.0);
            }
        }
        (x, escaped)
    }

    /// Images of all grid nodes, row-major in `(i, k)`, with the escape count.
    pub fn transport_grid(&self) -> (Vec<[f64; 2]>, usize) {
        let n = self.n;
        let h = 1.0 / n as f64;
        let out: Vec<([f64; 2], bool)> = (0..(n + 1) * (n + 1))
            .into_par_iter()
            .map(|id| self.transport([(id / (n + 1)) as f64 * h, (id % (n + 1)) as f64 * h]))
            .collect();
        let escaped = out.iter().filter(|o| o.1).count();
        (out.into_iter().map(|o| o.0).collect(), escaped)
    }

    /// Mean over `SLICE_DIRECTIONS` directions of the 1D `W₁` between the
    /// images of the `f₁` node masses and the `f₂` node masses.
    pub fn pushforward_defect(&self, images: &[[f64; 2]]) -> Result<f64> {
        let n = self.n;
        let h = 1.0 / n as f64;
        let w = |id: usize| node_weight(id / (n + 1), n) * node_weight(id % (n + 1), n) * h * h;
        let mut total = 0.0;
        for s in 0..SLICE_DIRECTIONS {
            let a = PI * s as f64 / SLICE_DIRECTIONS as f64;
            let e = [a.cos(), a.sin()];
            let src: Vec<(f64, f64)> = images
                .iter()
                .enumerate()
                .map(|(id, y)| (y[0] * e[0] + y[1] * e[1], w(id) * self.f1.data()[id]))
                .collect();
            let dst: Vec<(f64, f64)> = (0..images.len())
                .map(|id| {
                    let q = [(id / (n + 1)) as f64 * h, (id % (n + 1)) as f64 * h];
                    (q[0] * e[0] + q[1] * e[1], w(id) * self.f2.data()[id])
                })
                .collect();
            total += wasserstein1_weighted(&src, &dst)?;
        }
        Ok(total / SLICE_DIRECTIONS as f64)
    }
}
