//! k-nearest-neighbour discrete Dirichlet energy.
//!
//! Around each source point `x_i` the map is fitted by least squares with an
//! affine function over its `k` nearest source points (itself included). With
//! `M_i = Σ_j (x_j − x̄_i)(x_j − x̄_i)ᵀ` and `c_ij = M_i⁻¹ (x_j − x̄_i)`, the
//! fitted gradient is `A_i = Σ_j y_{σ(j)} c_ijᵀ`, which is linear in the
//! assigned targets. Swapping two targets therefore changes only the `A_i`
//! whose neighbourhood contains one of the two points.

use super::assignment::Assignment;
use super::cloud::Cloud;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Relative eigenvalue floor of `M_i` below which the fit is regularized.
const DEGENERATE_RATIO: f64 = 1e-10;

/// `m` nearest source points of every source point (itself first), by brute force.
pub fn nearest_neighbors(points: &[[f64; 2]], m: usize) -> Vec<Vec<usize>> {
    let m = m.min(points.len());
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<(f64, usize)> =
                points.iter().enumerate().map(|(j, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2), j)).collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| {
                a.0.total_cmp(&b.0).then((a.1 != i).cmp(&(b.1 != i))).then(a.1.cmp(&b.1))
            };
            if m < d.len() {
                d.select_nth_unstable_by(m - 1, cmp);
                d.truncate(m);
            }
            d.sort_by(cmp);
            d.into_iter().map(|x| x.1).collect()
        })
        .collect()
}

/// Precomputed least-squares weights for one cloud and one `k`.
///
/// With `residual_weight = w > 0` each neighbourhood also contributes
/// `w (1/k) Σ_j |y_{σ(j)} − ŷ_ij|² / h_i²`, where `ŷ_ij` is the affine fit and
/// `h_i²` the mean squared spread of the neighbourhood. The extra term is zero
/// for affine maps and `O(h_i²)` for smooth ones, and it penalizes local
/// reshuffles that leave the fitted gradient unchanged.
#[derive(Debug, Clone)]
pub struct DirichletModel {
    pub k: usize,
    pub residual_weight: f64,
    neighbors: Vec<Vec<usize>>,
    /// Centred neighbour positions `x_j − x̄_i`.
    offsets: Vec<Vec<[f64; 2]>>,
    coeffs: Vec<Vec<[f64; 2]>>,
    /// `residual_weight / (k h_i²)`.
    resid_scale: Vec<f64>,
    /// For each point `a`, the pairs `(i, slot)` with `neighbors[i][slot] == a`.
    reverse: Vec<Vec<(usize, usize)>>,
    area: Vec<f64>,
    /// Neighbourhoods whose fit had to be regularized.
    pub regularized: usize,
}

/// Fitted gradients and residuals of one assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct FitState {
    /// `A_i` as `[a11, a12, a21, a22]`.
    pub grads: Vec<[f64; 4]>,
    /// `y_{σ(j)} − ŷ_ij` per neighbourhood slot; empty without residual term.
    pub resid: Vec<Vec<[f64; 2]>>,
}

/// How a swap of the targets of `a` and `b` touches neighbourhood `i`.
#[derive(Debug, Clone, Copy)]
pub struct Touch {
    i: usize,
    /// `c_ia − c_ib`.
    e: [f64; 2],
    sa: Option<usize>,
    sb: Option<usize>,
}

impl DirichletModel {
    pub fn new(c: &Cloud, k: usize, residual_weight: f64) -> Result<Self> {
        Self::with_neighbors(c, k, residual_weight, nearest_neighbors(&c.source, k))
    }

    /// Builds the model from neighbour lists of length at least `k` (truncated to `k`).
    pub fn with_neighbors(c: &Cloud, k: usize, residual_weight: f64, lists: Vec<Vec<usize>>) -> Result<Self> {
        if k < 6 {
            return Err(Error::Validation(format!("k = {k} below 6")));
        }
        if c.len() < k {
            return Err(Error::Validation(format!("cloud of {} points is smaller than k = {k}", c.len())));
        }
        if !(residual_weight >= 0.0) {
            return Err(Error::Validation(format!("residual weight {residual_weight} must be non-negative")));
        }
        let neighbors: Vec<Vec<usize>> = lists
            .into_iter()
            .map(|mut l| {
                l.truncate(k);
                l
            })
            .collect();
        let mut regularized = 0;
        let mut coeffs = Vec::with_capacity(c.len());
        let mut offsets = Vec::with_capacity(c.len());
        let mut resid_scale = Vec::with_capacity(c.len());
        for nb in &neighbors {
            let mean = nb.iter().fold([0.0, 0.0], |m, &j| [m[0] + c.source[j][0], m[1] + c.source[j][1]]);
            let mean = [mean[0] / nb.len() as f64, mean[1] / nb.len() as f64];
            let dx: Vec<[f64; 2]> = nb.iter().map(|&j| [c.source[j][0] - mean[0], c.source[j][1] - mean[1]]).collect();
            let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
            for v in &dx {
                a += v[0] * v[0];
                b += v[0] * v[1];
                d += v[1] * v[1];
            }
            let tr = a + d;
            let disc = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
            if tr / 2.0 - disc <= DEGENERATE_RATIO * tr.max(f64::MIN_POSITIVE) {
                let eta = DEGENERATE_RATIO.sqrt() * tr.max(1e-300);
                a += eta;
                d += eta;
                regularized += 1;
            }
            let det = a * d - b * b;
            let inv = [d / det, -b / det, a / det];
            coeffs.push(dx.iter().map(|v| [inv[0] * v[0] + inv[1] * v[1], inv[1] * v[0] + inv[2] * v[1]]).collect());
            resid_scale.push(residual_weight / tr.max(1e-300));
            offsets.push(dx);
        }
        let mut reverse = vec![Vec::new(); c.len()];
        for (i, nb) in neighbors.iter().enumerate() {
            for (slot, &j) in nb.iter().enumerate() {
                reverse[j].push((i, slot));
            }
        }
        Ok(Self {
            k,
            residual_weight,
            neighbors,
            offsets,
            coeffs,
            resid_scale,
            reverse,
            area: c.area.clone(),
            regularized,
        })
    }

    /// Entry `(j, s)` of `I − P_i`, with `P_i` the hat matrix of the affine fit.
    fn q(&self, i: usize, j: usize, s: usize) -> f64 {
        let (x, c) = (self.offsets[i][j], self.coeffs[i][s]);
        (if j == s { 1.0 } else { 0.0 }) - 1.0 / self.k as f64 - (x[0] * c[0] + x[1] * c[1])
    }

    pub fn state(&self, c: &Cloud, sigma: &[usize]) -> FitState {
        let grads: Vec<[f64; 4]> = self
            .neighbors
            .iter()
            .zip(&self.coeffs)
            .map(|(nb, cf)| {
                let mut g = [0.0; 4];
                for (&j, w) in nb.iter().zip(cf) {
                    let y = c.target[sigma[j]];
                    g[0] += y[0] * w[0];
                    g[1] += y[0] * w[1];
                    g[2] += y[1] * w[0];
                    g[3] += y[1] * w[1];
                }
                g
            })
            .collect();
        let resid = if self.residual_weight > 0.0 {
            (0..self.neighbors.len())
                .map(|i| {
                    let nb = &self.neighbors[i];
                    (0..nb.len())
                        .map(|j| {
                            nb.iter().enumerate().fold([0.0, 0.0], |r, (s, &js)| {
                                let y = c.target[sigma[js]];
                                let q = self.q(i, j, s);
                                [r[0] + q * y[0], r[1] + q * y[1]]
                            })
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        FitState { grads, resid }
    }

    pub fn energy_of(&self, st: &FitState) -> f64 {
        let g: f64 = st.grads.iter().zip(&self.area).map(|(g, w)| w * g.iter().map(|v| v * v).sum::<f64>()).sum();
        let r: f64 = st
            .resid
            .iter()
            .enumerate()
            .map(|(i, r)| self.area[i] * self.resid_scale[i] * r.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>())
            .sum();
        g + r
    }

    pub fn energy(&self, c: &Cloud, sigma: &[usize]) -> f64 {
        self.energy_of(&self.state(c, sigma))
    }

    /// Neighbourhoods touched when the target of `a` moves by `d` and that of `b` by `−d`.
    pub fn swap_effect(&self, a: usize, b: usize, out: &mut Vec<Touch>) {
        out.clear();
        for &(i, s) in &self.reverse[a] {
            out.push(Touch { i, e: self.coeffs[i][s], sa: Some(s), sb: None });
        }
        for &(i, s) in &self.reverse[b] {
            let c = self.coeffs[i][s];
            match out.iter_mut().find(|t| t.i == i) {
                Some(t) => {
                    t.e[0] -= c[0];
                    t.e[1] -= c[1];
                    t.sb = Some(s);
                }
                None => out.push(Touch { i, e: [-c[0], -c[1]], sa: None, sb: Some(s) }),
            }
        }
    }

    /// Energy change of a swap given its effect list and displacement `d`.
    pub fn swap_delta(&self, st: &FitState, effect: &[Touch], d: [f64; 2]) -> f64 {
        let dd = d[0] * d[0] + d[1] * d[1];
        effect
            .iter()
            .map(|t| {
                let g = &st.grads[t.i];
                let e = t.e;
                // ‖A + d eᵀ‖² − ‖A‖² = 2 dᵀ A e + |d|² |e|²
                let ae = [g[0] * e[0] + g[1] * e[1], g[2] * e[0] + g[3] * e[1]];
                let mut v = 2.0 * (d[0] * ae[0] + d[1] * ae[1]) + dd * (e[0] * e[0] + e[1] * e[1]);
                if self.residual_weight > 0.0 {
                    // Y ↦ Y + u dᵀ with u = e_sa − e_sb; Q = I − P is a projection.
                    let r = &st.resid[t.i];
                    let (mut ru, mut quu) = ([0.0, 0.0], 0.0);
                    for (s, sign) in [(t.sa, 1.0), (t.sb, -1.0)] {
                        if let Some(s) = s {
                            ru[0] += sign * r[s][0];
                            ru[1] += sign * r[s][1];
                            for (s2, sign2) in [(t.sa, 1.0), (t.sb, -1.0)] {
                                if let Some(s2) = s2 {
                                    quu += sign * sign2 * self.q(t.i, s, s2);
                                }
                            }
                        }
                    }
                    v += self.resid_scale[t.i] * (2.0 * (d[0] * ru[0] + d[1] * ru[1]) + dd * quu);
                }
                self.area[t.i] * v
            })
            .sum()
    }

    pub fn apply_swap(&self, st: &mut FitState, effect: &[Touch], d: [f64; 2]) {
        for t in effect {
            let g = &mut st.grads[t.i];
            g[0] += d[0] * t.e[0];
            g[1] += d[0] * t.e[1];
            g[2] += d[1] * t.e[0];
            g[3] += d[1] * t.e[1];
            if self.residual_weight > 0.0 {
                for j in 0..self.k {
                    let mut qu = 0.0;
                    if let Some(s) = t.sa {
                        qu += self.q(t.i, j, s);
                    }
                    if let Some(s) = t.sb {
                        qu -= self.q(t.i, j, s);
                    }
                    let r = &mut st.resid[t.i][j];
                    r[0] += qu * d[0];
                    r[1] += qu * d[1];
                }
            }
        }
    }
}

/// Energy with a sensitivity estimate from refitting with `k + 4` neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletReport {
    pub energy: f64,
    pub k: usize,
    pub regularized: usize,
    /// `|E(k + 4) − E(k)| / E(k)`.
    pub k_sensitivity: f64,
}

pub fn discrete_dirichlet(a: &Assignment, c: &Cloud, k: usize, residual_weight: f64) -> Result<DirichletReport> {
    if a.sigma.len() != c.len() {
        return Err(Error::Validation("assignment and cloud sizes differ".into()));
    }
    let lists = nearest_neighbors(&c.source, k + 4);
    let m = DirichletModel::with_neighbors(c, k, residual_weight, lists.clone())?;
    let wide = DirichletModel::with_neighbors(c, k + 4, residual_weight, lists)?;
    let energy = m.energy(c, &a.sigma);
    let e2 = wide.energy(c, &a.sigma);
    Ok(DirichletReport {
        energy,
        k,
        regularized: m.regularized,
        k_sensitivity: (e2 - energy).abs() / energy.abs().max(f64::MIN_POSITIVE),
    })
}
