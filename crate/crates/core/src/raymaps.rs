//! Ray-preserving optimal maps `T(x) = φ(|x|, θ) x/|x|`.
//!
//! Two canonical profiles are built ray by ray from the per-angle measures
//! `dμ_θ = r f dr` on `(0, 1)` and `dν_θ = r g dr` on `(R₁, R₂)`: the monotone
//! rearrangement, and a three-piece profile that starts at `Φ(θ)` so that
//! `φ(0, ·) = Φ`. The three-piece profile first climbs from `Φ` to `R₂` onto
//! half of `ν_θ` restricted to `(Φ, R₂)`, comes back down onto the other half,
//! then descends through `(R₁, Φ)`.

use crate::domain::{AngularGrid, DensityPair, Field2, PolarTarget, RadialGrid};
use crate::error::{Error, Result};
use crate::obstacle::Curve;
use crate::transport1d::{monotone_map, pushforward, wasserstein1, Map1D, Measure1D};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Monotone,
    Original,
}

/// Samples `φ(r_i, θ_j)` of a ray map, plus breakpoints when built by [`original_map`].
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub kind: ProfileKind,
    pub radial: RadialGrid,
    pub angular: AngularGrid,
    /// `n_r × n_θ`.
    pub phi: Field2,
    /// Value at the origin on each ray.
    pub phi0: Vec<f64>,
    pub rho1: Option<Vec<f64>>,
    pub rho2: Option<Vec<f64>>,
}

/// `μ_θ` with the origin added as a node carrying zero density.
pub fn source_ray_measure(d: &DensityPair, j: usize) -> Result<Measure1D> {
    let r = d.radial().nodes();
    let mut nodes = Vec::with_capacity(r.len() + 1);
    let mut dens = Vec::with_capacity(r.len() + 1);
    nodes.push(0.0);
    dens.push(0.0);
    for (i, &ri) in r.iter().enumerate() {
        nodes.push(ri);
        dens.push(ri * d.f().get(i, j));
    }
    Measure1D::from_nodal(nodes, &dens)
}

/// `ν_θ` on the radii of the chart nodes.
pub fn target_ray_measure(d: &DensityPair, t: &PolarTarget, j: usize) -> Result<Measure1D> {
    let nodes: Vec<f64> = d.lambda().nodes().iter().map(|&l| t.radius(l, j)).collect();
    let dens: Vec<f64> = nodes.iter().enumerate().map(|(k, &r)| r * d.g().get(k, j)).collect();
    Measure1D::from_nodal(nodes, &dens)
}

fn check_grids(d: &DensityPair, t: &PolarTarget) -> Result<()> {
    if !d.angular().same_as(t.grid()) {
        return Err(Error::GridMismatch("densities and target use different angular grids".into()));
    }
    Ok(())
}

/// Per-angle monotone rearrangement; nondecreasing in `r` on every ray.
pub fn monotone_ray_map(d: &DensityPair, t: &PolarTarget) -> Result<RadialProfile> {
    check_grids(d, t)?;
    let n_theta = d.angular().len();
    let cols: Vec<Vec<f64>> = (0..n_theta)
        .into_par_iter()
        .map(|j| -> Result<Vec<f64>> {
            let mu = source_ray_measure(d, j)?;
            let nu = target_ray_measure(d, t, j)?;
            Ok(monotone_map(&mu, &nu)?.values().to_vec())
        })
        .collect::<Result<_>>()?;
    let n_r = d.radial().len();
    let phi = Field2::from_fn(n_r, n_theta, |i, j| cols[j][i + 1]);
    let phi0 = cols.iter().map(|c| c[0]).collect();
    Ok(RadialProfile {
        kind: ProfileKind::Monotone,
        radial: d.radial().clone(),
        angular: d.angular().clone(),
        phi,
        phi0,
        rho1: None,
        rho2: None,
    })
}

/// Everything needed to evaluate the three-piece profile on one ray at any radius.
#[derive(Debug, Clone)]
pub struct OriginalRay {
    mu: Measure1D,
    nu: Measure1D,
    /// `ν_θ((R₁, Φ))`.
    nu_below_phi: f64,
    pub phi_start: f64,
    pub rho1: f64,
    pub rho2: f64,
    mass_rho1: f64,
    mass_rho2: f64,
}

/// Tolerance under which `Φ(θ) = R₁(θ)` and the descending third piece is absent.
const PIECE3_TOL: f64 = 1e-10;

impl OriginalRay {
    pub fn new(d: &DensityPair, t: &PolarTarget, phi_curve: &Curve, j: usize) -> Result<Self> {
        let mu = source_ray_measure(d, j)?;
        let nu = target_ray_measure(d, t, j)?;
        let (m_mu, m_nu) = (mu.total(), nu.total());
        if (m_mu - m_nu).abs() > 1e-10 * m_mu.max(m_nu) {
            return Err(Error::MassMismatch { src: m_mu, dst: m_nu });
        }
        let phi_start = phi_curve.values()[j];
        let (r1, r2) = (t.r1()[j], t.r2()[j]);
        if phi_start < r1 - 1e-12 || phi_start > r2 {
            return Err(Error::Infeasible(format!("Phi = {phi_start} outside [{r1}, {r2}] on ray {j}")));
        }
        let nu_below_phi = if phi_start - r1 <= PIECE3_TOL { 0.0 } else { nu.cdf(phi_start) };
        let half = 0.5 * (m_nu - nu_below_phi);
        let rho1 = bisect_mass(&mu, half)?;
        let (rho2, mass_rho2) =
            if nu_below_phi == 0.0 { (1.0, m_mu) } else { (bisect_mass(&mu, 2.0 * half)?, 2.0 * half) };
        Ok(Self { mass_rho1: half, mass_rho2, mu, nu, nu_below_phi, phi_start, rho1, rho2 })
    }

    /// `φ(r, θ_j)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let m_nu = self.nu.total();
        let f = self.mu.cdf(r);
        let q = if r <= self.rho1 {
            self.nu_below_phi + 2.0 * f
        } else if r <= self.rho2 {
            m_nu - 2.0 * (f - self.mass_rho1)
        } else {
            self.nu_below_phi - (f - self.mass_rho2)
        };
        let q = q.clamp(0.0, m_nu);
        if r <= 0.0 {
            return Ok(self.phi_start);
        }
        self.nu.cdf_inverse(q)
    }
}

/// Bisection on the cumulative mass `∫₀^ρ dμ = m`, to `1e-12` in `ρ`.
fn bisect_mass(mu: &Measure1D, m: f64) -> Result<f64> {
    let (mut lo, mut hi) = mu.support();
    let total = mu.total();
    if !(m >= 0.0 && m <= total * (1.0 + 1e-12)) {
        return Err(Error::Bracketing(format!("mass {m} not in [0, {total}] (bracket [{lo}, {hi}])")));
    }
    if m >= total {
        return Ok(hi);
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mu.cdf(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Final exact inversion inside the bracket removes the residual bisection error.
    let x = mu.cdf_inverse(m)?;
    Ok(if (x - 0.5 * (lo + hi)).abs() <= 1e-12 { x } else { 0.5 * (lo + hi) })
}

/// The three-piece profile with `φ(0, ·) = Φ`.
pub fn original_map(d: &DensityPair, t: &PolarTarget, phi_curve: &Curve) -> Result<RadialProfile> {
    check_grids(d, t)?;
    if phi_curve.len() != t.grid().len() {
        return Err(Error::GridMismatch("Phi must live on the target's angular grid".into()));
    }
    if phi_curve.max() > t.inf_r2() {
        return Err(Error::Infeasible(format!(
            "Phi reaches {} above inf R2 = {}; the upper constraint would be active",
            phi_curve.max(),
            t.inf_r2()
        )));
    }
    let n_theta = d.angular().len();
    let r = d.radial().nodes();
    let cols: Vec<(Vec<f64>, f64, f64)> = (0..n_theta)
        .into_par_iter()
        .map(|j| -> Result<(Vec<f64>, f64, f64)> {
            let ray = OriginalRay::new(d, t, phi_curve, j)?;
            let col = r.iter().map(|&x| ray.eval(x)).collect::<Result<Vec<f64>>>()?;
            Ok((col, ray.rho1, ray.rho2))
        })
        .collect::<Result<_>>()?;
    let phi = Field2::from_fn(r.len(), n_theta, |i, j| cols[j].0[i]);
    Ok(RadialProfile {
        kind: ProfileKind::Original,
        radial: d.radial().clone(),
        angular: d.angular().clone(),
        phi,
        phi0: phi_curve.values().to_vec(),
        rho1: Some(cols.iter().map(|c| c.1).collect()),
        rho2: Some(cols.iter().map(|c| c.2).collect()),
    })
}

impl RadialProfile {
    /// `φ(r_i, ·)` as a curve.
    pub fn slice(&self, i: usize) -> Curve {
        Curve::new(&self.angular, self.phi.row(i).to_vec()).expect("row length matches grid")
    }

    /// The profile on ray `j` as a 1D map on `[0, r_0, …, 1]`.
    pub fn ray_map(&self, j: usize) -> Result<Map1D> {
        let mut nodes = vec![0.0];
        nodes.extend_from_slice(self.radial.nodes());
        let mut vals = vec![self.phi0[j]];
        vals.extend(self.phi.column(j));
        Map1D::new(nodes, vals)
    }

    pub fn is_monotone_in_r(&self) -> bool {
        (0..self.angular.len()).all(|j| {
            let c = self.phi.column(j);
            self.phi0[j] <= c[0] && c.windows(2).all(|w| w[1] >= w[0])
        })
    }
}

/// Largest per-ray 1D Wasserstein distance between `φ(·, θ)_# μ_θ` and `ν_θ`.
pub fn ray_pushforward_defect(p: &RadialProfile, d: &DensityPair, t: &PolarTarget) -> Result<f64> {
    (0..p.angular.len())
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let mu = source_ray_measure(d, j)?;
            let nu = target_ray_measure(d, t, j)?;
            let pushed = pushforward(&p.ray_map(j)?, &mu, nu.nodes())?;
            wasserstein1(&pushed, &nu, 4 * nu.nodes().len())
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

/// Total-variation distance between the image of `μ` and `ν` on the `(λ, θ)`
/// chart, with `ν` binned on the chart cells. Every source cell on a ray is
/// spread uniformly over the chart interval it is mapped to.
pub fn chart_pushforward_defect(p: &RadialProfile, d: &DensityPair, t: &PolarTarget) -> Result<f64> {
    let ang = &p.angular;
    let per_ray: Vec<f64> = (0..ang.len())
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let mu = source_ray_measure(d, j)?;
            let nu = target_ray_measure(d, t, j)?;
            let pushed = pushforward(&p.ray_map(j)?, &mu, nu.nodes())?;
            Ok((0..nu.cell_count()).map(|k| (pushed.cell_mass(k) - nu.cell_mass(k)).abs()).sum())
        })
        .collect::<Result<_>>()?;
    Ok(ang.integrate(&per_ray))
}

/// `(c_fit, C_fit)`: extreme values of `(φ − Φ)/r²` over `r_min < r ≤ r_max`.
pub fn growth_constants(p: &RadialProfile, phi_curve: &Curve, r_max: f64) -> Result<(f64, f64)> {
    let rho_min = p
        .rho1
        .as_ref()
        .ok_or_else(|| Error::Validation("growth constants need a profile with breakpoints".into()))?
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if r_max > rho_min {
        return Err(Error::Validation(format!("r_max = {r_max} exceeds min rho1 = {rho_min}")));
    }
    let r = p.radial.nodes();
    let idx: Vec<usize> = (0..r.len()).filter(|&i| r[i] > r[0] && r[i] <= r_max).collect();
    if idx.is_empty() {
        return Err(Error::Validation(format!("no radial nodes in ({}, {r_max}]", r[0])));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in &idx {
        for j in 0..p.angular.len() {
            let q = (p.phi.get(i, j) - phi_curve.values()[j]) / (r[i] * r[i]);
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    Ok((lo, hi))
}

/// `max_j |Δ_θ(φ(r_i, ·) − Φ)| / Δθ / r_i²` for every radial node.
pub fn theta_lipschitz_ratios(p: &RadialProfile, phi_curve: &Curve) -> Vec<f64> {
    let h = p.angular.dtheta();
    p.radial
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let row = p.phi.row(i);
            let dev: Vec<f64> = row.iter().zip(phi_curve.values()).map(|(a, b)| a - b).collect();
            dev.windows(2).map(|w| (w[1] - w[0]).abs() / h).fold(0.0, f64::max) / (r * r)
        })
        .collect()
}

/// Supremum over `r` of the angular Lipschitz ratio.
pub fn theta_regularity_check(p: &RadialProfile, phi_curve: &Curve) -> f64 {
    theta_lipschitz_ratios(p, phi_curve).into_iter().fold(0.0, f64::max)
}

/// `‖φ(r_i, ·) − Φ‖_{L²}` at every radial node.
pub fn l2_deviation(p: &RadialProfile, phi_curve: &Curve) -> Vec<f64> {
    (0..p.radial.len())
        .map(|i| p.slice(i).zip_with(phi_curve, |a, b| a - b).expect("shared grid").l2_norm_sq().sqrt())
        .collect()
}
