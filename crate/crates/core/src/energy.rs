//! Functionals on polar-frame maps `T(x) = φ x̂ + ψ x̂^⊥`.
//!
//! With `x̂ = x/|x|`, the Dirichlet integrand in polar form is
//! `|DT|² = ∂_rφ² + ∂_rψ² + ((∂_θφ − ψ)/r)² + ((φ + ∂_θψ)/r)²`; integrating the
//! last two terms over `θ` gives `H(φ(r,·), ψ(r,·))/r²`, so
//! `∫|DT|² = ∫ [r(‖∂_rφ‖² + ‖∂_rψ‖²) + H/r] dr`. Every angular quantity uses the
//! shared stencil, so the direct and split forms of `F_ε` agree to rounding.

use crate::domain::{
    check_compatibility, quadrature_2d, AngularGrid, DensityPair, Field2, PolarTarget, RadialGrid, Region,
};
use crate::error::{Error, Result};
use crate::obstacle::Curve;
use crate::raymaps::RadialProfile;
use crate::stencil;
use std::f64::consts::FRAC_PI_2;

/// Polar-frame components of a map on a polar grid of the quarter disk.
#[derive(Debug, Clone)]
pub struct MapField {
    pub radial: RadialGrid,
    pub angular: AngularGrid,
    /// `n_r × n_θ`.
    pub phi: Field2,
    /// `n_r × n_θ`.
    pub psi: Field2,
}

impl MapField {
    pub fn new(radial: RadialGrid, angular: AngularGrid, phi: Field2, psi: Field2) -> Result<Self> {
        for f in [&phi, &psi] {
            if f.rows() != radial.len() || f.cols() != angular.len() {
                return Err(Error::GridMismatch("map components must be sampled on radial × angular".into()));
            }
        }
        Ok(Self { radial, angular, phi, psi })
    }

    pub fn from_profile(p: &RadialProfile) -> Self {
        Self {
            radial: p.radial.clone(),
            angular: p.angular.clone(),
            phi: p.phi.clone(),
            psi: Field2::zeros(p.radial.len(), p.angular.len()),
        }
    }

    /// Samples `(φ, ψ)(r, θ)`.
    pub fn from_fn(radial: RadialGrid, angular: AngularGrid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (r, t) = (radial.nodes().to_vec(), angular.nodes().to_vec());
        let mut phi = Field2::zeros(r.len(), t.len());
        let mut psi = Field2::zeros(r.len(), t.len());
        for (i, &ri) in r.iter().enumerate() {
            for (j, &tj) in t.iter().enumerate() {
                let (a, b) = f(ri, tj);
                phi.set(i, j, a);
                psi.set(i, j, b);
            }
        }
        Self { radial, angular, phi, psi }
    }

    /// Samples a Cartesian map `x ↦ T(x)` and projects it on the polar frame.
    pub fn from_cartesian(radial: RadialGrid, angular: AngularGrid, t: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self::from_fn(radial, angular, |r, th| {
            let (c, s) = (th.cos(), th.sin());
            let y = t([r * c, r * s]);
            (y[0] * c + y[1] * s, -y[0] * s + y[1] * c)
        })
    }

    pub fn identity(radial: RadialGrid, angular: AngularGrid) -> Self {
        Self::from_fn(radial, angular, |r, _| (r, 0.0))
    }

    /// Largest distance of `|T|` outside `[inf R₁, sup R₂]`.
    pub fn range_violation(&self, t: &PolarTarget) -> f64 {
        self.phi
            .data()
            .iter()
            .zip(self.psi.data())
            .map(|(a, b)| {
                let m = a.hypot(*b);
                (t.inf_r1() - m).max(m - t.sup_r2()).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    fn slice(&self, f: &Field2, i: usize) -> Vec<f64> {
        let _ = self;
        f.row(i).to_vec()
    }

    /// Per-node radial pieces: `r(‖∂_rφ‖² + ‖∂_rψ‖²)` and `H(φ(r,·), ψ(r,·))`.
    fn radial_integrands(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.radial.nodes();
        let h = self.angular.dtheta();
        let n_t = self.angular.len();
        let mut kinetic = vec![0.0; r.len()];
        let mut angular = vec![0.0; r.len()];
        let mut col_phi = vec![0.0; r.len()];
        let mut col_psi = vec![0.0; r.len()];
        let mut dphi = Field2::zeros(r.len(), n_t);
        let mut dpsi = Field2::zeros(r.len(), n_t);
        for j in 0..n_t {
            for i in 0..r.len() {
                col_phi[i] = self.phi.get(i, j);
                col_psi[i] = self.psi.get(i, j);
            }
            for i in 0..r.len() {
                dphi.set(i, j, stencil::radial_derivative(r, &col_phi, i));
                dpsi.set(i, j, stencil::radial_derivative(r, &col_psi, i));
            }
        }
        for i in 0..r.len() {
            let (a, b) = (dphi.row(i), dpsi.row(i));
            kinetic[i] = r[i] * (stencil::l2_inner(a, a, h) + stencil::l2_inner(b, b, h));
            angular[i] = stencil::h_form(&self.slice(&self.phi, i), &self.slice(&self.psi, i), h);
        }
        (kinetic, angular)
    }
}

/// Trapezoid sum of nodal values between nodes `lo` and `hi` (inclusive).
fn trapezoid(r: &[f64], v: &[f64], lo: usize, hi: usize) -> f64 {
    (lo..hi).map(|i| 0.5 * (r[i + 1] - r[i]) * (v[i] + v[i + 1])).sum()
}

/// First node at or above `r_lo` (within rounding).
fn node_at_or_above(radial: &RadialGrid, r_lo: f64) -> Result<usize> {
    let r = radial.nodes();
    if r_lo < r[0] * (1.0 - 1e-12) {
        return Err(Error::Validation(format!("r_lo = {r_lo} below r_min = {}", r[0])));
    }
    let k = radial.nearest(r_lo);
    Ok(if r[k] < r_lo * (1.0 - 1e-12) { (k + 1).min(r.len() - 1) } else { k })
}

/// Quadrature of `field · f` with the polar weight (origin wedge included).
fn integrate_against_f(m: &MapField, d: &DensityPair, integrand: impl Fn(usize, usize) -> f64) -> f64 {
    let same = m.radial == *d.radial();
    let r = m.radial.nodes();
    let field = Field2::from_fn(r.len(), m.angular.len(), |i, j| {
        let f = if same { d.f().get(i, j) } else { d.f_on_ray(r[i], j) };
        integrand(i, j) * f
    });
    quadrature_2d(&field, Region::Source(&m.radial, &m.angular))
}

/// `∫ |T(x) − x| f dx`.
pub fn monge_cost(m: &MapField, d: &DensityPair) -> f64 {
    let r = m.radial.nodes();
    integrate_against_f(m, d, |i, j| (m.phi.get(i, j) - r[i]).hypot(m.psi.get(i, j)))
}

/// `∫ (|T(x)| − |x|) f dx`: the transport cost predicted by the potential `|·|`
/// for this particular map. It equals the duality value when `T_#μ = ν`.
pub fn potential_w1(m: &MapField, d: &DensityPair) -> f64 {
    let r = m.radial.nodes();
    integrate_against_f(m, d, |i, j| m.phi.get(i, j).hypot(m.psi.get(i, j)) - r[i])
}

/// Compatibility defect above which the radial potential is not trusted.
pub const W1_COMPATIBILITY_LIMIT: f64 = 1e-8;

/// `∫_{Ω′} |y| dν − ∫_Ω |x| dμ`.
pub fn w1_duality(d: &DensityPair, t: &PolarTarget) -> Result<f64> {
    let (_, max) = check_compatibility(d, t)?;
    if max > W1_COMPATIBILITY_LIMIT {
        return Err(Error::Validation(format!(
            "per-angle compatibility defect {max:e} exceeds {W1_COMPATIBILITY_LIMIT:e}; |x| is not a valid potential"
        )));
    }
    let r = d.radial().nodes();
    let src = Field2::from_fn(r.len(), d.angular().len(), |i, j| r[i] * d.f().get(i, j));
    let l = d.lambda().nodes();
    let dst = Field2::from_fn(l.len(), d.angular().len(), |k, j| t.radius(l[k], j) * d.g().get(k, j));
    Ok(quadrature_2d(&dst, Region::Target(d.lambda(), t))
        - quadrature_2d(&src, Region::Source(d.radial(), d.angular())))
}

/// `∫_{r_lo < |x| < 1} |DT|² dx`, with `r_lo` snapped up to the next node.
pub fn dirichlet_polar(m: &MapField, r_lo: f64) -> Result<f64> {
    let lo = node_at_or_above(&m.radial, r_lo)?;
    let (kin, ang) = m.radial_integrands();
    let r = m.radial.nodes();
    let e: Vec<f64> = (0..r.len()).map(|i| kin[i] + ang[i] / r[i]).collect();
    Ok(trapezoid(r, &e, lo, r.len() - 1))
}

/// `monge_cost + ε · dirichlet_polar(·, r_min)`.
pub fn j_eps(m: &MapField, d: &DensityPair, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Validation(format!("epsilon {eps} must be non-negative")));
    }
    Ok(monge_cost(m, d) + eps * dirichlet_polar(m, m.radial.r_min())?)
}

/// Discrete `‖φ′ − ψ‖²_{L²} + ‖φ + ψ′‖²_{L²}`.
pub fn h_functional(phi: &Curve, psi: &Curve) -> Result<f64> {
    if !phi.shares_grid(psi) {
        return Err(Error::GridMismatch("phi and psi live on different grids".into()));
    }
    Ok(stencil::h_form(phi.values(), psi.values(), phi.dtheta()))
}

/// `δ = ε^{1/3}` snapped to the nearest radial node, with its index.
pub fn snapped_delta(radial: &RadialGrid, eps: f64) -> (usize, f64) {
    let k = radial.nearest(eps.cbrt());
    (k, radial.nodes()[k])
}

/// `(J_ε − W₁)/ε − K |log δ|` with the snapped `δ`, which stands in for `(K/3)|log ε|`.
pub fn f_eps_direct(m: &MapField, d: &DensityPair, eps: f64, k: f64, w1: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Validation(format!("epsilon {eps} outside (0,1)")));
    }
    let (_, delta) = snapped_delta(&m.radial, eps);
    Ok((j_eps(m, d, eps)? - w1) / eps - k * delta.ln().abs())
}

/// The four terms of the split of `F_ε` at radius `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub delta: f64,
    /// `(1/ε) ∫ (|T − x| − |T| + |x|) f dx`.
    pub term1: f64,
    /// `∫_{Ω_δ} |DT|²`.
    pub term2: f64,
    /// `∫_δ¹ (H(φ(r,·), ψ(r,·)) − K) dr/r`; the `K/r` part is integrated exactly.
    pub term3: f64,
    /// `∫_δ¹ (‖∂_rφ‖² + ‖∂_rψ‖²) r dr`.
    pub term4: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.term1 + self.term2 + self.term3 + self.term4
    }
}

/// Tolerance on `|T|` leaving `[inf R₁, sup R₂]` before the split is refused.
pub const ADMISSIBLE_RANGE_TOL: f64 = 1e-6;

pub fn f_eps_decomposed(m: &MapField, d: &DensityPair, t: &PolarTarget, eps: f64, k: f64) -> Result<Decomposition> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Validation(format!("epsilon {eps} outside (0,1)")));
    }
    let v = m.range_violation(t);
    if v > ADMISSIBLE_RANGE_TOL {
        return Err(Error::Infeasible(format!("map leaves the target annulus by {v:e}")));
    }
    let (di, delta) = snapped_delta(&m.radial, eps);
    let r = m.radial.nodes();
    let term1 = integrate_against_f(m, d, |i, j| {
        let (p, q) = (m.phi.get(i, j), m.psi.get(i, j));
        (p - r[i]).hypot(q) - p.hypot(q) + r[i]
    }) / eps;
    let (kin, ang) = m.radial_integrands();
    let e: Vec<f64> = (0..r.len()).map(|i| kin[i] + ang[i] / r[i]).collect();
    let term2 = trapezoid(r, &e, 0, di);
    let h_over_r: Vec<f64> = (0..r.len()).map(|i| ang[i] / r[i]).collect();
    let last = r.len() - 1;
    let term3 = trapezoid(r, &h_over_r, di, last) - k * delta.ln().abs();
    let term4 = trapezoid(r, &kin, di, last);
    Ok(Decomposition { delta, term1, term2, term3, term4 })
}

/// The two integrals of the limit functional for a ray profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitF {
    /// `∫ G(φ(r,·)) dr/r` over `(r_min, 1)`.
    pub angular: f64,
    /// `∫ ‖∂_rφ(r,·)‖²_{L²} r dr` over `(r_min, 1)`.
    pub radial: f64,
    /// Decay exponent `p` of `G(φ(r,·)) ~ r^p` near the smallest radius.
    pub tail_exponent: f64,
    /// `G(φ(r_min, ·))`, the coefficient of `|log r_min|` growth if the integral diverges.
    pub tail_coefficient: f64,
    /// `true` when `G(φ(r,·))` does not decay near the origin (`p < ½`).
    pub diverges: bool,
}

impl LimitF {
    pub fn total(&self) -> f64 {
        self.angular + self.radial
    }
}

pub fn limit_f(p: &RadialProfile, k: f64) -> LimitF {
    let m = MapField::from_profile(p);
    let (kin, ang) = m.radial_integrands();
    let r = m.radial.nodes();
    let g: Vec<f64> = ang.iter().map(|h| h - k).collect();
    let g_over_r: Vec<f64> = g.iter().zip(r).map(|(a, b)| a / b).collect();
    let last = r.len() - 1;
    let angular = trapezoid(r, &g_over_r, 0, last);
    let radial = trapezoid(r, &kin, 0, last);
    // Compare G at the first node and at the first node beyond 4 r_min.
    let far = r.iter().position(|&x| x >= 4.0 * r[0]).unwrap_or(last);
    let (ga, gb) = (g[0].abs().max(f64::MIN_POSITIVE), g[far].abs().max(f64::MIN_POSITIVE));
    let tail_exponent = (gb / ga).ln() / (r[far] / r[0]).ln();
    LimitF { angular, radial, tail_exponent, tail_coefficient: g[0], diverges: tail_exponent < 0.5 }
}

/// Constants of the lower-bound inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    pub eps_star: f64,
    pub b: f64,
    /// `√(3√3/(2√2)) · B`, the constant multiplying `X` in the final cubic.
    pub b_prime: f64,
}

pub fn bound_constants(t: &PolarTarget, k: f64) -> BoundConstants {
    let s2 = t.sup_r2();
    let a = 1.0 / ((2.0 * s2 + 1.0) * (2.0 * s2));
    let b1 = FRAC_PI_2 * t.lip_r1() / t.inf_r1() + 1.0;
    let b2 = FRAC_PI_2 * t.sup_r1() + 2.0 * t.lip_r1() + t.bv_r1p();
    let b3 = 2.0 * b1 * b2;
    // Largest root of ½X² − βX − γ with γ > 0.
    let beta = 4.0 * s2 * FRAC_PI_2.sqrt();
    let gamma = 4.0 * s2 * s2 + 0.5 * b3 * s2 + 0.5 * k;
    let b4 = beta + (beta * beta + 2.0 * gamma).sqrt();
    let b5 = FRAC_PI_2.sqrt() * b4 + 2.0 * s2 + b3;
    let eps_star = (4.0 / (2f64.sqrt() * b5)).powf(0.25);
    let b = 3.0 * 2f64.sqrt() * b5 / (4.0 * eps_star.powf(4.0 / 3.0));
    let b_prime = (3.0 * 3f64.sqrt() / (2.0 * 2f64.sqrt())).sqrt() * b;
    BoundConstants { a, b1, b2, b3, b4, b5, eps_star, b, b_prime }
}

/// `−inf_{X ≥ 0} (A inf f X³ − B′X) = (2/3) B′ √(B′/(3 A inf f))`; an admissible
/// but not sharp value for the lower-bound constant.
pub fn candidate_lower_constant(bc: &BoundConstants, inf_f: f64) -> f64 {
    let a = bc.a * inf_f;
    2.0 / 3.0 * bc.b_prime * (bc.b_prime / (3.0 * a)).sqrt()
}

/// `|T − x| − |T| + |x|` evaluated without cancellation.
pub fn potential_gap(phi: f64, psi: f64, r: f64) -> f64 {
    let t = phi.hypot(psi);
    let dist = (phi - r).hypot(psi);
    if phi > r && phi > 0.0 {
        // |T−x| − (φ − r) = ψ²/(|T−x| + φ − r), |T| − φ = ψ²/(|T| + φ).
        let q = psi * psi;
        let a = if dist + phi - r > 0.0 { q / (dist + phi - r) } else { 0.0 };
        let b = if t + phi > 0.0 { q / (t + phi) } else { 0.0 };
        a - b
    } else {
        dist - t + r
    }
}

/// Smallest `|T − x| − |T| + |x| − A r ψ²` over the grid.
pub fn check_tangential_bound(m: &MapField, a: f64) -> f64 {
    let r = m.radial.nodes();
    let mut worst = f64::INFINITY;
    for (i, &ri) in r.iter().enumerate() {
        for j in 0..m.angular.len() {
            let (p, q) = (m.phi.get(i, j), m.psi.get(i, j));
            worst = worst.min(potential_gap(p, q, ri) - a * ri * q * q);
        }
    }
    worst
}

/// Whether `θ ↦ φ x̂(θ) + ψ x̂(θ)^⊥` stays in the closed annulus.
pub fn curve_in_target(phi: &Curve, psi: &Curve, grid: &AngularGrid, t: &PolarTarget, tol: f64) -> bool {
    grid.nodes().iter().zip(phi.values().iter().zip(psi.values())).all(|(&th, (&p, &q))| {
        let rho = p.hypot(q);
        if rho == 0.0 {
            return false;
        }
        let th2 = th + (q / rho).asin();
        if th2 < -tol || th2 > FRAC_PI_2 + tol {
            return false;
        }
        let th2 = th2.clamp(0.0, FRAC_PI_2);
        rho >= t.r1_at(th2) - tol && rho <= t.r2_at(th2) + tol
    })
}

/// `H(φ, ψ) − K − ½‖max(φ, R₁) − Φ‖²_{L²} + B ‖ψ‖_{L²}^{2/3}`.
pub fn check_two_thirds_bound(
    phi: &Curve,
    psi: &Curve,
    big_phi: &Curve,
    k: f64,
    bc: &BoundConstants,
    t: &PolarTarget,
) -> Result<f64> {
    if !phi.shares_grid(psi) || !phi.shares_grid(big_phi) || phi.len() != t.grid().len() {
        return Err(Error::GridMismatch("curves and target must share the angular grid".into()));
    }
    if !curve_in_target(phi, psi, t.grid(), t, 1e-12) {
        return Err(Error::Infeasible("curve leaves the target annulus".into()));
    }
    let tilde: Vec<f64> = phi.values().iter().zip(t.r1()).map(|(a, b)| a.max(*b)).collect();
    let dev: Vec<f64> = tilde.iter().zip(big_phi.values()).map(|(a, b)| a - b).collect();
    let h = phi.dtheta();
    let dev_sq = stencil::l2_inner(&dev, &dev, h);
    let psi_norm = psi.l2_norm_sq().sqrt();
    Ok(h_functional(phi, psi)? - k - 0.5 * dev_sq + bc.b * psi_norm.powf(2.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{LambdaGrid, PresetKind, Problem};
    use crate::obstacle::solve_obstacle;
    use crate::raymaps::{monotone_ray_map, original_map};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn annulus(n_r: usize, n_t: usize) -> Problem {
        Problem::preset(PresetKind::AnnulusConst, n_r, n_t, n_r).unwrap()
    }

    #[test]
    fn monge_cost_examples() {
        let p = annulus(2000, 11);
        let id = MapField::identity(p.densities.radial().clone(), p.densities.angular().clone());
        assert_eq!(monge_cost(&id, &p.densities), 0.0);
        let m = MapField::from_profile(&monotone_ray_map(&p.densities, &p.target).unwrap());
        assert!((monge_cost(&m, &p.densities) - 1.375).abs() < 1e-6);
        let o = original_map(&p.densities, &p.target, &Curve::constant(p.target.grid(), 1.5)).unwrap();
        assert!((monge_cost(&MapField::from_profile(&o), &p.densities) - 1.375).abs() < 1e-6);
    }

    #[test]
    fn w1_examples() {
        let p = annulus(8000, 5);
        assert!((w1_duality(&p.densities, &p.target).unwrap() - 1.375).abs() < 1e-8);

        let a = AngularGrid::new(5).unwrap();
        let same = PolarTarget::new_unchecked(a, vec![1e-300; 5], vec![1.0; 5], 0.0).unwrap();
        let radial = RadialGrid::uniform(400).unwrap();
        let d = DensityPair::from_fns(radial, LambdaGrid::new(400).unwrap(), &same, |_, _| 4.0 / PI, |_, _| 4.0 / PI)
            .unwrap();
        assert!(w1_duality(&d, &same).unwrap().abs() < 1e-5);

        let shifted = |dr: f64| {
            let a = AngularGrid::new(5).unwrap();
            let t = PolarTarget::new(a, vec![1.5 + dr; 5], vec![2.5 + dr; 5], 0.0).unwrap();
            let d = DensityPair::from_fns(
                RadialGrid::uniform(400).unwrap(),
                LambdaGrid::new(400).unwrap(),
                &t,
                |_, _| 4.0 / PI,
                |_, _| 1.0,
            )
            .unwrap();
            let d = crate::domain::normalize_target_per_theta(&d, &t).unwrap();
            w1_duality(&d, &t).unwrap()
        };
        assert!(shifted(0.5) > shifted(0.0));
    }

    #[test]
    fn w1_refuses_incompatible_pairs() {
        let p = annulus(100, 5);
        let bad = p.densities.with_g(p.densities.g().map(|v| 2.0 * v)).unwrap();
        assert!(w1_duality(&bad, &p.target).is_err());
    }

    #[test]
    fn dirichlet_examples() {
        let radial = RadialGrid::uniform(400).unwrap();
        let ang = AngularGrid::new(101).unwrap();
        let r_lo = radial.nodes()[10];
        let id = MapField::identity(radial.clone(), ang.clone());
        let exact = 2.0 * PI / 4.0 * (1.0 - r_lo * r_lo);
        assert!((dirichlet_polar(&id, r_lo).unwrap() - exact).abs() < 1e-6);

        let beta: f64 = 0.4;
        let rot = MapField::from_cartesian(radial.clone(), ang.clone(), |x| {
            [beta.cos() * x[0] - beta.sin() * x[1], beta.sin() * x[0] + beta.cos() * x[1]]
        });
        assert!((dirichlet_polar(&rot, r_lo).unwrap() - exact).abs() < 1e-6);

        let graded = RadialGrid::graded(400, 1e-4).unwrap();
        let ray = MapField::from_fn(graded, ang, |_, _| (1.5, 0.0));
        let k = 9.0 * PI / 8.0;
        for r in [1e-2, 1e-3, 1e-4] {
            let lo = node_at_or_above(&ray.radial, r).unwrap();
            let r_used = ray.radial.nodes()[lo];
            let d = dirichlet_polar(&ray, r).unwrap();
            assert!((d - k * r_used.ln().abs()).abs() < 1e-3 * d, "{r}");
        }
        assert!(dirichlet_polar(&id, 1e-9).is_err());
    }

    #[test]
    fn polar_energy_matches_cartesian_differences() {
        let t = |x: [f64; 2]| [x[0] + 0.3 * x[1] * x[1] + 2.0, 0.5 * x[0] * x[1] + 1.2 * x[1] + 0.1 * x[0].sin()];
        let radial = RadialGrid::uniform(800).unwrap();
        let ang = AngularGrid::new(801).unwrap();
        let r_lo = 0.2;
        let m = MapField::from_cartesian(radial.clone(), ang.clone(), t);
        let polar = dirichlet_polar(&m, r_lo).unwrap();
        // Cartesian central differences of T at the same nodes, polar quadrature.
        let h = 1e-5;
        let r = radial.nodes();
        let lo = node_at_or_above(&radial, r_lo).unwrap();
        let per_r: Vec<f64> = r
            .iter()
            .map(|&ri| {
                let vals: Vec<f64> = ang
                    .nodes()
                    .iter()
                    .map(|&th| {
                        let x = [ri * th.cos(), ri * th.sin()];
                        let dx = (t([x[0] + h, x[1]]), t([x[0] - h, x[1]]));
                        let dy = (t([x[0], x[1] + h]), t([x[0], x[1] - h]));
                        let a = [(dx.0[0] - dx.1[0]) / (2.0 * h), (dx.0[1] - dx.1[1]) / (2.0 * h)];
                        let b = [(dy.0[0] - dy.1[0]) / (2.0 * h), (dy.0[1] - dy.1[1]) / (2.0 * h)];
                        a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1]
                    })
                    .collect();
                ri * ang.integrate(&vals)
            })
            .collect();
        let cart = trapezoid(r, &per_r, lo, r.len() - 1);
        assert!(((polar - cart) / cart).abs() < 1e-3, "{polar} {cart}");
    }

    #[test]
    fn j_eps_examples() {
        let p = annulus(400, 51);
        let d = &p.densities;
        let id = MapField::identity(d.radial().clone(), d.angular().clone());
        let rmin = d.radial().r_min();
        let exact = 0.1 * 2.0 * PI / 4.0 * (1.0 - rmin * rmin);
        assert!((j_eps(&id, d, 0.1).unwrap() - exact).abs() < 1e-6);
        let m = MapField::from_profile(&monotone_ray_map(d, &p.target).unwrap());
        assert!((j_eps(&m, d, 1e-14).unwrap() - monge_cost(&m, d)).abs() < 1e-12);
    }

    #[test]
    fn h_functional_examples() {
        let g = AngularGrid::new(2001).unwrap();
        let phi = Curve::from_fn(&g, |t| 1.5 + 0.1 * t.sin());
        let zero = Curve::constant(&g, 0.0);
        assert_eq!(h_functional(&phi, &zero).unwrap(), phi.h1_norm_sq());
        assert_eq!(h_functional(&zero, &zero).unwrap(), 0.0);
        let c = Curve::from_fn(&g, f64::cos);
        let s = Curve::from_fn(&g, |t| -t.sin());
        assert!(h_functional(&c, &s).unwrap().abs() < 1e-6);
    }

    fn original_setup(n_r: usize, n_t: usize) -> (Problem, MapField, f64) {
        let p = annulus(n_r, n_t);
        let sol = solve_obstacle(&Curve::constant(p.target.grid(), 1.5), 1e-10).unwrap();
        let o = original_map(&p.densities, &p.target, &sol.phi).unwrap();
        (p, MapField::from_profile(&o), sol.k)
    }

    #[test]
    fn decomposition_identity_holds_to_rounding() {
        let (p, m, k) = original_setup(600, 101);
        let w1 = potential_w1(&m, &p.densities);
        assert!((w1 - w1_duality(&p.densities, &p.target).unwrap()).abs() < 1e-5);
        for eps in [1e-1, 1e-2, 1e-3] {
            let direct = f_eps_direct(&m, &p.densities, eps, k, w1).unwrap();
            let split = f_eps_decomposed(&m, &p.densities, &p.target, eps, k).unwrap();
            assert!((direct - split.total()).abs() < 1e-10 * (1.0 + direct.abs()), "{eps}");
            assert!(split.term1.abs() < 1e-12);
        }
    }

    #[test]
    fn f_eps_direct_is_zero_for_the_reference_value() {
        let (p, m, k) = original_setup(200, 21);
        let eps = 1e-2;
        let (_, delta) = snapped_delta(&m.radial, eps);
        let j = j_eps(&m, &p.densities, eps).unwrap();
        let w1 = j - k * eps * delta.ln().abs();
        assert!(f_eps_direct(&m, &p.densities, eps, k, w1).unwrap().abs() < 1e-9);
    }

    #[test]
    fn non_admissible_map_blows_up_like_one_over_eps() {
        let (p, _, k) = original_setup(200, 21);
        let d = &p.densities;
        let w1 = w1_duality(d, &p.target).unwrap();
        let bad = MapField::from_fn(d.radial().clone(), d.angular().clone(), |r, _| (2.5 * r, 0.0));
        let f1 = f_eps_direct(&bad, d, 1e-2, k, w1).unwrap();
        let f2 = f_eps_direct(&bad, d, 1e-3, k, w1).unwrap();
        assert!(f2 / f1 > 5.0);
        assert!(f_eps_decomposed(&bad, d, &p.target, 1e-2, k).is_err());
    }

    #[test]
    fn term3_of_original_map_tends_to_two_pi_ln_two() {
        let (p, m, k) = original_setup(4000, 21);
        let split = f_eps_decomposed(&m, &p.densities, &p.target, 1e-9, k).unwrap();
        let target = 2.0 * PI * 2f64.ln();
        assert!(((split.term3 - target) / target).abs() < 1e-2, "{}", split.term3);
    }

    #[test]
    fn limit_functional_examples() {
        let p = Problem::build(PresetKind::AnnulusConst, None, 0.0, RadialGrid::graded(3000, 1e-4).unwrap(), 21, 3000)
            .unwrap();
        let sol = solve_obstacle(&Curve::constant(p.target.grid(), 1.5), 1e-10).unwrap();
        let o = original_map(&p.densities, &p.target, &sol.phi).unwrap();
        let lf = limit_f(&o, sol.k);
        let target = 2.0 * PI * 2f64.ln();
        assert!(((lf.angular - target) / target).abs() < 1e-2, "{}", lf.angular);
        assert!(!lf.diverges);

        let mono = monotone_ray_map(&p.densities, &p.target).unwrap();
        let lm = limit_f(&mono, sol.k);
        assert!(((lm.angular - PI) / PI).abs() < 1e-2, "{}", lm.angular);
        assert!(lm.total().is_finite() && !lm.diverges);

        let mut flat = o.clone();
        for i in 0..flat.radial.len() {
            if flat.radial.nodes()[i] < 0.05 {
                for j in 0..flat.angular.len() {
                    flat.phi.set(i, j, 2.0);
                }
            }
        }
        flat.phi0 = vec![2.0; flat.angular.len()];
        let lflat = limit_f(&flat, sol.k);
        assert!(lflat.diverges);
        let dev = Curve::constant(p.target.grid(), 0.5).l2_norm_sq();
        assert!(lflat.tail_coefficient >= dev);
    }

    #[test]
    fn bound_constants_for_annulus() {
        let p = annulus(50, 21);
        let k = 9.0 * PI / 8.0;
        let bc = bound_constants(&p.target, k);
        assert!((bc.a - 1.0 / 30.0).abs() < 1e-15);
        assert!((bc.b1 - 1.0).abs() < 1e-15);
        assert!((bc.b2 - 1.5 * FRAC_PI_2).abs() < 1e-12);
        assert!((bc.b3 - 3.0 * FRAC_PI_2).abs() < 1e-12);
        assert!(bc.b4 > 0.0);
        let s2 = 2.5;
        let root =
            0.5 * bc.b4 * bc.b4 - 4.0 * s2 * FRAC_PI_2.sqrt() * bc.b4 - (4.0 * s2 * s2 + 0.5 * bc.b3 * s2 + 0.5 * k);
        assert!(root.abs() < 1e-9);
        assert!((2f64.sqrt() * bc.b5 * bc.eps_star.powi(4) / 4.0 - 1.0).abs() < 1e-12);
        assert!(candidate_lower_constant(&bc, 4.0 / PI) > 0.0);
    }

    #[test]
    fn tangential_bound_examples() {
        let radial = RadialGrid::uniform(50).unwrap();
        let ang = AngularGrid::new(21).unwrap();
        let a = 1.0 / 30.0;
        let ray = MapField::from_fn(radial.clone(), ang.clone(), |r, _| (1.5 + r, 0.0));
        assert!(check_tangential_bound(&ray, a).abs() < 1e-15);
        // |T| = sup R₂ with the largest tangential component.
        let edge = MapField::from_fn(radial, ang, |_, t| {
            let psi = 2.5 * (0.2 + t).sin();
            ((2.5f64 * 2.5 - psi * psi).sqrt(), psi)
        });
        assert!(check_tangential_bound(&edge, a) >= 0.0);
    }

    #[test]
    fn two_thirds_bound_examples() {
        let p = annulus(50, 201);
        let sol = solve_obstacle(&Curve::constant(p.target.grid(), 1.5), 1e-10).unwrap();
        let bc = bound_constants(&p.target, sol.k);
        let zero = Curve::constant(p.target.grid(), 0.0);
        let s = check_two_thirds_bound(&sol.phi, &zero, &sol.phi, sol.k, &bc, &p.target).unwrap();
        assert!(s.abs() < 1e-10);
        let up = Curve::from_fn(p.target.grid(), |t| 1.6 + 0.2 * t.sin());
        let s = check_two_thirds_bound(&up, &zero, &sol.phi, sol.k, &bc, &p.target).unwrap();
        let g = crate::obstacle::g_value(&up, sol.k);
        let half = 0.5 * up.zip_with(&sol.phi, |a, b| a - b).unwrap().l2_norm_sq();
        assert!((s - (g - half)).abs() < 1e-12 && s >= 0.0);
        let outside = Curve::constant(p.target.grid(), 3.0);
        assert!(check_two_thirds_bound(&outside, &zero, &sol.phi, sol.k, &bc, &p.target).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn split_is_additive(eps in 1e-3f64..0.5) {
            let (p, m, k) = original_setup(120, 21);
            let w1 = potential_w1(&m, &p.densities);
            let direct = f_eps_direct(&m, &p.densities, eps, k, w1).unwrap();
            let split = f_eps_decomposed(&m, &p.densities, &p.target, eps, k).unwrap();
            prop_assert!((direct - split.total()).abs() < 1e-10 * (1.0 + direct.abs()));
            prop_assert!(split.term1 >= -1e-12);
        }

        #[test]
        fn potential_gap_is_nonnegative(r in 0.0f64..1.0, rho in 1.5f64..2.5, ang in -1.5f64..1.5) {
            let (phi, psi) = (rho * ang.cos(), rho * ang.sin());
            prop_assert!(potential_gap(phi, psi, r) - r * psi * psi / 30.0 >= -1e-12);
        }
    }
}
