//! Bounded-energy family: the original ray map outside `B(0, δ)` and a
//! measure-matching Lipschitz patch inside, with `δ = ε^{1/3}` snapped to the
//! radial grid.
//!
//! The patch is `S(x) = S₂(u(A⁻¹(x/δ)))`: [`chart::disk_to_square`] flattens
//! the rescaled quarter disk, a [`moser::MoserFlow`] on the square matches the
//! pulled-back densities, and [`chart::StripChart`] lays the square on the thin
//! strip `Ω′_δ = {Φ(θ) ≤ |y| ≤ φ(δ, θ)}` filled by the ray map on `Ω_δ`. The
//! side of the square carried to the arc `|x| = δ` is fixed by the flow and
//! goes to `φ(δ, θ) x̂`, so the patch meets the ray map continuously.

pub mod chart;
pub mod moser;

use crate::domain::{DensityPair, Field2, PolarTarget, Problem};
use crate::energy::{self, MapField};
use crate::error::{Error, Result};
use crate::obstacle::{solve_obstacle, Curve};
use crate::raymaps::{original_map, ray_pushforward_defect, RadialProfile};
use chart::{disk_to_square, square_to_disk, square_to_disk_det, StripChart};
use moser::{sample_on_square, square_mass, MoserFlow};
use rayon::prelude::*;
use std::f64::consts::FRAC_PI_2;

/// Points per ray in the per-angle mass quadratures.
const RAY_QUADRATURE: usize = 512;
/// Largest fraction of flowed points allowed to leave the square.
pub const MAX_ESCAPE_FRACTION: f64 = 1e-3;

fn trapezoid_unit(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / n as f64;
    (0..=n).map(|k| if k == 0 || k == n { 0.5 } else { 1.0 } * f(k as f64 * h)).sum::<f64>() * h
}

/// Densities of the inner problem at scale `δ`: `f_δ(z) = f(δ z)` on the unit
/// quarter disk and `g_δ(λ, θ) = (φ(δ,θ) − Φ(θ)) δ⁻² g(S₂(λ, θ))` on the strip chart.
#[derive(Debug, Clone)]
pub struct RescaledDensities {
    pub delta: f64,
    pub strip: StripChart,
    d: DensityPair,
    t: PolarTarget,
    /// Per-node factors making `∫₀¹ g_δ ρ dλ` equal to the source mass of the ray.
    scale: Vec<f64>,
}

pub fn rescale_densities(
    d: &DensityPair,
    t: &PolarTarget,
    p: &RadialProfile,
    phi_curve: &Curve,
    delta: f64,
) -> Result<RescaledDensities> {
    let i = p.radial.nearest(delta);
    let r = p.radial.nodes();
    if (r[i] - delta).abs() > 1e-12 * delta {
        return Err(Error::Validation(format!("delta {delta} is not a radial node")));
    }
    if phi_curve.len() != p.angular.len() {
        return Err(Error::GridMismatch("Phi and the profile use different angular grids".into()));
    }
    let inner = phi_curve.values().to_vec();
    if p.phi0.iter().zip(&inner).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::Validation("the profile does not start on Phi".into()));
    }
    let outer = p.phi.row(i).to_vec();
    if let Some(j) = (0..inner.len()).find(|&j| outer[j] <= inner[j]) {
        return Err(Error::Validation(format!("degenerate strip: phi(delta) <= Phi at theta index {j}")));
    }
    let strip = StripChart { theta: p.angular.nodes().to_vec(), inner, outer };
    let mut rd = RescaledDensities { delta, strip, d: d.clone(), t: t.clone(), scale: vec![1.0; p.angular.len()] };
    let scale = p
        .angular
        .nodes()
        .iter()
        .map(|&th| {
            let src = trapezoid_unit(RAY_QUADRATURE, |s| rd.f_delta_polar(s, th) * s);
            let dst = trapezoid_unit(RAY_QUADRATURE, |l| rd.g_delta(l, th) * rd.strip.radius(l, th));
            src / dst
        })
        .collect();
    rd.scale = scale;
    Ok(rd)
}

impl RescaledDensities {
    fn f_delta_polar(&self, s: f64, theta: f64) -> f64 {
        self.d.f_at(self.delta * s, theta)
    }

    pub fn f_delta(&self, z: [f64; 2]) -> f64 {
        let th = if z[0] == 0.0 && z[1] == 0.0 { 0.0 } else { z[1].atan2(z[0]) };
        self.f_delta_polar(z[0].hypot(z[1]), th)
    }

    /// The strip density in `(λ, θ)` coordinates, before normalization.
    pub fn g_delta(&self, lambda: f64, theta: f64) -> f64 {
        let w = self.strip.width_at(theta);
        w / (self.delta * self.delta) * self.d.g_at(self.strip.radius(lambda, theta), theta, &self.t)
    }

    pub fn scale_at(&self, theta: f64) -> f64 {
        let h = self.strip.theta[1] - self.strip.theta[0];
        let n = self.scale.len();
        let s = (theta / h).clamp(0.0, (n - 1) as f64);
        let j = (s.floor() as usize).min(n - 2);
        let a = s - j as f64;
        self.scale[j] * (1.0 - a) + self.scale[j + 1] * a
    }

    /// Density of the pulled-back target measure with respect to `dλ dθ`,
    /// normalized so each angle carries the source mass of its ray.
    pub fn chart_target_density(&self, lambda: f64, theta: f64) -> f64 {
        self.scale_at(theta) * self.g_delta(lambda, theta) * self.strip.radius(lambda, theta)
    }

    /// `∫₀¹ f_δ(s, θ) s ds`.
    pub fn source_ray_mass(&self, theta: f64) -> f64 {
        trapezoid_unit(RAY_QUADRATURE, |s| self.f_delta_polar(s, theta) * s)
    }

    /// `∫₀¹ chart_target_density(λ, θ) dλ`.
    pub fn target_ray_mass(&self, theta: f64) -> f64 {
        trapezoid_unit(RAY_QUADRATURE, |l| self.chart_target_density(l, theta))
    }
}

/// The inner map with its diagnostics.
#[derive(Debug, Clone)]
pub struct PatchMap {
    pub delta: f64,
    pub strip: StripChart,
    flow: MoserFlow,
    /// Sliced `W₁` between the transported and the target chart measures.
    pub defect: f64,
    /// Flowed grid nodes that left the square.
    pub escaped: usize,
    pub nodes: usize,
    /// `max |S(x) − S(x′)| / |x − x′| · δ` over chart-grid edges.
    pub lip_delta: f64,
    /// Largest mismatch with the ray map on the seam, in units of one radial chart cell.
    pub seam_cells: f64,
}

pub fn moser_patch(rd: &RescaledDensities, n: usize) -> Result<PatchMap> {
    let f1 = sample_on_square(n, |q| rd.f_delta(square_to_disk(q)) * square_to_disk_det(q));
    let f2 = sample_on_square(n, |q| FRAC_PI_2 * rd.chart_target_density(q[0], FRAC_PI_2 * q[1]));
    let ratio = square_mass(&f1) / square_mass(&f2);
    let f2 = f2.map(|v| v * ratio);
    let flow = MoserFlow::new(f1, f2)?;
    let (images, escaped) = flow.transport_grid();
    let nodes = images.len();
    if escaped as f64 > MAX_ESCAPE_FRACTION * nodes as f64 {
        return Err(Error::FlowEscape { escaped, total: nodes });
    }
    let defect = flow.pushforward_defect(&images)?;
    let h = 1.0 / n as f64;
    let m = n + 1;
    let z: Vec<[f64; 2]> = (0..nodes).map(|id| square_to_disk([(id / m) as f64 * h, (id % m) as f64 * h])).collect();
    let y: Vec<[f64; 2]> = images.iter().map(|q| rd.strip.point(*q)).collect();
    let mut lip_delta: f64 = 0.0;
    for i in 0..m {
        for k in 0..m {
            let a = i * m + k;
            for b in
                [if i < n { Some(a + m) } else { None }, if k < n { Some(a + 1) } else { None }].into_iter().flatten()
            {
                let dz = (z[a][0] - z[b][0]).hypot(z[a][1] - z[b][1]);
                if dz > 0.0 {
                    lip_delta = lip_delta.max((y[a][0] - y[b][0]).hypot(y[a][1] - y[b][1]) / dz);
                }
            }
        }
    }
    let mut patch =
        PatchMap { delta: rd.delta, strip: rd.strip.clone(), flow, defect, escaped, nodes, lip_delta, seam_cells: 0.0 };
    let mut seam: f64 = 0.0;
    for (j, &th) in rd.strip.theta.iter().enumerate() {
        let x = [rd.delta * th.cos(), rd.delta * th.sin()];
        let (s, _) = patch.eval(x);
        let rho = rd.strip.outer[j];
        let cell = (rho - rd.strip.inner[j]) / n as f64;
        seam = seam.max((s[0] - rho * th.cos()).hypot(s[1] - rho * th.sin()) / cell);
    }
    patch.seam_cells = seam;
    Ok(patch)
}

impl PatchMap {
    /// `S(x)` for `|x| ≤ δ`, and whether the flow had to be clamped.
    pub fn eval(&self, x: [f64; 2]) -> ([f64; 2], bool) {
        let q = disk_to_square([x[0] / self.delta, x[1] / self.delta]);
        let (u, esc) = self.flow.transport(q);
        (self.strip.point(u), esc)
    }

    /// Lipschitz constant of the strip chart, used to carry chart defects to the plane.
    pub fn strip_lipschitz(&self) -> f64 {
        let w = self.strip.outer.iter().zip(&self.strip.inner).map(|(a, b)| a - b).fold(0.0, f64::max);
        let o = self.strip.outer.iter().cloned().fold(0.0, f64::max);
        w.max(FRAC_PI_2 * o)
    }
}

/// A member of the family with its diagnostics.
#[derive(Debug, Clone)]
pub struct RecoveryMap {
    pub field: MapField,
    pub patch: PatchMap,
    pub delta_index: usize,
    pub ray_defect: f64,
    /// `ray_defect + δ² Lip(S₂) · patch defect`: the chart defect has mass scale
    /// `δ⁻²` and is carried to the plane by the strip chart.
    pub global_defect: f64,
    /// Polar nodes inside `B(0, δ)` whose flow had to be clamped.
    pub escaped: usize,
}

pub fn assemble_recovery(
    p: &RadialProfile,
    d: &DensityPair,
    t: &PolarTarget,
    phi_curve: &Curve,
    eps: f64,
    n_patch: usize,
) -> Result<RecoveryMap> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Validation(format!("epsilon {eps} outside (0,1)")));
    }
    let (di, delta) = energy::snapped_delta(&p.radial, eps);
    let dr = p.radial.max_spacing();
    if delta < 4.0 * dr {
        return Err(Error::Validation(format!("delta {delta} is below four radial cells ({dr})")));
    }
    if let Some(rho1) = &p.rho1 {
        let m = rho1.iter().cloned().fold(f64::INFINITY, f64::min);
        if delta >= m {
            return Err(Error::Validation(format!("delta {delta} reaches the first breakpoint {m}")));
        }
    }
    let rd = rescale_densities(d, t, p, phi_curve, delta)?;
    let patch = moser_patch(&rd, n_patch)?;
    let r = p.radial.nodes();
    let th = p.angular.nodes();
    let n_t = th.len();
    let inner: Vec<(f64, f64, bool)> = (0..di * n_t)
        .into_par_iter()
        .map(|id| {
            let (i, j) = (id / n_t, id % n_t);
            let xh = [th[j].cos(), th[j].sin()];
            let (y, esc) = patch.eval([r[i] * xh[0], r[i] * xh[1]]);
            (y[0] * xh[0] + y[1] * xh[1], -y[0] * xh[1] + y[1] * xh[0], esc)
        })
        .collect();
    let escaped = inner.iter().filter(|v| v.2).count();
    if escaped as f64 > MAX_ESCAPE_FRACTION * (r.len() * n_t) as f64 {
        return Err(Error::FlowEscape { escaped, total: r.len() * n_t });
    }
    let mut phi = p.phi.clone();
    let mut psi = Field2::zeros(r.len(), n_t);
    for (id, v) in inner.iter().enumerate() {
        phi.set(id / n_t, id % n_t, v.0);
        psi.set(id / n_t, id % n_t, v.1);
    }
    let field = MapField::new(p.radial.clone(), p.angular.clone(), phi, psi)?;
    let ray_defect = ray_pushforward_defect(p, d, t)?;
    let global_defect = ray_defect + delta * delta * patch.strip_lipschitz() * patch.defect;
    Ok(RecoveryMap { field, patch, delta_index: di, ray_defect, global_defect, escaped })
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub delta: f64,
    pub j: f64,
    /// `(J_ε − W₁)/ε − K|log δ|` with the duality value of `W₁`.
    pub f_direct: f64,
    pub terms: energy::Decomposition,
    pub lip_delta: f64,
    pub patch_defect: f64,
    pub ray_defect: f64,
    pub global_defect: f64,
    pub seam_cells: f64,
    pub escaped: usize,
    /// `(J_ε − W₁ − (K/3) ε|log ε|)/ε`.
    pub excess_ratio: f64,
}

impl SweepRow {
    /// `F_ε` from the four-term split.
    pub fn f_eps(&self) -> f64 {
        self.terms.total()
    }
}

/// Sweep output with the ingredients shared by all rows.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub k: f64,
    pub w1: f64,
    pub phi: Curve,
    pub profile: RadialProfile,
    pub rows: Vec<SweepRow>,
    /// Present when fields were requested, in row order.
    pub fields: Vec<MapField>,
}

impl Sweep {
    /// `(min, max, mean)` of `F_ε` over the rows.
    pub fn f_stats(&self) -> (f64, f64, f64) {
        let v: Vec<f64> = self.rows.iter().map(SweepRow::f_eps).collect();
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (min, max, v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub fn recovery_sweep(problem: &Problem, eps_list: &[f64], n_patch: usize, keep_fields: bool) -> Result<Sweep> {
    let (d, t) = (&problem.densities, &problem.target);
    let r1 = Curve::new(t.grid(), t.r1().to_vec())?;
    let sol = solve_obstacle(&r1, 1e-10)?;
    let profile = original_map(d, t, &sol.phi)?;
    let w1 = energy::w1_duality(d, t)?;
    let k = sol.k;
    let out: Vec<(SweepRow, Option<MapField>)> = eps_list
        .par_iter()
        .map(|&eps| -> Result<_> {
            let rec = assemble_recovery(&profile, d, t, &sol.phi, eps, n_patch)?;
            let terms = energy::f_eps_decomposed(&rec.field, d, t, eps, k)?;
            let j = energy::j_eps(&rec.field, d, eps)?;
            let f_direct = energy::f_eps_direct(&rec.field, d, eps, k, w1)?;
            let row = SweepRow {
                eps,
                delta: terms.delta,
                j,
                f_direct,
                terms,
                lip_delta: rec.patch.lip_delta,
                patch_defect: rec.patch.defect,
                ray_defect: rec.ray_defect,
                global_defect: rec.global_defect,
                seam_cells: rec.patch.seam_cells,
                escaped: rec.escaped + rec.patch.escaped,
                excess_ratio: (j - w1 - k / 3.0 * eps * eps.ln().abs()) / eps,
            };
            Ok((row, keep_fields.then_some(rec.field)))
        })
        .collect::<Result<_>>()?;
    let (rows, fields): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    Ok(Sweep { k, w1, phi: sol.phi, profile, rows, fields: fields.into_iter().flatten().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PresetKind;
    use crate::raymaps::growth_constants;

    fn setup(n_r: usize, n_t: usize) -> (Problem, RadialProfile, Curve, f64) {
        let p = Problem::preset(PresetKind::AnnulusConst, n_r, n_t, n_r).unwrap();
        let sol = solve_obstacle(&Curve::constant(p.target.grid(), 1.5), 1e-10).unwrap();
        let o = original_map(&p.densities, &p.target, &sol.phi).unwrap();
        (p, o, sol.phi, sol.k)
    }

    #[test]
    fn rescaled_annulus_densities() {
        let (p, o, phi, _) = setup(400, 21);
        let delta = p.densities.radial().nodes()[p.densities.radial().nearest(0.1)];
        let rd = rescale_densities(&p.densities, &p.target, &o, &phi, delta).unwrap();
        let expect = ((2.25 + 8.0 * delta * delta).sqrt() - 1.5) / (delta * delta) / std::f64::consts::PI;
        for l in [0.0, 0.3, 1.0] {
            for th in [0.0, 0.7, 1.5] {
                assert!((rd.g_delta(l, th) - expect).abs() < 1e-6 * expect);
            }
        }
        for th in [0.0, 0.4, 1.2] {
            let (a, b) = (rd.source_ray_mass(th), rd.target_ray_mass(th));
            assert!(((a - b) / a).abs() < 1e-10 || rd.strip.theta.iter().all(|&x| (x - th).abs() > 1e-12));
            let fd = rd.f_delta([0.3 * th.cos(), 0.3 * th.sin()]);
            assert!(fd >= p.densities.inf_f() - 1e-15 && fd <= p.densities.sup_f() + 1e-15);
        }
        for th in rd.strip.theta.clone() {
            let (a, b) = (rd.source_ray_mass(th), rd.target_ray_mass(th));
            assert!(((a - b) / a).abs() < 1e-10);
        }
    }

    #[test]
    fn g_delta_bounded_by_growth_constants() {
        let (p, o, phi, _) = setup(400, 21);
        let (c, cc) = growth_constants(&o, &phi, 0.5).unwrap();
        let (gi, gs) = (p.densities.inf_g(), p.densities.sup_g());
        for target in [0.05, 0.1, 0.2, 0.4] {
            let r = p.densities.radial().nodes();
            let delta = r[p.densities.radial().nearest(target)];
            let rd = rescale_densities(&p.densities, &p.target, &o, &phi, delta).unwrap();
            for th in [0.0, 0.8, 1.57] {
                let g = rd.g_delta(0.5, th);
                assert!(g >= c * gi * (1.0 - 1e-9) && g <= cc * gs * (1.0 + 1e-9), "{delta} {g}");
            }
        }
    }

    #[test]
    fn degenerate_strip_is_rejected() {
        let (p, mut o, phi, _) = setup(100, 11);
        let r = p.densities.radial().nodes();
        let i = p.densities.radial().nearest(0.2);
        o.phi.set(i, 3, 1.5);
        assert!(rescale_densities(&p.densities, &p.target, &o, &phi, r[i]).is_err());
    }

    #[test]
    fn assembled_field_keeps_the_ray_map_outside() {
        let (p, o, phi, _) = setup(200, 41);
        let rec = assemble_recovery(&o, &p.densities, &p.target, &phi, 1e-2, 48).unwrap();
        let n_t = o.angular.len();
        for i in rec.delta_index..o.radial.len() {
            for j in 0..n_t {
                assert_eq!(rec.field.phi.get(i, j).to_bits(), o.phi.get(i, j).to_bits());
                assert_eq!(rec.field.psi.get(i, j), 0.0);
            }
        }
        assert!(rec.patch.seam_cells < 1.0);
        assert!(rec.global_defect <= rec.ray_defect + rec.delta_index as f64);
        assert!(rec.field.range_violation(&p.target) < 1e-12);
        assert_eq!(rec.escaped, 0);
    }

    #[test]
    fn patch_defect_decreases_under_refinement() {
        let (p, o, phi, _) = setup(200, 41);
        let r = o.radial.nodes();
        let delta = r[o.radial.nearest(0.2)];
        let rd = rescale_densities(&p.densities, &p.target, &o, &phi, delta).unwrap();
        let a = moser_patch(&rd, 32).unwrap();
        let b = moser_patch(&rd, 64).unwrap();
        assert!(b.defect <= 0.55 * a.defect, "{} {}", a.defect, b.defect);
    }

    #[test]
    fn sweep_is_bounded_and_the_bare_ray_map_is_not() {
        let p = Problem::preset(PresetKind::AnnulusConst, 400, 101, 400).unwrap();
        let eps = [1e-1, 1e-2, 1e-3];
        let s = recovery_sweep(&p, &eps, 64, false).unwrap();
        let (min, max, mean) = s.f_stats();
        assert!(max - min <= 0.5 * mean, "{min} {max}");
        let sup_f = p.densities.sup_f();
        for row in &s.rows {
            let bound = std::f64::consts::PI * sup_f / 3.0 * row.delta.powi(3) / row.eps;
            assert!(row.terms.term1 <= bound + 1e-9, "{} {}", row.terms.term1, bound);
        }
        let t2: Vec<f64> = s.rows.iter().map(|r| r.terms.term2).collect();
        assert!(t2.iter().cloned().fold(0.0, f64::max) < 2.0 * t2.iter().cloned().fold(f64::INFINITY, f64::min));

        // Without the patch, term2 carries the full logarithm of the inner region.
        let bare = MapField::from_profile(&s.profile);
        let rmin = p.densities.radial().r_min();
        for (row, e) in s.rows.iter().zip(eps) {
            let b = energy::f_eps_decomposed(&bare, &p.densities, &p.target, e, s.k).unwrap();
            let log = s.k * (row.delta / rmin).ln();
            assert!(((b.term2 - log) / log).abs() < 0.35, "{} {}", b.term2, log);
            assert!(b.term2 > row.terms.term2);
        }
    }
}
