//! Equal-weight point clouds for the discrete problem.

use crate::domain::{DensityPair, PolarTarget};
use crate::error::{Error, Result};
use crate::raymaps::{source_ray_measure, target_ray_measure};
use crate::transport1d::{tent, Measure1D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

/// Kantorovich potential of the instance, which fixes the transport rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    /// `u(y) = |y|`, rays through the origin.
    Radial,
    /// `u(y) = y₁`, horizontal rays.
    Horizontal,
}

impl Potential {
    pub fn value(self, p: [f64; 2]) -> f64 {
        match self {
            Potential::Radial => p[0].hypot(p[1]),
            Potential::Horizontal => p[0],
        }
    }
}

/// `N` source and `N` target points with weight `1/N` each.
#[derive(Debug, Clone)]
pub struct Cloud {
    pub source: Vec<[f64; 2]>,
    pub target: Vec<[f64; 2]>,
    /// Stratum of each source point; target point `i` lies in the same stratum.
    pub stratum: Vec<usize>,
    /// Area represented by each source point, `1/(N f(x_i))`.
    pub area: Vec<f64>,
    pub potential: Potential,
    pub seed: u64,
}

impl Cloud {
    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Number of points in each stratum.
    pub fn stratum_counts(&self) -> Vec<usize> {
        let n = self.stratum.iter().max().map_or(0, |m| m + 1);
        let mut c = vec![0; n];
        for &s in &self.stratum {
            c[s] += 1;
        }
        c
    }

    /// `(1/N) Σ (u(y_i) − u(x_i))`, a lower bound on the cost of every assignment.
    pub fn dual_bound(&self) -> f64 {
        let pot = self.potential;
        self.target.iter().map(|&y| pot.value(y)).sum::<f64>() / self.len() as f64
            - self.source.iter().map(|&x| pot.value(x)).sum::<f64>() / self.len() as f64
    }
}

/// Point `k` of a shifted Fibonacci-type lattice with `count` points: the first
/// coordinate is stratified, the second follows the golden-ratio recurrence.
fn lattice_point(k: usize, count: usize, shift: [f64; 2]) -> [f64; 2] {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    let u = ((k as f64 + 0.5) / count as f64 + shift[0]).fract();
    let v = (shift[1] + (k as f64 + 1.0) * GOLDEN).fract();
    [u, v]
}

/// Largest-remainder allocation of `n` points proportionally to `masses`.
fn allocate(n: usize, masses: &[f64]) -> Vec<usize> {
    let total: f64 = masses.iter().sum();
    let exact: Vec<f64> = masses.iter().map(|m| m / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = n - counts.iter().sum::<usize>();
    for &s in order.iter().take(missing) {
        counts[s] += 1;
    }
    counts
}

fn quantile(m: &Measure1D, u: f64) -> Result<f64> {
    m.cdf_inverse(u * m.total())
}

/// Stratified low-discrepancy clouds. Angular strata receive counts
/// proportional to their mass. Inside a stratum a point gets an angle and a
/// mass level `u`; the source point sits at the `u`-quantile of `μ` on that
/// angle and the target point at the `u`-quantile of `ν`, so the identity
/// pairing moves mass along rays and is an optimal assignment.
pub fn sample_clouds(d: &DensityPair, t: &PolarTarget, n: usize, seed: u64) -> Result<Cloud> {
    if n < 100 {
        return Err(Error::Validation(format!("N = {n} below 100")));
    }
    let ang = d.angular();
    let nodes = ang.nodes();
    let src: Vec<Measure1D> = (0..ang.len()).map(|j| source_ray_measure(d, j)).collect::<Result<_>>()?;
    let dst: Vec<Measure1D> = (0..ang.len()).map(|j| target_ray_measure(d, t, j)).collect::<Result<_>>()?;
    let ray_mass: Vec<f64> = src.iter().map(Measure1D::total).collect();
    let n_strata = ((n as f64).sqrt() / 2.0).round().max(1.0) as usize;
    let width = FRAC_PI_2 / n_strata as f64;
    let stratum_mass: Vec<f64> = (0..n_strata)
        .map(|s| {
            let (a, b) = (s as f64 * width, (s + 1) as f64 * width);
            let pts = 16;
            (0..=pts)
                .map(|k| {
                    let th = a + (b - a) * k as f64 / pts as f64;
                    let w = if k == 0 || k == pts { 0.5 } else { 1.0 };
                    w * ang.interpolate(&ray_mass, th)
                })
                .sum::<f64>()
                * (b - a)
                / pts as f64
        })
        .collect();
    let counts = allocate(n, &stratum_mass);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f_sum = d.source_mass();
    let mut cloud = Cloud {
        source: Vec::with_capacity(n),
        target: Vec::with_capacity(n),
        stratum: Vec::with_capacity(n),
        area: Vec::with_capacity(n),
        potential: Potential::Radial,
        seed,
    };
    let h = ang.dtheta();
    for (s, &count) in counts.iter().enumerate() {
        let shift = [rng.random::<f64>(), rng.random::<f64>()];
        for k in 0..count {
            let u = lattice_point(k, count, shift);
            let th = (s as f64 + u[0]) * width;
            let j = ((th / h).floor() as usize).min(nodes.len() - 2);
            let a = (th - nodes[j]) / h;
            let r = (1.0 - a) * quantile(&src[j], u[1])? + a * quantile(&src[j + 1], u[1])?;
            let rho = (1.0 - a) * quantile(&dst[j], u[1])? + a * quantile(&dst[j + 1], u[1])?;
            let (c, sn) = (th.cos(), th.sin());
            cloud.source.push([r * c, r * sn]);
            cloud.target.push([rho * c, rho * sn]);
            cloud.stratum.push(s);
            cloud.area.push(f_sum / (n as f64 * d.f_at(r, th)));
        }
    }
    Ok(cloud)
}

/// Quantile function of `μ_α` (density `α` on `[0,¼] ∪ [¾,1]`, `1` elsewhere), normalized.
pub fn mu_alpha_quantile(alpha: f64, u: f64) -> f64 {
    let total = alpha / 2.0 + 0.5;
    let m = u * total;
    let (m1, m2) = (alpha / 4.0, alpha / 4.0 + 0.5);
    if m <= m1 {
        m / alpha
    } else if m <= m2 {
        0.25 + (m - m1)
    } else {
        0.75 + (m - m2) / alpha
    }
}

pub fn mu_alpha_density(alpha: f64, x: f64) -> f64 {
    let v = if !(0.25..0.75).contains(&x) { alpha } else { 1.0 };
    v / (alpha / 2.0 + 0.5)
}

/// Product instance on `(0,1)² → (2,3) × (0,1)`: the source has first marginal
/// `μ_α` and uniform second marginal; the target is the image under
/// `(x₁, x₂) ↦ (2 + U(x₁), x₂)` with the tent map `U`. Points are laid out in
/// `rows` rows of `cols` points, one stratum per row, so any permutation
/// inside a row moves mass horizontally and is an optimal assignment.
/// Point `i` of the target is the image of source point `i`.
pub fn rectangle_instance(alpha: f64, rows: usize, cols: usize) -> Result<Cloud> {
    if !(alpha > 0.0) || rows == 0 || cols < 2 {
        return Err(Error::Validation("rectangle instance needs alpha > 0, rows >= 1, cols >= 2".into()));
    }
    let n = rows * cols;
    let mut c = Cloud {
        source: Vec::with_capacity(n),
        target: Vec::with_capacity(n),
        stratum: Vec::with_capacity(n),
        area: Vec::with_capacity(n),
        potential: Potential::Horizontal,
        seed: 0,
    };
    for r in 0..rows {
        let x2 = (r as f64 + 0.5) / rows as f64;
        for k in 0..cols {
            // Staggered rows keep neighbourhoods two-dimensional.
            let u = (k as f64 + 0.25 + 0.5 * (r % 2) as f64) / cols as f64;
            let x1 = mu_alpha_quantile(alpha, u);
            c.source.push([x1, x2]);
            c.target.push([2.0 + tent(x1), x2]);
            c.stratum.push(r);
            c.area.push(1.0 / (n as f64 * mu_alpha_density(alpha, x1)));
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PresetKind, Problem};

    #[test]
    fn radial_cdf_of_the_source_cloud() {
        let p = Problem::preset(PresetKind::AnnulusConst, 200, 51, 200).unwrap();
        let c = sample_clouds(&p.densities, &p.target, 1000, 1).unwrap();
        let mut r: Vec<f64> = c.source.iter().map(|x| x[0].hypot(x[1])).collect();
        r.sort_by(f64::total_cmp);
        let n = r.len() as f64;
        let err = r.iter().enumerate().fold(0.0f64, |e, (i, &ri)| {
            e.max((ri * ri - i as f64 / n).abs()).max((ri * ri - (i + 1) as f64 / n).abs())
        });
        assert!(err < 0.05, "{err}");
        for y in &c.target {
            assert!(p.target.contains(*y, 1e-9));
        }
        for x in &c.source {
            assert!(x[0] >= 0.0 && x[1] >= 0.0 && x[0].hypot(x[1]) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn seeds_change_points_not_counts() {
        let p = Problem::preset(PresetKind::AnnulusConst, 100, 21, 100).unwrap();
        let a = sample_clouds(&p.densities, &p.target, 400, 1).unwrap();
        let b = sample_clouds(&p.densities, &p.target, 400, 2).unwrap();
        assert_eq!(a.stratum_counts(), b.stratum_counts());
        assert_ne!(a.source, b.source);
        let a2 = sample_clouds(&p.densities, &p.target, 400, 1).unwrap();
        assert_eq!(a.source, a2.source);
        assert!(sample_clouds(&p.densities, &p.target, 50, 1).is_err());
    }

    #[test]
    fn allocation_is_exact_and_proportional() {
        let c = allocate(10, &[1.0, 1.0, 2.0]);
        assert_eq!(c.iter().sum::<usize>(), 10);
        assert_eq!(c[2], 5);
    }

    #[test]
    fn mu_alpha_quantile_inverts_the_cdf() {
        let alpha = 10.0;
        for k in 1..100 {
            let u = k as f64 / 100.0;
            let x = mu_alpha_quantile(alpha, u);
            let n = 20000;
            let cdf: f64 =
                (0..n).map(|i| (i as f64 + 0.5) * x / n as f64).map(|s| mu_alpha_density(alpha, s)).sum::<f64>() * x
                    / n as f64;
            assert!((cdf - u).abs() < 1e-3, "{u} {cdf}");
        }
    }
}
