use super::grid::{AngularGrid, Field2, LambdaGrid, RadialGrid};
use super::target::PolarTarget;
use crate::error::{Error, Result};

/// Source density `f` on the quarter disk and target density `g` on the `(λ, θ)` chart of the annulus.
#[derive(Debug, Clone)]
pub struct DensityPair {
    radial: RadialGrid,
    lambda: LambdaGrid,
    angular: AngularGrid,
    /// `n_r × n_θ`, mass per area.
    f: Field2,
    /// `n_λ × n_θ`, mass per area.
    g: Field2,
}

/// Where a sampled field lives, which fixes the quadrature weight.
pub enum Region<'a> {
    /// `r dr dθ` over the quarter disk (origin wedge included).
    Source(&'a RadialGrid, &'a AngularGrid),
    /// `dx = r (R₂ − R₁) dλ dθ` over the annulus chart.
    Target(&'a LambdaGrid, &'a PolarTarget),
}

/// Composite trapezoid quadrature of a sampled field.
pub fn quadrature_2d(field: &Field2, region: Region<'_>) -> f64 {
    match region {
        Region::Source(radial, angular) => {
            let wr = radial.weights_with_origin();
            let per_theta: Vec<f64> = (0..angular.len())
                .map(|j| radial.nodes().iter().zip(&wr).enumerate().map(|(i, (r, w))| field.get(i, j) * r * w).sum())
                .collect();
            angular.integrate(&per_theta)
        }
        Region::Target(lambda, target) => {
            let wl = lambda.weights();
            let per_theta: Vec<f64> = (0..target.grid().len())
                .map(|j| {
                    let width = target.r2()[j] - target.r1()[j];
                    lambda
                        .nodes()
                        .iter()
                        .zip(&wl)
                        .enumerate()
                        .map(|(k, (l, w))| field.get(k, j) * target.radius(*l, j) * width * w)
                        .sum()
                })
                .collect();
            target.grid().integrate(&per_theta)
        }
    }
}

impl DensityPair {
    pub fn new(radial: RadialGrid, lambda: LambdaGrid, angular: AngularGrid, f: Field2, g: Field2) -> Result<Self> {
        if f.rows() != radial.len() || f.cols() != angular.len() {
            return Err(Error::GridMismatch("f must be sampled on radial × angular".into()));
        }
        if g.rows() != lambda.len() || g.cols() != angular.len() {
            return Err(Error::GridMismatch("g must be sampled on lambda × angular".into()));
        }
        Ok(Self { radial, lambda, angular, f, g })
    }

    /// Samples `f(r, θ)` and `g(r, θ)` (Cartesian radius on the target side) on the grids.
    pub fn from_fns(
        radial: RadialGrid,
        lambda: LambdaGrid,
        target: &PolarTarget,
        f: impl Fn(f64, f64) -> f64,
        g: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let angular = target.grid().clone();
        let th = angular.nodes();
        let ff = Field2::from_fn(radial.len(), angular.len(), |i, j| f(radial.nodes()[i], th[j]));
        let gg = Field2::from_fn(lambda.len(), angular.len(), |k, j| g(target.radius(lambda.nodes()[k], j), th[j]));
        Self::new(radial, lambda, angular, ff, gg)
    }

    pub fn radial(&self) -> &RadialGrid {
        &self.radial
    }
    pub fn lambda(&self) -> &LambdaGrid {
        &self.lambda
    }
    pub fn angular(&self) -> &AngularGrid {
        &self.angular
    }
    pub fn f(&self) -> &Field2 {
        &self.f
    }
    pub fn g(&self) -> &Field2 {
        &self.g
    }

    pub fn with_g(&self, g: Field2) -> Result<Self> {
        Self::new(self.radial.clone(), self.lambda.clone(), self.angular.clone(), self.f.clone(), g)
    }

    /// Validates positivity and unit total source mass.
    pub fn validate(&self, target: &PolarTarget) -> Result<()> {
        if self.f.min() <= 0.0 || self.g.min() <= 0.0 {
            return Err(Error::Validation("densities must be positive".into()));
        }
        let m = self.source_mass();
        if (m - 1.0).abs() > 1e-8 {
            return Err(Error::Validation(format!("total source mass {m} differs from 1")));
        }
        let (_, max) = check_compatibility(self, target)?;
        if max > 1e-8 {
            return Err(Error::Validation(format!("per-angle compatibility defect {max:e} exceeds 1e-8")));
        }
        Ok(())
    }

    /// `∫₀¹ f(r, θ_j) r dr`.
    pub fn source_mass_at(&self, j: usize) -> f64 {
        let w = self.radial.weights_with_origin();
        self.radial.nodes().iter().zip(&w).enumerate().map(|(i, (r, w))| self.f.get(i, j) * r * w).sum()
    }

    /// `∫_{R₁}^{R₂} g(r, θ_j) r dr`.
    pub fn target_mass_at(&self, j: usize, target: &PolarTarget) -> f64 {
        let w = self.lambda.weights();
        let width = target.r2()[j] - target.r1()[j];
        self.lambda
            .nodes()
            .iter()
            .zip(&w)
            .enumerate()
            .map(|(k, (l, w))| self.g.get(k, j) * target.radius(*l, j) * width * w)
            .sum()
    }

    pub fn source_mass(&self) -> f64 {
        quadrature_2d(&self.f, Region::Source(&self.radial, &self.angular))
    }

    pub fn inf_f(&self) -> f64 {
        self.f.min()
    }
    pub fn sup_f(&self) -> f64 {
        self.f.max()
    }
    pub fn inf_g(&self) -> f64 {
        self.g.min()
    }
    pub fn sup_g(&self) -> f64 {
        self.g.max()
    }

    /// Bilinear interpolation of `f` at polar point `(r, θ)`.
    pub fn f_at(&self, r: f64, theta: f64) -> f64 {
        let (j, t) = angular_cell(&self.angular, theta);
        let a = self.radial.interpolate(&self.f.column(j), r);
        if t == 0.0 {
            return a;
        }
        let b = self.radial.interpolate(&self.f.column(j + 1), r);
        a * (1.0 - t) + b * t
    }

    /// `f` on node column `j` interpolated in `r` only.
    pub fn f_on_ray(&self, r: f64, j: usize) -> f64 {
        let n = self.radial.len();
        let nodes = self.radial.nodes();
        if r <= nodes[0] {
            return self.f.get(0, j);
        }
        if r >= nodes[n - 1] {
            return self.f.get(n - 1, j);
        }
        let k = nodes.partition_point(|&x| x <= r).clamp(1, n - 1);
        let t = (r - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
        self.f.get(k - 1, j) * (1.0 - t) + self.f.get(k, j) * t
    }

    /// `g` at Cartesian radius `r` on node column `j`.
    pub fn g_on_ray(&self, r: f64, j: usize, target: &PolarTarget) -> f64 {
        let l = target.lambda_of(r, j).clamp(0.0, 1.0);
        let h = self.lambda.step();
        let n = self.lambda.len();
        let s = l / h;
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        self.g.get(k, j) * (1.0 - t) + self.g.get(k + 1, j) * t
    }

    /// `g` at polar point `(r, θ)` with θ between nodes.
    pub fn g_at(&self, r: f64, theta: f64, target: &PolarTarget) -> f64 {
        let (j, t) = angular_cell(&self.angular, theta);
        let a = self.g_on_ray(r, j, target);
        if t == 0.0 {
            return a;
        }
        a * (1.0 - t) + self.g_on_ray(r, j + 1, target) * t
    }
}

fn angular_cell(grid: &AngularGrid, theta: f64) -> (usize, f64) {
    let n = grid.len();
    let s = (theta / grid.dtheta()).clamp(0.0, (n - 1) as f64);
    let j = (s.floor() as usize).min(n - 2);
    (j, s - j as f64)
}

/// Per-angle mass defect `|∫ f r dr − ∫ g r dr|` and its maximum.
pub fn check_compatibility(d: &DensityPair, t: &PolarTarget) -> Result<(Vec<f64>, f64)> {
    if !d.angular.same_as(t.grid()) {
        return Err(Error::GridMismatch("density and target angular grids differ".into()));
    }
    let defects: Vec<f64> =
        (0..d.angular.len()).map(|j| (d.source_mass_at(j) - d.target_mass_at(j, t)).abs()).collect();
    let max = defects.iter().copied().fold(0.0, f64::max);
    Ok((defects, max))
}

/// Rescales `g` on every ray so that its mass equals the source mass on that ray.
pub fn normalize_target_per_theta(d: &DensityPair, t: &PolarTarget) -> Result<DensityPair> {
    let mut g = d.g.clone();
    for j in 0..d.angular.len() {
        let mg = d.target_mass_at(j, t);
        if !(mg > 0.0) {
            return Err(Error::Validation(format!("zero target mass on ray {j}")));
        }
        let ratio = d.source_mass_at(j) / mg;
        for k in 0..g.rows() {
            g.set(k, j, g.get(k, j) * ratio);
        }
    }
    d.with_g(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup(n_r: usize, n_t: usize) -> (PolarTarget, DensityPair) {
        let a = AngularGrid::new(n_t).unwrap();
        let t = PolarTarget::new(a, vec![1.5; n_t], vec![2.5; n_t], 0.0).unwrap();
        let d = DensityPair::from_fns(
            RadialGrid::uniform(n_r).unwrap(),
            LambdaGrid::new(n_r).unwrap(),
            &t,
            |_, _| 4.0 / PI,
            |_, _| 1.0 / PI,
        )
        .unwrap();
        (t, d)
    }

    #[test]
    fn constant_pair_is_compatible() {
        let (t, d) = setup(200, 21);
        let (_, max) = check_compatibility(&d, &t).unwrap();
        assert!(max < 1e-12);
        assert!((d.source_mass_at(3) - 2.0 / PI).abs() < 1e-13);
        d.validate(&t).unwrap();
    }

    #[test]
    fn doubling_one_ray_gives_known_defect() {
        let (t, d) = setup(200, 21);
        let mut g = d.g().clone();
        for k in 0..g.rows() {
            g.set(k, 7, 2.0 * g.get(k, 7));
        }
        let d2 = d.with_g(g).unwrap();
        let (def, max) = check_compatibility(&d2, &t).unwrap();
        assert!((def[7] - 2.0 / PI).abs() < 1e-12);
        assert!((max - 2.0 / PI).abs() < 1e-12);
        assert!(def[6] < 1e-12);
    }

    #[test]
    fn zero_fields_have_zero_defect() {
        let (t, d) = setup(50, 11);
        let z = d.with_g(Field2::zeros(50, 11)).unwrap();
        let z =
            DensityPair::new(z.radial.clone(), z.lambda.clone(), z.angular.clone(), Field2::zeros(50, 11), z.g.clone())
                .unwrap();
        let (def, max) = check_compatibility(&z, &t).unwrap();
        assert_eq!(max, 0.0);
        assert!(def.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn normalization_cases() {
        let (t, d) = setup(100, 31);
        let same = normalize_target_per_theta(&d, &t).unwrap();
        for (a, b) in same.g().data().iter().zip(d.g().data()) {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
        let doubled = d.with_g(d.g().map(|v| 2.0 * v)).unwrap();
        let back = normalize_target_per_theta(&doubled, &t).unwrap();
        for (a, b) in back.g().data().iter().zip(d.g().data()) {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
        let th = d.angular().nodes().to_vec();
        let pert = Field2::from_fn(100, 31, |k, j| d.g().get(k, j) * (1.0 + 0.1 * (2.0 * th[j]).sin()));
        let fixed = normalize_target_per_theta(&d.with_g(pert).unwrap(), &t).unwrap();
        assert!(check_compatibility(&fixed, &t).unwrap().1 < 1e-12);
        let twice = normalize_target_per_theta(&fixed, &t).unwrap();
        for (a, b) in twice.g().data().iter().zip(fixed.g().data()) {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
    }

    #[test]
    fn quadrature_examples() {
        let (t, d) = setup(10001, 5);
        let one = Field2::from_fn(d.radial().len(), 5, |_, _| 1.0);
        let area = quadrature_2d(&one, Region::Source(d.radial(), d.angular()));
        assert!((area - PI / 4.0).abs() < 1e-10);
        let r = Field2::from_fn(d.radial().len(), 5, |i, _| d.radial().nodes()[i]);
        let m = quadrature_2d(&r, Region::Source(d.radial(), d.angular()));
        assert!((m - PI / 6.0).abs() < 1e-8);
        let one_t = Field2::from_fn(d.lambda().len(), 5, |_, _| 1.0);
        let area_t = quadrature_2d(&one_t, Region::Target(d.lambda(), &t));
        assert!((area_t - PI).abs() < 1e-10);
    }

    #[test]
    fn interpolation_of_densities() {
        let (t, d) = setup(50, 11);
        assert!((d.f_at(0.37, 0.4) - 4.0 / PI).abs() < 1e-14);
        assert!((d.g_at(2.1, 1.1, &t) - 1.0 / PI).abs() < 1e-14);
    }
}
