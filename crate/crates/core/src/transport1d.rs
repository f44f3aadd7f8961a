//! One-dimensional transport on an interval.
//!
//! A [`Measure1D`] carries a density that is linear inside every cell, with
//! independent values at the two ends of each cell so that jumps at nodes are
//! represented exactly. Its CDF is accumulated cell by cell and inverted in
//! closed form, so the monotone rearrangement is exact for the discrete model.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Measure1D {
    nodes: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    cum: Vec<f64>,
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::Validation("a 1D grid needs at least 2 nodes".into()));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation("1D grid nodes must be strictly increasing".into()));
    }
    Ok(())
}

impl Measure1D {
    /// Continuous piecewise-linear density given by its nodal values.
    pub fn from_nodal(nodes: Vec<f64>, density: &[f64]) -> Result<Self> {
        check_nodes(&nodes)?;
        if density.len() != nodes.len() {
            return Err(Error::GridMismatch("density must have one value per node".into()));
        }
        let left = density[..density.len() - 1].to_vec();
        let right = density[1..].to_vec();
        Self::from_cells(nodes, left, right)
    }

    /// Density constant on each cell.
    pub fn piecewise_constant(nodes: Vec<f64>, cell_density: &[f64]) -> Result<Self> {
        check_nodes(&nodes)?;
        if cell_density.len() + 1 != nodes.len() {
            return Err(Error::GridMismatch("need one density value per cell".into()));
        }
        Self::from_cells(nodes, cell_density.to_vec(), cell_density.to_vec())
    }

    /// Density sampled from `f` at the nodes.
    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let d: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        Self::from_nodal(nodes, &d)
    }

    fn from_cells(nodes: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.iter().chain(&right).any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation("densities must be finite and non-negative".into()));
        }
        let mut cum = Vec::with_capacity(nodes.len());
        cum.push(0.0);
        for k in 0..left.len() {
            let h = nodes[k + 1] - nodes[k];
            cum.push(cum[k] + 0.5 * h * (left[k] + right[k]));
        }
        if !(cum[cum.len() - 1] > 0.0) {
            return Err(Error::Validation("measure has zero mass".into()));
        }
        Ok(Self { nodes, left, right, cum })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    /// Cumulative mass at each node.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// Mass of cell `k`.
    pub fn cell_mass(&self, k: usize) -> f64 {
        self.cum[k + 1] - self.cum[k]
    }

    pub fn cell_count(&self) -> usize {
        self.left.len()
    }

    /// Mean density of cell `k`.
    pub fn cell_density(&self, k: usize) -> f64 {
        self.cell_mass(k) / (self.nodes[k + 1] - self.nodes[k])
    }

    pub fn support(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Mass to the left of `x` (clamped outside the support).
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return 0.0;
        }
        if x >= self.nodes[n - 1] {
            return self.total();
        }
        let k = self.nodes.partition_point(|&v| v <= x) - 1;
        let h = self.nodes[k + 1] - self.nodes[k];
        let s = x - self.nodes[k];
        self.cum[k] + self.left[k] * s + (self.right[k] - self.left[k]) * s * s / (2.0 * h)
    }

    /// Smallest `x` with `CDF(x) ≥ q`.
    pub fn cdf_inverse(&self, q: f64) -> Result<f64> {
        let total = self.total();
        let slack = 1e-12 * total;
        if !(q >= -slack && q <= total + slack) {
            return Err(Error::OutOfRange { q, total });
        }
        if q <= 0.0 {
            return Ok(self.nodes[0]);
        }
        if q >= total {
            // Smallest point reaching the full mass: skip trailing empty cells.
            let k = self.cum.partition_point(|&c| c < total);
            return Ok(self.nodes[k]);
        }
        // First node whose cumulative mass reaches q; the cell before it has positive mass.
        let k = self.cum.partition_point(|&c| c < q) - 1;
        let m = q - self.cum[k];
        let h = self.nodes[k + 1] - self.nodes[k];
        let a = self.left[k];
        let c = (self.right[k] - a) / (2.0 * h);
        // Solve a s + c s² = m for the root in [0, h], written to avoid cancellation.
        let disc = (a * a + 4.0 * c * m).max(0.0);
        let s = 2.0 * m / (a + disc.sqrt());
        Ok(self.nodes[k] + s.clamp(0.0, h))
    }

    /// Density value just right of `x`.
    pub fn density_at(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x < self.nodes[0] || x > self.nodes[n - 1] {
            return 0.0;
        }
        let k = (self.nodes.partition_point(|&v| v <= x)).clamp(1, n - 1) - 1;
        let t = (x - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        self.left[k] * (1.0 - t) + self.right[k] * t
    }
}

/// A map sampled on a source grid, linear between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Map1D {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl Map1D {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_nodes(&nodes)?;
        if nodes.len() != values.len() {
            return Err(Error::GridMismatch("one value per node".into()));
        }
        Ok(Self { nodes, values })
    }

    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let v = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, v)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        let k = self.nodes.partition_point(|&v| v <= x) - 1;
        let t = (x - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

/// `CDF_dst⁻¹ ∘ CDF_src` at the source nodes.
pub fn monotone_map(src: &Measure1D, dst: &Measure1D) -> Result<Map1D> {
    let (ms, md) = (src.total(), dst.total());
    if (ms - md).abs() > 1e-10 * ms.max(md) {
        return Err(Error::MassMismatch { src: ms, dst: md });
    }
    let scale = md / ms;
    let mut values = Vec::with_capacity(src.nodes.len());
    let mut prev = f64::NEG_INFINITY;
    for &c in &src.cum {
        // Guard against a rounding-level dip so monotonicity holds exactly.
        let v = dst.cdf_inverse((c * scale).min(md))?.max(prev);
        values.push(v);
        prev = v;
    }
    Map1D::new(src.nodes.clone(), values)
}

/// Image measure on `target_grid`: the mass of every source cell is spread
/// uniformly over the image of that cell. Mass landing outside the grid is
/// assigned to the nearest end cell, so the total is conserved.
pub fn pushforward(t: &Map1D, src: &Measure1D, target_grid: &[f64]) -> Result<Measure1D> {
    check_nodes(target_grid)?;
    if t.nodes != src.nodes {
        return Err(Error::GridMismatch("map and measure must share the source grid".into()));
    }
    let cells = target_grid.len() - 1;
    let (lo, hi) = (target_grid[0], target_grid[cells]);
    let mut mass = vec![0.0; cells];
    let locate = |y: f64| -> usize { (target_grid.partition_point(|&v| v <= y).max(1) - 1).min(cells - 1) };
    for k in 0..src.cell_count() {
        let m = src.cell_mass(k);
        if m == 0.0 {
            continue;
        }
        let (mut a, mut b) = (t.values[k], t.values[k + 1]);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let (a, b) = (a.clamp(lo, hi), b.clamp(lo, hi));
        if b - a <= 1e-15 * (1.0 + b.abs()) {
            mass[locate(a)] += m;
            continue;
        }
        let (ca, cb) = (locate(a), locate(b));
        if ca == cb {
            mass[ca] += m;
            continue;
        }
        let width = b - a;
        let mut deposited = 0.0;
        for (c, slot) in mass.iter_mut().enumerate().take(cb).skip(ca) {
            let overlap = target_grid[c + 1].min(b) - target_grid[c].max(a);
            let dm = m * overlap.max(0.0) / width;
            *slot += dm;
            deposited += dm;
        }
        mass[cb] += m - deposited;
    }
    let dens: Vec<f64> = mass.iter().enumerate().map(|(c, m)| m / (target_grid[c + 1] - target_grid[c])).collect();
    Measure1D::piecewise_constant(target_grid.to_vec(), &dens)
}

/// `Σ ((T_{i+1} − T_i)/Δx)² Δx`.
pub fn sobolev_cost_1d(t: &Map1D) -> f64 {
    t.nodes
        .windows(2)
        .zip(t.values.windows(2))
        .map(|(x, v)| {
            let h = x[1] - x[0];
            let s = (v[1] - v[0]) / h;
            s * s * h
        })
        .sum()
}

/// `W₁ = ∫₀^M |F_a⁻¹(q) − F_b⁻¹(q)| dq`, midpoint rule with `samples` quantiles.
pub fn wasserstein1(a: &Measure1D, b: &Measure1D, samples: usize) -> Result<f64> {
    let (ma, mb) = (a.total(), b.total());
    if (ma - mb).abs() > 1e-8 * ma.max(mb) {
        return Err(Error::MassMismatch { src: ma, dst: mb });
    }
    let dq = ma / samples as f64;
    let mut acc = 0.0;
    for s in 0..samples {
        let q = (s as f64 + 0.5) * dq;
        acc += (a.cdf_inverse(q)? - b.cdf_inverse(q * mb / ma)?).abs();
    }
    Ok(acc * dq)
}

/// `W₁` between two weighted point sets on the line: `∫ |F_a − F_b| dx`.
pub fn wasserstein1_weighted(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    let ma: f64 = a.iter().map(|p| p.1).sum();
    let mb: f64 = b.iter().map(|p| p.1).sum();
    if (ma - mb).abs() > 1e-8 * ma.abs().max(mb.abs()) {
        return Err(Error::MassMismatch { src: ma, dst: mb });
    }
    let mut events: Vec<(f64, f64)> = a.iter().map(|&(x, w)| (x, w)).chain(b.iter().map(|&(x, w)| (x, -w))).collect();
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut acc = 0.0;
    let mut diff = 0.0;
    for win in events.windows(2) {
        diff += win[0].1;
        acc += diff.abs() * (win[1].0 - win[0].0);
    }
    Ok(acc)
}

/// Tent map `U(x) = 2x` on `[0, ½]`, `2 − 2x` on `[½, 1]`.
pub fn tent(x: f64) -> f64 {
    if x <= 0.5 {
        2.0 * x
    } else {
        2.0 - 2.0 * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleResult {
    pub alpha: f64,
    pub cost_u: f64,
    pub cost_t_alpha: f64,
    /// `cost_T_α − cost_U`.
    pub margin: f64,
}

/// Compares the tent map with the monotone map between `μ_α` and `U_#μ_α`,
/// where `μ_α` has density `α` on `[0,¼] ∪ [¾,1]` and `1` elsewhere.
pub fn triangle_counterexample(alpha: f64, n: usize) -> Result<CounterexampleResult> {
    if !(alpha > 0.0) {
        return Err(Error::Validation(format!("alpha = {alpha} must be positive")));
    }
    if n < 4 || !n.is_multiple_of(4) {
        return Err(Error::Validation(format!("n = {n} must be a positive multiple of 4 so that ¼, ½, ¾ are nodes")));
    }
    let nodes: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let dens: Vec<f64> = (0..n).map(|k| if 4 * k < n || 4 * k >= 3 * n { alpha } else { 1.0 }).collect();
    let mu = Measure1D::piecewise_constant(nodes.clone(), &dens)?;
    let u = Map1D::from_fn(nodes.clone(), tent)?;
    let nu = pushforward(&u, &mu, &nodes)?;
    let t = monotone_map(&mu, &nu)?;
    let cost_u = sobolev_cost_1d(&u);
    let cost_t_alpha = sobolev_cost_1d(&t);
    Ok(CounterexampleResult { alpha, cost_u, cost_t_alpha, margin: cost_t_alpha - cost_u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn cdf_inverse_examples() {
        let u = Measure1D::from_fn(grid(0.0, 1.0, 10), |_| 1.0).unwrap();
        assert!((u.cdf_inverse(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(u.cdf_inverse(0.0).unwrap(), 0.0);
        let lin = Measure1D::from_fn(grid(0.0, 1.0, 7), |x| x).unwrap();
        assert!((lin.cdf_inverse(0.25).unwrap() - 0.5f64.sqrt()).abs() < 1e-8);
        assert!(u.cdf_inverse(1.5).is_err());
        assert!(u.cdf_inverse(-0.1).is_err());
    }

    #[test]
    fn monotone_map_examples() {
        let a = Measure1D::from_fn(grid(0.0, 1.0, 50), |x| 1.0 + x).unwrap();
        let id = monotone_map(&a, &a).unwrap();
        for (x, y) in id.nodes().iter().zip(id.values()) {
            assert!((x - y).abs() < 1e-10);
        }
        let pi = std::f64::consts::PI;
        let src = Measure1D::from_fn(grid(0.0, 1.0, 400), |r| 4.0 / pi * r).unwrap();
        let dst = Measure1D::from_fn(grid(1.5, 2.5, 400), |r| r / pi).unwrap();
        let t = monotone_map(&src, &dst).unwrap();
        for (x, y) in t.nodes().iter().zip(t.values()) {
            assert!((y - (2.25 + 4.0 * x * x).sqrt()).abs() < 1e-6);
        }
        let s = Measure1D::from_fn(grid(0.0, 1.0, 20), |_| 1.0).unwrap();
        let d = Measure1D::from_fn(grid(2.0, 3.0, 20), |_| 1.0).unwrap();
        let tr = monotone_map(&s, &d).unwrap();
        for (x, y) in tr.nodes().iter().zip(tr.values()) {
            assert!((y - x - 2.0).abs() < 1e-10);
        }
        let heavy = Measure1D::from_fn(grid(2.0, 3.0, 20), |_| 2.0).unwrap();
        assert!(matches!(monotone_map(&s, &heavy), Err(Error::MassMismatch { .. })));
    }

    #[test]
    fn pushforward_examples() {
        let nodes = grid(0.0, 1.0, 100);
        let s = Measure1D::from_fn(nodes.clone(), |x| 1.0 + x * x).unwrap();
        let id = Map1D::from_fn(nodes.clone(), |x| x).unwrap();
        let p = pushforward(&id, &s, &nodes).unwrap();
        assert!((p.total() - s.total()).abs() < 1e-14);

        let u = Measure1D::from_fn(nodes.clone(), |_| 1.0).unwrap();
        let shift = Map1D::from_fn(nodes.clone(), |x| x + 2.0).unwrap();
        let tg = grid(2.0, 3.0, 100);
        let p = pushforward(&shift, &u, &tg).unwrap();
        for k in 0..p.cell_count() {
            assert!((p.cell_density(k) - 1.0).abs() < 2e-2);
        }

        // Change of variables: both preimages of y contribute f/|U'| = 1/2.
        let tentmap = Map1D::from_fn(nodes.clone(), tent).unwrap();
        let p = pushforward(&tentmap, &u, &nodes).unwrap();
        for k in 0..p.cell_count() {
            let oracle = 0.5 + 0.5;
            assert!((p.cell_density(k) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn sobolev_cost_examples() {
        let nodes = grid(0.0, 1.0, 1000);
        assert!((sobolev_cost_1d(&Map1D::from_fn(nodes.clone(), |x| x).unwrap()) - 1.0).abs() < 1e-12);
        assert!((sobolev_cost_1d(&Map1D::from_fn(nodes.clone(), |x| 2.0 * x).unwrap()) - 4.0).abs() < 1e-12);
        assert!((sobolev_cost_1d(&Map1D::from_fn(nodes, tent).unwrap()) - 4.0).abs() < 1e-10);
    }

    /// Closed-form cost of the monotone map for `α ≥ 2`.
    fn analytic_cost(alpha: f64) -> f64 {
        0.5 * alpha + 0.5 - 0.5 / alpha + 0.5 / (alpha * alpha)
    }

    #[test]
    fn counterexample_examples() {
        let one = triangle_counterexample(1.0, 1000).unwrap();
        assert!((one.cost_u - 4.0).abs() < 1e-10);
        let ten = triangle_counterexample(10.0, 10_000).unwrap();
        assert!((ten.cost_u - 4.0).abs() < 1e-10);
        assert!(ten.margin > 0.0);
        assert!((ten.cost_t_alpha - analytic_cost(10.0)).abs() < 1e-6);
        let hundred = triangle_counterexample(100.0, 10_000).unwrap();
        assert!(hundred.margin > ten.margin);
        assert!((hundred.cost_t_alpha - analytic_cost(100.0)).abs() < 1e-6);
        assert!(triangle_counterexample(10.0, 1001).is_err());
    }

    #[test]
    fn wasserstein_of_translation() {
        let s = Measure1D::from_fn(grid(0.0, 1.0, 20), |_| 1.0).unwrap();
        let d = Measure1D::from_fn(grid(0.5, 1.5, 20), |_| 1.0).unwrap();
        assert!((wasserstein1(&s, &d, 1000).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn composition_of_monotone_maps() {
        let a = Measure1D::from_fn(grid(0.0, 1.0, 400), |x| 1.0 + x).unwrap();
        let b = Measure1D::from_fn(grid(0.0, 2.0, 400), |x| 0.75 + 0.1 * (3.0 * x).sin()).unwrap();
        let b = Measure1D::from_fn(grid(0.0, 2.0, 400), |x| (0.75 + 0.1 * (3.0 * x).sin()) * a.total() / b.total())
            .unwrap();
        let c = Measure1D::from_fn(grid(1.0, 4.0, 400), |x| x).unwrap();
        let c = Measure1D::from_fn(grid(1.0, 4.0, 400), |x| x * a.total() / c.total()).unwrap();
        let ab = monotone_map(&a, &b).unwrap();
        let bc = monotone_map(&b, &c).unwrap();
        let ac = monotone_map(&a, &c).unwrap();
        let cell = 3.0 / 400.0;
        for (x, y) in ac.nodes().iter().zip(ac.values()) {
            assert!((bc.eval(ab.eval(*x)) - y).abs() <= 2.0 * cell);
        }
    }

    #[test]
    fn pushforward_of_monotone_map_converges() {
        let err = |n: usize| {
            let a = Measure1D::from_fn(grid(0.0, 1.0, n), |x| 1.0 + x).unwrap();
            let b = Measure1D::from_fn(grid(0.0, 1.0, n), |x| 1.5 - 0.5 * x * x).unwrap();
            let b = Measure1D::from_fn(grid(0.0, 1.0, n), |x| (1.5 - 0.5 * x * x) * a.total() / b.total()).unwrap();
            let t = monotone_map(&a, &b).unwrap();
            let p = pushforward(&t, &a, b.nodes()).unwrap();
            (0..p.cell_count()).map(|k| (p.cell_mass(k) - b.cell_mass(k)).abs()).sum::<f64>()
        };
        let (e1, e2) = (err(100), err(400));
        assert!(e2 < e1 / 2.0, "{e1} {e2}");
        assert!(e1 < 5.0 / 100.0);
    }

    fn positive_density() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.05f64..5.0, 3..60)
    }

    #[test]
    fn weighted_w1_of_a_shift() {
        let a: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.1)).collect();
        let b: Vec<(f64, f64)> = a.iter().map(|&(x, w)| (x + 0.25, w)).collect();
        assert!((wasserstein1_weighted(&a, &b).unwrap() - 0.25).abs() < 1e-14);
        assert!(wasserstein1_weighted(&a, &a[..5]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_map_is_nondecreasing(da in positive_density(), db in positive_density()) {
            let a = Measure1D::from_nodal(grid(0.0, 1.0, da.len() - 1), &da).unwrap();
            let b0 = Measure1D::from_nodal(grid(1.0, 3.0, db.len() - 1), &db).unwrap();
            let scale = a.total() / b0.total();
            let db: Vec<f64> = db.iter().map(|v| v * scale).collect();
            let b = Measure1D::from_nodal(grid(1.0, 3.0, db.len() - 1), &db).unwrap();
            let t = monotone_map(&a, &b).unwrap();
            prop_assert!(t.is_nondecreasing());
        }

        #[test]
        fn pushforward_conserves_mass(da in positive_density(), vals in proptest::collection::vec(-1.0f64..2.0, 60)) {
            let nodes = grid(0.0, 1.0, da.len() - 1);
            let a = Measure1D::from_nodal(nodes.clone(), &da).unwrap();
            let t = Map1D::new(nodes.clone(), vals[..nodes.len()].to_vec()).unwrap();
            let p = pushforward(&t, &a, &grid(0.0, 1.0, 37)).unwrap();
            prop_assert!((p.total() - a.total()).abs() <= 1e-12 * a.total());
        }

        #[test]
        fn cdf_inverse_inverts_cdf(da in positive_density(), u in 0.0f64..1.0) {
            let a = Measure1D::from_nodal(grid(0.0, 1.0, da.len() - 1), &da).unwrap();
            let q = u * a.total();
            let x = a.cdf_inverse(q).unwrap();
            prop_assert!((a.cdf(x) - q).abs() < 1e-12 * a.total().max(1.0));
        }
    }
}
