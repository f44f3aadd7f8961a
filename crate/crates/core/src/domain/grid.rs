//! Angular, radial and chart grids with their composite trapezoid weights.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// Uniform grid on `[0, π/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    nodes: Vec<f64>,
    dtheta: f64,
}

impl AngularGrid {
    pub fn new(n_theta: usize) -> Result<Self> {
        if n_theta < 3 {
            return Err(Error::Validation(format!("n_theta = {n_theta} < 3")));
        }
        let dtheta = FRAC_PI_2 / (n_theta - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_theta).map(|j| j as f64 * dtheta).collect();
        nodes[n_theta - 1] = FRAC_PI_2;
        Ok(Self { nodes, dtheta })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    /// Trapezoid weight of node `j` in units of `Δθ`.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.nodes.len() {
            0.5
        } else {
            1.0
        }
    }

    /// `Σ v_j w_j Δθ`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        values.iter().enumerate().map(|(j, v)| v * self.weight(j)).sum::<f64>() * self.dtheta
    }

    /// Linear interpolation of nodal values at an arbitrary angle (clamped to the interval).
    pub fn interpolate(&self, values: &[f64], theta: f64) -> f64 {
        let n = self.nodes.len();
        let s = (theta / self.dtheta).clamp(0.0, (n - 1) as f64);
        let j = (s.floor() as usize).min(n - 2);
        let t = s - j as f64;
        values[j] * (1.0 - t) + values[j + 1] * t
    }

    pub fn same_as(&self, other: &AngularGrid) -> bool {
        self.nodes.len() == other.nodes.len()
    }
}

/// Strictly increasing radial nodes in `(0, 1]`, last node exactly 1.
///
/// Integrals over the quarter disk include the wedge `[0, r_0]` through a
/// virtual node at the origin where the polar weight `r` vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    /// Cell-centred uniform grid: `Δr = 1/(n − ½)`, `r_i = Δr/2 + iΔr`, so `r_min = Δr/2`.
    pub fn uniform(n_r: usize) -> Result<Self> {
        if n_r < 3 {
            return Err(Error::Validation(format!("n_r = {n_r} < 3")));
        }
        let dr = 1.0 / (n_r as f64 - 0.5);
        let mut nodes: Vec<f64> = (0..n_r).map(|i| 0.5 * dr + i as f64 * dr).collect();
        nodes[n_r - 1] = 1.0;
        Ok(Self { nodes })
    }

    /// Geometric grid `r_i = r_min^{1 − i/(n−1)}`, fine near the origin.
    pub fn graded(n_r: usize, r_min: f64) -> Result<Self> {
        if n_r < 3 || !(r_min > 0.0 && r_min < 1.0) {
            return Err(Error::Validation(format!("graded grid needs n ≥ 3 and r_min in (0,1), got {n_r}, {r_min}")));
        }
        let l = r_min.ln();
        let mut nodes: Vec<f64> = (0..n_r).map(|i| (l * (1.0 - i as f64 / (n_r - 1) as f64)).exp()).collect();
        nodes[0] = r_min;
        nodes[n_r - 1] = 1.0;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Validation("radial grid needs at least 3 nodes".into()));
        }
        if nodes[0] <= 0.0 || (nodes[nodes.len() - 1] - 1.0).abs() > 1e-15 {
            return Err(Error::Validation("radial nodes must lie in (0,1] and end at 1".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("radial nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// Copy of the grid with extra nodes merged in (points closer than `1e-13` to an existing node are dropped).
    pub fn with_inserted(&self, extra: &[f64]) -> Result<Self> {
        let mut all = self.nodes.clone();
        for &x in extra {
            if x > 0.0 && x < 1.0 && all.iter().all(|&r| (r - x).abs() > 1e-13) {
                all.push(x);
            }
        }
        all.sort_by(|a, b| a.total_cmp(b));
        Self::from_nodes(all)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    /// Largest spacing between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(self.nodes[0], f64::max)
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x < r);
        if k == 0 {
            return 0;
        }
        if k == self.nodes.len() {
            return k - 1;
        }
        if (self.nodes[k] - r) < (r - self.nodes[k - 1]) {
            k
        } else {
            k - 1
        }
    }

    /// Trapezoid weights for `∫_{r_lo}^{1} h dr` over nodes `lo..`.
    pub fn weights_from(&self, lo: usize) -> Vec<f64> {
        let n = self.nodes.len();
        let mut w = vec![0.0; n];
        for i in lo..n - 1 {
            let h = self.nodes[i + 1] - self.nodes[i];
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }

    /// Trapezoid weights for `∫_0^1 h dr` assuming `h(0) = 0` (the case for every integrand carrying the polar factor `r`).
    pub fn weights_with_origin(&self) -> Vec<f64> {
        let mut w = self.weights_from(0);
        w[0] += 0.5 * self.nodes[0];
        w
    }

    /// Linear interpolation of nodal values at `r`, constant outside the node range.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let n = self.nodes.len();
        if r <= self.nodes[0] {
            return values[0];
        }
        if r >= self.nodes[n - 1] {
            return values[n - 1];
        }
        let k = self.nodes.partition_point(|&x| x <= r).clamp(1, n - 1);
        let (a, b) = (self.nodes[k - 1], self.nodes[k]);
        let t = (r - a) / (b - a);
        values[k - 1] * (1.0 - t) + values[k] * t
    }
}

/// Uniform chart coordinate `λ ∈ [0, 1]` across the annulus.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    nodes: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Validation(format!("n_lambda = {n} < 3")));
        }
        let h = 1.0 / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        nodes[n - 1] = 1.0;
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.nodes.len() - 1) as f64
    }

    /// Trapezoid weights for `∫_0^1 h dλ`.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let h = self.step();
        (0..n).map(|k| if k == 0 || k == n - 1 { 0.5 * h } else { h }).collect()
    }

    pub fn interpolate(&self, values: &[f64], lambda: f64) -> f64 {
        let n = self.nodes.len();
        let s = (lambda / self.step()).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        values[k] * (1.0 - t) + values[k + 1] * t
    }
}

/// Row-major samples on a (slow axis × angular axis) product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Field2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        for (i, v) in col.iter().enumerate() {
            self.set(i, j, *v);
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_radial_grid_is_cell_centred() {
        let g = RadialGrid::uniform(11).unwrap();
        let dr = 1.0 / 10.5;
        assert!((g.r_min() - dr / 2.0).abs() < 1e-15);
        assert_eq!(g.nodes()[10], 1.0);
        let s: f64 = g.weights_with_origin().iter().zip(g.nodes()).map(|(w, r)| w * r).sum();
        assert!((s - 0.5).abs() < 1e-14);
    }

    #[test]
    fn graded_grid_endpoints() {
        let g = RadialGrid::graded(50, 1e-4).unwrap();
        assert_eq!(g.r_min(), 1e-4);
        assert_eq!(g.nodes()[49], 1.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn inserted_nodes_are_kept_sorted() {
        let g = RadialGrid::uniform(5).unwrap().with_inserted(&[0.5, 0.123]).unwrap();
        assert!(g.nodes().contains(&0.5) && g.nodes().contains(&0.123));
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn angular_grid_spans_quarter_turn() {
        let g = AngularGrid::new(5).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.nodes()[4], FRAC_PI_2);
        assert!((g.integrate(&[1.0; 5]) - FRAC_PI_2).abs() < 1e-15);
        assert!(AngularGrid::new(2).is_err());
    }

    #[test]
    fn nearest_node_lookup() {
        let g = RadialGrid::from_nodes(vec![0.1, 0.2, 0.4, 1.0]).unwrap();
        assert_eq!(g.nearest(0.0), 0);
        assert_eq!(g.nearest(0.29), 1);
        assert_eq!(g.nearest(0.31), 2);
        assert_eq!(g.nearest(5.0), 3);
    }
}
