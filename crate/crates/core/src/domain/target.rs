use super::grid::AngularGrid;
use crate::error::{Error, Result};

/// The polar annulus `R₁(θ) < r < R₂(θ)`, `θ ∈ [0, π/2]`, sampled on an angular grid.
#[derive(Debug, Clone)]
pub struct PolarTarget {
    grid: AngularGrid,
    r1: Vec<f64>,
    r2: Vec<f64>,
    lip_r1: f64,
    lip_r2: f64,
    /// `‖R₁″‖_{L¹}`, declared by the caller.
    bv_r1p: f64,
    inf_r1: f64,
    sup_r1: f64,
    inf_r2: f64,
    sup_r2: f64,
}

fn sampled_lipschitz(v: &[f64], h: f64) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).abs() / h).fold(0.0, f64::max)
}

impl PolarTarget {
    /// Validated constructor: requires `inf R₁ > 1` and `inf R₂ > sup R₁`.
    pub fn new(grid: AngularGrid, r1: Vec<f64>, r2: Vec<f64>, bv_r1p: f64) -> Result<Self> {
        let t = Self::new_unchecked(grid, r1, r2, bv_r1p)?;
        if t.inf_r1 <= 1.0 {
            return Err(Error::Validation(format!("inf R1 = {} must exceed 1", t.inf_r1)));
        }
        if t.inf_r2 <= t.sup_r1 {
            return Err(Error::Validation(format!("inf R2 = {} must exceed sup R1 = {}", t.inf_r2, t.sup_r1)));
        }
        if !(t.bv_r1p >= 0.0) {
            return Err(Error::Validation("bv_r1p must be a non-negative number".into()));
        }
        Ok(t)
    }

    /// Skips the geometric separation checks. Only sizes and `R₂ > R₁` are enforced,
    /// which lets artificial set-ups such as `Ω′ = Ω` be expressed.
    pub fn new_unchecked(grid: AngularGrid, r1: Vec<f64>, r2: Vec<f64>, bv_r1p: f64) -> Result<Self> {
        if r1.len() != grid.len() || r2.len() != grid.len() {
            return Err(Error::GridMismatch("boundary curves must be sampled on the angular grid".into()));
        }
        if r1.iter().zip(&r2).any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Validation("need R2 > R1 at every angle".into()));
        }
        let h = grid.dtheta();
        let fold = |v: &[f64], init: f64, f: fn(f64, f64) -> f64| v.iter().copied().fold(init, f);
        Ok(Self {
            lip_r1: sampled_lipschitz(&r1, h),
            lip_r2: sampled_lipschitz(&r2, h),
            inf_r1: fold(&r1, f64::INFINITY, f64::min),
            sup_r1: fold(&r1, f64::NEG_INFINITY, f64::max),
            inf_r2: fold(&r2, f64::INFINITY, f64::min),
            sup_r2: fold(&r2, f64::NEG_INFINITY, f64::max),
            grid,
            r1,
            r2,
            bv_r1p,
        })
    }

    /// Replace the sampled Lipschitz constants by declared ones; a declared value
    /// below the sampled difference quotient is rejected.
    pub fn with_lipschitz(mut self, lip_r1: f64, lip_r2: f64) -> Result<Self> {
        if lip_r1 + 1e-12 < self.lip_r1 || lip_r2 + 1e-12 < self.lip_r2 {
            return Err(Error::Validation(format!(
                "declared Lipschitz constants ({lip_r1}, {lip_r2}) below sampled ({}, {})",
                self.lip_r1, self.lip_r2
            )));
        }
        self.lip_r1 = lip_r1;
        self.lip_r2 = lip_r2;
        Ok(self)
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }
    pub fn r1(&self) -> &[f64] {
        &self.r1
    }
    pub fn r2(&self) -> &[f64] {
        &self.r2
    }
    pub fn lip_r1(&self) -> f64 {
        self.lip_r1
    }
    pub fn lip_r2(&self) -> f64 {
        self.lip_r2
    }
    pub fn bv_r1p(&self) -> f64 {
        self.bv_r1p
    }
    pub fn inf_r1(&self) -> f64 {
        self.inf_r1
    }
    pub fn sup_r1(&self) -> f64 {
        self.sup_r1
    }
    pub fn inf_r2(&self) -> f64 {
        self.inf_r2
    }
    pub fn sup_r2(&self) -> f64 {
        self.sup_r2
    }

    /// Radius of chart point `(λ, θ_j)`.
    #[inline]
    pub fn radius(&self, lambda: f64, j: usize) -> f64 {
        self.r1[j] + lambda * (self.r2[j] - self.r1[j])
    }

    /// Chart coordinate of radius `r` on ray `j`.
    #[inline]
    pub fn lambda_of(&self, r: f64, j: usize) -> f64 {
        (r - self.r1[j]) / (self.r2[j] - self.r1[j])
    }

    pub fn r1_at(&self, theta: f64) -> f64 {
        self.grid.interpolate(&self.r1, theta)
    }

    pub fn r2_at(&self, theta: f64) -> f64 {
        self.grid.interpolate(&self.r2, theta)
    }

    /// Whether the Cartesian point `y` lies in the closed annulus (up to `tol`).
    pub fn contains(&self, y: [f64; 2], tol: f64) -> bool {
        let r = y[0].hypot(y[1]);
        let th = y[1].atan2(y[0]);
        if th < -tol || th > std::f64::consts::FRAC_PI_2 + tol {
            return false;
        }
        r >= self.r1_at(th) - tol && r <= self.r2_at(th) + tol
    }
}
