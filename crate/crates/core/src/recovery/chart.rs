//! Bi-Lipschitz chart from the unit square `Q = [0,1]²` onto the unit quarter
//! disk `Ω₁`.
//!
//! Both sets are star-shaped: `Q` about its corner `c = (0, 1)`, `Ω₁` about the
//! point `P = (0, e)` of its vertical edge. A direction `χ ∈ [0, π/2]` leaving
//! `c` hits the right side of `Q` (for `χ ≤ π/4`) or its bottom; the right side
//! is sent to the arc with `u₂ ↦ θ = π u₂/2`, the bottom to the horizontal edge
//! by the identity. Points on a ray from `c` are placed on the segment from `P`
//! to the matching boundary point at the same relative distance.
//!
//! The Jacobian is piecewise constant along rays:
//! `det = (π/2)(1 − e sin θ)` on the right triangle and `det = e` on the bottom one.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

/// Height of the star centre of `Ω₁` on its vertical edge.
pub const STAR_HEIGHT: f64 = 0.5;

const POLE: [f64; 2] = [0.0, 1.0];

fn ray_length(chi: f64) -> f64 {
    if chi <= FRAC_PI_4 {
        1.0 / chi.cos()
    } else {
        1.0 / chi.sin()
    }
}

/// Boundary point of `Ω₁` matched with direction `χ`.
fn boundary_point(chi: f64) -> [f64; 2] {
    if chi <= FRAC_PI_4 {
        let th = FRAC_PI_2 * (1.0 - chi.tan());
        [th.cos(), th.sin()]
    } else {
        [chi.cos() / chi.sin(), 0.0]
    }
}

fn star_angle(b: [f64; 2]) -> f64 {
    (b[1] - STAR_HEIGHT).atan2(b[0])
}

/// Maps `q ∈ Q` to `Ω₁`.
pub fn square_to_disk(q: [f64; 2]) -> [f64; 2] {
    let d = [q[0] - POLE[0], POLE[1] - q[1]];
    let t = d[0].hypot(d[1]);
    if t == 0.0 {
        return [0.0, STAR_HEIGHT];
    }
    let chi = d[1].atan2(d[0]).clamp(0.0, FRAC_PI_2);
    let tau = (t / ray_length(chi)).min(1.0);
    let b = boundary_point(chi);
    [tau * b[0], STAR_HEIGHT + tau * (b[1] - STAR_HEIGHT)]
}

/// Jacobian determinant of [`square_to_disk`].
pub fn square_to_disk_det(q: [f64; 2]) -> f64 {
    let chi = (POLE[1] - q[1]).atan2(q[0] - POLE[0]).clamp(0.0, FRAC_PI_2);
    if chi <= FRAC_PI_4 {
        let th = FRAC_PI_2 * (1.0 - chi.tan());
        FRAC_PI_2 * (1.0 - STAR_HEIGHT * th.sin())
    } else {
        STAR_HEIGHT
    }
}

/// Inverse of [`square_to_disk`] by bisection on the direction.
pub fn disk_to_square(z: [f64; 2]) -> [f64; 2] {
    let rel = [z[0], z[1] - STAR_HEIGHT];
    let m = rel[0].hypot(rel[1]);
    if m == 0.0 {
        return POLE;
    }
    let target = rel[1].atan2(rel[0]);
    // The star angle decreases from π/2 to −π/2 as χ runs over [0, π/2].
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if star_angle(boundary_point(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let chi = 0.5 * (lo + hi);
    let b = boundary_point(chi);
    let tau = m / (b[0].hypot(b[1] - STAR_HEIGHT));
    let t = tau * ray_length(chi);
    [(POLE[0] + t * chi.cos()).clamp(0.0, 1.0), (POLE[1] - t * chi.sin()).clamp(0.0, 1.0)]
}

/// The strip `{Φ(θ) ≤ ρ ≤ φ(δ,θ)}` parametrized by `(λ, θ) ∈ [0,1] × [0, π/2]`.
#[derive(Debug, Clone)]
pub struct StripChart {
    /// Angular nodes of the curves.
    pub theta: Vec<f64>,
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
}

impl StripChart {
    fn interp(&self, v: &[f64], theta: f64) -> f64 {
        let n = self.theta.len();
        let h = self.theta[1] - self.theta[0];
        let s = (theta / h).clamp(0.0, (n - 1) as f64);
        let j = (s.floor() as usize).min(n - 2);
        let t = s - j as f64;
        v[j] * (1.0 - t) + v[j + 1] * t
    }

    pub fn inner_at(&self, theta: f64) -> f64 {
        self.interp(&self.inner, theta)
    }

    pub fn width_at(&self, theta: f64) -> f64 {
        self.interp(&self.outer, theta) - self.inner_at(theta)
    }

    pub fn radius(&self, lambda: f64, theta: f64) -> f64 {
        self.inner_at(theta) + lambda * self.width_at(theta)
    }

    /// Cartesian point of chart coordinates `(λ, s)` with `θ = π s/2`.
    pub fn point(&self, q: [f64; 2]) -> [f64; 2] {
        let th = FRAC_PI_2 * q[1];
        let rho = self.radius(q[0], th);
        [rho * th.cos(), rho * th.sin()]
    }
}
