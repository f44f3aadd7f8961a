//! Difference forms shared by the obstacle solver and the energy functionals.
//!
//! Every angular quantity goes through these functions so that `G`, the
//! projection gap, `H` and the polar Dirichlet energy use one bilinear form.

/// Trapezoid weight (in units of `Δθ`) of node `j` out of `n`.
#[inline]
pub fn trap_weight(j: usize, n: usize) -> f64 {
    if j == 0 || j + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// `Σ a_j b_j w_j Δθ`.
pub fn l2_inner(a: &[f64], b: &[f64], dtheta: f64) -> f64 {
    let n = a.len();
    a.iter().zip(b).enumerate().map(|(j, (x, y))| x * y * trap_weight(j, n)).sum::<f64>() * dtheta
}

/// `Σ (Δa)(Δb)/Δθ` with forward differences.
pub fn stiffness_inner(a: &[f64], b: &[f64], dtheta: f64) -> f64 {
    a.windows(2).zip(b.windows(2)).map(|(x, y)| (x[1] - x[0]) * (y[1] - y[0])).sum::<f64>() / dtheta
}

/// Discrete `H¹(0, π/2)` inner product.
pub fn h1_inner(a: &[f64], b: &[f64], dtheta: f64) -> f64 {
    l2_inner(a, b, dtheta) + stiffness_inner(a, b, dtheta)
}

/// Discrete `‖φ′ − ψ‖² + ‖φ + ψ′‖²`, expanded as
/// `‖φ‖²_{H¹} + ‖ψ‖²_{H¹} + 2 Σ (φ_j ψ_{j+1} − φ_{j+1} ψ_j)`.
///
/// The cross sum is the midpoint discretisation of `2∫(φψ′ − φ′ψ)`, so
/// `H(φ, 0) = ‖φ‖²_{H¹}` holds exactly.
pub fn h_form(phi: &[f64], psi: &[f64], dtheta: f64) -> f64 {
    let cross: f64 = phi.windows(2).zip(psi.windows(2)).map(|(p, q)| p[0] * q[1] - p[1] * q[0]).sum();
    h1_inner(phi, phi, dtheta) + h1_inner(psi, psi, dtheta) + 2.0 * cross
}

/// Radial derivative at node `i` on a nonuniform grid: three-point central
/// formula inside, one-sided at the ends.
#[inline]
pub fn radial_derivative(r: &[f64], v: &[f64], i: usize) -> f64 {
    let n = r.len();
    if i == 0 {
        (v[1] - v[0]) / (r[1] - r[0])
    } else if i + 1 == n {
        (v[n - 1] - v[n - 2]) / (r[n - 1] - r[n - 2])
    } else {
        let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        (-h1 / (h0 * (h0 + h1))) * v[i - 1] + ((h1 - h0) / (h0 * h1)) * v[i] + (h0 / (h1 * (h0 + h1))) * v[i + 1]
    }
}
