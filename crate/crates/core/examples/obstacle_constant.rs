//! The obstacle constant `K` and curve `Φ` for a flat and a notched inner boundary.

use monge_dirichlet::domain::{notched_r1, AngularGrid};
use monge_dirichlet::obstacle::{projection_gap, solve_obstacle, solve_obstacle_projected_gradient, Curve};
use std::f64::consts::PI;

fn main() -> monge_dirichlet::Result<()> {
    let g = AngularGrid::new(2001)?;
    let flat = solve_obstacle(&Curve::constant(&g, 1.5), 1e-10)?;
    println!("R1 = 1.5:  K = {:.10}  (9 pi / 8 = {:.10})", flat.k, 9.0 * PI / 8.0);

    let notched = solve_obstacle(&Curve::from_fn(&g, notched_r1), 1e-10)?;
    let free = notched.active.iter().filter(|a| !**a).count();
    println!(
        "notched:   K = {:.10}, {free} free nodes, min Phi = {:.6}, KKT residual {:.1e}, {} active-set iterations",
        notched.k,
        notched.phi.min(),
        notched.kkt_residual,
        notched.iterations
    );

    // The projected-gradient fallback (looser tolerance) agrees with the active set.
    let gc = AngularGrid::new(201)?;
    let r1 = Curve::from_fn(&gc, notched_r1);
    let a = solve_obstacle(&r1, 1e-10)?;
    let b = solve_obstacle_projected_gradient(&r1, 1e-8, 400_000)?;
    println!("n = 201:   active set K = {:.10}, projected gradient K = {:.10}", a.k, b.k);

    // Projection inequality: any feasible curve is at least K plus its distance to Φ.
    let bump = Curve::from_fn(&gc, |t| notched_r1(t) + 0.1 * (2.0 * t).sin());
    println!("projection gap of a feasible bump: {:.3e} (non-negative)", projection_gap(&bump, &a)?);
    Ok(())
}
