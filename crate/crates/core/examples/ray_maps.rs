//! Monotone and original ray maps: breakpoints, growth near the origin and
//! angular regularity.

use monge_dirichlet::domain::{PresetKind, Problem};
use monge_dirichlet::obstacle::{solve_obstacle, Curve};
use monge_dirichlet::raymaps::{
    growth_constants, l2_deviation, monotone_ray_map, original_map, ray_pushforward_defect, theta_regularity_check,
};

fn main() -> monge_dirichlet::Result<()> {
    for kind in [PresetKind::AnnulusConst, PresetKind::AnnulusModulated, PresetKind::NotchedObstacle] {
        let p = Problem::preset(kind, 400, 201, 400)?;
        let (d, t) = (&p.densities, &p.target);
        let sol = solve_obstacle(&Curve::new(t.grid(), t.r1().to_vec())?, 1e-10)?;
        let mono = monotone_ray_map(d, t)?;
        let orig = original_map(d, t, &sol.phi)?;
        let rho1 = orig.rho1.as_ref().expect("original map has breakpoints");
        let rho2 = orig.rho2.as_ref().expect("original map has breakpoints");
        let rho1_min = rho1.iter().cloned().fold(f64::INFINITY, f64::min);
        let (c_lo, c_hi) = growth_constants(&orig, &sol.phi, 0.9 * rho1_min)?;
        let dev = l2_deviation(&orig, &sol.phi);
        let at = |x: f64| dev[orig.radial.nearest(x)];
        println!("{kind}");
        println!(
            "  monotone map: phi(0, 0) = {:.6}, ray defect {:.2e}",
            mono.phi0[0],
            ray_pushforward_defect(&mono, d, t)?
        );
        println!(
            "  original map: phi(0, 0) = {:.6}, ray defect {:.2e}",
            orig.phi0[0],
            ray_pushforward_defect(&orig, d, t)?
        );
        println!(
            "  rho1 in [{rho1_min:.4}, {:.4}], rho2 max {:.4}",
            rho1.iter().cloned().fold(0.0, f64::max),
            rho2.iter().cloned().fold(0.0, f64::max)
        );
        println!(
            "  (phi - Phi)/r^2 in [{c_lo:.4}, {c_hi:.4}], angular Lipschitz ratio {:.4}",
            theta_regularity_check(&orig, &sol.phi)
        );
        println!("  ||phi(r) - Phi||: r=0.05 {:.3e}, r=0.5 {:.3e}", at(0.05), at(0.5));
    }
    Ok(())
}
