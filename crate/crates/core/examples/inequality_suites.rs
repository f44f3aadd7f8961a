//! Constants of the lower bound and the two pointwise inequalities on sample inputs.

use monge_dirichlet::domain::{PresetKind, Problem};
use monge_dirichlet::energy::{bound_constants, candidate_lower_constant, check_two_thirds_bound, check_tangential_bound, MapField};
use monge_dirichlet::obstacle::{solve_obstacle, Curve};

fn main() -> monge_dirichlet::Result<()> {
    for kind in [PresetKind::AnnulusConst, PresetKind::NotchedObstacle] {
        let p = Problem::preset(kind, 100, 201, 100)?;
        let t = &p.target;
        let sol = solve_obstacle(&Curve::new(t.grid(), t.r1().to_vec())?, 1e-10)?;
        let bc = bound_constants(t, sol.k);
        println!("{kind}: {bc:#?}");
        println!("  candidate lower-bound constant C = {:.4e}", candidate_lower_constant(&bc, p.densities.inf_f()));

        let twisted = MapField::from_fn(p.densities.radial().clone(), t.grid().clone(), |r, th| {
            let psi = 0.4 * r * (2.0 * th).sin();
            (2.0 - 0.3 * r, psi)
        });
        println!("  tangential bound slack on a twisted map: {:.3e}", check_tangential_bound(&twisted, bc.a));

        let zero = Curve::constant(t.grid(), 0.0);
        for (name, phi, psi) in [
            ("Phi itself", sol.phi.clone(), zero.clone()),
            ("raised", sol.phi.map(|v| v + 0.2), zero.clone()),
            ("tilted", sol.phi.clone(), Curve::from_fn(t.grid(), |th| 0.05 * (4.0 * th).sin())),
        ] {
            println!("  two-thirds bound slack, {name}: {:.4e}", check_two_thirds_bound(&phi, &psi, &sol.phi, sol.k, &bc, t)?);
        }
    }
    Ok(())
}
