//! `J_ε` of the original map and the four-term split of `F_ε`, plus the limit functional.

use monge_dirichlet::domain::{PresetKind, Problem, RadialGrid};
use monge_dirichlet::energy::{f_eps_decomposed, f_eps_direct, j_eps, limit_f, potential_w1, MapField};
use monge_dirichlet::obstacle::{solve_obstacle, Curve};
use monge_dirichlet::raymaps::{monotone_ray_map, original_map};

fn main() -> monge_dirichlet::Result<()> {
    let p = Problem::preset(PresetKind::AnnulusConst, 400, 201, 400)?;
    let (d, t) = (&p.densities, &p.target);
    let sol = solve_obstacle(&Curve::new(t.grid(), t.r1().to_vec())?, 1e-10)?;
    let m = MapField::from_profile(&original_map(d, t, &sol.phi)?);
    let w1 = potential_w1(&m, d);
    println!(
        "{:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9}",
        "eps", "J", "F_direct", "term1", "term2", "term3", "term4", "gap"
    );
    for eps in [1e-1, 1e-2, 1e-3] {
        let s = f_eps_decomposed(&m, d, t, eps, sol.k)?;
        let f = f_eps_direct(&m, d, eps, sol.k, w1)?;
        println!(
            "{eps:>8} {:>10.5} {f:>10.5} {:>10.2e} {:>10.5} {:>10.5} {:>10.5} {:>9.1e}",
            j_eps(&m, d, eps)?,
            s.term1,
            s.term2,
            s.term3,
            s.term4,
            (f - s.total()).abs()
        );
    }

    // The limit functional needs the origin resolved: use a geometric grid.
    let g = Problem::build(PresetKind::AnnulusConst, None, 0.0, RadialGrid::graded(3000, 1e-4)?, 21, 3000)?;
    let sol = solve_obstacle(&Curve::new(g.target.grid(), g.target.r1().to_vec())?, 1e-10)?;
    for (name, prof) in [
        ("original", original_map(&g.densities, &g.target, &sol.phi)?),
        ("monotone", monotone_ray_map(&g.densities, &g.target)?),
    ] {
        let lf = limit_f(&prof, sol.k);
        println!(
            "{name}: F = {:.5} (angular {:.5}, radial {:.5}), tail exponent {:.3}, diverges {}",
            lf.total(),
            lf.angular,
            lf.radial,
            lf.tail_exponent,
            lf.diverges
        );
    }
    println!("reference: 2 pi ln 2 = {:.5}", 2.0 * std::f64::consts::PI * 2f64.ln());
    Ok(())
}
