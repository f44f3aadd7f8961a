//! Without an inner patch the Dirichlet energy of a ray map grows like `K |log r_lo|`.

use monge_dirichlet::domain::{PresetKind, Problem, RadialGrid};
use monge_dirichlet::energy::{dirichlet_polar, MapField};
use monge_dirichlet::obstacle::{solve_obstacle, Curve};
use monge_dirichlet::raymaps::original_map;

fn main() -> monge_dirichlet::Result<()> {
    let p = Problem::build(PresetKind::NotchedObstacle, None, 0.0, RadialGrid::graded(3001, 1e-4)?, 201, 3000)?;
    let (d, t) = (&p.densities, &p.target);
    let sol = solve_obstacle(&Curve::new(t.grid(), t.r1().to_vec())?, 1e-10)?;
    let m = MapField::from_profile(&original_map(d, t, &sol.phi)?);
    println!("notched target, K = {:.6}", sol.k);
    println!("{:>8} {:>12} {:>12} {:>12}", "r_lo", "energy", "ratio", "log-slope");
    let mut prev: Option<f64> = None;
    for r_lo in [1e-1, 1e-2, 1e-3, 1e-4] {
        let e = dirichlet_polar(&m, r_lo)?;
        let slope = prev.map(|p| (e - p) / 10f64.ln());
        println!(
            "{r_lo:>8} {e:>12.5} {:>12.5} {:>12}",
            e / r_lo.ln().abs(),
            slope.map_or("-".into(), |s| format!("{s:.5}"))
        );
        prev = Some(e);
    }
    Ok(())
}
