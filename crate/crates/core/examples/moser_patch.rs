//! The inner patch on its own: Moser flow between the rescaled densities,
//! with the pushforward defect under refinement of the chart grid.

use monge_dirichlet::domain::{PresetKind, Problem};
use monge_dirichlet::energy::snapped_delta;
use monge_dirichlet::obstacle::{solve_obstacle, Curve};
use monge_dirichlet::raymaps::original_map;
use monge_dirichlet::recovery::{moser_patch, rescale_densities};

fn main() -> monge_dirichlet::Result<()> {
    let p = Problem::preset(PresetKind::AnnulusModulated, 400, 201, 400)?;
    let (d, t) = (&p.densities, &p.target);
    let sol = solve_obstacle(&Curve::new(t.grid(), t.r1().to_vec())?, 1e-10)?;
    let prof = original_map(d, t, &sol.phi)?;
    let (_, delta) = snapped_delta(&prof.radial, 1e-2);
    let rd = rescale_densities(d, t, &prof, &sol.phi, delta)?;
    println!("delta = {delta:.5}");
    println!("{:>5} {:>12} {:>10} {:>12} {:>8}", "n", "defect", "Lip*delta", "seam cells", "escaped");
    for n in [16, 32, 64, 128] {
        let patch = moser_patch(&rd, n)?;
        println!(
            "{n:>5} {:>12.3e} {:>10.4} {:>12.2e} {:>8}",
            patch.defect, patch.lip_delta, patch.seam_cells, patch.escaped
        );
    }
    Ok(())
}
