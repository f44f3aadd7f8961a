//! Discrete estimate of `inf J_ε` and the three-parameter fit.
//!
//! Usage: `cargo run --release --example discrete_minimizer -- [N] [seed]`.

use monge_dirichlet::domain::{PresetKind, Problem};
use monge_dirichlet::minimizer::{fit_asymptotics, minimize, MinimizeOptions};
use std::f64::consts::PI;

fn main() -> monge_dirichlet::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(1500), |s| s.parse()).expect("N is an integer");
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse()).expect("seed is an integer");
    let p = Problem::preset(PresetKind::AnnulusConst, 400, 201, 400)?;
    let eps: Vec<f64> = (0..8).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 7.0)).collect();
    let run = minimize(&p, n, &eps, seed, &MinimizeOptions::default())?;
    println!(
        "N = {n}: discrete Monge optimum {:.6} (dual bound {:.6}, exact solver: {}), ray-map Dirichlet {:.3}",
        run.monge_optimum, run.dual_bound, run.init_exact, run.init_dirichlet
    );
    println!("{:>10} {:>10} {:>10} {:>10} {:>8}", "eps", "J", "Monge", "Dirichlet", "accept");
    for r in &run.rows {
        println!("{:>10.3e} {:>10.6} {:>10.6} {:>10.4} {:>8.3}", r.eps, r.j, r.monge, r.dirichlet, r.accept_rate);
    }
    let pts: Vec<(f64, f64)> = run.rows.iter().map(|r| (r.eps, r.j)).collect();
    let fit = fit_asymptotics(&pts, Some(run.monge_optimum))?;
    println!("c1 = {:.4} +- {:.4}, c2 = {:.4} +- {:.4}; K/3 = {:.4}", fit.c1, fit.se1, fit.c2, fit.se2, 3.0 * PI / 8.0);
    Ok(())
}
