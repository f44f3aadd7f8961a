//! The recovery family over `ε`: `F_ε` stays bounded while `ε|log ε|` is paid by term3.

use monge_dirichlet::domain::{PresetKind, Problem};
use monge_dirichlet::recovery::recovery_sweep;

fn main() -> monge_dirichlet::Result<()> {
    let p = Problem::preset(PresetKind::AnnulusConst, 400, 201, 400)?;
    let eps: Vec<f64> = (0..5).map(|i| 10f64.powf(-1.0 - 0.5 * i as f64)).collect();
    let s = recovery_sweep(&p, &eps, 128, false)?;
    println!("K = {:.6}, W1 = {:.6}", s.k, s.w1);
    println!(
        "{:>8} {:>7} {:>9} {:>8} {:>8} {:>8} {:>8} {:>9} {:>10}",
        "eps", "delta", "F_eps", "term1", "term2", "term3", "term4", "Lip*dlt", "defect"
    );
    for r in &s.rows {
        println!(
            "{:>8.1e} {:>7.4} {:>9.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>9.3} {:>10.2e}",
            r.eps,
            r.delta,
            r.f_eps(),
            r.terms.term1,
            r.terms.term2,
            r.terms.term3,
            r.terms.term4,
            r.lip_delta,
            r.global_defect
        );
    }
    let (lo, hi, mean) = s.f_stats();
    println!("spread {:.4} against half the mean {:.4}", hi - lo, 0.5 * mean);
    Ok(())
}
