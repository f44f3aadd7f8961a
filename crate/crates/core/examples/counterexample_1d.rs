//! One-dimensional selection: the tent map beats the monotone map in `∫|T′|²`
//! once the end weights `α` are large.

use monge_dirichlet::transport1d::triangle_counterexample;

fn main() -> monge_dirichlet::Result<()> {
    println!("{:>8} {:>12} {:>14} {:>12}", "alpha", "cost_U", "cost_T_alpha", "margin");
    for alpha in [0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0] {
        let r = triangle_counterexample(alpha, 10_000)?;
        println!("{alpha:>8} {:>12.6} {:>14.6} {:>12.6}", r.cost_u, r.cost_t_alpha, r.margin);
    }
    Ok(())
}
