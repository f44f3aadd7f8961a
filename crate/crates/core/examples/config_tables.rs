//! A problem defined by sampled tables in a JSON configuration.

use monge_dirichlet::config::ExperimentConfig;
use monge_dirichlet::domain::check_compatibility;
use monge_dirichlet::energy::w1_duality;
use monge_dirichlet::obstacle::{solve_obstacle, Curve};

const CONFIG: &str = r#"{
  "preset": "tables",
  "n_r": 200,
  "n_theta": 101,
  "bv_r1p": 0.4,
  "tables": {
    "r1": [1.5, 1.4, 1.3, 1.4, 1.5],
    "r2": [2.5, 2.6, 2.7, 2.6, 2.5],
    "f": [[1.0, 1.0, 1.0], [1.0, 1.2, 1.0], [1.0, 1.4, 1.0]],
    "g": [[1.0, 1.0], [2.0, 2.0]]
  }
}"#;

fn main() -> monge_dirichlet::Result<()> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let p = cfg.problem()?;
    let (_, defect) = check_compatibility(&p.densities, &p.target)?;
    let sol = solve_obstacle(&Curve::new(p.target.grid(), p.target.r1().to_vec())?, cfg.obstacle_tol)?;
    println!("config hash {}", cfg.hash());
    println!("compatibility defect {defect:.2e}");
    println!("W1 = {:.6}", w1_duality(&p.densities, &p.target)?);
    println!("K = {:.6}, Phi in [{:.4}, {:.4}]", sol.k, sol.phi.min(), sol.phi.max());
    Ok(())
}
