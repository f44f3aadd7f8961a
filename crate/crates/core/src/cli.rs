//! Command-line front end: subcommands, CSV artifacts and run manifests.
//!
//! Every subcommand writes its CSV files into the output directory together
//! with `<subcommand>.manifest.json`. CSV values use Rust's shortest
//! round-trip float formatting, so identical inputs give identical bytes.

use crate::config::{load_config, ExperimentConfig};
use crate::domain::{check_compatibility, AngularGrid, Field2, PresetKind, Problem, RadialGrid};
use crate::energy::{self, MapField};
use crate::error::{Error, Result};
use crate::minimizer::{fit_asymptotics, minimize};
use crate::obstacle::{solve_obstacle, Curve, ObstacleSolution};
use crate::raymaps::{monotone_ray_map, original_map, RadialProfile};
use crate::recovery::recovery_sweep;
use crate::transport1d::triangle_counterexample;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_CHECK: u8 = 3;

/// Relative tolerance of `report --check` on the fitted `c1` against `K/3`.
pub const C1_TOLERANCE: f64 = 0.25;

#[derive(Debug, Parser)]
#[command(name = "monge-dirichlet", version, about = "Monge transport with a vanishing Dirichlet penalty")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON configuration file; missing keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed (overrides `seed`).
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,
    /// Worker threads for per-angle and per-epsilon jobs.
    #[arg(long, global = true, value_name = "T")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Monotone,
    Original,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build the problem and print the per-ray compatibility defect.
    Validate {
        #[arg(long)]
        preset: Option<PresetKind>,
    },
    /// W1 by duality and by the monotone ray map.
    W1 {
        #[arg(long)]
        preset: Option<PresetKind>,
    },
    /// Obstacle curve Phi and constant K.
    Obstacle {
        #[arg(long)]
        preset: Option<PresetKind>,
    },
    /// Ray-map profile and, for the original map, its breakpoints.
    BuildMaps {
        #[arg(long)]
        preset: Option<PresetKind>,
        #[arg(long, value_enum)]
        kind: MapKind,
    },
    /// Energies of a map stored as `r,theta,phi[,psi]` CSV.
    Energy {
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        preset: Option<PresetKind>,
    },
    /// Recovery maps over a list of epsilon values.
    RecoverySweep {
        #[arg(long)]
        preset: Option<PresetKind>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        eps_list: Option<Vec<f64>>,
        /// Patch grid resolution (overrides `patch_n`).
        #[arg(long)]
        patch_n: Option<usize>,
        /// Also write the (phi, psi) field of every recovery map.
        #[arg(long)]
        emit_field: bool,
    },
    /// Discrete minimisation of J_eps over point-cloud permutations.
    Minimize {
        #[arg(long)]
        preset: Option<PresetKind>,
        #[arg(long = "N", value_name = "N")]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        eps_list: Option<Vec<f64>>,
    },
    /// Tent map versus monotone map in one dimension.
    Counterexample {
        #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "10")]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Fit c0 + c1 eps|log eps| + c2 eps to a minimize CSV.
    Fit {
        /// Defaults to `<out>/minimize.csv`.
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// Fixed c0; defaults to `c0` from the minimize summary next to the input, if present.
        #[arg(long)]
        c0: Option<f64>,
        /// Fit c0 as a free parameter.
        #[arg(long, conflicts_with = "c0")]
        free_c0: bool,
    },
    /// Collect CSV artifacts into a gnuplot script; `--check` applies the acceptance thresholds.
    Report {
        #[arg(long)]
        check: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::W1 { .. } => "w1",
            Command::Obstacle { .. } => "obstacle",
            Command::BuildMaps { .. } => "build-maps",
            Command::Energy { .. } => "energy",
            Command::RecoverySweep { .. } => "recovery-sweep",
            Command::Minimize { .. } => "minimize",
            Command::Counterexample { .. } => "counterexample",
            Command::Fit { .. } => "fit",
            Command::Report { .. } => "report",
        }
    }

    fn preset(&self) -> Option<PresetKind> {
        match self {
            Command::Validate { preset }
            | Command::W1 { preset }
            | Command::Obstacle { preset }
            | Command::BuildMaps { preset, .. }
            | Command::Energy { preset, .. }
            | Command::RecoverySweep { preset, .. }
            | Command::Minimize { preset, .. } => *preset,
            _ => None,
        }
    }
}

/// Written next to the outputs of every completed run.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<String>,
    pub exit_code: u8,
}

/// Result of a subcommand before the manifest is written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub exit_code: u8,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Maps library errors to exit codes: input problems give 1, numerical failures 2.
pub fn exit_code_for(e: &Error) -> u8 {
    if e.is_validation() || matches!(e, Error::Io(_)) {
        EXIT_VALIDATION
    } else {
        EXIT_SOLVER
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_from_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Effective configuration: file (or defaults) with the command-line overrides applied.
pub fn effective_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.global.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &cli.global.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.global.seed {
        cfg.seed = s;
    }
    if let Some(p) = cli.command.preset() {
        cfg.preset = p;
    }
    match &cli.command {
        Command::RecoverySweep { eps_list, patch_n, .. } => {
            if let Some(l) = eps_list {
                cfg.eps_list = l.clone();
            }
            if let Some(n) = patch_n {
                cfg.patch_n = *n;
            }
        }
        Command::Minimize { n, eps_list, .. } => {
            if let Some(l) = eps_list {
                cfg.anneal_eps_list = l.clone();
            }
            if let Some(n) = n {
                cfg.anneal_n = *n;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed command line and writes its manifest. Returns the exit code.
pub fn run(cli: &Cli) -> Result<u8> {
    let started = now_ms();
    if let Some(t) = cli.global.threads {
        if t == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let cfg = effective_config(cli)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let outcome = dispatch(&cli.command, &cfg)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: cli.command.name().to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
        exit_code: outcome.exit_code,
    };
    let path = cfg.out_dir.join(format!("{}.manifest.json", cli.command.name()));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))? + "\n")?;
    Ok(outcome.exit_code)
}

fn dispatch(cmd: &Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    match cmd {
        Command::Validate { .. } => cmd_validate(cfg),
        Command::W1 { .. } => cmd_w1(cfg),
        Command::Obstacle { .. } => cmd_obstacle(cfg),
        Command::BuildMaps { kind, .. } => cmd_build_maps(cfg, *kind),
        Command::Energy { map, eps, .. } => cmd_energy(cfg, map, *eps),
        Command::RecoverySweep { emit_field, .. } => cmd_recovery_sweep(cfg, *emit_field),
        Command::Minimize { .. } => cmd_minimize(cfg),
        Command::Counterexample { alpha, n } => cmd_counterexample(cfg, alpha, *n),
        Command::Fit { input, c0, free_c0 } => cmd_fit(cfg, input.as_deref(), *c0, *free_c0),
        Command::Report { check } => cmd_report(cfg, *check),
    }
}

// ---------------------------------------------------------------- CSV and JSON

/// Writes a CSV with a header row and LF line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Validation(format!(
                "row of width {} under a header of width {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|&v| format_float(v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip form, with an exponent outside `[1e-4, 1e15)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Reads a numeric CSV into its header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{}: '{s}': {e}", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Validation(format!("{} has no column '{name}'", path.display())))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))? + "\n")?;
    Ok(())
}

fn read_json(path: &Path) -> Result<Value> {
    serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- subcommands

fn obstacle_for(problem: &Problem, tol: f64) -> Result<ObstacleSolution> {
    let t = &problem.target;
    let sol = solve_obstacle(&Curve::new(t.grid(), t.r1().to_vec())?, tol)?;
    if sol.phi.max() > t.inf_r2() {
        return Err(Error::Infeasible(format!("max Phi = {} exceeds inf R2 = {}", sol.phi.max(), t.inf_r2())));
    }
    Ok(sol)
}

fn cmd_validate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.problem()?;
    let (_, defect) = check_compatibility(&p.densities, &p.target)?;
    println!("preset {}: compatibility defect {defect:e}", cfg.preset);
    Ok(Outcome::default())
}

fn cmd_w1(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.problem()?;
    let (d, t) = (&p.densities, &p.target);
    let dual = energy::w1_duality(d, t)?;
    let mono = energy::monge_cost(&MapField::from_profile(&monotone_ray_map(d, t)?), d);
    // The two routes share no code beyond the densities; their gap estimates the quadrature error.
    println!("W1 = {dual:.6} ± {:.1e} (duality {dual}, monotone ray map {mono})", (dual - mono).abs());
    let path = cfg.out_dir.join("w1.json");
    write_json(&path, &json!({ "preset": cfg.preset, "w1_duality": dual, "w1_monotone": mono }))?;
    Ok(Outcome { outputs: vec![path], exit_code: EXIT_OK })
}

fn cmd_obstacle(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.problem()?;
    let sol = obstacle_for(&p, cfg.obstacle_tol)?;
    println!("K = {}", sol.k);
    let csv_path = cfg.out_dir.join("obstacle.csv");
    let th = p.target.grid().nodes();
    write_csv(
        &csv_path,
        &["theta", "R1", "Phi"],
        (0..th.len()).map(|j| vec![th[j], p.target.r1()[j], sol.phi.values()[j]]),
    )?;
    let json_path = cfg.out_dir.join("obstacle.json");
    write_json(
        &json_path,
        &json!({
            "preset": cfg.preset,
            "k": sol.k,
            "kkt_residual": sol.kkt_residual,
            "iterations": sol.iterations,
            "method": format!("{:?}", sol.method),
            "active_nodes": sol.active.iter().filter(|a| **a).count(),
            "phi_max": sol.phi.max(),
            "inf_r2": p.target.inf_r2(),
        }),
    )?;
    Ok(Outcome { outputs: vec![csv_path, json_path], exit_code: EXIT_OK })
}

fn profile_rows(p: &RadialProfile) -> impl Iterator<Item = Vec<f64>> + '_ {
    let (r, th) = (p.radial.nodes(), p.angular.nodes());
    (0..r.len()).flat_map(move |i| (0..th.len()).map(move |j| vec![r[i], th[j], p.phi.get(i, j)]))
}

fn cmd_build_maps(cfg: &ExperimentConfig, kind: MapKind) -> Result<Outcome> {
    let p = cfg.problem()?;
    let (d, t) = (&p.densities, &p.target);
    let mut outputs = Vec::new();
    let (profile, name) = match kind {
        MapKind::Monotone => (monotone_ray_map(d, t)?, "monotone"),
        MapKind::Original => {
            let sol = obstacle_for(&p, cfg.obstacle_tol)?;
            (original_map(d, t, &sol.phi)?, "original")
        }
    };
    let map_path = cfg.out_dir.join(format!("map_{name}.csv"));
    write_csv(&map_path, &["r", "theta", "phi"], profile_rows(&profile))?;
    outputs.push(map_path);
    if let (Some(rho1), Some(rho2)) = (&profile.rho1, &profile.rho2) {
        let bp = cfg.out_dir.join(format!("breakpoints_{name}.csv"));
        let th = profile.angular.nodes();
        write_csv(&bp, &["theta", "rho1", "rho2"], (0..th.len()).map(|j| vec![th[j], rho1[j], rho2[j]]))?;
        outputs.push(bp);
    }
    println!("{name} map: {} x {} nodes", profile.radial.len(), profile.angular.len());
    Ok(Outcome { outputs, exit_code: EXIT_OK })
}

/// Reads a polar map from `r,theta,phi[,psi]` rows on a tensor grid.
pub fn read_map_csv(path: &Path) -> Result<MapField> {
    let (header, rows) = read_csv(path)?;
    let (ir, it, ip) = (column(&header, "r", path)?, column(&header, "theta", path)?, column(&header, "phi", path)?);
    let is = header.iter().position(|h| h == "psi");
    let mut rs: Vec<f64> = rows.iter().map(|row| row[ir]).collect();
    let mut ts: Vec<f64> = rows.iter().map(|row| row[it]).collect();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if rs.len() * ts.len() != rows.len() {
        return Err(Error::Validation(format!(
            "{}: {} rows do not form a {} x {} grid",
            path.display(),
            rows.len(),
            rs.len(),
            ts.len()
        )));
    }
    let radial = RadialGrid::from_nodes(rs.clone())?;
    let angular = AngularGrid::new(ts.len())?;
    if angular.nodes().iter().zip(&ts).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::GridMismatch(format!(
            "{}: theta values are not the uniform grid on [0, pi/2]",
            path.display()
        )));
    }
    let mut phi = Field2::zeros(rs.len(), ts.len());
    let mut psi = Field2::zeros(rs.len(), ts.len());
    for row in &rows {
        let i = rs.binary_search_by(|v| v.total_cmp(&row[ir])).expect("value came from this column");
        let j = ts.binary_search_by(|v| v.total_cmp(&row[it])).expect("value came from this column");
        phi.set(i, j, row[ip]);
        if let Some(k) = is {
            psi.set(i, j, row[k]);
        }
    }
    MapField::new(radial, angular, phi, psi)
}

fn write_field(path: &Path, m: &MapField) -> Result<()> {
    let (r, th) = (m.radial.nodes(), m.angular.nodes());
    write_csv(
        path,
        &["r", "theta", "phi", "psi"],
        (0..r.len()).flat_map(|i| (0..th.len()).map(move |j| vec![r[i], th[j], m.phi.get(i, j), m.psi.get(i, j)])),
    )
}

fn cmd_energy(cfg: &ExperimentConfig, map: &Path, eps: f64) -> Result<Outcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Validation(format!("epsilon {eps} outside (0,1)")));
    }
    let m = read_map_csv(map)?;
    let p = Problem::build(
        cfg.preset,
        cfg.tables.as_ref(),
        cfg.bv_r1p.unwrap_or(0.0),
        m.radial.clone(),
        m.angular.len(),
        cfg.n_lambda(),
    )?;
    let (d, t) = (&p.densities, &p.target);
    let k = obstacle_for(&p, cfg.obstacle_tol)?.k;
    let w1 = energy::w1_duality(d, t)?;
    let j = energy::j_eps(&m, d, eps)?;
    let f_direct = energy::f_eps_direct(&m, d, eps, k, w1)?;
    let terms = energy::f_eps_decomposed(&m, d, t, eps, k)?;
    println!("J = {j}, F_direct = {f_direct}, F_decomposed = {}", terms.total());
    let path = cfg.out_dir.join("energy.csv");
    write_csv(
        &path,
        &["eps", "J", "F_direct", "term1", "term2", "term3", "term4"],
        [vec![eps, j, f_direct, terms.term1, terms.term2, terms.term3, terms.term4]],
    )?;
    Ok(Outcome { outputs: vec![path], exit_code: EXIT_OK })
}

pub const SWEEP_HEADER: [&str; 16] = [
    "eps",
    "delta",
    "J",
    "F_direct",
    "F_decomposed",
    "term1",
    "term2",
    "term3",
    "term4",
    "lip_delta",
    "patch_defect",
    "ray_defect",
    "global_defect",
    "seam_cells",
    "escaped",
    "excess_ratio",
];

fn cmd_recovery_sweep(cfg: &ExperimentConfig, emit_field: bool) -> Result<Outcome> {
    let p = cfg.problem()?;
    let sweep = recovery_sweep(&p, &cfg.eps_list, cfg.patch_n, emit_field)?;
    let mut outputs = Vec::new();
    let path = cfg.out_dir.join("recovery_sweep.csv");
    write_csv(
        &path,
        &SWEEP_HEADER,
        sweep.rows.iter().map(|r| {
            vec![
                r.eps,
                r.delta,
                r.j,
                r.f_direct,
                r.f_eps(),
                r.terms.term1,
                r.terms.term2,
                r.terms.term3,
                r.terms.term4,
                r.lip_delta,
                r.patch_defect,
                r.ray_defect,
                r.global_defect,
                r.seam_cells,
                r.escaped as f64,
                r.excess_ratio,
            ]
        }),
    )?;
    outputs.push(path);
    for (i, f) in sweep.fields.iter().enumerate() {
        let fp = cfg.out_dir.join(format!("field_{i}.csv"));
        write_field(&fp, f)?;
        outputs.push(fp);
    }
    let (lo, hi, mean) = sweep.f_stats();
    println!("F_eps in [{lo:.4}, {hi:.4}], mean {mean:.4}, K = {:.6}", sweep.k);
    let jp = cfg.out_dir.join("recovery_sweep.json");
    write_json(
        &jp,
        &json!({ "preset": cfg.preset, "k": sweep.k, "w1": sweep.w1, "f_min": lo, "f_max": hi, "f_mean": mean, "eps_list": cfg.eps_list }),
    )?;
    outputs.push(jp);
    Ok(Outcome { outputs, exit_code: EXIT_OK })
}

fn cmd_minimize(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.problem()?;
    let k = obstacle_for(&p, cfg.obstacle_tol)?.k;
    let w1 = energy::w1_duality(&p.densities, &p.target)?;
    let run = minimize(&p, cfg.anneal_n, &cfg.anneal_eps_list, cfg.seed, &cfg.minimize_options())?;
    let path = cfg.out_dir.join("minimize.csv");
    write_csv(
        &path,
        &["eps", "J_discrete", "monge_part", "dirichlet_part", "accept_rate"],
        run.rows.iter().map(|r| vec![r.eps, r.j, r.monge, r.dirichlet, r.accept_rate]),
    )?;
    let jp = cfg.out_dir.join("minimize.json");
    write_json(
        &jp,
        &json!({
            "preset": cfg.preset,
            "n": cfg.anneal_n,
            "seed": cfg.seed,
            "k": k,
            "k_over_3": k / 3.0,
            "w1": w1,
            "c0": run.monge_optimum,
            "monge_optimum": run.monge_optimum,
            "dual_bound": run.dual_bound,
            "init_dirichlet": run.init_dirichlet,
            "init_exact": run.init_exact,
        }),
    )?;
    println!("discrete optimum {:.6} (W1 {w1:.6}), {} epsilon values", run.monge_optimum, run.rows.len());
    Ok(Outcome { outputs: vec![path, jp], exit_code: EXIT_OK })
}

fn cmd_counterexample(cfg: &ExperimentConfig, alphas: &[f64], n: usize) -> Result<Outcome> {
    let rows = alphas
        .iter()
        .map(|&a| triangle_counterexample(a, n).map(|r| vec![r.alpha, r.cost_u, r.cost_t_alpha, r.margin]))
        .collect::<Result<Vec<_>>>()?;
    for r in &rows {
        println!("alpha = {}: margin {}", r[0], r[3]);
    }
    let path = cfg.out_dir.join("counterexample.csv");
    write_csv(&path, &["alpha", "cost_U", "cost_T_alpha", "margin"], rows)?;
    Ok(Outcome { outputs: vec![path], exit_code: EXIT_OK })
}

/// `(eps, J)` pairs from a minimize CSV.
pub fn read_minimize_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let (header, rows) = read_csv(path)?;
    let (ie, ij) = (column(&header, "eps", path)?, column(&header, "J_discrete", path)?);
    Ok(rows.iter().map(|r| (r[ie], r[ij])).collect())
}

fn summary_next_to(csv: &Path) -> Option<Value> {
    read_json(&csv.with_extension("json")).ok()
}

fn cmd_fit(cfg: &ExperimentConfig, input: Option<&Path>, c0: Option<f64>, free: bool) -> Result<Outcome> {
    let input = input.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.join("minimize.csv"));
    let pts = read_minimize_points(&input)?;
    let c0 = if free { None } else { c0.or_else(|| summary_next_to(&input).and_then(|v| v["c0"].as_f64())) };
    let fit = fit_asymptotics(&pts, c0)?;
    println!(
        "c0 = {} ({}), c1 = {} +- {}, c2 = {} +- {}, condition {:e}",
        fit.c0,
        if fit.c0_fixed { "fixed" } else { "fitted" },
        fit.c1,
        fit.se1,
        fit.c2,
        fit.se2,
        fit.condition
    );
    let path = cfg.out_dir.join("fit.csv");
    write_csv(&path, &["c0", "c1", "c2", "se1", "se2"], [vec![fit.c0, fit.c1, fit.c2, fit.se1, fit.se2]])?;
    Ok(Outcome { outputs: vec![path], exit_code: EXIT_OK })
}

/// One line of `report --check`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Reads the artifacts in `dir` and evaluates every check whose inputs are present.
/// The `c1` check is mandatory; its inputs are `fit.csv` and `K` from
/// `minimize.json` or `obstacle.json`.
pub fn report_checks(dir: &Path) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    let fit_path = dir.join("fit.csv");
    let (fh, fr) = read_csv(&fit_path)?;
    let c1 =
        fr.first().ok_or_else(|| Error::Validation("fit.csv has no data row".into()))?[column(&fh, "c1", &fit_path)?];
    let k = [dir.join("minimize.json"), dir.join("obstacle.json")]
        .iter()
        .filter_map(|p| read_json(p).ok())
        .find_map(|v| v["k"].as_f64())
        .ok_or_else(|| Error::Validation("no K found in minimize.json or obstacle.json".into()))?;
    let target = k / 3.0;
    let rel = (c1 - target).abs() / target;
    lines.push(CheckLine {
        name: "c1 vs K/3".into(),
        pass: rel <= C1_TOLERANCE,
        detail: format!("c1 = {c1:.6}, K/3 = {target:.6}, relative error {rel:.3} (tolerance {C1_TOLERANCE})"),
    });
    let sweep = dir.join("recovery_sweep.csv");
    if sweep.exists() {
        let (h, rows) = read_csv(&sweep)?;
        let i = column(&h, "F_decomposed", &sweep)?;
        let v: Vec<f64> = rows.iter().map(|r| r[i]).collect();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
        lines.push(CheckLine {
            name: "F_eps spread".into(),
            pass: !v.is_empty() && v.iter().all(|x| x.is_finite()) && hi - lo <= 0.5 * mean,
            detail: format!("max - min = {:.4}, 0.5 mean = {:.4}", hi - lo, 0.5 * mean),
        });
    }
    let ce = dir.join("counterexample.csv");
    if ce.exists() {
        let (h, rows) = read_csv(&ce)?;
        let i = column(&h, "margin", &ce)?;
        lines.push(CheckLine {
            name: "counterexample margin".into(),
            pass: !rows.is_empty() && rows.iter().all(|r| r[i] > 0.0),
            detail: format!("margins {:?}", rows.iter().map(|r| r[i]).collect::<Vec<_>>()),
        });
    }
    Ok(lines)
}

/// Gnuplot script for `(eps, inf J_eps)` with the fitted curve, plus `F_eps`
/// when a sweep is present. Reads only the artifacts in `dir`.
pub fn gnuplot_script(dir: &Path) -> Result<String> {
    let fit_path = dir.join("fit.csv");
    let (fh, fr) = read_csv(&fit_path)?;
    let row = fr.first().ok_or_else(|| Error::Validation("fit.csv has no data row".into()))?;
    let get = |n: &str| column(&fh, n, &fit_path).map(|i| row[i]);
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale x\nset key left top\nset grid\n");
    s.push_str(&format!("c0 = {}\nc1 = {}\nc2 = {}\n", get("c0")?, get("c1")?, get("c2")?));
    s.push_str("fit_curve(x) = c0 + c1*x*abs(log(x)) + c2*x\n");
    s.push_str("set xlabel 'eps'\nset ylabel 'inf J_eps'\n");
    s.push_str("plot 'minimize.csv' using 1:2 every ::1 with points pt 7 title 'discrete minimum', \\\n");
    s.push_str("     fit_curve(x) with lines title sprintf('fit, c1 = %.4f', c1)\n");
    if dir.join("recovery_sweep.csv").exists() {
        s.push_str("pause -1\nset ylabel 'F_eps'\nunset logscale y\n");
        s.push_str(
            "plot 'recovery_sweep.csv' using 1:5 every ::1 with linespoints title 'F_eps of the recovery maps'\n",
        );
    }
    Ok(s)
}

fn cmd_report(cfg: &ExperimentConfig, check: bool) -> Result<Outcome> {
    let dir = &cfg.out_dir;
    let script = gnuplot_script(dir)?;
    let gp = dir.join("report.gp");
    std::fs::write(&gp, script)?;
    let checks = report_checks(dir)?;
    let mut failed = false;
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed |= !c.pass;
    }
    let summary: BTreeMap<&str, Value> =
        checks.iter().map(|c| (c.name.as_str(), json!({ "pass": c.pass, "detail": c.detail }))).collect();
    let jp = dir.join("report.json");
    write_json(&jp, &json!(summary))?;
    let exit_code = if check && failed { EXIT_CHECK } else { EXIT_OK };
    Ok(Outcome { outputs: vec![gp, jp], exit_code })
}
