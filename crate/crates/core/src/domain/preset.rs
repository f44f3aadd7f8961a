use super::density::{normalize_target_per_theta, DensityPair};
use super::grid::{AngularGrid, LambdaGrid, RadialGrid};
use super::target::PolarTarget;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};

/// Named geometries and densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetKind {
    /// `R₁ ≡ 1.5`, `R₂ ≡ 2.5`, `f ≡ 4/π`, `g ≡ 1/π`.
    AnnulusConst,
    /// Same annulus, `f ∝ 1 + 0.1 r sin 2θ`, `g` constant along each ray.
    ///
    /// The factor `r` matters: a purely angular modulation is undone by the
    /// per-ray rebalancing of `g` and leaves every ray profile unchanged.
    AnnulusModulated,
    /// `R₁ = 1.5 − 0.3 sin²(…)` on `(π/6, π/3)`, constant densities rebalanced per ray.
    NotchedObstacle,
    /// Boundary curves and densities read from sampled tables.
    Tables,
}

impl std::str::FromStr for PresetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "annulus-const" => Ok(Self::AnnulusConst),
            "annulus-modulated" => Ok(Self::AnnulusModulated),
            "notched-obstacle" => Ok(Self::NotchedObstacle),
            "tables" => Ok(Self::Tables),
            other => Err(Error::Validation(format!("unknown preset '{other}'"))),
        }
    }
}

impl std::fmt::Display for PresetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AnnulusConst => "annulus-const",
            Self::AnnulusModulated => "annulus-modulated",
            Self::NotchedObstacle => "notched-obstacle",
            Self::Tables => "tables",
        })
    }
}

/// User-supplied samples. `r1`, `r2` are uniform in `θ ∈ [0, π/2]`; `f[i][j]` is
/// uniform in `r ∈ [0, 1]` (row `i`) and `θ` (column `j`); `g[k][j]` is uniform in `λ ∈ [0, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

/// Depth and support of the notch used by the notched preset.
pub const NOTCH_DEPTH: f64 = 0.3;
pub const NOTCH_START: f64 = FRAC_PI_6;
pub const NOTCH_END: f64 = FRAC_PI_3;

/// Smooth bump `sin²(π(θ−a)/(b−a))` on `(a, b)`, zero elsewhere.
pub fn notch_bump(theta: f64) -> f64 {
    if theta <= NOTCH_START || theta >= NOTCH_END {
        0.0
    } else {
        (PI * (theta - NOTCH_START) / (NOTCH_END - NOTCH_START)).sin().powi(2)
    }
}

pub fn notched_r1(theta: f64) -> f64 {
    1.5 - NOTCH_DEPTH * notch_bump(theta)
}

/// `‖R₁″‖_{L¹}` of the notched obstacle: `2 · depth · (π/w)² · (2w/π) = 4π·depth/w`.
pub fn notched_bv() -> f64 {
    4.0 * PI * NOTCH_DEPTH / (NOTCH_END - NOTCH_START)
}

/// A validated target with its density pair.
#[derive(Debug, Clone)]
pub struct Problem {
    pub target: PolarTarget,
    pub densities: DensityPair,
}

fn lerp_table(v: &[f64], s: f64) -> f64 {
    let n = v.len();
    let x = s.clamp(0.0, 1.0) * (n - 1) as f64;
    let k = (x.floor() as usize).min(n - 2);
    let t = x - k as f64;
    v[k] * (1.0 - t) + v[k + 1] * t
}

fn bilerp_table(rows: &[Vec<f64>], s: f64, u: f64) -> f64 {
    let n = rows.len();
    let x = s.clamp(0.0, 1.0) * (n - 1) as f64;
    let k = (x.floor() as usize).min(n - 2);
    let t = x - k as f64;
    lerp_table(&rows[k], u) * (1.0 - t) + lerp_table(&rows[k + 1], u) * t
}

impl Problem {
    pub fn preset(kind: PresetKind, n_r: usize, n_theta: usize, n_lambda: usize) -> Result<Self> {
        if kind == PresetKind::Tables {
            return Err(Error::Validation("the tables preset needs sampled tables".into()));
        }
        Self::build(kind, None, 0.0, RadialGrid::uniform(n_r)?, n_theta, n_lambda)
    }

    /// General constructor used by the presets and by configuration files.
    pub fn build(
        kind: PresetKind,
        tables: Option<&Tables>,
        bv_r1p: f64,
        radial: RadialGrid,
        n_theta: usize,
        n_lambda: usize,
    ) -> Result<Self> {
        let angular = AngularGrid::new(n_theta)?;
        let lambda = LambdaGrid::new(n_lambda)?;
        let th = angular.nodes().to_vec();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let (target, raw) = match kind {
            PresetKind::AnnulusConst => {
                let t = PolarTarget::new(angular, vec![1.5; n_theta], vec![2.5; n_theta], 0.0)?;
                let d = DensityPair::from_fns(radial, lambda, &t, |_, _| 4.0 / PI, |_, _| 1.0 / PI)?;
                (t, d)
            }
            PresetKind::AnnulusModulated => {
                let t = PolarTarget::new(angular, vec![1.5; n_theta], vec![2.5; n_theta], 0.0)?;
                let d = DensityPair::from_fns(
                    radial,
                    lambda,
                    &t,
                    |r, th| 4.0 / PI * (1.0 + 0.1 * (2.0 * th).sin() * r),
                    |_, _| 1.0 / PI,
                )?;
                (t, d)
            }
            PresetKind::NotchedObstacle => {
                let r1: Vec<f64> = th.iter().map(|&t| notched_r1(t)).collect();
                let t = PolarTarget::new(angular, r1, vec![2.5; n_theta], notched_bv())?;
                let d = DensityPair::from_fns(radial, lambda, &t, |_, _| 4.0 / PI, |_, _| 1.0 / PI)?;
                (t, d)
            }
            PresetKind::Tables => {
                let tb = tables.ok_or_else(|| Error::Validation("preset 'tables' needs a 'tables' entry".into()))?;
                if tb.r1.len() < 2 || tb.r2.len() < 2 || tb.f.len() < 2 || tb.g.len() < 2 {
                    return Err(Error::Validation("tables need at least 2 samples per axis".into()));
                }
                if tb.f.iter().chain(&tb.g).any(|row| row.len() < 2) {
                    return Err(Error::Validation("density table rows need at least 2 samples".into()));
                }
                let r1: Vec<f64> = th.iter().map(|&t| lerp_table(&tb.r1, t / half_pi)).collect();
                let r2: Vec<f64> = th.iter().map(|&t| lerp_table(&tb.r2, t / half_pi)).collect();
                let t = PolarTarget::new(angular, r1, r2, bv_r1p)?;
                let r1s = tb.r1.clone();
                let r2s = tb.r2.clone();
                let d = DensityPair::from_fns(
                    radial,
                    lambda,
                    &t,
                    |r, th| bilerp_table(&tb.f, r, th / half_pi),
                    |r, th| {
                        let u = th / half_pi;
                        let a = lerp_table(&r1s, u);
                        let b = lerp_table(&r2s, u);
                        bilerp_table(&tb.g, (r - a) / (b - a), u)
                    },
                )?;
                (t, d)
            }
        };
        let mass = raw.source_mass();
        if !(mass > 0.0) {
            return Err(Error::Validation("source density has no mass".into()));
        }
        let raw = if (mass - 1.0).abs() > 1e-14 {
            DensityPair::new(
                raw.radial().clone(),
                raw.lambda().clone(),
                raw.angular().clone(),
                raw.f().map(|v| v / mass),
                raw.g().clone(),
            )?
        } else {
            raw
        };
        let densities = normalize_target_per_theta(&raw, &target)?;
        densities.validate(&target)?;
        Ok(Self { target, densities })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::density::{check_compatibility, quadrature_2d, Region};
    use crate::domain::grid::Field2;

    #[test]
    fn annulus_const_values() {
        let p = Problem::preset(PresetKind::AnnulusConst, 64, 9, 64).unwrap();
        assert!(p.target.r1().iter().all(|&v| v == 1.5));
        assert!(p.target.r2().iter().all(|&v| v == 2.5));
        assert!(p.densities.f().data().iter().all(|&v| (v - 4.0 / PI).abs() < 1e-15));
        assert!(p.densities.g().data().iter().all(|&v| (v - 1.0 / PI).abs() < 1e-14));
        assert!(check_compatibility(&p.densities, &p.target).unwrap().1 < 1e-12);
    }

    #[test]
    fn every_preset_is_compatible() {
        for kind in [PresetKind::AnnulusModulated, PresetKind::NotchedObstacle] {
            let p = Problem::preset(kind, 100, 41, 80).unwrap();
            assert!(check_compatibility(&p.densities, &p.target).unwrap().1 < 1e-12, "{kind}");
            assert!((p.densities.source_mass() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn tables_reproduce_the_constant_preset() {
        let tb =
            Tables { r1: vec![1.5; 3], r2: vec![2.5; 3], f: vec![vec![4.0 / PI; 3]; 3], g: vec![vec![1.0 / PI; 3]; 3] };
        let p = Problem::build(PresetKind::Tables, Some(&tb), 0.0, RadialGrid::uniform(64).unwrap(), 9, 64).unwrap();
        let q = Problem::preset(PresetKind::AnnulusConst, 64, 9, 64).unwrap();
        for (a, b) in p.densities.g().data().iter().zip(q.densities.g().data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(Problem::build(PresetKind::Tables, None, 0.0, RadialGrid::uniform(8).unwrap(), 9, 8).is_err());
    }

    #[test]
    fn target_area_converges_at_second_order() {
        // A curved inner boundary makes the angular trapezoid rule inexact.
        let area = |n: usize| {
            let a = AngularGrid::new(n).unwrap();
            let r1: Vec<f64> = a.nodes().iter().map(|t| 1.5 + 0.1 * t.sin()).collect();
            let t = PolarTarget::new(a, r1, vec![2.5; n], 0.0).unwrap();
            let l = LambdaGrid::new(9).unwrap();
            quadrature_2d(&Field2::from_fn(9, n, |_, _| 1.0), Region::Target(&l, &t))
        };
        // ½∫(R₂² − R₁²) dθ with R₁ = 1.5 + 0.1 sin θ.
        let exact = 0.5 * (6.25 * PI / 2.0 - (2.25 * PI / 2.0 + 0.3 + 0.01 * PI / 4.0));
        let e1 = (area(41) - exact).abs();
        let e2 = (area(81) - exact).abs();
        let e3 = (area(161) - exact).abs();
        assert!(e3 < 1e-4);
        let ratio = e2 / e3;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, {e1} {e2} {e3}");
        assert!(area(20001) - exact < 1e-8);
    }
}
