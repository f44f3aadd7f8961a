//! Least-squares fit of `value ≈ c0 + c1 ε|log ε| + c2 ε`.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Condition number above which the design matrix is treated as rank deficient.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Standard error of `c0`; zero when `c0` was fixed.
    pub se0: f64,
    pub se1: f64,
    pub se2: f64,
    pub residual_norm: f64,
    pub condition: f64,
    pub c0_fixed: bool,
}

pub fn fit_asymptotics(points: &[(f64, f64)], c0_known: Option<f64>) -> Result<FitResult> {
    let mut eps: Vec<f64> = points.iter().map(|p| p.0).collect();
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Validation("epsilon values must lie in (0,1)".into()));
    }
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.len() < 4 {
        return Err(Error::Validation(format!("{} distinct epsilon values, need 4", eps.len())));
    }
    if (eps[eps.len() - 1] / eps[0]).log10() < 1.5 - 1e-12 {
        return Err(Error::Validation("epsilon values must span at least 1.5 decades".into()));
    }
    let cols = if c0_known.is_some() { 2 } else { 3 };
    let m = points.len();
    let x = DMatrix::from_fn(m, cols, |i, j| {
        let e = points[i].0;
        let basis = [e * e.ln().abs(), e, 1.0];
        basis[j]
    });
    let y = DVector::from_iterator(m, points.iter().map(|p| p.1 - c0_known.unwrap_or(0.0)));
    // Column scaling keeps the condition number meaningful across ε ranges.
    let scale: Vec<f64> = (0..cols).map(|j| x.column(j).norm()).collect();
    let xs = DMatrix::from_fn(m, cols, |i, j| x[(i, j)] / scale[j]);
    let svd = xs.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::RankDeficient(condition));
    }
    let beta_s = svd.solve(&y, 0.0).map_err(|e| Error::Validation(e.to_string()))?;
    let beta: Vec<f64> = (0..cols).map(|j| beta_s[j] / scale[j]).collect();
    let resid = &y - &x * DVector::from_column_slice(&beta);
    let rss = resid.norm_squared();
    let dof = m.saturating_sub(cols).max(1) as f64;
    let sigma2 = rss / dof;
    let xtx_inv = (xs.transpose() * &xs).try_inverse().ok_or(Error::RankDeficient(condition))?;
    let se: Vec<f64> = (0..cols).map(|j| (sigma2 * xtx_inv[(j, j)]).sqrt() / scale[j]).collect();
    let (c0, se0) = match c0_known {
        Some(v) => (v, 0.0),
        None => (beta[2], se[2]),
    };
    Ok(FitResult {
        c0,
        c1: beta[0],
        c2: beta[1],
        se0,
        se1: se[0],
        se2: se[1],
        residual_norm: rss.sqrt(),
        condition,
        c0_fixed: c0_known.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Vec<f64> {
        (0..8).map(|i| 1e-3 * 100f64.powf(i as f64 / 7.0)).collect()
    }

    fn model(e: f64) -> f64 {
        1.375 + 1.1781 * e * e.ln().abs() + 0.7 * e
    }

    #[test]
    fn exact_model_is_recovered() {
        let pts: Vec<(f64, f64)> = grid().into_iter().map(|e| (e, model(e))).collect();
        let f = fit_asymptotics(&pts, None).unwrap();
        assert!((f.c0 - 1.375).abs() < 1e-10 && (f.c1 - 1.1781).abs() < 1e-10 && (f.c2 - 0.7).abs() < 1e-10);
        let g = fit_asymptotics(&pts, Some(1.375)).unwrap();
        assert!((g.c1 - 1.1781).abs() < 1e-10 && (g.c2 - 0.7).abs() < 1e-10 && g.se0 == 0.0);
    }

    #[test]
    fn one_percent_noise_on_the_excess_keeps_c1_within_five_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let pts: Vec<(f64, f64)> = grid()
                .into_iter()
                .map(|e| {
                    let excess = model(e) - 1.375;
                    (e, 1.375 + excess * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)))
                })
                .collect();
            let f = fit_asymptotics(&pts, Some(1.375)).unwrap();
            assert!(((f.c1 - 1.1781) / 1.1781).abs() < 0.05, "{}", f.c1);
        }
    }

    #[test]
    fn bad_designs_are_rejected() {
        let narrow: Vec<(f64, f64)> = (0..6).map(|i| (0.01 + 0.001 * i as f64, 1.0)).collect();
        assert!(fit_asymptotics(&narrow, None).is_err());
        let few = vec![(1e-3, 1.0), (1e-2, 1.0), (1e-1, 1.0)];
        assert!(fit_asymptotics(&few, None).is_err());
        let repeated = vec![(1e-3, 1.0), (1e-3, 1.0), (1e-1, 1.0), (1e-1, 1.1), (1e-1, 1.2)];
        assert!(fit_asymptotics(&repeated, None).is_err());
    }
}
