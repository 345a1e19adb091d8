//! Bin averaging of continuous copula models and the least-squares fit of
//! the K-model fluctuation parameter at fixed correlation.

use serde::{Deserialize, Serialize};

use super::kdist::{binned_k_copula, mirrored_axis_nodes, KModel, KModelParams, QuadratureSpec};
use crate::empirical::{corner_asymmetries, Conditioning, CopulaHistogram, HistogramMeta, OrderProvenance};
use crate::{Error, Result};

/// Default tensor-rule order per cell for bin averaging.
pub const DEFAULT_CELL_ORDER: usize = 8;

/// Average a continuous copula density over each grid cell with an
/// `order`-point tensor Gauss-Legendre rule.
pub fn bin_average_model(
    model: impl Fn(f64, f64) -> Result<f64>,
    bins: usize,
    order: usize,
) -> Result<CopulaHistogram> {
    let (q_nodes, cell_w) = mirrored_axis_nodes(bins, order);
    let mut density = vec![0.0; bins * bins];
    for bi in 0..bins {
        for bj in 0..bins {
            let mut acc = 0.0;
            for r in 0..order {
                for s in 0..order {
                    acc += cell_w[r] * cell_w[s] * model(q_nodes[bi * order + r], q_nodes[bj * order + s])?;
                }
            }
            density[bi * bins + bj] = acc;
        }
    }
    Ok(CopulaHistogram::from_density(
        bins,
        density,
        0,
        HistogramMeta {
            pair: None,
            pair_count: 0,
            conditioning: Conditioning::Unconditional,
            provenance: OrderProvenance::Preset,
        },
    ))
}

/// Outcome of the one-parameter least-squares fit of N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub n_hat: f64,
    pub c_used: f64,
    /// Sum of squared bin differences at `n_hat`.
    pub objective: f64,
    /// Every (N, objective) evaluation in order.
    pub trace: Vec<(f64, f64)>,
    /// Set when the coarse scan minimized at a bracket edge; `n_hat` is then
    /// the grid minimum.
    pub warning: Option<String>,
}

fn objective(
    empirical: &CopulaHistogram,
    c: f64,
    n: f64,
    spec: &QuadratureSpec,
    order: usize,
) -> Result<f64> {
    let model = KModel::new(KModelParams::new(c, n)?, *spec)?;
    let binned = binned_k_copula(&model, empirical.bins, order)?;
    Ok(empirical
        .density
        .iter()
        .zip(&binned.density)
        .map(|(e, m)| (e - m).powi(2))
        .sum())
}

/// Fit N by a coarse geometric scan over the bracket followed by
/// golden-section refinement around the scan minimum. Deterministic.
pub fn fit_n(
    empirical: &CopulaHistogram,
    c_bar: f64,
    bracket: (f64, f64),
    spec: &QuadratureSpec,
    order: usize,
) -> Result<FitResult> {
    let (n_lo, n_hi) = bracket;
    if !(n_lo > 1.0 && n_hi > n_lo) {
        return Err(Error::InvalidParameter(format!(
            "fit bracket must satisfy 1 < lo < hi, got ({n_lo}, {n_hi})"
        )));
    }
    let mut trace = Vec::new();
    let mut eval = |n: f64| -> Result<f64> {
        let obj = objective(empirical, c_bar, n, spec, order)?;
        trace.push((n, obj));
        Ok(obj)
    };

    let grid_points = 24usize;
    let ratio = (n_hi / n_lo).powf(1.0 / (grid_points - 1) as f64);
    let grid: Vec<f64> = (0..grid_points).map(|i| n_lo * ratio.powi(i as i32)).collect();
    let mut best = 0usize;
    let mut best_obj = f64::INFINITY;
    for (i, &n) in grid.iter().enumerate() {
        let obj = eval(n)?;
        if obj < best_obj {
            best_obj = obj;
            best = i;
        }
    }

    if best == 0 || best == grid_points - 1 {
        return Ok(FitResult {
            n_hat: grid[best],
            c_used: c_bar,
            objective: best_obj,
            trace,
            warning: Some("objective minimized at bracket edge; returning grid minimum".into()),
        });
    }

    // golden-section search inside the neighbouring grid points
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = grid[best - 1];
    let mut b = grid[best + 1];
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > 1e-3 * a.max(1.0) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2)?;
        }
    }
    let (n_hat, objective) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Ok(FitResult {
        n_hat,
        c_used: c_bar,
        objective,
        trace,
        warning: None,
    })
}

/// Bin-wise `empirical - model` signed grid.
pub fn model_error_grid(empirical: &CopulaHistogram, model: &CopulaHistogram) -> Result<Vec<f64>> {
    if empirical.bins != model.bins {
        return Err(Error::BinningMismatch(empirical.bins, model.bins));
    }
    Ok(empirical
        .density
        .iter()
        .zip(&model.density)
        .map(|(e, m)| e - m)
        .collect())
}

/// Which K-model parameter a gamma scan sweeps; the other is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScanAxis {
    /// Sweep the correlation c at fixed N.
    Correlation { n: f64 },
    /// Sweep N at fixed c.
    Fluctuation { c: f64 },
}

/// Corner asymmetry gamma of the binned K copula along a parameter sweep.
pub fn gamma_model_scan(
    axis: ScanAxis,
    sweep: &[f64],
    spec: &QuadratureSpec,
    bins: usize,
    order: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(sweep.len());
    for &v in sweep {
        let params = match axis {
            ScanAxis::Correlation { n } => KModelParams::new(v, n)?,
            ScanAxis::Fluctuation { c } => KModelParams::new(c, v)?,
        };
        let model = KModel::new(params, *spec)?;
        let binned = binned_k_copula(&model, bins, order)?;
        let (_, _, gamma) = corner_asymmetries(&binned)?;
        out.push((v, gamma));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_model_bins_to_one() {
        let h = bin_average_model(|_, _| Ok(1.0), 20, 4).unwrap();
        for &d in &h.density {
            assert_abs_diff_eq!(d, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn generic_binning_matches_specialized_gaussian() {
        // interior cells only: the generic tensor sampler converges slowly on
        // the edge cells where the copula density is steep, while the
        // specialized evaluator computes exact cell masses
        let generic =
            bin_average_model(|q1, q2| super::super::gaussian_copula_density(q1, q2, 0.10), 20, 8)
                .unwrap();
        let special = super::super::binned_gaussian_copula(0.10, 20, 8).unwrap();
        for i in 1..19 {
            for j in 1..19 {
                assert_abs_diff_eq!(generic.at(i, j), special.at(i, j), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn self_fit_recovers_n() {
        let spec = QuadratureSpec::default();
        let truth = KModel::new(KModelParams::new(0.10, 6.72).unwrap(), spec).unwrap();
        let target = binned_k_copula(&truth, 20, DEFAULT_CELL_ORDER).unwrap();
        let fit = fit_n(&target, 0.10, (2.0, 40.0), &spec, DEFAULT_CELL_ORDER).unwrap();
        assert!(fit.warning.is_none());
        assert!((fit.n_hat - 6.72).abs() < 0.05, "n_hat = {}", fit.n_hat);
        // objective at the generating N is as low as the trace minimum
        let trace_min = fit.trace.iter().map(|&(_, o)| o).fold(f64::INFINITY, f64::min);
        assert!(fit.objective <= trace_min + 1e-12);
    }

    #[test]
    fn self_fit_recovers_larger_n() {
        let spec = QuadratureSpec::default();
        let truth = KModel::new(KModelParams::new(0.10, 20.0).unwrap(), spec).unwrap();
        let target = binned_k_copula(&truth, 20, DEFAULT_CELL_ORDER).unwrap();
        let fit = fit_n(&target, 0.10, (2.0, 60.0), &spec, DEFAULT_CELL_ORDER).unwrap();
        assert!((fit.n_hat - 20.0).abs() < 0.5, "n_hat = {}", fit.n_hat);
    }

    #[test]
    fn fit_edge_minimum_warns() {
        let spec = QuadratureSpec::default();
        let truth = KModel::new(KModelParams::new(0.10, 50.0).unwrap(), spec).unwrap();
        let target = binned_k_copula(&truth, 20, 4).unwrap();
        let fit = fit_n(&target, 0.10, (2.0, 4.0), &spec, 4).unwrap();
        assert!(fit.warning.is_some());
        assert_abs_diff_eq!(fit.n_hat, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn error_grid_zero_for_identical() {
        let spec = QuadratureSpec::default();
        let m = KModel::new(KModelParams::new(0.10, 6.72).unwrap(), spec).unwrap();
        let h = binned_k_copula(&m, 20, 4).unwrap();
        let grid = model_error_grid(&h, &h).unwrap();
        assert!(grid.iter().all(|&d| d == 0.0));
        let g = super::super::binned_gaussian_copula(0.10, 20, 4).unwrap();
        let diff = model_error_grid(&h, &g).unwrap();
        let sum: f64 = diff.iter().sum::<f64>() / 400.0;
        assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn gamma_scan_zero_at_c_zero() {
        let spec = QuadratureSpec::default();
        let scan = gamma_model_scan(
            ScanAxis::Correlation { n: 6.72 },
            &[0.0],
            &spec,
            20,
            4,
        )
        .unwrap();
        assert_abs_diff_eq!(scan[0].1, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn gamma_scan_increases_with_c() {
        let spec = QuadratureSpec::default();
        let sweep = [0.0, 0.2, 0.5, 0.8];
        let scan =
            gamma_model_scan(ScanAxis::Correlation { n: 6.72 }, &sweep, &spec, 20, 4).unwrap();
        for w in scan.windows(2) {
            assert!(w[1].1 > w[0].1);
        }
    }
}
