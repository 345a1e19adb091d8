//! Gaussian copula density in closed form.

use super::kdist::normal_box_mass;
use super::std_normal_quantile;
use crate::empirical::{Conditioning, CopulaHistogram, HistogramMeta, OrderProvenance};
use crate::{Error, Result};

/// Closed-form Gaussian copula density at interior quantiles.
pub fn gaussian_copula_density(q1: f64, q2: f64, c: f64) -> Result<f64> {
    if !(c.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation must satisfy |c| < 1, got {c}"
        )));
    }
    for &q in [q1, q2].iter() {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::OutOfRange(q));
        }
    }
    let x1 = std_normal_quantile(q1);
    let x2 = std_normal_quantile(q2);
    Ok(density_from_normal_scores(x1, x2, c))
}

/// Gaussian copula density expressed in normal scores.
fn density_from_normal_scores(x1: f64, x2: f64, c: f64) -> f64 {
    let omc2 = 1.0 - c * c;
    (-(c * c * x1 * x1 + c * c * x2 * x2 - 2.0 * c * x1 * x2) / (2.0 * omc2)).exp() / omc2.sqrt()
}

/// Bin-averaged Gaussian copula on a `bins x bins` grid. Each cell value is
/// the exact probability mass of its quantile box (a smooth 1-D normal slab
/// integral with composite `order`-point Gauss-Legendre panels) scaled by
/// `bins^2`, so edge cells carry no corner-divergence error and the grid
/// integrates to one.
pub fn binned_gaussian_copula(c: f64, bins: usize, order: usize) -> Result<CopulaHistogram> {
    if !(c.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation must satisfy |c| < 1, got {c}"
        )));
    }
    // mirrored bin edges in normal scores with infinite outer edges
    let mut edges = vec![0.0; bins + 1];
    edges[0] = f64::NEG_INFINITY;
    edges[bins] = f64::INFINITY;
    for k in 1..=bins / 2 {
        edges[k] = std_normal_quantile(k as f64 / bins as f64);
        edges[bins - k] = -edges[k];
    }
    if bins % 2 == 0 {
        edges[bins / 2] = 0.0;
    }
    let rule = super::quad::gauss_legendre(order);
    let scale = (bins * bins) as f64;
    let mut density = vec![0.0; bins * bins];
    for bi in 0..bins {
        for bj in 0..bins {
            // fill point-reflected pairs of cells from one sum so the grid
            // is bit-exactly symmetric regardless of summation order
            let idx = bi * bins + bj;
            let mirrored = (bins - 1 - bi) * bins + (bins - 1 - bj);
            if idx > mirrored {
                continue;
            }
            let box_ = (edges[bi], edges[bi + 1], edges[bj], edges[bj + 1]);
            density[idx] = scale * normal_box_mass(c, 1.0, box_, &rule);
            density[mirrored] = density[idx];
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn c_zero_is_unit_copula() {
        for &(a, b) in &[(0.1, 0.9), (0.5, 0.5), (0.03, 0.6)] {
            assert_abs_diff_eq!(
                gaussian_copula_density(a, b, 0.0).unwrap(),
                1.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn centre_value_closed_form() {
        // at (1/2, 1/2) the scores vanish and the density is 1/sqrt(1-c^2)
        let d = gaussian_copula_density(0.5, 0.5, 0.10).unwrap();
        assert_abs_diff_eq!(d, 1.005038, epsilon = 1e-6);
        let c: f64 = 0.8;
        assert_abs_diff_eq!(
            gaussian_copula_density(0.5, 0.5, c).unwrap(),
            1.0 / (1.0 - c * c).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn exchange_and_reflection_symmetry() {
        for &c in &[-0.8, -0.1, 0.1, 0.8] {
            for &(a, b) in &[(0.2, 0.7), (0.05, 0.95), (0.33, 0.41)] {
                let f = gaussian_copula_density(a, b, c).unwrap();
                assert_abs_diff_eq!(
                    f,
                    gaussian_copula_density(b, a, c).unwrap(),
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    f,
                    gaussian_copula_density(1.0 - a, 1.0 - b, c).unwrap(),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn binned_normalization() {
        let h = binned_gaussian_copula(0.10, 20, 8).unwrap();
        assert_abs_diff_eq!(h.integral(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn binned_point_reflection_exact() {
        let h = binned_gaussian_copula(0.3, 20, 8).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(h.at(i, j), h.at(19 - i, 19 - j));
            }
        }
    }
}
