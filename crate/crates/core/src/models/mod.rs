//! Parametric copula models: the bivariate K copula (Gamma-weighted Gaussian
//! mixture) and the Gaussian copula, plus bin averaging, fitting and scans.

mod fit;
mod gauss;
mod kdist;
pub mod quad;

pub use fit::{
    bin_average_model, fit_n, gamma_model_scan, model_error_grid, FitResult, ScanAxis,
    DEFAULT_CELL_ORDER,
};
pub use gauss::{binned_gaussian_copula, gaussian_copula_density};
pub use kdist::{binned_k_copula, KModel, KModelParams, QuadratureSpec};

use statrs::function::erf;

/// Standard normal density.
pub(crate) fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF through erfc, accurate in both tails.
pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile, exactly antisymmetric around 1/2.
///
/// The initial inverse-erf estimate is polished with two Newton steps on the
/// erfc-based CDF, which keeps the tails accurate.
pub fn std_normal_quantile(q: f64) -> f64 {
    assert!(q > 0.0 && q < 1.0, "quantile defined on (0,1), got {q}");
    if q == 0.5 {
        return 0.0;
    }
    // u = 2q - 1 is exactly antisymmetric under q -> 1 - q (subtraction is
    // exactly rounded), and the magnitude below depends on |u| only
    let u = 2.0 * q - 1.0;
    let tail = 0.5 * (1.0 - u.abs());
    let mut x = std::f64::consts::SQRT_2 * erf::erf_inv(u.abs());
    for _ in 0..2 {
        let f = std_normal_cdf(-x) - tail;
        let d = std_normal_pdf(x);
        if d > 0.0 {
            x += f / d;
        }
    }
    if u < 0.0 {
        -x
    } else {
        x
    }
}
