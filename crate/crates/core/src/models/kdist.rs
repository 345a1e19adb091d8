//! Bivariate K distribution and its copula density.
//!
//! The K distribution is a Gamma-weighted Gaussian mixture: conditional on a
//! mixing variable `z ~ Gamma(N/2, 1)` the pair is bivariate normal with
//! covariance `(2z/N) C`. All densities are Gamma expectations of integrands
//! of the form `z^{-p} e^{-q/z} g(z)`. These are evaluated by the trapezoid
//! rule in `t = ln z`, centered on the analytic peak of the transformed
//! integrand: the substitution gives doubly exponential decay on the right
//! and exponential decay on the left, so the rule converges geometrically
//! uniformly in `q` (a generalized Gauss-Laguerre rule stalls near 1e-5
//! relative error for small `q` because `e^{-q/z}` is non-analytic at the
//! endpoint of the Laguerre weight). Every value is verified by halving the
//! step until two successive levels agree within the target tolerance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf;
use statrs::function::gamma::ln_gamma;

use crate::empirical::{Conditioning, CopulaHistogram, HistogramMeta, OrderProvenance};
use crate::{Error, Result};

/// Correlation coefficient and fluctuation-strength parameter of the K model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KModelParams {
    pub c: f64,
    pub n: f64,
}

impl KModelParams {
    /// Requires |c| < 1 and N > 1; the marginal-variance integral diverges
    /// towards N = 1.
    pub fn new(c: f64, n: f64) -> Result<Self> {
        if !(c.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "correlation must satisfy |c| < 1, got {c}"
            )));
        }
        if !(n > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fluctuation parameter must satisfy N > 1, got {n}"
            )));
        }
        Ok(Self { c, n })
    }
}

/// Resolution budget and absolute tolerance for the mixing-variable
/// quadrature. `node_count` bounds the refinement depth: the step may be
/// halved until a level uses roughly `node_count` times the base resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub target_abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 64,
            target_abs_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 16 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least 16 nodes, got {}",
                self.node_count
            )));
        }
        if self.target_abs_tol > 1e-8 || self.target_abs_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerance must be in (0, 1e-8], got {}",
                self.target_abs_tol
            )));
        }
        Ok(())
    }
}

/// Evaluator for the bivariate K distribution at fixed (c, N).
#[derive(Debug, Clone)]
pub struct KModel {
    pub params: KModelParams,
    pub spec: QuadratureSpec,
    shape: f64,
    ln_gamma_shape: f64,
    max_halvings: u32,
}

impl KModel {
    pub fn new(params: KModelParams, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let shape = params.n / 2.0;
        Ok(Self {
            params,
            spec,
            shape,
            ln_gamma_shape: ln_gamma(shape),
            max_halvings: (spec.node_count as f64).log2().ceil() as u32,
        })
    }

    /// Trapezoid sum of `E[z^{-p} e^{-q/z} g(z)]` in `t = ln z` at step `h`,
    /// marching out from the peak until terms are negligible.
    fn trapezoid(&self, p: f64, q: f64, g: &impl Fn(f64) -> f64, t_star: f64, h: f64) -> f64 {
        let s = self.shape;
        let term = |t: f64| -> f64 {
            let z = t.exp();
            let ln_w = (s - p) * t - z - q / z - self.ln_gamma_shape;
            if ln_w < -746.0 {
                0.0
            } else {
                ln_w.exp() * g(z)
            }
        };
        let cutoff = 1e-18;
        let mut total = term(t_star);
        let mut peak = total.abs();
        for dir in [1.0f64, -1.0] {
            let mut t = t_star;
            for _ in 0..200_000 {
                t += dir * h;
                let v = term(t);
                total += v;
                peak = peak.max(v.abs());
                if v.abs() <= peak * cutoff {
                    break;
                }
            }
        }
        total * h
    }

    /// Gamma expectation `E[z^{-p} e^{-q/z} g(z)]` with step-halving
    /// verification; `tol` is the absolute tolerance on the expectation.
    fn expect_checked(&self, p: f64, q: f64, g: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
        let s = self.shape;
        // peak of the transformed weight: z* solves z^2 - (s-p) z - q = 0
        let z_star = 0.5 * ((s - p) + ((s - p) * (s - p) + 4.0 * q).sqrt());
        if !(z_star > 0.0) {
            // q = 0 with s <= p: the expectation diverges (density blow-up)
            return Err(Error::InvalidParameter(format!(
                "mixture expectation diverges for shape {s}, power {p}, q = {q}"
            )));
        }
        let curvature = z_star + q / z_star;
        let mut h = (1.0 / (3.0 * (curvature + 1.0).sqrt())).min(0.25);
        let t_star = z_star.ln();
        let mut prev = self.trapezoid(p, q, &g, t_star, h);
        let mut delta = f64::INFINITY;
        for _ in 0..self.max_halvings {
            h *= 0.5;
            let next = self.trapezoid(p, q, &g, t_star, h);
            delta = (next - prev).abs();
            prev = next;
            if delta <= tol {
                return Ok(next);
            }
        }
        Err(Error::QuadratureNotConverged { delta, tol })
    }

    /// Joint density of the bivariate K distribution.
    pub fn joint_pdf(&self, x1: f64, x2: f64) -> Result<f64> {
        let KModelParams { c, n } = self.params;
        let omc2 = 1.0 - c * c;
        let prefactor = n / (4.0 * PI * omc2.sqrt());
        // grouped so the value is bit-identical under argument exchange and
        // joint negation (both products below are symmetric)
        let q = n / 4.0 * ((x1 * x1 + x2 * x2) - 2.0 * c * (x1 * x2)) / omc2;
        let tol = self.spec.target_abs_tol / prefactor;
        Ok(prefactor * self.expect_checked(1.0, q, |_| 1.0, tol)?)
    }

    /// Marginal density; even in x, unit variance.
    pub fn marginal_pdf(&self, x: f64) -> Result<f64> {
        let n = self.params.n;
        let prefactor = (n / (4.0 * PI)).sqrt();
        let q = n * x * x / 4.0;
        let tol = self.spec.target_abs_tol / prefactor;
        Ok(prefactor * self.expect_checked(0.5, q, |_| 1.0, tol)?)
    }

    /// Marginal cumulative distribution; F(0) = 1/2 and F(-x) = 1 - F(x)
    /// hold exactly by construction.
    pub fn marginal_cdf(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.5);
        }
        if x < 0.0 {
            return Ok(1.0 - self.marginal_cdf(-x)?);
        }
        let n = self.params.n;
        // inner Gaussian has variance 2z/N, so the centered CDF term is
        // erf(x sqrt(N / 4z)) / 2
        let centered = self.expect_checked(
            0.0,
            0.0,
            move |z| 0.5 * erf::erf(x * (n / (4.0 * z)).sqrt()),
            self.spec.target_abs_tol,
        )?;
        Ok(0.5 + centered)
    }

    /// Inverse of the marginal CDF, odd around q = 1/2.
    pub fn marginal_quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::OutOfRange(q));
        }
        if q == 0.5 {
            return Ok(0.0);
        }
        if q < 0.5 {
            return Ok(-self.marginal_quantile(1.0 - q)?);
        }
        // bracket [0, hi] with geometric expansion
        let mut hi = 1.0;
        let mut iter = 0;
        while self.marginal_cdf(hi)? < q {
            hi *= 2.0;
            iter += 1;
            if iter > 60 {
                return Err(Error::BracketNotFound("marginal quantile bracket"));
            }
        }
        let mut lo = 0.0f64;
        let mut flo = 0.5 - q;
        let mut fhi = self.marginal_cdf(hi)? - q;
        // bisection to a tiny interval, then two secant polish steps
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if hi - lo < 1e-12 * mid.max(1.0) {
                break;
            }
            let fm = self.marginal_cdf(mid)? - q;
            if fm >= 0.0 {
                hi = mid;
                fhi = fm;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        let mut a = lo;
        let mut fa = flo;
        let mut b = hi;
        let mut fb = fhi;
        for _ in 0..2 {
            if fb == fa {
                break;
            }
            let s = b - fb * (b - a) / (fb - fa);
            a = b;
            fa = fb;
            b = s;
            fb = self.marginal_cdf(s)? - q;
        }
        Ok(b)
    }

    /// K copula density at interior quantiles; symmetric under argument
    /// exchange and under (q1, q2) -> (1 - q1, 1 - q2).
    pub fn copula_density(&self, q1: f64, q2: f64) -> Result<f64> {
        for &q in [q1, q2].iter() {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::OutOfRange(q));
            }
        }
        let x1 = self.marginal_quantile(q1)?;
        let x2 = self.marginal_quantile(q2)?;
        Ok(self.joint_pdf(x1, x2)? / (self.marginal_pdf(x1)? * self.marginal_pdf(x2)?))
    }

    /// Bin-edge positions on the x axis for a given binning: quantiles of
    /// k/bins with infinite outer edges, mirrored so `edge[bins-k] =
    /// -edge[k]` holds exactly.
    fn bin_edges(&self, bins: usize) -> Result<Vec<f64>> {
        let mut edges = vec![0.0; bins + 1];
        edges[0] = f64::NEG_INFINITY;
        edges[bins] = f64::INFINITY;
        for k in 1..=bins / 2 {
            edges[k] = self.marginal_quantile(k as f64 / bins as f64)?;
            edges[bins - k] = -edges[k];
        }
        if bins % 2 == 0 {
            edges[bins / 2] = 0.0;
        }
        Ok(edges)
    }
}

/// Probability that a bivariate normal with correlation `c` and per-margin
/// standard deviation `1 / inv_sigma` falls in the box
/// `[a1, b1] x [a2, b2]` (edges may be infinite). Reduced to a 1-D integral
/// of  phi(u) (Phi(...) - Phi(...))  evaluated by composite Gauss-Legendre
/// panels; smooth and bounded everywhere, including edge boxes.
pub(crate) fn normal_box_mass(
    c: f64,
    inv_sigma: f64,
    box_: (f64, f64, f64, f64),
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let (a1, b1, a2, b2) = box_;
    let cut = 8.5;
    let lo = (a1 * inv_sigma).max(-cut);
    let hi = (b1 * inv_sigma).min(cut);
    if lo >= hi {
        return 0.0;
    }
    let alpha = 1.0 / (1.0 - c * c).sqrt();
    let lo2 = a2 * inv_sigma;
    let hi2 = b2 * inv_sigma;
    let slab = |u: f64| -> f64 {
        let upper = if hi2.is_infinite() {
            1.0
        } else {
            super::std_normal_cdf(alpha * (hi2 - c * u))
        };
        let lower = if lo2.is_infinite() {
            0.0
        } else {
            super::std_normal_cdf(alpha * (lo2 - c * u))
        };
        super::std_normal_pdf(u) * (upper - lower)
    };
    // panel width scales with the rule order so that low-order rules keep
    // the same accuracy per panel, and shrinks as |c| grows because the
    // conditional slab factor then varies on the scale sqrt(1 - c^2)
    let max_width =
        (0.1875 * rule.0.len() as f64 * (1.0 - c * c).sqrt().max(0.25)).clamp(0.25, 3.0);
    let panels = ((hi - lo) / max_width).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let (nodes, weights) = rule;
    let mut mass = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (&n, &w) in nodes.iter().zip(weights) {
            mass += w * half * slab(mid + half * n);
        }
    }
    mass
}

/// Axis nodes for a `bins x order` tensor rule on (0, 1), mirrored so that
/// `q[m-1-k] = 1 - q[k]` holds exactly.
pub(crate) fn mirrored_axis_nodes(bins: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (u, w) = super::quad::gauss_legendre(order);
    let m = bins * order;
    let mut q = vec![0.0; m];
    for j in 0..bins {
        for r in 0..order {
            let k = j * order + r;
            if k < m / 2 + m % 2 {
                q[k] = (j as f64 + (u[r] + 1.0) / 2.0) / bins as f64;
            }
        }
    }
    for k in 0..m / 2 {
        q[m - 1 - k] = 1.0 - q[k];
    }
    // per-cell averaging weights (sum to 1 within each cell)
    let cell_w: Vec<f64> = w.iter().map(|&wi| wi / 2.0).collect();
    (q, cell_w)
}

/// Bin-averaged K copula density on a `bins x bins` grid. Each cell value is
/// the exact probability mass of its quantile box, scaled by `bins^2`: the
/// mass conditional on the mixing variable reduces to a smooth 1-D normal
/// slab integral (evaluated with composite `order`-point Gauss-Legendre
/// panels), which is then averaged over the mixing distribution. Working in
/// observation space avoids the corner divergence of the copula density, so
/// edge cells are as accurate as interior ones, and the grid integrates to
/// one to within the quadrature tolerance.
pub fn binned_k_copula(model: &KModel, bins: usize, order: usize) -> Result<CopulaHistogram> {
    let edges = model.bin_edges(bins)?;
    let rule = super::quad::gauss_legendre(order);
    let c = model.params.c;
    let n = model.params.n;
    let scale = (bins * bins) as f64;
    // floored at the noise level of the slab quadrature; the density-level
    // error stays below bins^2 * 1e-12
    let mass_tol = (model.spec.target_abs_tol / scale).max(1e-12);
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
            let mass = model.expect_checked(
                0.0,
                0.0,
                |z| normal_box_mass(c, (n / (2.0 * z)).sqrt(), box_, &rule),
                mass_tol,
            )?;
            density[idx] = scale * mass;
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
    use statrs::function::gamma::ln_gamma;

    fn model(c: f64, n: f64) -> KModel {
        KModel::new(KModelParams::new(c, n).unwrap(), QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(KModelParams::new(1.0, 6.0).is_err());
        assert!(KModelParams::new(0.1, 1.0).is_err());
        assert!(KModelParams::new(-0.5, 2.5).is_ok());
    }

    #[test]
    fn joint_pdf_origin_closed_form() {
        // at c = 0 the origin value is (N / 4 pi) Gamma(N/2 - 1) / Gamma(N/2)
        for &n in &[4.0, 6.72, 20.0] {
            let m = model(0.0, n);
            let exact = n / (4.0 * PI) * (ln_gamma(n / 2.0 - 1.0) - ln_gamma(n / 2.0)).exp();
            assert_abs_diff_eq!(m.joint_pdf(0.0, 0.0).unwrap(), exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn joint_pdf_symmetries() {
        let m = model(0.37, 6.72);
        for &(a, b) in &[(0.3, -1.2), (2.0, 0.5), (-0.7, -0.9), (4.0, 1.0)] {
            let f = m.joint_pdf(a, b).unwrap();
            assert_eq!(f, m.joint_pdf(b, a).unwrap());
            assert_eq!(f, m.joint_pdf(-a, -b).unwrap());
            assert!(f > 0.0);
        }
    }

    #[test]
    fn joint_pdf_normalization() {
        // 2-D tensor Gauss-Legendre oracle over [-20, 20]^2
        let m = model(0.10, 6.72);
        let (u, w) = super::super::quad::gauss_legendre(400);
        let half = 20.0;
        let mut total = 0.0;
        for (ui, wi) in u.iter().zip(&w) {
            for (uj, wj) in u.iter().zip(&w) {
                total += wi * wj * half * half * m.joint_pdf(half * ui, half * uj).unwrap();
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn marginal_pdf_closed_form_at_zero() {
        for &n in &[2.5, 6.72, 50.0] {
            let m = model(0.0, n);
            let exact =
                (n / (4.0 * PI)).sqrt() * (ln_gamma((n - 1.0) / 2.0) - ln_gamma(n / 2.0)).exp();
            assert_abs_diff_eq!(m.marginal_pdf(0.0).unwrap(), exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn marginal_pdf_even_and_normalized() {
        let m = model(0.0, 6.72);
        for &x in &[0.2, 1.0, 3.5] {
            assert_eq!(m.marginal_pdf(x).unwrap(), m.marginal_pdf(-x).unwrap());
        }
        // integrate 2 * int_0^30 by evenness so the weak |x|-kink of the
        // density sits at a panel endpoint rather than inside it
        let (u, w) = super::super::quad::gauss_legendre(400);
        let half = 15.0;
        let total: f64 = u
            .iter()
            .zip(&w)
            .map(|(&ui, &wi)| 2.0 * wi * half * m.marginal_pdf(half * (ui + 1.0)).unwrap())
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        let var: f64 = u
            .iter()
            .zip(&w)
            .map(|(&ui, &wi)| {
                let x = half * (ui + 1.0);
                2.0 * wi * half * x * x * m.marginal_pdf(x).unwrap()
            })
            .sum();
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn marginal_pdf_matches_bessel_form() {
        // independent route: the z-integral has the closed Bessel-K form
        //   f(x) = sqrt(N/4pi)/Gamma(N/2) * 2 * b^(nu/2) * K_nu(2 sqrt(b))
        // with nu = (N-1)/2, b = N x^2 / 4; K_nu evaluated by the cosh
        // integral representation with Simpson's rule.
        let bessel_k = |nu: f64, x: f64| -> f64 {
            // K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt
            let n_steps = 40_000;
            let t_max = 30.0_f64;
            let h = t_max / n_steps as f64;
            let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
            let mut s = f(0.0) + f(t_max);
            for i in 1..n_steps {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let n = 6.72;
        let m = model(0.0, n);
        for &x in &[0.5, 1.0, 2.0] {
            let nu = (n - 1.0) / 2.0;
            let b = n * x * x / 4.0;
            let exact = (n / (4.0 * PI)).sqrt() / ln_gamma(n / 2.0).exp()
                * 2.0
                * b.powf(nu / 2.0)
                * bessel_k(nu, 2.0 * b.sqrt());
            assert_abs_diff_eq!(m.marginal_pdf(x).unwrap(), exact, epsilon = 1e-8);
        }
    }

    #[test]
    fn marginal_cdf_properties() {
        let m = model(0.0, 6.72);
        assert_eq!(m.marginal_cdf(0.0).unwrap(), 0.5);
        assert!(m.marginal_cdf(-10.0).unwrap() < 1e-4);
        assert!(m.marginal_cdf(10.0).unwrap() > 1.0 - 1e-4);
        for &x in &[0.3, 1.7, 4.2, 9.0] {
            let s = m.marginal_cdf(x).unwrap() + m.marginal_cdf(-x).unwrap();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
        }
        // monotone
        let mut prev = 0.0;
        for i in -40..=40 {
            let f = m.marginal_cdf(i as f64 * 0.25).unwrap();
            assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn quantile_round_trip() {
        for &n in &[2.5, 6.72, 50.0] {
            let m = model(0.0, n);
            for i in 1..100 {
                let q = i as f64 / 100.0;
                let x = m.marginal_quantile(q).unwrap();
                assert_abs_diff_eq!(m.marginal_cdf(x).unwrap(), q, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn quantile_odd_and_zero_at_half() {
        let m = model(0.0, 6.72);
        assert_eq!(m.marginal_quantile(0.5).unwrap(), 0.0);
        for &q in &[0.01, 0.2, 0.45] {
            assert_eq!(
                m.marginal_quantile(q).unwrap(),
                -m.marginal_quantile(1.0 - q).unwrap()
            );
        }
    }

    #[test]
    fn quantile_large_n_approaches_gaussian() {
        let m = model(0.0, 4000.0);
        let x = m.marginal_quantile(0.975).unwrap();
        assert!((x - 1.959964).abs() < 0.05, "x = {x}");
    }

    #[test]
    fn copula_density_symmetries() {
        let m = model(0.10, 6.72);
        for &(a, b) in &[(0.2, 0.8), (0.05, 0.4), (0.65, 0.95)] {
            let f = m.copula_density(a, b).unwrap();
            assert_abs_diff_eq!(f, m.copula_density(b, a).unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(
                f,
                m.copula_density(1.0 - a, 1.0 - b).unwrap(),
                epsilon = 1e-9
            );
            assert!(f > 0.0);
        }
    }

    #[test]
    fn c_zero_reflection_balance() {
        // c = 0 couples the margins only through the shared mixing variable;
        // the density is reflection symmetric but not the unit copula
        let m = model(0.0, 6.72);
        let d1 = m.copula_density(0.2, 0.8).unwrap();
        let d2 = m.copula_density(0.2, 0.2).unwrap();
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-9);
        assert!((m.copula_density(0.05, 0.05).unwrap() - 1.0).abs() > 0.05);
    }

    #[test]
    fn binned_k_copula_uniform_margins() {
        let m = model(0.10, 6.72);
        let h = binned_k_copula(&m, 20, 8).unwrap();
        assert_abs_diff_eq!(h.integral(), 1.0, epsilon = 1e-6);
        for i in 0..20 {
            let row: f64 = (0..20).map(|j| h.at(i, j)).sum::<f64>() / 20.0;
            let col: f64 = (0..20).map(|j| h.at(j, i)).sum::<f64>() / 20.0;
            assert_abs_diff_eq!(row, 1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(col, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn binned_k_copula_refinement_stable() {
        let m = model(0.10, 6.72);
        let coarse = binned_k_copula(&m, 20, 8).unwrap();
        let fine = binned_k_copula(&m, 20, 16).unwrap();
        let max_diff = coarse
            .density
            .iter()
            .zip(&fine.density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-6, "max bin change {max_diff}");
    }

    #[test]
    fn binned_k_copula_exact_point_reflection() {
        let m = model(0.10, 6.72);
        let h = binned_k_copula(&m, 20, 8).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(h.at(i, j), h.at(19 - i, 19 - j));
            }
        }
    }

    #[test]
    fn c_zero_binned_gamma_is_zero() {
        let m = model(0.0, 6.72);
        let h = binned_k_copula(&m, 20, 8).unwrap();
        let (_, _, gamma) = crate::empirical::corner_asymmetries(&h).unwrap();
        assert_abs_diff_eq!(gamma, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec {
            node_count: 8,
            target_abs_tol: 1e-10
        }
        .validate()
        .is_err());
        assert!(QuadratureSpec {
            node_count: 64,
            target_abs_tol: 1e-6
        }
        .validate()
        .is_err());
        assert!(QuadratureSpec::default().validate().is_ok());
    }
}
