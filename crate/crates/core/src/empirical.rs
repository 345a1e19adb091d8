//! Empirical copula estimation for volume imbalances.
//!
//! Imbalance series are mapped to quantiles by their empirical ranks and the
//! joint density of quantile pairs is binned on a square grid (default 20x20,
//! cell 1/20 x 1/20). Tail asymmetries are read off the 0.2 x 0.2 corner
//! blocks. Conditioning on the local noise intensity excludes a fixed number
//! of extreme-noise minutes per stock before binning.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::market::StockSeries;
use crate::{Error, Result};

/// Default number of bins per axis.
pub const DEFAULT_BINS: usize = 20;

/// Quantile-transformed series for one stock, aligned on minute stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSeries {
    pub symbol: String,
    pub minutes: Vec<i64>,
    pub q: Vec<f64>,
}

impl QuantileSeries {
    /// Quantile-transform the imbalances of an already aligned series.
    pub fn from_series(s: &StockSeries) -> Result<Self> {
        Ok(Self {
            symbol: s.symbol.clone(),
            minutes: s.minutes(),
            q: quantile_transform(&s.imbalances())?,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Which noise-intensity condition a copula was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    Unconditional,
    /// Both stocks below their large-noise cut.
    Ss,
    /// Both stocks above their small-noise cut.
    Ll,
    /// First stock small, second large.
    Sl,
    /// First stock large, second small.
    Ls,
}

impl Conditioning {
    pub fn label(self) -> &'static str {
        match self {
            Conditioning::Unconditional => "unconditional",
            Conditioning::Ss => "ss",
            Conditioning::Ll => "ll",
            Conditioning::Sl => "sl",
            Conditioning::Ls => "ls",
        }
    }
}

impl std::str::FromStr for Conditioning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unconditional" => Ok(Conditioning::Unconditional),
            "ss" => Ok(Conditioning::Ss),
            "ll" => Ok(Conditioning::Ll),
            "sl" => Ok(Conditioning::Sl),
            "ls" => Ok(Conditioning::Ls),
            other => Err(Error::InvalidParameter(format!(
                "unknown conditioning mode {other:?}"
            ))),
        }
    }
}

/// Whether pair order is the preset listing or a shuffled one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderProvenance {
    Preset,
    Shuffled,
}

/// Provenance attached to a [`CopulaHistogram`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramMeta {
    /// Pair identifiers for a single-pair histogram, empty for averages.
    pub pair: Option<(String, String)>,
    /// Number of pairs contributing (1 for a single pair).
    pub pair_count: usize,
    pub conditioning: Conditioning,
    pub provenance: OrderProvenance,
}

impl HistogramMeta {
    fn single(a: &str, b: &str) -> Self {
        Self {
            pair: Some((a.to_string(), b.to_string())),
            pair_count: 1,
            conditioning: Conditioning::Unconditional,
            provenance: OrderProvenance::Preset,
        }
    }
}

/// Binned copula density: `bins x bins` grid of densities, row-major with the
/// first quantile increasing down the rows. The density integrates to one
/// over the unit square.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CopulaHistogram {
    pub bins: usize,
    pub density: Vec<f64>,
    pub n_samples: u64,
    pub meta: HistogramMeta,
}

impl CopulaHistogram {
    pub fn from_density(bins: usize, density: Vec<f64>, n_samples: u64, meta: HistogramMeta) -> Self {
        assert_eq!(density.len(), bins * bins);
        Self {
            bins,
            density,
            n_samples,
            meta,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.density[i * self.bins + j]
    }

    /// Integral of the density over the unit square.
    pub fn integral(&self) -> f64 {
        let cell = 1.0 / (self.bins * self.bins) as f64;
        self.density.iter().sum::<f64>() * cell
    }

    pub fn transpose(&self) -> Self {
        let b = self.bins;
        let mut density = vec![0.0; b * b];
        for i in 0..b {
            for j in 0..b {
                density[j * b + i] = self.density[i * b + j];
            }
        }
        let mut meta = self.meta.clone();
        if let Some((a, c)) = meta.pair.take() {
            meta.pair = Some((c, a));
        }
        Self {
            bins: b,
            density,
            n_samples: self.n_samples,
            meta,
        }
    }

    /// Probability mass of a rectangular bin block (inclusive index ranges).
    fn block_mass(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> f64 {
        let cell = 1.0 / (self.bins * self.bins) as f64;
        let mut sum = 0.0;
        for i in rows {
            for j in cols.clone() {
                sum += self.at(i, j);
            }
        }
        sum * cell
    }
}

/// Per-pair corner asymmetries and the skewness of their distributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymmetrySummary {
    /// Pair labels, parallel to the statistic lists.
    pub pairs: Vec<(String, String)>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// None when the list is degenerate (zero variance).
    pub skew_alpha: Option<f64>,
    pub skew_beta: Option<f64>,
    /// Unit-area histograms of alpha and beta over [-0.3, 0.3], bin width 0.01.
    pub hist_alpha: Vec<f64>,
    pub hist_beta: Vec<f64>,
}

/// Histogram range for the asymmetry distributions.
pub const ASYM_HIST_RANGE: (f64, f64) = (-0.3, 0.3);
/// Bin width for the asymmetry distributions.
pub const ASYM_HIST_WIDTH: f64 = 0.01;

/// Noise-intensity cuts for one stock: the `m` largest and `m` smallest
/// noise minutes, ties broken by earlier timestamp, are marked excluded.
#[derive(Debug, Clone)]
pub struct ConditioningThresholds {
    pub symbol: String,
    pub m: usize,
    /// Minimum noise among the excluded-large minutes (+inf for m = 0).
    pub sigma_max_cut: f64,
    /// Maximum noise among the excluded-small minutes (-inf for m = 0).
    pub sigma_min_cut: f64,
    /// Minute stamps of the m largest-noise observations.
    pub excluded_large: BTreeSet<i64>,
    /// Minute stamps of the m smallest-noise observations.
    pub excluded_small: BTreeSet<i64>,
}

/// Rank map to quantiles: `q(t) = #{tau : x(t) >= x(tau)}/T - 1/(2T)`.
/// Ties share the maximal rank; output stays strictly inside (0, 1).
pub fn quantile_transform(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let t = values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(values
        .iter()
        .map(|&v| {
            let rank = sorted.partition_point(|&s| s <= v) as f64;
            rank / t - 0.5 / t
        })
        .collect())
}

fn bin_index(q: f64, bins: usize) -> usize {
    ((q * bins as f64) as usize).min(bins - 1)
}

fn histogram_from_points(
    points: impl Iterator<Item = (f64, f64)>,
    bins: usize,
    meta: HistogramMeta,
) -> Result<CopulaHistogram> {
    let mut counts = vec![0u64; bins * bins];
    let mut n = 0u64;
    for (q1, q2) in points {
        counts[bin_index(q1, bins) * bins + bin_index(q2, bins)] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoRetainedPoints);
    }
    let norm = (bins * bins) as f64 / n as f64;
    let density = counts.iter().map(|&c| c as f64 * norm).collect();
    Ok(CopulaHistogram::from_density(bins, density, n, meta))
}

/// Binned copula density of one stock pair.
pub fn pair_copula(qa: &QuantileSeries, qb: &QuantileSeries, bins: usize) -> Result<CopulaHistogram> {
    if qa.len() != qb.len() {
        return Err(Error::LengthMismatch(qa.len(), qb.len()));
    }
    debug_assert_eq!(qa.minutes, qb.minutes, "series must share minute stamps");
    histogram_from_points(
        qa.q.iter().copied().zip(qb.q.iter().copied()),
        bins,
        HistogramMeta::single(&qa.symbol, &qb.symbol),
    )
}

/// Bin-wise arithmetic mean over pair histograms (non-symmetrized average).
pub fn average_copula(pairs: &[CopulaHistogram]) -> Result<CopulaHistogram> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let bins = pairs[0].bins;
    let mut density = vec![0.0; bins * bins];
    let mut n_samples = 0u64;
    for h in pairs {
        if h.bins != bins {
            return Err(Error::BinningMismatch(bins, h.bins));
        }
        for (d, &v) in density.iter_mut().zip(&h.density) {
            *d += v;
        }
        n_samples += h.n_samples;
    }
    let inv = 1.0 / pairs.len() as f64;
    for d in &mut density {
        *d *= inv;
    }
    let meta = HistogramMeta {
        pair: None,
        pair_count: pairs.len(),
        conditioning: pairs[0].meta.conditioning,
        provenance: pairs[0].meta.provenance,
    };
    Ok(CopulaHistogram::from_density(bins, density, n_samples, meta))
}

/// Average where each pair enters once in each stock order; the result equals
/// its own transpose by construction.
pub fn symmetrized_average_copula(pairs: &[CopulaHistogram]) -> Result<CopulaHistogram> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut both = Vec::with_capacity(pairs.len() * 2);
    for h in pairs {
        both.push(h.clone());
        both.push(h.transpose());
    }
    let mut avg = average_copula(&both)?;
    avg.meta.pair_count = pairs.len();
    avg.n_samples = pairs.iter().map(|h| h.n_samples).sum();
    Ok(avg)
}

/// Corner asymmetries of a binned copula.
///
/// `alpha` contrasts the two positive-dependence corners, `beta` the two
/// negative-dependence corners, `gamma` is diagonal minus anti-diagonal
/// corner mass. Corners are the 0.2 x 0.2 blocks, so the bin count must be a
/// multiple of five.
pub fn corner_asymmetries(h: &CopulaHistogram) -> Result<(f64, f64, f64)> {
    let b = h.bins;
    if b % 5 != 0 {
        return Err(Error::BinningMismatch(b, 5));
    }
    let k = b / 5; // corner block width in bins
    let low = 0..k;
    let high = b - k..b;
    let m_hh = h.block_mass(high.clone(), high.clone());
    let m_ll = h.block_mass(low.clone(), low.clone());
    let m_lh = h.block_mass(low.clone(), high.clone());
    let m_hl = h.block_mass(high, low);
    let alpha = m_hh - m_ll;
    let beta = m_lh - m_hl;
    let gamma = (m_hh + m_ll) - (m_lh + m_hl);
    Ok((alpha, beta, gamma))
}

/// Population skewness, third standardized central moment.
pub fn skewness(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            required: 1,
        });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::DegenerateSeries("zero variance"));
    }
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    Ok(m3 / var.powf(1.5))
}

fn asym_histogram(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = ASYM_HIST_RANGE;
    let nbins = ((hi - lo) / ASYM_HIST_WIDTH).round() as usize;
    let mut counts = vec![0u64; nbins];
    for &v in values {
        // clamp out-of-range values into the edge bins so all mass is kept
        let idx = (((v - lo) / ASYM_HIST_WIDTH) as isize).clamp(0, nbins as isize - 1) as usize;
        counts[idx] += 1;
    }
    let norm = 1.0 / (values.len() as f64 * ASYM_HIST_WIDTH);
    counts.iter().map(|&c| c as f64 * norm).collect()
}

/// Per-pair corner asymmetries, their unit-area histograms, and the skewness
/// of the alpha and beta lists. Degenerate (zero-variance) lists yield `None`
/// for the corresponding skewness.
pub fn asymmetry_distributions(pairs: &[CopulaHistogram]) -> Result<AsymmetrySummary> {
    if pairs.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let mut labels = Vec::with_capacity(pairs.len());
    let mut alpha = Vec::with_capacity(pairs.len());
    let mut beta = Vec::with_capacity(pairs.len());
    let mut gamma = Vec::with_capacity(pairs.len());
    for h in pairs {
        let (a, b, g) = corner_asymmetries(h)?;
        labels.push(h.meta.pair.clone().unwrap_or_default());
        alpha.push(a);
        beta.push(b);
        gamma.push(g);
    }
    let hist_alpha = asym_histogram(&alpha);
    let hist_beta = asym_histogram(&beta);
    Ok(AsymmetrySummary {
        pairs: labels,
        skew_alpha: skewness(&alpha).ok(),
        skew_beta: skewness(&beta).ok(),
        alpha,
        beta,
        gamma,
        hist_alpha,
        hist_beta,
    })
}

/// Mark the `m` largest- and `m` smallest-noise minutes of a stock as
/// excluded. Ties are broken by excluding earlier minutes first, so exactly
/// `m` minutes land in each set.
pub fn conditioning_thresholds(s: &StockSeries, m: usize) -> Result<ConditioningThresholds> {
    if s.observations.len() <= 2 * m {
        return Err(Error::SeriesTooShort {
            len: s.observations.len(),
            required: 2 * m,
        });
    }
    let mut order: Vec<usize> = (0..s.observations.len()).collect();
    // descending noise, earlier minutes first among ties
    order.sort_by(|&i, &j| {
        let (a, b) = (&s.observations[i], &s.observations[j]);
        b.noise_abs
            .partial_cmp(&a.noise_abs)
            .unwrap()
            .then(a.minute.cmp(&b.minute))
    });
    let excluded_large: BTreeSet<i64> = order[..m].iter().map(|&i| s.observations[i].minute).collect();
    let sigma_max_cut = order[..m]
        .iter()
        .map(|&i| s.observations[i].noise_abs)
        .fold(f64::INFINITY, f64::min);

    // ascending noise, earlier minutes first among ties
    order.sort_by(|&i, &j| {
        let (a, b) = (&s.observations[i], &s.observations[j]);
        a.noise_abs
            .partial_cmp(&b.noise_abs)
            .unwrap()
            .then(a.minute.cmp(&b.minute))
    });
    let excluded_small: BTreeSet<i64> = order[..m].iter().map(|&i| s.observations[i].minute).collect();
    let sigma_min_cut = order[..m]
        .iter()
        .map(|&i| s.observations[i].noise_abs)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(ConditioningThresholds {
        symbol: s.symbol.clone(),
        m,
        sigma_max_cut,
        sigma_min_cut,
        excluded_large,
        excluded_small,
    })
}

/// Copula restricted by the noise condition of `mode`. Quantiles are kept as
/// computed on the full series; only the retained points are re-binned and
/// renormalized.
pub fn conditional_copula(
    qa: &QuantileSeries,
    qb: &QuantileSeries,
    thr_a: &ConditioningThresholds,
    thr_b: &ConditioningThresholds,
    mode: Conditioning,
    bins: usize,
) -> Result<CopulaHistogram> {
    if qa.len() != qb.len() {
        return Err(Error::LengthMismatch(qa.len(), qb.len()));
    }
    let (ex_a, ex_b): (&BTreeSet<i64>, &BTreeSet<i64>) = match mode {
        Conditioning::Ss => (&thr_a.excluded_large, &thr_b.excluded_large),
        Conditioning::Ll => (&thr_a.excluded_small, &thr_b.excluded_small),
        Conditioning::Sl => (&thr_a.excluded_large, &thr_b.excluded_small),
        Conditioning::Ls => (&thr_a.excluded_small, &thr_b.excluded_large),
        Conditioning::Unconditional => {
            return Err(Error::InvalidParameter(
                "conditional copula requires one of ss/ll/sl/ls".into(),
            ))
        }
    };
    let points = qa
        .minutes
        .iter()
        .zip(qa.q.iter().zip(qb.q.iter()))
        .filter(|(t, _)| !ex_a.contains(t) && !ex_b.contains(t))
        .map(|(_, (&q1, &q2))| (q1, q2));
    let mut meta = HistogramMeta::single(&qa.symbol, &qb.symbol);
    meta.conditioning = mode;
    histogram_from_points(points, bins, meta)
}

/// Bin-wise `unconditional - conditional` signed grid.
pub fn copula_difference(
    unconditional: &CopulaHistogram,
    conditional: &CopulaHistogram,
) -> Result<Vec<f64>> {
    if unconditional.bins != conditional.bins {
        return Err(Error::BinningMismatch(unconditional.bins, conditional.bins));
    }
    Ok(unconditional
        .density
        .iter()
        .zip(&conditional.density)
        .map(|(u, c)| u - c)
        .collect())
}

/// Effective sign-agreement weight built from per-interval buy-surplus
/// probabilities; bounded in [-1, 1].
pub fn effective_weight(p_plus_a: f64, p_plus_b: f64) -> Result<f64> {
    for &p in [p_plus_a, p_plus_b].iter() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(p));
        }
    }
    Ok(4.0 * p_plus_a * p_plus_b - 2.0 * p_plus_a - 2.0 * p_plus_b + 1.0)
}

/// Pearson correlation of two series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            required: 1,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateSeries("zero variance"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Pearson correlation between the local noise intensity and the absolute
/// volume imbalance of one stock.
pub fn pb_noise_correlation(s: &StockSeries) -> Result<f64> {
    if s.observations.len() < 30 {
        return Err(Error::SeriesTooShort {
            len: s.observations.len(),
            required: 29,
        });
    }
    let sigma = s.noise_abs();
    let abs_nu: Vec<f64> = s.observations.iter().map(|o| o.imbalance.abs()).collect();
    pearson(&sigma, &abs_nu)
}

/// Bimodality criterion parameters for [`bimodality_profile`].
#[derive(Debug, Clone, Copy)]
pub struct BimodalityCriterion {
    /// Gaussian kernel bandwidth in normalized-imbalance units.
    pub bandwidth: f64,
    /// Required central dip: density at zero must sit below the lower peak by
    /// at least this fraction of its height.
    pub dip_fraction: f64,
}

impl Default for BimodalityCriterion {
    fn default() -> Self {
        Self {
            bandwidth: 0.3,
            dip_fraction: 0.05,
        }
    }
}

/// Histogram and bimodality flag of normalized imbalances within one noise band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandProfile {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub n_points: usize,
    /// Unit-area histogram of normalized imbalances over [-8, 8], width 0.2.
    pub histogram: Vec<f64>,
    /// None when the band is empty.
    pub bimodal: Option<bool>,
}

/// Range and bin width of the per-band imbalance histograms.
pub const BAND_HIST_RANGE: (f64, f64) = (-8.0, 8.0);
pub const BAND_HIST_WIDTH: f64 = 0.2;

fn kde_bimodal(values: &[f64], crit: &BimodalityCriterion) -> bool {
    let (lo, hi) = BAND_HIST_RANGE;
    let step = 0.05;
    let n_grid = ((hi - lo) / step).round() as usize + 1;
    let norm = 1.0 / (values.len() as f64 * crit.bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let dens = |x: f64| {
        values
            .iter()
            .map(|&v| (-0.5 * ((x - v) / crit.bandwidth).powi(2)).exp())
            .sum::<f64>()
            * norm
    };
    let grid: Vec<f64> = (0..n_grid).map(|i| lo + i as f64 * step).collect();
    let d: Vec<f64> = grid.iter().map(|&x| dens(x)).collect();
    // dominant mode on each side of zero; heavy-tailed samples can carry
    // substructure within each mode, so only the per-side maxima matter
    let mut best_neg = f64::NEG_INFINITY;
    let mut best_pos = f64::NEG_INFINITY;
    for i in 1..n_grid - 1 {
        if d[i] > d[i - 1] && d[i] > d[i + 1] {
            if grid[i] < 0.0 {
                best_neg = best_neg.max(d[i]);
            } else if grid[i] > 0.0 {
                best_pos = best_pos.max(d[i]);
            }
        }
    }
    if !(best_neg.is_finite() && best_pos.is_finite()) {
        return false;
    }
    // a real dip at the centre relative to the lower mode
    dens(0.0) <= (1.0 - crit.dip_fraction) * best_neg.min(best_pos)
}

/// Distribution of normalized imbalances conditioned on normalized-noise
/// bands, with a kernel-density bimodality flag per band.
pub fn bimodality_profile(
    s: &StockSeries,
    sigma_bands: &[(f64, f64)],
    crit: &BimodalityCriterion,
) -> Result<Vec<BandProfile>> {
    let nu = crate::market::normalize_series(&s.imbalances())?;
    let sigma = crate::market::normalize_series(&s.noise_abs())?;
    let (lo, hi) = BAND_HIST_RANGE;
    let nbins = ((hi - lo) / BAND_HIST_WIDTH).round() as usize;
    let mut out = Vec::with_capacity(sigma_bands.len());
    for &(band_lo, band_hi) in sigma_bands {
        let values: Vec<f64> = nu
            .iter()
            .zip(&sigma)
            .filter(|(_, &sg)| sg >= band_lo && sg < band_hi)
            .map(|(&v, _)| v)
            .collect();
        let mut histogram = vec![0.0; nbins];
        let bimodal = if values.is_empty() {
            None
        } else {
            for &v in &values {
                let idx =
                    (((v - lo) / BAND_HIST_WIDTH) as isize).clamp(0, nbins as isize - 1) as usize;
                histogram[idx] += 1.0;
            }
            let norm = 1.0 / (values.len() as f64 * BAND_HIST_WIDTH);
            for h in &mut histogram {
                *h *= norm;
            }
            Some(kde_bimodal(&values, crit))
        };
        out.push(BandProfile {
            sigma_lo: band_lo,
            sigma_hi: band_hi,
            n_points: values.len(),
            histogram,
            bimodal,
        });
    }
    Ok(out)
}

/// Result of the stock-order robustness check: the averaged copula and
/// asymmetry summary under the preset order and under a seeded random
/// shuffle of which stock in each pair comes first.
#[derive(Debug, Clone)]
pub struct ShuffleReport {
    pub preset_copula: CopulaHistogram,
    pub preset_summary: AsymmetrySummary,
    pub shuffled_copula: CopulaHistogram,
    pub shuffled_summary: AsymmetrySummary,
    /// Per-pair flag: true if the pair was transposed.
    pub permutation: Vec<bool>,
    pub max_bin_deviation: f64,
    pub skew_alpha_delta: Option<f64>,
    pub skew_beta_delta: Option<f64>,
}

/// Recompute the averaged copula and asymmetry distributions after randomly
/// flipping the stock order within each pair. Deterministic per seed.
pub fn shuffle_robustness(pairs: &[CopulaHistogram], seed: u64) -> Result<ShuffleReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let preset_copula = average_copula(pairs)?;
    let preset_summary = asymmetry_distributions(pairs)?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let permutation: Vec<bool> = (0..pairs.len()).map(|_| rng.random::<bool>()).collect();
    let shuffled: Vec<CopulaHistogram> = pairs
        .iter()
        .zip(&permutation)
        .map(|(h, &flip)| {
            let mut h = if flip { h.transpose() } else { h.clone() };
            h.meta.provenance = OrderProvenance::Shuffled;
            h
        })
        .collect();
    let mut shuffled_copula = average_copula(&shuffled)?;
    shuffled_copula.meta.provenance = OrderProvenance::Shuffled;
    let shuffled_summary = asymmetry_distributions(&shuffled)?;

    let max_bin_deviation = preset_copula
        .density
        .iter()
        .zip(&shuffled_copula.density)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let delta = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(x), Some(y)) => Some(y - x),
        _ => None,
    };
    Ok(ShuffleReport {
        max_bin_deviation,
        skew_alpha_delta: delta(preset_summary.skew_alpha, shuffled_summary.skew_alpha),
        skew_beta_delta: delta(preset_summary.skew_beta, shuffled_summary.skew_beta),
        preset_copula,
        preset_summary,
        shuffled_copula,
        shuffled_summary,
        permutation,
    })
}
