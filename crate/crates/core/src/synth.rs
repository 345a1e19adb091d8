//! Seeded generators for ground-truth data.
//!
//! K-distributed pairs are drawn by the exact Gamma mixture: `z ~
//! Gamma(N/2, 1)`, then a bivariate normal with covariance `(2z/N) C`.
//! Tick streams carry configurable volume laws (half-normal vs. Pareto) and
//! a two-state Markov sign chain; prices move one tick in the sign
//! direction, so the tick rule recovers the generated signs exactly.

use chrono::NaiveDate;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Normal, Pareto};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::market::{Session, SignedTrade, TradeRecord};
use crate::models::KModelParams;
use crate::{Error, Result};

/// Configuration for [`sample_k_pairs`].
#[derive(Debug, Clone, Copy)]
pub struct KSampleConfig {
    pub params: KModelParams,
    pub length: usize,
    pub seed: u64,
}

/// Derive a per-stream RNG from a master seed by hashing; independent
/// streams stay independent and reproducible under parallel generation.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(stream.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed)
}

/// Draw `length` pairs from the bivariate K distribution.
pub fn sample_k_pairs(cfg: &KSampleConfig) -> (Vec<f64>, Vec<f64>) {
    let KModelParams { c, n } = cfg.params;
    let mut rng = stream_rng(cfg.seed, 0);
    let gamma = Gamma::new(n / 2.0, 1.0).expect("valid shape");
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut x1 = Vec::with_capacity(cfg.length);
    let mut x2 = Vec::with_capacity(cfg.length);
    for _ in 0..cfg.length {
        let z = gamma.sample(&mut rng);
        let s = (2.0 * z / n).sqrt();
        let g1: f64 = normal.sample(&mut rng);
        let g2: f64 = normal.sample(&mut rng);
        x1.push(s * g1);
        x2.push(s * (c * g1 + (1.0 - c * c).sqrt() * g2));
    }
    (x1, x2)
}

/// Draw an equicorrelated K ensemble: every one of the `l` series is K
/// distributed and every pair has correlation `c` (requires 0 <= c < 1).
/// The mixing variable is shared across the ensemble at each time step.
pub fn sample_k_ensemble(
    l: usize,
    params: KModelParams,
    length: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let KModelParams { c, n } = params;
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "equicorrelated ensemble needs 0 <= c < 1, got {c}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let gamma = Gamma::new(n / 2.0, 1.0).expect("valid shape");
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut series = vec![Vec::with_capacity(length); l];
    let sqrt_c = c.sqrt();
    let sqrt_1mc = (1.0 - c).sqrt();
    for _ in 0..length {
        let z = gamma.sample(&mut rng);
        let s = (2.0 * z / n).sqrt();
        let common: f64 = normal.sample(&mut rng);
        for col in series.iter_mut() {
            let own: f64 = normal.sample(&mut rng);
            col.push(s * (sqrt_c * common + sqrt_1mc * own));
        }
    }
    Ok(series)
}

/// Volume distribution of a synthetic tick stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VolumeLaw {
    /// Half-normal magnitude with the given scale, rounded up to >= 1 share.
    Gaussian { scale: f64 },
    /// Pareto with minimum `scale` and the given tail exponent.
    PowerLaw { tail_exponent: f64, scale: f64 },
}

/// Configuration for [`sample_trade_stream`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TradeStreamConfig {
    pub volume_law: VolumeLaw,
    /// Probability that a trade repeats the previous sign.
    pub sign_persistence: f64,
    pub trades_per_minute: usize,
    /// Total minutes, laid out across daily sessions when rendered to ticks.
    pub minutes: usize,
    pub seed: u64,
}

impl TradeStreamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.sign_persistence) {
            return Err(Error::InvalidParameter(format!(
                "sign persistence must be in [0, 1), got {}",
                self.sign_persistence
            )));
        }
        if self.trades_per_minute < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 trades per minute for a nonzero noise intensity".into(),
            ));
        }
        if let VolumeLaw::PowerLaw { tail_exponent, .. } = self.volume_law {
            if tail_exponent <= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "power-law tail exponent must exceed 1, got {tail_exponent}"
                )));
            }
        }
        if self.minutes == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(())
    }
}

fn sample_volume(law: &VolumeLaw, rng: &mut ChaCha12Rng) -> u64 {
    match law {
        VolumeLaw::Gaussian { scale } => {
            let normal = Normal::new(0.0, *scale).unwrap();
            let v: f64 = normal.sample(rng);
            (v.abs().ceil() as u64).max(1)
        }
        VolumeLaw::PowerLaw {
            tail_exponent,
            scale,
        } => {
            let pareto = Pareto::new(*scale, *tail_exponent).unwrap();
            let v: f64 = pareto.sample(rng);
            (v.round() as u64).max(1)
        }
    }
}

/// Per-minute signed volumes: the raw oracle for interval aggregation.
pub fn sample_trade_stream(cfg: &TradeStreamConfig, stream: u64) -> Result<Vec<Vec<(u64, i8)>>> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, stream);
    let mut sign: i8 = 1;
    let mut first = true;
    let mut minutes = Vec::with_capacity(cfg.minutes);
    for _ in 0..cfg.minutes {
        let mut trades = Vec::with_capacity(cfg.trades_per_minute);
        for _ in 0..cfg.trades_per_minute {
            if first {
                first = false; // seed sign: the tick rule classifies it as +1
            } else if rng.random::<f64>() >= cfg.sign_persistence {
                sign = if rng.random::<bool>() { 1 } else { -1 };
            }
            trades.push((sample_volume(&cfg.volume_law, &mut rng), sign));
        }
        minutes.push(trades);
    }
    Ok(minutes)
}

/// Render a per-minute stream to tick records laid out across daily
/// sessions, with prices stepping one cent in the sign direction so the
/// tick rule reproduces the generated signs.
pub fn stream_to_trades(
    stream: &[Vec<(u64, i8)>],
    session: &Session,
    start_date: NaiveDate,
) -> Vec<TradeRecord> {
    let (win_start, win_end) = session.window();
    let minutes_per_day = ((win_end - win_start) / 60.0).floor() as usize;
    let mut out = Vec::new();
    let mut price = 1000.0f64;
    let mut date = start_date;
    for (i, minute) in stream.iter().enumerate() {
        let day_minute = i % minutes_per_day;
        if i > 0 && day_minute == 0 {
            date = date.succ_opt().expect("date in range");
        }
        let base = win_start + day_minute as f64 * 60.0;
        let dt = 60.0 / (minute.len() as f64 + 1.0);
        for (k, &(volume, sign)) in minute.iter().enumerate() {
            price += 0.01 * sign as f64;
            out.push(TradeRecord {
                day: date,
                time: base + dt * (k as f64 + 1.0),
                price: (price * 100.0).round() / 100.0,
                volume,
            });
        }
    }
    out
}

/// Signed view of a generated stream, bypassing the price encoding.
pub fn stream_to_signed(
    stream: &[Vec<(u64, i8)>],
    session: &Session,
    start_date: NaiveDate,
) -> Vec<SignedTrade> {
    let trades = stream_to_trades(stream, session, start_date);
    let mut signs = stream.iter().flatten().map(|&(_, s)| s);
    trades
        .into_iter()
        .map(|record| SignedTrade {
            sign: signs.next().expect("same length"),
            record,
        })
        .collect()
}

/// Paired series with a per-minute noise proxy: most minutes are drawn with
/// `base_c`, a marked fraction with `high_c`. The proxy is strictly larger
/// on the marked minutes, so a top-m exclusion with m = (count of marked
/// minutes) removes exactly those.
#[derive(Debug, Clone)]
pub struct TwoRegimeSample {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub sigma_a: Vec<f64>,
    pub sigma_b: Vec<f64>,
    pub high: Vec<bool>,
}

pub fn sample_two_regime_pairs(
    base_c: f64,
    high_c: f64,
    high_fraction: f64,
    n: f64,
    length: usize,
    seed: u64,
) -> Result<TwoRegimeSample> {
    for &c in [base_c, high_c].iter() {
        if !(c.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "correlation must satisfy |c| < 1, got {c}"
            )));
        }
    }
    if !(0.0..=1.0).contains(&high_fraction) {
        return Err(Error::InvalidParameter(format!(
            "high fraction must be in [0, 1], got {high_fraction}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let gamma = Gamma::new(n / 2.0, 1.0).expect("valid shape");
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut out = TwoRegimeSample {
        x1: Vec::with_capacity(length),
        x2: Vec::with_capacity(length),
        sigma_a: Vec::with_capacity(length),
        sigma_b: Vec::with_capacity(length),
        high: Vec::with_capacity(length),
    };
    for _ in 0..length {
        let high = rng.random::<f64>() < high_fraction;
        let c = if high { high_c } else { base_c };
        let z = gamma.sample(&mut rng);
        let s = (2.0 * z / n).sqrt();
        let g1: f64 = normal.sample(&mut rng);
        let g2: f64 = normal.sample(&mut rng);
        out.x1.push(s * g1);
        out.x2.push(s * (c * g1 + (1.0 - c * c).sqrt() * g2));
        let base = if high { 10.0 } else { 1.0 };
        out.sigma_a.push(base + rng.random::<f64>());
        out.sigma_b.push(base + rng.random::<f64>());
        out.high.push(high);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::sign_stream;
    use approx::assert_abs_diff_eq;

    fn mean(x: &[f64]) -> f64 {
        x.iter().sum::<f64>() / x.len() as f64
    }

    fn var(x: &[f64]) -> f64 {
        let m = mean(x);
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn k_pairs_moments() {
        let cfg = KSampleConfig {
            params: KModelParams::new(0.10, 6.72).unwrap(),
            length: 1_000_000,
            seed: 7,
        };
        let (x1, x2) = sample_k_pairs(&cfg);
        assert!(mean(&x1).abs() < 0.01);
        assert_abs_diff_eq!(var(&x1), 1.0, epsilon = 0.01);
        assert_abs_diff_eq!(var(&x2), 1.0, epsilon = 0.01);
        let r = crate::empirical::pearson(&x1, &x2).unwrap();
        assert_abs_diff_eq!(r, 0.10, epsilon = 0.003);
    }

    #[test]
    fn k_pairs_excess_kurtosis_positive() {
        let cfg = KSampleConfig {
            params: KModelParams::new(0.10, 6.72).unwrap(),
            length: 500_000,
            seed: 8,
        };
        let (x1, _) = sample_k_pairs(&cfg);
        let v = var(&x1);
        let m4 = x1.iter().map(|x| x.powi(4)).sum::<f64>() / x1.len() as f64;
        let excess = m4 / (v * v) - 3.0;
        // quadrature oracle: E[x^4] = 3 E[(2z/N)^2] = 3 (N+2)/N, so the
        // excess kurtosis is 6/N = 0.893 for N = 6.72
        assert!(excess > 0.5, "excess kurtosis {excess}");
        assert_abs_diff_eq!(excess, 6.0 / 6.72, epsilon = 0.15);
    }

    #[test]
    fn k_pairs_deterministic() {
        let cfg = KSampleConfig {
            params: KModelParams::new(0.3, 5.0).unwrap(),
            length: 1000,
            seed: 99,
        };
        assert_eq!(sample_k_pairs(&cfg), sample_k_pairs(&cfg));
    }

    #[test]
    fn k_marginal_ks_statistic() {
        use crate::models::{KModel, QuadratureSpec};
        let cfg = KSampleConfig {
            params: KModelParams::new(0.0, 6.72).unwrap(),
            length: 100_000,
            seed: 21,
        };
        let (mut x1, _) = sample_k_pairs(&cfg);
        x1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let model = KModel::new(cfg.params, QuadratureSpec::default()).unwrap();
        let n = x1.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in x1.iter().enumerate() {
            let f = model.marginal_cdf(x).unwrap();
            let lo = i as f64 / n;
            let hi = (i as f64 + 1.0) / n;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        // 1% significance level
        assert!(ks < 1.63 / n.sqrt(), "KS = {ks}");
    }

    #[test]
    fn ensemble_pairwise_correlation() {
        let params = KModelParams::new(0.10, 6.72).unwrap();
        let series = sample_k_ensemble(6, params, 200_000, 3).unwrap();
        for i in 0..series.len() {
            assert_abs_diff_eq!(var(&series[i]), 1.0, epsilon = 0.03);
            for j in i + 1..series.len() {
                let r = crate::empirical::pearson(&series[i], &series[j]).unwrap();
                assert_abs_diff_eq!(r, 0.10, epsilon = 0.02);
            }
        }
    }

    #[test]
    fn trade_stream_fair_signs_without_persistence() {
        let cfg = TradeStreamConfig {
            volume_law: VolumeLaw::Gaussian { scale: 100.0 },
            sign_persistence: 0.0,
            trades_per_minute: 20,
            minutes: 2000,
            seed: 5,
        };
        let stream = sample_trade_stream(&cfg, 0).unwrap();
        let total: i64 = stream
            .iter()
            .flatten()
            .map(|&(_, s)| s as i64)
            .sum();
        let n = (cfg.minutes * cfg.trades_per_minute) as f64;
        assert!((total as f64 / n).abs() < 3.0 / n.sqrt() + 1.0 / n);
    }

    #[test]
    fn trade_stream_sign_persistence_sticks() {
        let cfg = TradeStreamConfig {
            volume_law: VolumeLaw::Gaussian { scale: 100.0 },
            sign_persistence: 0.9,
            trades_per_minute: 10,
            minutes: 3000,
            seed: 6,
        };
        let stream = sample_trade_stream(&cfg, 0).unwrap();
        let signs: Vec<i8> = stream.iter().flatten().map(|&(_, s)| s).collect();
        let repeats = signs.windows(2).filter(|w| w[0] == w[1]).count() as f64;
        let rate = repeats / (signs.len() - 1) as f64;
        // persistence p keeps the sign with probability p + (1-p)/2
        assert_abs_diff_eq!(rate, 0.95, epsilon = 0.01);
    }

    #[test]
    fn tick_rule_recovers_generated_signs() {
        let session = Session::new(34200.0, 57600.0, 10.0).unwrap();
        let cfg = TradeStreamConfig {
            volume_law: VolumeLaw::PowerLaw {
                tail_exponent: 1.5,
                scale: 10.0,
            },
            sign_persistence: 0.3,
            trades_per_minute: 5,
            minutes: 800,
            seed: 11,
        };
        let stream = sample_trade_stream(&cfg, 0).unwrap();
        let start = NaiveDate::from_ymd_opt(2008, 1, 2).unwrap();
        let trades = stream_to_trades(&stream, &session, start);
        let recovered = sign_stream(&trades, 1).unwrap();
        let generated: Vec<i8> = stream.iter().flatten().map(|&(_, s)| s).collect();
        for (r, g) in recovered.iter().zip(&generated) {
            assert_eq!(r.sign, *g);
        }
        // multi-day layout stays inside the retained window
        let (ws, we) = session.window();
        assert!(trades.iter().all(|t| t.time > ws && t.time < we));
        assert!(trades.last().unwrap().day > start);
    }

    #[test]
    fn two_regime_zero_fraction_matches_k_pairs() {
        let s = sample_two_regime_pairs(0.2, 0.9, 0.0, 6.72, 50_000, 13).unwrap();
        assert!(s.high.iter().all(|&h| !h));
        let r = crate::empirical::pearson(&s.x1, &s.x2).unwrap();
        assert_abs_diff_eq!(r, 0.2, epsilon = 0.02);
    }

    #[test]
    fn two_regime_deterministic_and_marked() {
        let a = sample_two_regime_pairs(0.0, 0.5, 0.05, 6.72, 10_000, 17).unwrap();
        let b = sample_two_regime_pairs(0.0, 0.5, 0.05, 6.72, 10_000, 17).unwrap();
        assert_eq!(a.x1, b.x1);
        assert_eq!(a.high, b.high);
        let frac = a.high.iter().filter(|&&h| h).count() as f64 / a.high.len() as f64;
        assert_abs_diff_eq!(frac, 0.05, epsilon = 0.01);
        // proxy separates regimes strictly
        for (i, &h) in a.high.iter().enumerate() {
            if h {
                assert!(a.sigma_a[i] > 9.0 && a.sigma_b[i] > 9.0);
            } else {
                assert!(a.sigma_a[i] < 2.5 && a.sigma_b[i] < 2.5);
            }
        }
    }
}
