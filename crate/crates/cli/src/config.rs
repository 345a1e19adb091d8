//! Pipeline configuration: one TOML file, flat sections, CLI flags override
//! individual keys one-for-one.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use flowcop_core::market::Session;
use flowcop_core::models::QuadratureSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Session open, seconds after midnight.
    pub open_sec: f64,
    /// Session close, seconds after midnight.
    pub close_sec: f64,
    /// Minutes cut from each session edge.
    #[serde(default = "default_edge_cut")]
    pub edge_cut_minutes: f64,
}

fn default_edge_cut() -> f64 {
    10.0
}

impl SessionConfig {
    pub fn to_session(&self) -> anyhow::Result<Session> {
        Session::new(self.open_sec, self.close_sec, self.edge_cut_minutes)
            .context("invalid session")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureConfig {
    #[serde(default = "default_nodes")]
    pub node_count: usize,
    #[serde(default = "default_tol")]
    pub target_abs_tol: f64,
}

fn default_nodes() -> usize {
    64
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            node_count: default_nodes(),
            target_abs_tol: default_tol(),
        }
    }
}

impl QuadratureConfig {
    pub fn to_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            node_count: self.node_count,
            target_abs_tol: self.target_abs_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(default = "default_n_lo")]
    pub n_lo: f64,
    #[serde(default = "default_n_hi")]
    pub n_hi: f64,
}

fn default_n_lo() -> f64 {
    2.0
}

fn default_n_hi() -> f64 {
    100.0
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_lo: default_n_lo(),
            n_hi: default_n_hi(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Correlation sweep for the gamma-vs-c table.
    #[serde(default = "default_gamma_c")]
    pub gamma_c: Vec<f64>,
    /// Shape-parameter sweep for the gamma-vs-N table.
    #[serde(default = "default_gamma_n")]
    pub gamma_n: Vec<f64>,
    /// Shape parameter held fixed during the c sweep.
    #[serde(default = "default_fixed_n")]
    pub fixed_n: f64,
    /// Correlation held fixed during the N sweep.
    #[serde(default = "default_fixed_c")]
    pub fixed_c: f64,
    /// Normalized-noise bands for the two-phase profile.
    #[serde(default = "default_bands")]
    pub sigma_bands: Vec<(f64, f64)>,
}

fn default_gamma_c() -> Vec<f64> {
    (0..=18).map(|i| i as f64 * 0.05).collect()
}

fn default_gamma_n() -> Vec<f64> {
    // geometric ladder from 3 to 50
    let steps = 12usize;
    let ratio = (50.0f64 / 3.0).powf(1.0 / (steps - 1) as f64);
    (0..steps).map(|i| 3.0 * ratio.powi(i as i32)).collect()
}

fn default_fixed_n() -> f64 {
    6.72
}

fn default_fixed_c() -> f64 {
    0.10
}

fn default_bands() -> Vec<(f64, f64)> {
    vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, 8.0)]
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            gamma_c: default_gamma_c(),
            gamma_n: default_gamma_n(),
            fixed_n: default_fixed_n(),
            fixed_c: default_fixed_c(),
            sigma_bands: default_bands(),
        }
    }
}

/// What the `synth` subcommand generates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SynthConfig {
    /// Equicorrelated ensemble of per-minute imbalance series written
    /// straight to interval tables (one per configured symbol).
    KEnsemble { c: f64, n: f64, length: usize },
    /// One tick file per configured symbol, written to `data_dir`.
    TradeStream {
        volume_law: flowcop_core::synth::VolumeLaw,
        #[serde(default)]
        sign_persistence: f64,
        trades_per_minute: usize,
        minutes: usize,
        #[serde(default = "default_start_date")]
        start_date: chrono::NaiveDate,
    },
}

fn default_start_date() -> chrono::NaiveDate {
    chrono::NaiveDate::from_ymd_opt(2008, 1, 2).unwrap()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub symbols: Vec<String>,
    pub session: SessionConfig,
    #[serde(default = "default_interval")]
    pub interval_seconds: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_exclusion_m")]
    pub exclusion_m: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
}

fn default_interval() -> f64 {
    60.0
}

fn default_bins() -> usize {
    20
}

fn default_exclusion_m() -> usize {
    50
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.symbols.is_empty() {
            bail!("symbol list is empty");
        }
        let unique: BTreeSet<&str> = self.symbols.iter().map(|s| s.as_str()).collect();
        if unique.len() != self.symbols.len() {
            bail!("symbol list contains duplicates");
        }
        if self.bins < 5 || self.bins % 5 != 0 {
            bail!(
                "bins must be a positive multiple of 5 so 20% corner blocks \
                 align with bin edges, got {}",
                self.bins
            );
        }
        if self.interval_seconds <= 0.0 {
            bail!("interval_seconds must be positive");
        }
        self.session.to_session()?;
        self.quadrature
            .to_spec()
            .validate()
            .context("invalid quadrature settings")?;
        if !(self.fit.n_lo > 1.0 && self.fit.n_hi > self.fit.n_lo) {
            bail!(
                "fit bracket must satisfy 1 < n_lo < n_hi, got ({}, {})",
                self.fit.n_lo,
                self.fit.n_hi
            );
        }
        Ok(())
    }

    /// Directory holding per-symbol interval tables.
    pub fn series_dir(&self) -> PathBuf {
        self.output_dir.join("series")
    }

    pub fn series_path(&self, symbol: &str) -> PathBuf {
        self.series_dir().join(format!("{symbol}.csv"))
    }

    pub fn trade_path(&self, symbol: &str) -> PathBuf {
        self.data_dir.join(format!("{symbol}.csv"))
    }
}
