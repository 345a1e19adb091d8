//! Subcommand implementations: ingest, copula, fit, scan, synth.

use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use chrono::Datelike;
use flowcop_core::empirical::{
    asymmetry_distributions, average_copula, conditional_copula, conditioning_thresholds,
    corner_asymmetries, pair_copula, pb_noise_correlation, shuffle_robustness, bimodality_profile,
    BimodalityCriterion, Conditioning, CopulaHistogram, QuantileSeries,
};
use flowcop_core::market::{
    aggregate_intervals, align_common_days, normalize_series, read_series_table, read_trade_file,
    sign_stream, IntervalObservation, StockSeries,
};
use flowcop_core::models::{
    binned_gaussian_copula, binned_k_copula, fit_n, gamma_model_scan, model_error_grid, KModel,
    KModelParams, ScanAxis, DEFAULT_CELL_ORDER,
};
use flowcop_core::synth;
use rayon::prelude::*;
use serde_json::json;

use crate::artifacts::{
    asymmetry_csv, histogram_text, manifest_path, matrix_text, parse_matrix, sweep_csv,
    CopulaMeta, RunManifest,
};
use crate::config::{PipelineConfig, SynthConfig};

/// Default trade-sign seed for the first trade of a stream.
const SEED_SIGN: i8 = 1;

/// Interval-table bytes in the on-disk format of `read_series_table`.
fn series_table_bytes(series: &StockSeries) -> anyhow::Result<Vec<u8>> {
    use std::io::Write as _;
    let mut body = Vec::new();
    writeln!(body, "minute,nu,sigma,sigma_sq,n_trades")?;
    for o in &series.observations {
        let dt = chrono::DateTime::from_timestamp(o.minute * 60, 0)
            .unwrap()
            .naive_utc();
        writeln!(
            body,
            "{},{},{},{},{}",
            dt.format("%Y-%m-%dT%H:%M"),
            o.imbalance,
            o.noise_abs,
            o.noise_sq,
            o.n_trades
        )?;
    }
    Ok(body)
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("ingest", cfg.seed, cfg)?;
    let session = cfg.session.to_session()?;

    let results: Vec<anyhow::Result<(String, StockSeries)>> = cfg
        .symbols
        .par_iter()
        .map(|symbol| {
            let path = cfg.trade_path(symbol);
            if !path.exists() {
                return Err(flowcop_core::Error::MissingFile(path.display().to_string()).into());
            }
            let trades = read_trade_file(&path)
                .with_context(|| format!("ingesting {}", path.display()))?;
            let signed = sign_stream(&trades, SEED_SIGN)?;
            let series = aggregate_intervals(symbol, &signed, &session, cfg.interval_seconds)?;
            Ok((symbol.clone(), series))
        })
        .collect();

    for (symbol, result) in cfg.symbols.iter().zip(results) {
        let (_, series) = result?;
        manifest.record_input(&cfg.trade_path(symbol))?;
        manifest.emit(&cfg.series_path(symbol), &series_table_bytes(&series)?)?;
    }
    manifest.save(&manifest_path(&cfg.output_dir, "ingest"), start)?;
    Ok(())
}

fn load_all_series(cfg: &PipelineConfig) -> anyhow::Result<Vec<StockSeries>> {
    cfg.symbols
        .iter()
        .map(|symbol| {
            let path = cfg.series_path(symbol);
            if !path.exists() {
                return Err(flowcop_core::Error::MissingFile(path.display().to_string()).into());
            }
            read_series_table(&path, symbol)
                .with_context(|| format!("reading {}", path.display()))
        })
        .collect()
}

struct PairOutput {
    unconditional: CopulaHistogram,
    conditional: Option<CopulaHistogram>,
    pearson: f64,
    dropped: (usize, usize),
}

fn pair_histograms(
    series: &[StockSeries],
    mode: Conditioning,
    m: usize,
    bins: usize,
) -> anyhow::Result<Vec<PairOutput>> {
    let l = series.len();
    let index_pairs: Vec<(usize, usize)> = (0..l)
        .flat_map(|i| (i + 1..l).map(move |j| (i, j)))
        .collect();
    index_pairs
        .par_iter()
        .map(|&(i, j)| {
            let aligned = align_common_days(&series[i], &series[j])?;
            let qa = QuantileSeries::from_series(&aligned.a)?;
            let qb = QuantileSeries::from_series(&aligned.b)?;
            let unconditional = pair_copula(&qa, &qb, bins)?;
            let conditional = if mode == Conditioning::Unconditional {
                None
            } else {
                let ta = conditioning_thresholds(&aligned.a, m)?;
                let tb = conditioning_thresholds(&aligned.b, m)?;
                Some(conditional_copula(&qa, &qb, &ta, &tb, mode, bins)?)
            };
            let na = normalize_series(&aligned.a.imbalances())?;
            let nb = normalize_series(&aligned.b.imbalances())?;
            let pearson = flowcop_core::empirical::pearson(&na, &nb)?;
            Ok(PairOutput {
                unconditional,
                conditional,
                pearson,
                dropped: aligned.dropped,
            })
        })
        .collect()
}

fn emit_copula_set(
    manifest: &mut RunManifest,
    out_dir: &Path,
    label: &str,
    shuffled: bool,
    pairs: &[CopulaHistogram],
    c_bar: f64,
) -> anyhow::Result<CopulaHistogram> {
    let avg = average_copula(pairs)?;
    let summary = asymmetry_distributions(pairs)?;
    let (alpha, beta, gamma) = corner_asymmetries(&avg)?;
    let suffix = if shuffled { "_shuffled" } else { "" };
    manifest.emit(
        &out_dir.join(format!("copula_{label}{suffix}.txt")),
        histogram_text(&avg).as_bytes(),
    )?;
    let meta = CopulaMeta {
        bins: avg.bins,
        n_samples: avg.n_samples,
        pair_count: pairs.len(),
        conditioning: label.to_string(),
        shuffled,
        c_bar,
        alpha,
        beta,
        gamma,
    };
    manifest.emit(
        &out_dir.join(format!("copula_{label}{suffix}.meta.json")),
        &serde_json::to_vec_pretty(&meta)?,
    )?;
    manifest.emit(
        &out_dir.join(format!("asymmetry_{label}{suffix}.csv")),
        asymmetry_csv(&summary).as_bytes(),
    )?;
    let table = json!({
        "pair_count": summary.pairs.len(),
        "skew_alpha": summary.skew_alpha,
        "skew_beta": summary.skew_beta,
        "mean_alpha": mean(&summary.alpha),
        "mean_beta": mean(&summary.beta),
        "mean_gamma": mean(&summary.gamma),
        "hist_alpha": summary.hist_alpha,
        "hist_beta": summary.hist_beta,
    });
    manifest.emit(
        &out_dir.join(format!("summary_{label}{suffix}.json")),
        &serde_json::to_vec_pretty(&table)?,
    )?;
    Ok(avg)
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn cmd_copula(cfg: &PipelineConfig, mode: Conditioning, shuffle: bool) -> anyhow::Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("copula", cfg.seed, cfg)?;
    let series = load_all_series(cfg)?;
    for symbol in &cfg.symbols {
        manifest.record_input(&cfg.series_path(symbol))?;
    }
    let outputs = pair_histograms(&series, mode, cfg.exclusion_m, cfg.bins)?;

    let dropped: usize = outputs.iter().map(|p| p.dropped.0 + p.dropped.1).sum();
    if dropped > 0 {
        manifest
            .warnings
            .push(format!("{dropped} unmatched minutes dropped during pair alignment"));
    }
    let c_bar = mean(&outputs.iter().map(|p| p.pearson).collect::<Vec<_>>());

    let unconditional: Vec<CopulaHistogram> =
        outputs.iter().map(|p| p.unconditional.clone()).collect();
    let avg_uncond = emit_copula_set(
        &mut manifest,
        &cfg.output_dir,
        "unconditional",
        false,
        &unconditional,
        c_bar,
    )?;

    if mode != Conditioning::Unconditional {
        let conditional: Vec<CopulaHistogram> = outputs
            .iter()
            .map(|p| p.conditional.clone().expect("conditional mode"))
            .collect();
        let avg_cond = emit_copula_set(
            &mut manifest,
            &cfg.output_dir,
            mode.label(),
            false,
            &conditional,
            c_bar,
        )?;
        let diff: Vec<f64> = avg_cond
            .density
            .iter()
            .zip(&avg_uncond.density)
            .map(|(c, u)| c - u)
            .collect();
        manifest.emit(
            &cfg.output_dir.join(format!("difference_{}.txt", mode.label())),
            matrix_text(&diff, cfg.bins).as_bytes(),
        )?;
    }

    if shuffle {
        // the robustness check reuses whichever histogram set the mode produced
        let base: Vec<CopulaHistogram> = if mode == Conditioning::Unconditional {
            unconditional
        } else {
            outputs
                .iter()
                .map(|p| p.conditional.clone().expect("conditional mode"))
                .collect()
        };
        let label = mode.label();
        let report = shuffle_robustness(&base, cfg.seed)?;
        manifest.permutation = Some(report.permutation.clone());
        manifest.emit(
            &cfg.output_dir.join(format!("copula_{label}_shuffled.txt")),
            histogram_text(&report.shuffled_copula).as_bytes(),
        )?;
        manifest.emit(
            &cfg.output_dir.join(format!("asymmetry_{label}_shuffled.csv")),
            asymmetry_csv(&report.shuffled_summary).as_bytes(),
        )?;
        let robustness = json!({
            "max_bin_deviation": report.max_bin_deviation,
            "skew_alpha_delta": report.skew_alpha_delta,
            "skew_beta_delta": report.skew_beta_delta,
        });
        manifest.emit(
            &cfg.output_dir.join("shuffle_robustness.json"),
            &serde_json::to_vec_pretty(&robustness)?,
        )?;
    }

    manifest.save(&manifest_path(&cfg.output_dir, "copula"), start)?;
    Ok(())
}

fn load_copula(cfg: &PipelineConfig, label: &str) -> anyhow::Result<(CopulaHistogram, CopulaMeta)> {
    let matrix_path = cfg.output_dir.join(format!("copula_{label}.txt"));
    let meta_path = cfg.output_dir.join(format!("copula_{label}.meta.json"));
    for p in [&matrix_path, &meta_path] {
        if !p.exists() {
            anyhow::bail!(flowcop_core::Error::MissingFile(p.display().to_string()));
        }
    }
    let (bins, density) = parse_matrix(&std::fs::read_to_string(&matrix_path)?)?;
    let meta: CopulaMeta = serde_json::from_slice(&std::fs::read(&meta_path)?)?;
    let hist = CopulaHistogram::from_density(
        bins,
        density,
        meta.n_samples,
        flowcop_core::empirical::HistogramMeta {
            pair: None,
            pair_count: meta.pair_count,
            conditioning: Conditioning::Unconditional,
            provenance: flowcop_core::empirical::OrderProvenance::Preset,
        },
    );
    Ok((hist, meta))
}

pub fn cmd_fit(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("fit", cfg.seed, cfg)?;
    let (empirical, meta) = load_copula(cfg, "unconditional")?;
    manifest.record_input(&cfg.output_dir.join("copula_unconditional.txt"))?;
    manifest.record_input(&cfg.output_dir.join("copula_unconditional.meta.json"))?;

    let spec = cfg.quadrature.to_spec();
    let result = fit_n(
        &empirical,
        meta.c_bar,
        (cfg.fit.n_lo, cfg.fit.n_hi),
        &spec,
        DEFAULT_CELL_ORDER,
    )?;
    if let Some(w) = &result.warning {
        manifest.warnings.push(w.clone());
    }

    let k_model = KModel::new(KModelParams::new(meta.c_bar, result.n_hat)?, spec)?;
    let k_grid = binned_k_copula(&k_model, cfg.bins, DEFAULT_CELL_ORDER)?;
    let g_grid = binned_gaussian_copula(meta.c_bar, cfg.bins, DEFAULT_CELL_ORDER)?;
    let err_k = model_error_grid(&empirical, &k_grid)?;
    let err_g = model_error_grid(&empirical, &g_grid)?;

    manifest.emit(
        &cfg.output_dir.join("k_model.txt"),
        histogram_text(&k_grid).as_bytes(),
    )?;
    manifest.emit(
        &cfg.output_dir.join("gauss_model.txt"),
        histogram_text(&g_grid).as_bytes(),
    )?;
    manifest.emit(
        &cfg.output_dir.join("error_k.txt"),
        matrix_text(&err_k, cfg.bins).as_bytes(),
    )?;
    manifest.emit(
        &cfg.output_dir.join("error_gauss.txt"),
        matrix_text(&err_g, cfg.bins).as_bytes(),
    )?;
    manifest.emit(
        &cfg.output_dir.join("fit_trace.csv"),
        sweep_csv("N,objective", &result.trace).as_bytes(),
    )?;
    let fit_json = json!({
        "n_hat": result.n_hat,
        "c_used": result.c_used,
        "objective": result.objective,
        "warning": result.warning,
        "sum_sq_error_k": err_k.iter().map(|e| e * e).sum::<f64>(),
        "sum_sq_error_gauss": err_g.iter().map(|e| e * e).sum::<f64>(),
    });
    manifest.emit(&cfg.output_dir.join("fit.json"), &serde_json::to_vec_pretty(&fit_json)?)?;
    manifest.save(&manifest_path(&cfg.output_dir, "fit"), start)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScanTarget {
    GammaVsC,
    GammaVsN,
    TwoPhase,
    PbCorr,
}

pub fn cmd_scan(cfg: &PipelineConfig, target: ScanTarget) -> anyhow::Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("scan", cfg.seed, cfg)?;
    let spec = cfg.quadrature.to_spec();
    match target {
        ScanTarget::GammaVsC => {
            let rows = gamma_model_scan(
                ScanAxis::Correlation {
                    n: cfg.scan.fixed_n,
                },
                &cfg.scan.gamma_c,
                &spec,
                cfg.bins,
                DEFAULT_CELL_ORDER,
            )?;
            manifest.emit(
                &cfg.output_dir.join("gamma_vs_c.csv"),
                sweep_csv("c,gamma", &rows).as_bytes(),
            )?;
        }
        ScanTarget::GammaVsN => {
            let rows = gamma_model_scan(
                ScanAxis::Fluctuation {
                    c: cfg.scan.fixed_c,
                },
                &cfg.scan.gamma_n,
                &spec,
                cfg.bins,
                DEFAULT_CELL_ORDER,
            )?;
            manifest.emit(
                &cfg.output_dir.join("gamma_vs_n.csv"),
                sweep_csv("N,gamma", &rows).as_bytes(),
            )?;
        }
        ScanTarget::TwoPhase => {
            let series = load_all_series(cfg)?;
            let crit = BimodalityCriterion::default();
            let mut per_symbol = serde_json::Map::new();
            for s in &series {
                manifest.record_input(&cfg.series_path(&s.symbol))?;
                let profiles = bimodality_profile(s, &cfg.scan.sigma_bands, &crit)?;
                per_symbol.insert(s.symbol.clone(), serde_json::to_value(&profiles)?);
            }
            manifest.emit(
                &cfg.output_dir.join("two_phase.json"),
                &serde_json::to_vec_pretty(&per_symbol)?,
            )?;
        }
        ScanTarget::PbCorr => {
            let series = load_all_series(cfg)?;
            let mut out = String::from("symbol,pb_correlation\n");
            for s in &series {
                manifest.record_input(&cfg.series_path(&s.symbol))?;
                let r = pb_noise_correlation(s)?;
                out.push_str(&format!("{},{r}\n", s.symbol));
            }
            manifest.emit(&cfg.output_dir.join("pb_corr.csv"), out.as_bytes())?;
        }
    }
    manifest.save(&manifest_path(&cfg.output_dir, "scan"), start)?;
    Ok(())
}

/// Epoch-minute base for directly generated interval tables: days are laid
/// out 390 retained minutes at a time starting 2008-01-02 09:40 UTC.
fn synth_minutes(length: usize) -> Vec<i64> {
    let base_day = chrono::NaiveDate::from_ymd_opt(2008, 1, 2).unwrap();
    let per_day = 370usize; // 6.5 h session minus 2 x 10 min edges
    (0..length)
        .map(|i| {
            let day = base_day + chrono::Days::new((i / per_day) as u64);
            let epoch_day = day.num_days_from_ce() as i64 - 719_163; // days since 1970-01-01
            epoch_day * 1440 + 9 * 60 + 40 + (i % per_day) as i64
        })
        .collect()
}

pub fn cmd_synth(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("synth", cfg.seed, cfg)?;
    let synth_cfg = cfg
        .synth
        .as_ref()
        .context("config has no [synth] section")?;
    match synth_cfg {
        SynthConfig::KEnsemble { c, n, length } => {
            let params = KModelParams::new(*c, *n)
                .map_err(anyhow::Error::from)
                .context("invalid K ensemble parameters")?;
            let ensemble =
                synth::sample_k_ensemble(cfg.symbols.len(), params, *length, cfg.seed)?;
            let minutes = synth_minutes(*length);
            for (symbol, values) in cfg.symbols.iter().zip(ensemble) {
                let observations: Vec<IntervalObservation> = minutes
                    .iter()
                    .zip(&values)
                    .map(|(&minute, &v)| IntervalObservation {
                        minute,
                        imbalance: v,
                        noise_abs: v.abs(),
                        noise_sq: v * v,
                        n_trades: 2,
                    })
                    .collect();
                let trading_days = observations.iter().map(|o| o.date()).collect();
                let series = StockSeries {
                    symbol: symbol.clone(),
                    observations,
                    trading_days,
                };
                manifest.emit(&cfg.series_path(symbol), &series_table_bytes(&series)?)?;
            }
        }
        SynthConfig::TradeStream {
            volume_law,
            sign_persistence,
            trades_per_minute,
            minutes,
            start_date,
        } => {
            let session = cfg.session.to_session()?;
            let stream_cfg = synth::TradeStreamConfig {
                volume_law: *volume_law,
                sign_persistence: *sign_persistence,
                trades_per_minute: *trades_per_minute,
                minutes: *minutes,
                seed: cfg.seed,
            };
            let outputs: Vec<anyhow::Result<Vec<u8>>> = cfg
                .symbols
                .par_iter()
                .enumerate()
                .map(|(idx, _)| {
                    let stream = synth::sample_trade_stream(&stream_cfg, idx as u64)?;
                    let trades = synth::stream_to_trades(&stream, &session, *start_date);
                    let mut buf = Vec::new();
                    {
                        use std::io::Write as _;
                        writeln!(buf, "day,time,price,volume")?;
                        for t in &trades {
                            writeln!(buf, "{},{},{:.2},{}", t.day, t.time, t.price, t.volume)?;
                        }
                    }
                    Ok(buf)
                })
                .collect();
            for (symbol, body) in cfg.symbols.iter().zip(outputs) {
                manifest.emit(&cfg.trade_path(symbol), &body?)?;
            }
        }
    }
    manifest.save(&manifest_path(&cfg.output_dir, "synth"), start)?;
    Ok(())
}
