//! Tick ingestion, trade-sign classification and per-minute aggregation.
//!
//! Trades are signed with the tick rule: the sign of the price change when the
//! price moved, the previous sign otherwise. Signed volumes are then bucketed
//! into fixed intervals, producing the volume imbalance and the local noise
//! intensity per bucket. The first and last minutes of each session are cut
//! before bucketing.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One tick: date, seconds after midnight (fractional allowed), price, shares.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeRecord {
    pub day: NaiveDate,
    pub time: f64,
    pub price: f64,
    pub volume: u64,
}

/// A trade with its classified sign, +1 buyer-initiated, -1 seller-initiated.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedTrade {
    pub record: TradeRecord,
    pub sign: i8,
}

impl SignedTrade {
    /// Signed volume v * eps in shares.
    pub fn signed_volume(&self) -> f64 {
        self.record.volume as f64 * self.sign as f64
    }
}

/// Per-stock, per-interval aggregate.
///
/// `minute` is minutes since the Unix epoch (interval start). `imbalance` is
/// the signed volume sum, `noise_abs` the mean absolute deviation of signed
/// volumes around their in-interval mean, `noise_sq` the squared-deviation
/// variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalObservation {
    pub minute: i64,
    pub imbalance: f64,
    pub noise_abs: f64,
    pub noise_sq: f64,
    pub n_trades: u32,
}

impl IntervalObservation {
    pub fn date(&self) -> NaiveDate {
        chrono::DateTime::from_timestamp(self.minute * 60, 0)
            .expect("minute in range")
            .date_naive()
    }
}

/// Ordered interval observations for one stock.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StockSeries {
    pub symbol: String,
    pub observations: Vec<IntervalObservation>,
    pub trading_days: BTreeSet<NaiveDate>,
}

impl StockSeries {
    pub fn imbalances(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.imbalance).collect()
    }

    pub fn noise_abs(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.noise_abs).collect()
    }

    pub fn minutes(&self) -> Vec<i64> {
        self.observations.iter().map(|o| o.minute).collect()
    }
}

/// Trading session: open/close as seconds after midnight, plus the number of
/// minutes cut from each session edge before bucketing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Session {
    pub open_sec: f64,
    pub close_sec: f64,
    pub edge_cut_minutes: f64,
}

impl Session {
    pub fn new(open_sec: f64, close_sec: f64, edge_cut_minutes: f64) -> Result<Self> {
        if close_sec <= open_sec + 2.0 * edge_cut_minutes * 60.0 {
            return Err(Error::MalformedSession);
        }
        Ok(Self {
            open_sec,
            close_sec,
            edge_cut_minutes,
        })
    }

    /// Retained window after the edge cut: [start, end).
    pub fn window(&self) -> (f64, f64) {
        (
            self.open_sec + self.edge_cut_minutes * 60.0,
            self.close_sec - self.edge_cut_minutes * 60.0,
        )
    }
}

/// Tick rule: sgn of the price change if the price moved, else the carry-over.
pub fn classify_trade_sign(prev_price: f64, price: f64, prev_sign: i8) -> i8 {
    if price > prev_price {
        1
    } else if price < prev_price {
        -1
    } else {
        prev_sign
    }
}

/// Apply the tick rule along a whole trade stream. Sign memory runs across
/// interval and day boundaries; `seed_sign` classifies the very first trade.
pub fn sign_stream(trades: &[TradeRecord], seed_sign: i8) -> Result<Vec<SignedTrade>> {
    if trades.is_empty() {
        return Err(Error::EmptyInput);
    }
    debug_assert!(seed_sign == 1 || seed_sign == -1);
    let mut out = Vec::with_capacity(trades.len());
    let mut sign = seed_sign;
    let mut prev_price = trades[0].price;
    for (i, t) in trades.iter().enumerate() {
        if i > 0 {
            sign = classify_trade_sign(prev_price, t.price, sign);
        }
        prev_price = t.price;
        out.push(SignedTrade {
            record: t.clone(),
            sign,
        });
    }
    Ok(out)
}

/// Bucket signed trades into fixed-length intervals inside the session window.
///
/// Trades in the first and last `edge_cut_minutes` of the session are dropped
/// before bucketing; buckets with no trades are omitted. Buckets are aligned
/// to the window start, so with a whole-session interval length a single
/// bucket holds each day.
pub fn aggregate_intervals(
    symbol: &str,
    signed: &[SignedTrade],
    session: &Session,
    interval_seconds: f64,
) -> Result<StockSeries> {
    if signed.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (win_start, win_end) = session.window();

    // (day, bucket index) -> signed volumes
    let mut buckets: BTreeMap<(NaiveDate, i64), Vec<f64>> = BTreeMap::new();
    for st in signed {
        let t = st.record.time;
        if t < win_start || t >= win_end {
            continue;
        }
        let idx = ((t - win_start) / interval_seconds).floor() as i64;
        buckets
            .entry((st.record.day, idx))
            .or_default()
            .push(st.signed_volume());
    }

    let mut observations = Vec::with_capacity(buckets.len());
    let mut trading_days = BTreeSet::new();
    for ((day, idx), vols) in buckets {
        let n = vols.len() as f64;
        let nu: f64 = vols.iter().sum();
        let mean = nu / n;
        let noise_abs = vols.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;
        let noise_sq = vols.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let day_sec = day.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        let bucket_sec = day_sec + (win_start + idx as f64 * interval_seconds) as i64;
        trading_days.insert(day);
        observations.push(IntervalObservation {
            minute: bucket_sec.div_euclid(60),
            imbalance: nu,
            noise_abs,
            noise_sq,
            n_trades: vols.len() as u32,
        });
    }
    Ok(StockSeries {
        symbol: symbol.to_string(),
        observations,
        trading_days,
    })
}

/// Result of pairing two stock series on common days and minutes.
#[derive(Debug, Clone)]
pub struct Aligned {
    pub a: StockSeries,
    pub b: StockSeries,
    /// Minutes dropped from (a, b) inside common days because the other stock
    /// had no observation at that minute.
    pub dropped: (usize, usize),
}

/// Restrict both series to common trading days and identical minute stamps.
/// Minutes present in only one stock are dropped from both.
pub fn align_common_days(a: &StockSeries, b: &StockSeries) -> Result<Aligned> {
    if a.observations.is_empty() || b.observations.is_empty() {
        return Err(Error::EmptyInput);
    }
    let days: BTreeSet<NaiveDate> = a
        .trading_days
        .intersection(&b.trading_days)
        .copied()
        .collect();
    if days.is_empty() {
        return Err(Error::NoCommonDays(a.symbol.clone(), b.symbol.clone()));
    }

    let in_days = |s: &StockSeries| -> Vec<IntervalObservation> {
        s.observations
            .iter()
            .filter(|o| days.contains(&o.date()))
            .cloned()
            .collect()
    };
    let oa = in_days(a);
    let ob = in_days(b);
    let ma: BTreeSet<i64> = oa.iter().map(|o| o.minute).collect();
    let mb: BTreeSet<i64> = ob.iter().map(|o| o.minute).collect();
    let common: BTreeSet<i64> = ma.intersection(&mb).copied().collect();

    let dropped = (oa.len() - common.len(), ob.len() - common.len());
    let keep = |obs: Vec<IntervalObservation>, symbol: &str| StockSeries {
        symbol: symbol.to_string(),
        observations: obs
            .into_iter()
            .filter(|o| common.contains(&o.minute))
            .collect(),
        trading_days: days.clone(),
    };
    Ok(Aligned {
        a: keep(oa, &a.symbol),
        b: keep(ob, &b.symbol),
        dropped,
    })
}

/// Standardize to zero mean and unit variance with the population divisor.
pub fn normalize_series(x: &[f64]) -> Result<Vec<f64>> {
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
    let sd = var.sqrt();
    Ok(x.iter().map(|v| (v - mean) / sd).collect())
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
struct TradeRow {
    day: String,
    time: f64,
    price: f64,
    volume: u64,
}

/// Read a per-stock trade file: delimiter-separated, header row,
/// columns `day,time,price,volume`.
pub fn read_trade_file(path: &Path) -> Result<Vec<TradeRecord>> {
    let file_name = path.display().to_string();
    if !path.exists() {
        return Err(Error::MissingFile(file_name));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Parse {
            file: file_name.clone(),
            line: 0,
            msg: e.to_string(),
        })?;
    let mut out = Vec::new();
    let mut prev: Option<(NaiveDate, f64)> = None;
    for (i, row) in rdr.deserialize::<TradeRow>().enumerate() {
        let line = i + 2; // header is line 1
        let parse_err = |msg: String| Error::Parse {
            file: file_name.clone(),
            line,
            msg,
        };
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        let day = NaiveDate::parse_from_str(&row.day, "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad day {:?}: {e}", row.day)))?;
        if !(row.price > 0.0) || !row.price.is_finite() {
            return Err(parse_err(format!("price must be positive, got {}", row.price)));
        }
        if row.volume == 0 {
            return Err(parse_err("volume must be positive".into()));
        }
        if let Some((pd, pt)) = prev {
            if day < pd || (day == pd && row.time < pt) {
                return Err(parse_err("records out of order".into()));
            }
        }
        prev = Some((day, row.time));
        out.push(TradeRecord {
            day,
            time: row.time,
            price: row.price,
            volume: row.volume,
        });
    }
    Ok(out)
}

/// Write trades in the format read back by [`read_trade_file`].
pub fn write_trade_file(path: &Path, trades: &[TradeRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "day,time,price,volume")?;
    for t in trades {
        writeln!(
            f,
            "{},{},{},{}",
            t.day.format("%Y-%m-%d"),
            t.time,
            t.price,
            t.volume
        )?;
    }
    Ok(())
}

/// Write the per-stock interval table: `minute,nu,sigma,sigma_sq,n_trades`
/// with the minute stamp as ISO `YYYY-MM-DDTHH:MM`.
pub fn write_series_table(path: &Path, series: &StockSeries) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "minute,nu,sigma,sigma_sq,n_trades")?;
    for o in &series.observations {
        let dt = chrono::DateTime::from_timestamp(o.minute * 60, 0)
            .unwrap()
            .naive_utc();
        writeln!(
            f,
            "{},{},{},{},{}",
            dt.format("%Y-%m-%dT%H:%M"),
            o.imbalance,
            o.noise_abs,
            o.noise_sq,
            o.n_trades
        )?;
    }
    Ok(())
}

/// Read a table written by [`write_series_table`].
pub fn read_series_table(path: &Path, symbol: &str) -> Result<StockSeries> {
    let file_name = path.display().to_string();
    if !path.exists() {
        return Err(Error::MissingFile(file_name));
    }
    let text = std::fs::read_to_string(path)?;
    let mut observations = Vec::new();
    let mut trading_days = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        if i == 0 || raw.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            file: file_name.clone(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, got {}", fields.len())));
        }
        let dt = NaiveDateTime::parse_from_str(fields[0], "%Y-%m-%dT%H:%M")
            .map_err(|e| parse_err(format!("bad minute stamp: {e}")))?;
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| parse_err(format!("bad number {s:?}: {e}")))
        };
        let obs = IntervalObservation {
            minute: dt.and_utc().timestamp() / 60,
            imbalance: num(fields[1])?,
            noise_abs: num(fields[2])?,
            noise_sq: num(fields[3])?,
            n_trades: fields[4]
                .parse::<u32>()
                .map_err(|e| parse_err(format!("bad trade count: {e}")))?,
        };
        debug_assert_eq!(dt.second(), 0);
        trading_days.insert(dt.date());
        observations.push(obs);
    }
    Ok(StockSeries {
        symbol: symbol.to_string(),
        observations,
        trading_days,
    })
}
