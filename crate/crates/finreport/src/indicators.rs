//! Technical indicators over a price window.
//!
//! Every column function returns one optional value per input close, absent
//! exactly while the lookback is unsatisfied. Periods are configurable through
//! [`IndicatorConfig`]; the defaults follow common charting convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Window;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    pub sma_period: usize,
    pub ema_period: usize,
    pub vol_period: usize,
    /// Multiplier applied to the rolling std of daily log returns.
    pub vol_annualization: f64,
    pub rsi_period: usize,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub bb_period: usize,
    pub bb_width: f64,
    pub fib_ratios: Vec<f64>,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            sma_period: 50,
            ema_period: 50,
            vol_period: 21,
            vol_annualization: (252.0f64).sqrt(),
            rsi_period: 14,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            bb_period: 20,
            bb_width: 2.0,
            fib_ratios: vec![0.0, 0.236, 0.382, 0.5, 0.618, 0.786, 1.0],
        }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<()> {
        let periods = [
            ("sma_period", self.sma_period),
            ("ema_period", self.ema_period),
            ("vol_period", self.vol_period),
            ("rsi_period", self.rsi_period),
            ("macd_fast", self.macd_fast),
            ("macd_slow", self.macd_slow),
            ("macd_signal", self.macd_signal),
            ("bb_period", self.bb_period),
        ];
        for (name, p) in periods {
            if p < 2 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 2, got {p}")));
            }
        }
        if self.macd_fast >= self.macd_slow {
            return Err(Error::InvalidConfig(format!(
                "macd_fast ({}) must be < macd_slow ({})",
                self.macd_fast, self.macd_slow
            )));
        }
        if !(self.bb_width > 0.0) {
            return Err(Error::InvalidConfig("bb_width must be > 0".into()));
        }
        if !(self.vol_annualization > 0.0) {
            return Err(Error::InvalidConfig("vol_annualization must be > 0".into()));
        }
        let sorted = self.fib_ratios.windows(2).all(|w| w[0] <= w[1]);
        let in_range = self.fib_ratios.iter().all(|r| (0.0..=1.0).contains(r));
        if !sorted || !in_range {
            return Err(Error::InvalidConfig(
                "fib_ratios must be sorted within [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Simple moving average with lookback `n`.
pub fn sma(closes: &[f64], n: usize) -> Vec<Option<f64>> {
    assert!(n >= 2, "sma period must be >= 2");
    let mut out = vec![None; closes.len()];
    if closes.len() < n {
        return out;
    }
    let mut sum: f64 = closes[..n].iter().sum();
    out[n - 1] = Some(sum / n as f64);
    for i in n..closes.len() {
        sum += closes[i] - closes[i - n];
        out[i] = Some(sum / n as f64);
    }
    out
}

/// Exponential moving average seeded with the SMA of the first `n` closes.
pub fn ema(closes: &[f64], n: usize) -> Vec<Option<f64>> {
    assert!(n >= 2, "ema period must be >= 2");
    let mut out = vec![None; closes.len()];
    if closes.len() < n {
        return out;
    }
    let alpha = 2.0 / (n as f64 + 1.0);
    let mut value = closes[..n].iter().sum::<f64>() / n as f64;
    out[n - 1] = Some(value);
    for i in n..closes.len() {
        value = alpha * closes[i] + (1.0 - alpha) * value;
        out[i] = Some(value);
    }
    out
}

/// Rolling sample standard deviation of daily log returns, scaled by
/// `annualization`.
pub fn rolling_volatility(closes: &[f64], n: usize, annualization: f64) -> Vec<Option<f64>> {
    assert!(n >= 2, "volatility period must be >= 2");
    let mut out = vec![None; closes.len()];
    if closes.len() < n + 1 {
        return out;
    }
    let returns: Vec<f64> = closes.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let mut sum: f64 = returns[..n].iter().sum();
    let mut sum_sq: f64 = returns[..n].iter().map(|r| r * r).sum();
    for i in n..closes.len() {
        // Window of returns ending at close i is returns[i-n .. i].
        if i > n {
            let leaving = returns[i - n - 1];
            let entering = returns[i - 1];
            sum += entering - leaving;
            sum_sq += entering * entering - leaving * leaving;
        }
        let var = ((sum_sq - sum * sum / n as f64) / (n as f64 - 1.0)).max(0.0);
        out[i] = Some(var.sqrt() * annualization);
    }
    out
}

/// Relative Strength Index with Wilder smoothing.
pub fn rsi(closes: &[f64], n: usize) -> Vec<Option<f64>> {
    assert!(n >= 2, "rsi period must be >= 2");
    let mut out = vec![None; closes.len()];
    if closes.len() < n + 1 {
        return out;
    }
    let mut avg_gain = 0.0;
    let mut avg_loss = 0.0;
    for i in 1..=n {
        let delta = closes[i] - closes[i - 1];
        if delta > 0.0 {
            avg_gain += delta;
        } else {
            avg_loss += -delta;
        }
    }
    avg_gain /= n as f64;
    avg_loss /= n as f64;
    out[n] = Some(rsi_value(avg_gain, avg_loss));
    for i in n + 1..closes.len() {
        let delta = closes[i] - closes[i - 1];
        let (gain, loss) = if delta > 0.0 { (delta, 0.0) } else { (0.0, -delta) };
        avg_gain = (avg_gain * (n as f64 - 1.0) + gain) / n as f64;
        avg_loss = (avg_loss * (n as f64 - 1.0) + loss) / n as f64;
        out[i] = Some(rsi_value(avg_gain, avg_loss));
    }
    out
}

fn rsi_value(avg_gain: f64, avg_loss: f64) -> f64 {
    if avg_loss == 0.0 {
        100.0
    } else if avg_gain == 0.0 {
        0.0
    } else {
        100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    }
}

/// MACD line, signal line, and histogram.
pub fn macd(
    closes: &[f64],
    fast: usize,
    slow: usize,
    signal: usize,
) -> (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>) {
    assert!(fast < slow, "macd fast period must be < slow period");
    let ema_fast = ema(closes, fast);
    let ema_slow = ema(closes, slow);
    let len = closes.len();
    let mut line = vec![None; len];
    for i in 0..len {
        if let (Some(f), Some(s)) = (ema_fast[i], ema_slow[i]) {
            line[i] = Some(f - s);
        }
    }
    // Signal is the EMA of the defined macd values, which form a contiguous
    // suffix starting at slow - 1.
    let defined: Vec<f64> = line.iter().flatten().copied().collect();
    let offset = len - defined.len();
    let signal_dense = ema(&defined, signal);
    let mut signal_line = vec![None; len];
    for (j, v) in signal_dense.into_iter().enumerate() {
        signal_line[offset + j] = v;
    }
    let mut histogram = vec![None; len];
    for i in 0..len {
        if let (Some(m), Some(s)) = (line[i], signal_line[i]) {
            histogram[i] = Some(m - s);
        }
    }
    (line, signal_line, histogram)
}

/// Bollinger bands: SMA middle and +/- `k` population standard deviations.
pub fn bollinger(
    closes: &[f64],
    n: usize,
    k: f64,
) -> (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>) {
    assert!(n >= 2, "bollinger period must be >= 2");
    assert!(k > 0.0, "bollinger width must be > 0");
    let middle = sma(closes, n);
    let len = closes.len();
    let mut upper = vec![None; len];
    let mut lower = vec![None; len];
    for i in (n - 1)..len {
        let window = &closes[i + 1 - n..=i];
        let mean = middle[i].expect("sma defined on full lookback");
        let var = window.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        upper[i] = Some(mean + k * sd);
        lower[i] = Some(mean - k * sd);
    }
    (middle, upper, lower)
}

/// Retracement levels measured down from the window high.
pub fn fibonacci_levels(
    window_high: f64,
    window_low: f64,
    ratios: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if window_high < window_low {
        return Err(Error::Indicator(format!(
            "window high {window_high} below window low {window_low}"
        )));
    }
    let range = window_high - window_low;
    Ok(ratios.iter().map(|&r| (r, window_high - r * range)).collect())
}

/// Per-date indicator columns for one window, plus the window's retracement
/// levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorFrame {
    pub dates: Vec<chrono::NaiveDate>,
    pub close: Vec<f64>,
    pub sma: Vec<Option<f64>>,
    pub ema: Vec<Option<f64>>,
    pub volatility: Vec<Option<f64>>,
    pub rsi: Vec<Option<f64>>,
    pub macd: Vec<Option<f64>>,
    pub macd_signal: Vec<Option<f64>>,
    pub macd_histogram: Vec<Option<f64>>,
    pub bb_middle: Vec<Option<f64>>,
    pub bb_upper: Vec<Option<f64>>,
    pub bb_lower: Vec<Option<f64>>,
    /// (ratio, price level), sorted by ratio.
    pub fib_levels: Vec<(f64, f64)>,
    pub sma_period: usize,
    pub ema_period: usize,
}

impl IndicatorFrame {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// CSV export with empty cells for warm-up absences.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "Date,Close,SMA_{},EMA_{},Volatility,RSI,MACD,MACD_signal,BB_upper,BB_lower\n",
            self.sma_period, self.ema_period
        );
        let cell = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                self.dates[i],
                self.close[i],
                cell(&self.sma[i]),
                cell(&self.ema[i]),
                cell(&self.volatility[i]),
                cell(&self.rsi[i]),
                cell(&self.macd[i]),
                cell(&self.macd_signal[i]),
                cell(&self.bb_upper[i]),
                cell(&self.bb_lower[i]),
            ));
        }
        out
    }
}

/// Assembles every indicator column for a window.
pub fn compute_frame(window: &Window, cfg: &IndicatorConfig) -> Result<IndicatorFrame> {
    cfg.validate()?;
    if window.points.is_empty() {
        return Err(Error::Indicator(format!(
            "window {} has no points",
            window.id()
        )));
    }
    let closes = window.closes();
    let (macd_line, macd_sig, macd_hist) =
        macd(&closes, cfg.macd_fast, cfg.macd_slow, cfg.macd_signal);
    let (bb_mid, bb_up, bb_lo) = bollinger(&closes, cfg.bb_period, cfg.bb_width);
    let fib = fibonacci_levels(window.high(), window.low(), &cfg.fib_ratios)?;
    Ok(IndicatorFrame {
        dates: window.dates(),
        sma: sma(&closes, cfg.sma_period),
        ema: ema(&closes, cfg.ema_period),
        volatility: rolling_volatility(&closes, cfg.vol_period, cfg.vol_annualization),
        rsi: rsi(&closes, cfg.rsi_period),
        macd: macd_line,
        macd_signal: macd_sig,
        macd_histogram: macd_hist,
        bb_middle: bb_mid,
        bb_upper: bb_up,
        bb_lower: bb_lo,
        fib_levels: fib,
        close: closes,
        sma_period: cfg.sma_period,
        ema_period: cfg.ema_period,
    })
}
