//! Price series loading, calendar windowing, and synthetic path generation.

use std::path::Path;

use chrono::{Datelike, Days, Months, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trading day's close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
}

/// A dated close-price sequence with strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub symbol: String,
    points: Vec<PricePoint>,
}

impl PriceSeries {
    /// Validates ordering and positivity before accepting the points.
    pub fn new(symbol: impl Into<String>, points: Vec<PricePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSeries("empty series".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.close.is_finite() || p.close <= 0.0 {
                return Err(Error::InvalidSeries(format!(
                    "non-positive close {} at {}",
                    p.close, p.date
                )));
            }
            if i > 0 {
                let prev = &points[i - 1];
                if p.date == prev.date {
                    return Err(Error::InvalidSeries(format!("duplicate date {}", p.date)));
                }
                if p.date < prev.date {
                    return Err(Error::InvalidSeries(format!(
                        "non-increasing dates: {} after {}",
                        p.date, prev.date
                    )));
                }
            }
        }
        Ok(Self {
            symbol: symbol.into(),
            points,
        })
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty series
    }

    pub fn first_date(&self) -> NaiveDate {
        self.points[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.points[self.points.len() - 1].date
    }

    /// Reads a `Date,Close` CSV with ISO-8601 dates. The symbol is taken from
    /// the file stem. Row errors carry 1-based line numbers.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let symbol = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into());
        Self::parse_csv(&content, &symbol, path)
    }

    fn parse_csv(content: &str, symbol: &str, path: &Path) -> Result<Self> {
        let row_err = |line: usize, message: String| Error::CsvRow {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = content.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "Date,Close" => {}
            Some((_, header)) => {
                return Err(row_err(1, format!("expected header 'Date,Close', got '{header}'")))
            }
            None => return Err(row_err(1, "missing header".into())),
        }
        let mut points = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (date_str, close_str) = line
                .split_once(',')
                .ok_or_else(|| row_err(lineno, format!("malformed row '{line}'")))?;
            let date = NaiveDate::parse_from_str(date_str.trim(), "%Y-%m-%d")
                .map_err(|e| row_err(lineno, format!("bad date '{}': {e}", date_str.trim())))?;
            let close: f64 = close_str
                .trim()
                .parse()
                .map_err(|e| row_err(lineno, format!("bad close '{}': {e}", close_str.trim())))?;
            if !close.is_finite() || close <= 0.0 {
                return Err(row_err(lineno, format!("non-positive close {close}")));
            }
            if let Some(prev) = points.last() {
                let prev: &PricePoint = prev;
                if date == prev.date {
                    return Err(row_err(lineno, format!("duplicate date {date}")));
                }
                if date < prev.date {
                    return Err(row_err(
                        lineno,
                        format!("non-increasing dates: {date} after {}", prev.date),
                    ));
                }
            }
            points.push(PricePoint { date, close });
        }
        if points.is_empty() {
            return Err(Error::InvalidSeries("empty series".into()));
        }
        Self::new(symbol, points)
    }

    /// Serializes back to the `Date,Close` schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Date,Close\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.date, p.close));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// A contiguous slice of a parent series covering `[start_date, end_date)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub series_ref: String,
    pub start_date: NaiveDate,
    /// Exclusive calendar bound: `start_date` plus the window length in months.
    pub end_date: NaiveDate,
    pub points: Vec<PricePoint>,
}

impl Window {
    pub fn id(&self) -> String {
        format!("{}_{}", self.start_date, self.end_date)
    }

    pub fn closes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.date).collect()
    }

    pub fn high(&self) -> f64 {
        self.points.iter().map(|p| p.close).fold(f64::MIN, f64::max)
    }

    pub fn low(&self) -> f64 {
        self.points.iter().map(|p| p.close).fold(f64::MAX, f64::min)
    }
}

/// Slices a series into overlapping windows anchored at the first date.
///
/// Window `k` covers `[first + k*stride months, first + k*stride + window months)`
/// and is emitted while its exclusive end stays within one day past the last
/// point. Month arithmetic is always relative to the first date so end-of-month
/// clamping cannot drift across windows.
pub fn slice_windows(
    series: &PriceSeries,
    window_months: u32,
    stride_months: u32,
) -> Result<Vec<Window>> {
    if window_months == 0 || stride_months == 0 {
        return Err(Error::Windowing(
            "window_months and stride_months must be >= 1".into(),
        ));
    }
    let first = series.first_date();
    let series_end_exclusive = series.last_date() + Days::new(1);
    let first_window_end = first + Months::new(window_months);
    if first_window_end > series_end_exclusive {
        return Err(Error::Windowing(format!(
            "series [{}, {}] spans less than one {window_months}-month window",
            series.first_date(),
            series.last_date()
        )));
    }
    let mut windows = Vec::new();
    for k in 0.. {
        let start = first + Months::new(k * stride_months);
        let end = first + Months::new(k * stride_months + window_months);
        if end > series_end_exclusive {
            break;
        }
        let points: Vec<PricePoint> = series
            .points()
            .iter()
            .filter(|p| p.date >= start && p.date < end)
            .copied()
            .collect();
        windows.push(Window {
            series_ref: series.symbol.clone(),
            start_date: start,
            end_date: end,
            points,
        });
    }
    Ok(windows)
}

/// Parameters for a simulated daily price path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub symbol: String,
    /// Initial price level.
    pub s0: f64,
    /// Annualized drift.
    pub mu: f64,
    /// Annualized volatility.
    pub sigma: f64,
    /// Year fraction per step.
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub start_date: NaiveDate,
    /// Horizon in years.
    pub years: f64,
    pub seed: u64,
}

fn default_dt() -> f64 {
    1.0 / 252.0
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0) {
            return Err(Error::InvalidConfig(format!("s0 must be > 0, got {}", self.s0)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.years > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "years must be > 0, got {}",
                self.years
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.years / self.dt).round() as usize
    }
}

fn next_weekday_on_or_after(d: NaiveDate) -> NaiveDate {
    match d.weekday() {
        Weekday::Sat => d + Days::new(2),
        Weekday::Sun => d + Days::new(1),
        _ => d,
    }
}

fn next_weekday_after(d: NaiveDate) -> NaiveDate {
    match d.weekday() {
        Weekday::Fri => d + Days::new(3),
        Weekday::Sat => d + Days::new(2),
        _ => d + Days::new(1),
    }
}

/// Simulates a geometric Brownian motion path over weekdays.
///
/// Each step applies `S *= exp((mu - sigma^2/2)*dt + sigma*sqrt(dt)*Z)` with
/// `Z` standard normal from a ChaCha8 stream seeded by `cfg.seed`, so the same
/// seed reproduces the path bit for bit.
pub fn generate_gbm(cfg: &SyntheticConfig) -> Result<PriceSeries> {
    cfg.validate()?;
    let n_steps = cfg.n_steps();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let drift = (cfg.mu - 0.5 * cfg.sigma * cfg.sigma) * cfg.dt;
    let diffusion = cfg.sigma * cfg.dt.sqrt();

    let mut date = next_weekday_on_or_after(cfg.start_date);
    let mut price = cfg.s0;
    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(PricePoint { date, close: price });
    for _ in 0..n_steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        price *= (drift + diffusion * z).exp();
        date = next_weekday_after(date);
        points.push(PricePoint { date, close: price });
    }
    PriceSeries::new(cfg.symbol.clone(), points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn daily_series(start: &str, end: &str) -> PriceSeries {
        let mut points = Vec::new();
        let mut d = date(start);
        let stop = date(end);
        let mut v = 100.0;
        while d <= stop {
            points.push(PricePoint { date: d, close: v });
            v += 0.1;
            d += Days::new(1);
        }
        PriceSeries::new("test", points).unwrap()
    }

    #[test]
    fn parse_csv_two_rows() {
        let content = "Date,Close\n2020-04-28,8607.7\n2020-04-29,8914.7\n";
        let s = PriceSeries::parse_csv(content, "nikkei", &PathBuf::from("nikkei.csv")).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points()[0].date, date("2020-04-28"));
        assert_eq!(s.points()[0].close, 8607.7);
        assert_eq!(s.points()[1].close, 8914.7);
    }

    #[test]
    fn parse_csv_empty_data_section() {
        let err = PriceSeries::parse_csv("Date,Close\n", "x", &PathBuf::from("x.csv")).unwrap_err();
        assert!(err.to_string().contains("empty series"), "{err}");
    }

    #[test]
    fn parse_csv_duplicate_date_names_it() {
        let content = "Date,Close\n2020-01-02,10.0\n2020-01-02,11.0\n";
        let err = PriceSeries::parse_csv(content, "x", &PathBuf::from("x.csv")).unwrap_err();
        assert!(err.to_string().contains("2020-01-02"), "{err}");
    }

    #[test]
    fn parse_csv_reports_line_number() {
        let content = "Date,Close\n2020-01-02,10.0\nnot-a-row\n";
        let err = PriceSeries::parse_csv(content, "x", &PathBuf::from("x.csv")).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }

    #[test]
    fn parse_csv_rejects_decreasing_dates() {
        let content = "Date,Close\n2020-01-03,10.0\n2020-01-02,11.0\n";
        let err = PriceSeries::parse_csv(content, "x", &PathBuf::from("x.csv")).unwrap_err();
        assert!(err.to_string().contains("non-increasing"), "{err}");
    }

    #[test]
    fn parse_csv_rejects_nonpositive_close() {
        let content = "Date,Close\n2020-01-03,-1.0\n";
        let err = PriceSeries::parse_csv(content, "x", &PathBuf::from("x.csv")).unwrap_err();
        assert!(err.to_string().contains("non-positive"), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let s = daily_series("2020-01-01", "2020-02-01");
        let parsed = PriceSeries::parse_csv(&s.to_csv(), "test", &PathBuf::from("t.csv")).unwrap();
        assert_eq!(s, parsed);
    }

    #[test]
    fn sixty_months_yields_49_windows() {
        // 60 months of daily data starting 2019-01-01.
        let s = daily_series("2019-01-01", "2023-12-31");
        let w = slice_windows(&s, 12, 1).unwrap();
        assert_eq!(w.len(), 49);
        assert_eq!(w[0].start_date, date("2019-01-01"));
        assert_eq!(w[0].end_date, date("2020-01-01"));
        assert_eq!(w[48].start_date, date("2023-01-01"));
        assert_eq!(w[48].end_date, date("2024-01-01"));
    }

    #[test]
    fn thirteen_months_yields_2_windows() {
        let s = daily_series("2020-01-01", "2021-01-31");
        let w = slice_windows(&s, 12, 1).unwrap();
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn exactly_one_window_equals_series() {
        let s = daily_series("2020-01-01", "2020-12-31");
        let w = slice_windows(&s, 12, 1).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].points, s.points());
    }

    #[test]
    fn short_series_is_an_error() {
        let s = daily_series("2020-01-01", "2020-06-30");
        assert!(slice_windows(&s, 12, 1).is_err());
    }

    #[test]
    fn consecutive_windows_overlap_by_eleven_months() {
        let s = daily_series("2019-01-01", "2023-12-31");
        let w = slice_windows(&s, 12, 1).unwrap();
        for pair in w.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let shared: Vec<_> = a
                .points
                .iter()
                .filter(|p| p.date >= b.start_date && p.date < a.end_date)
                .collect();
            // Shared region is [b.start, a.end) = 11 months; every shared point
            // must also be the prefix of b.
            assert_eq!(b.start_date, a.start_date + Months::new(1));
            assert_eq!(a.end_date, b.start_date + Months::new(11));
            assert_eq!(shared.len(), b.points.iter().filter(|p| p.date < a.end_date).count());
        }
    }

    #[test]
    fn windows_tile_without_gaps() {
        let s = daily_series("2019-01-01", "2023-12-31");
        let w = slice_windows(&s, 12, 1).unwrap();
        let covered: std::collections::BTreeSet<_> = w
            .iter()
            .flat_map(|win| win.points.iter().map(|p| p.date))
            .collect();
        let expected: std::collections::BTreeSet<_> = s
            .points()
            .iter()
            .map(|p| p.date)
            .filter(|d| *d >= w[0].start_date && *d < w.last().unwrap().end_date)
            .collect();
        assert_eq!(covered, expected);
    }

    fn gbm_cfg(mu: f64, sigma: f64, years: f64, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            symbol: "synth".into(),
            s0: 100.0,
            mu,
            sigma,
            dt: 1.0 / 252.0,
            start_date: date("2019-01-01"),
            years,
            seed,
        }
    }

    #[test]
    fn gbm_zero_vol_matches_closed_form() {
        let cfg = gbm_cfg(0.05, 0.0, 2.0, 1);
        let s = generate_gbm(&cfg).unwrap();
        for (k, p) in s.points().iter().enumerate() {
            let expected = 100.0 * (0.05 * k as f64 / 252.0).exp();
            assert!(
                (p.close - expected).abs() <= 1e-12 * expected,
                "step {k}: {} vs {expected}",
                p.close
            );
        }
    }

    #[test]
    fn gbm_zero_drift_zero_vol_is_constant() {
        let cfg = gbm_cfg(0.0, 0.0, 1.0, 3);
        let s = generate_gbm(&cfg).unwrap();
        assert!(s.points().iter().all(|p| p.close == 100.0));
    }

    #[test]
    fn gbm_same_seed_bitwise_equal() {
        let cfg = gbm_cfg(0.05, 0.2, 1.0, 42);
        let a = generate_gbm(&cfg).unwrap();
        let b = generate_gbm(&cfg).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed = 43;
        let c = generate_gbm(&other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gbm_dates_are_weekdays() {
        let cfg = gbm_cfg(0.05, 0.2, 1.0, 7);
        let s = generate_gbm(&cfg).unwrap();
        assert!(s
            .points()
            .iter()
            .all(|p| !matches!(p.date.weekday(), Weekday::Sat | Weekday::Sun)));
        assert_eq!(s.len(), cfg.n_steps() + 1);
    }

    #[test]
    fn gbm_positive_for_extreme_params() {
        let cfg = gbm_cfg(-2.0, 3.0, 1.0, 9);
        let s = generate_gbm(&cfg).unwrap();
        assert!(s.points().iter().all(|p| p.close > 0.0));
    }

    #[test]
    fn gbm_log_return_moments() {
        // Shorter companion to the acceptance-scale run: 50k steps.
        let cfg = gbm_cfg(0.05, 0.2, 50_000.0 / 252.0, 11);
        let s = generate_gbm(&cfg).unwrap();
        let rets: Vec<f64> = s
            .points()
            .windows(2)
            .map(|p| (p[1].close / p[0].close).ln())
            .collect();
        let n = rets.len() as f64;
        let mean = rets.iter().sum::<f64>() / n;
        let var = rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let dt = cfg.dt;
        let expected_mean = (cfg.mu - 0.5 * cfg.sigma * cfg.sigma) * dt;
        let expected_var = cfg.sigma * cfg.sigma * dt;
        let se = (expected_var / n).sqrt();
        assert!((mean - expected_mean).abs() < 4.0 * se, "mean {mean} vs {expected_mean}");
        assert!((var / expected_var - 1.0).abs() < 0.05, "var {var} vs {expected_var}");
    }
}
