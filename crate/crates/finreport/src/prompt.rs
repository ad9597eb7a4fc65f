//! Report-generation prompts: data-block serialization and the three
//! templates (short, technical-indicator, technical-indicator-with-plots).
//!
//! Number formatting is fixed — one decimal for prices, moving averages, RSI,
//! and MACD, three decimals for volatility — so built prompts are
//! byte-reproducible and match the checked-in golden fixtures.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chart::{render_chart, ChartConfig};
use crate::error::{Error, Result};
use crate::indicators::IndicatorFrame;
use crate::market::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportType {
    Short,
    Ti,
    TiPlots,
}

impl ReportType {
    pub const ALL: [ReportType; 3] = [ReportType::Short, ReportType::Ti, ReportType::TiPlots];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportType::Short => "short",
            ReportType::Ti => "ti",
            ReportType::TiPlots => "ti_plots",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "short" => Some(ReportType::Short),
            "ti" => Some(ReportType::Ti),
            "ti_plots" | "ti-plots" => Some(ReportType::TiPlots),
            _ => None,
        }
    }

    pub fn needs_indicators(self) -> bool {
        !matches!(self, ReportType::Short)
    }
}

impl std::fmt::Display for ReportType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const SHORT_TEMPLATE: &str = "You are a financial analyst tasked with writing a short report analyzing the main aspects of the {index_name} index based on its time series data. The report should be concise, focusing on key trends, volatility, and any notable price patterns observed in the data. Your report should be one or two paragraphs long, summarizing the overall performance and recent movements.";

const TI_TEMPLATE: &str = "You are a financial analyst tasked with writing a short report analyzing the main aspects of the {index_name} index based on its time series data and technical indicators. Focus on key trends, volatility, notable price patterns, and significant changes in the technical indicators such as moving averages or RSI. Summarize the overall performance and recent movements in two or three paragraphs.";

const TI_PLOTS_TEMPLATE: &str = "You are a financial analyst tasked with writing a short report analyzing the main aspects of the {index_name} index based on its time series data and technical indicator plots. The report should focus on key trends, volatility, and any notable price patterns observed in the data and the indicator plots. Your report should be two or three paragraphs long, summarizing the overall performance and recent movements.";

/// Template text for a report type with the data blocks left out.
pub fn template_text(report_type: ReportType) -> &'static str {
    match report_type {
        ReportType::Short => SHORT_TEMPLATE,
        ReportType::Ti => TI_TEMPLATE,
        ReportType::TiPlots => TI_PLOTS_TEMPLATE,
    }
}

/// `Date       Close` block, ISO dates, one decimal place.
pub fn serialize_close(window: &Window) -> String {
    let mut out = String::from("Date       Close\n");
    for p in &window.points {
        out.push_str(&format!("{} {:.1}\n", p.date, p.close));
    }
    out
}

fn cell(v: Option<f64>, decimals: usize, width: usize) -> String {
    let s = match v {
        Some(v) => format!("{v:.decimals$}"),
        None => "NA".to_string(),
    };
    format!("{s:<width$}")
}

/// Data block with indicator columns for the TI prompt. Warm-up absences
/// render as `NA`; column widths are fixed across rows.
pub fn serialize_with_indicators(window: &Window, frame: &IndicatorFrame) -> Result<String> {
    if frame.dates != window.dates() {
        return Err(Error::Prompt(format!(
            "frame dates do not match window {}",
            window.id()
        )));
    }
    let mut out = String::from("Date       Close    SMA_50  RSI   MACD    Volatility\n");
    for i in 0..frame.len() {
        out.push_str(&format!(
            "{} {}{}{}{}{}\n",
            frame.dates[i],
            cell(Some(frame.close[i]), 1, 9),
            cell(frame.sma[i], 1, 9),
            cell(frame.rsi[i], 1, 6),
            cell(frame.macd[i], 1, 8),
            cell(frame.volatility[i], 3, 0).trim_end(),
        ));
    }
    Ok(out)
}

/// Indicator-only block used by the evaluation prompts (no Close column).
pub fn serialize_indicators_for_eval(frame: &IndicatorFrame) -> String {
    let mut out = String::from("Date        SMA_50  RSI   MACD    Volatility\n");
    for i in 0..frame.len() {
        out.push_str(&format!(
            "{}  {}{}{}{}\n",
            frame.dates[i],
            cell(frame.sma[i], 1, 9),
            cell(frame.rsi[i], 1, 6),
            cell(frame.macd[i], 1, 8),
            cell(frame.volatility[i], 3, 0).trim_end(),
        ));
    }
    out
}

/// A fully built generation prompt plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptPayload {
    pub text: String,
    /// Rendered chart; present exactly for [`ReportType::TiPlots`].
    pub image: Option<Vec<u8>>,
    pub report_type: ReportType,
    pub window_id: String,
    pub prompt_hash: String,
}

/// Builds the generation prompt for one window.
///
/// `frame` is required for the two indicator-aware report types. The plots
/// variant carries the rendered chart as an image part and keeps only the
/// close block in text, ending with the `Technical Indicators:` lead-in the
/// image follows.
pub fn build_prompt(
    report_type: ReportType,
    index_name: &str,
    window: &Window,
    frame: Option<&IndicatorFrame>,
) -> Result<PromptPayload> {
    if window.points.is_empty() {
        return Err(Error::Prompt("window has no points".into()));
    }
    let template = template_text(report_type).replace("{index_name}", index_name);
    let (text, image) = match report_type {
        ReportType::Short => (
            format!("{template}\n\nClosing Prices:\n{}", serialize_close(window)),
            None,
        ),
        ReportType::Ti => {
            let frame = frame.ok_or_else(|| {
                Error::Prompt("technical-indicator report needs an indicator frame".into())
            })?;
            let block = serialize_with_indicators(window, frame)?;
            (
                format!("{template}\n\nTime Series Data with Technical Indicators:\n{block}"),
                None,
            )
        }
        ReportType::TiPlots => {
            let frame = frame.ok_or_else(|| {
                Error::Prompt("plot report needs an indicator frame".into())
            })?;
            let chart = render_chart(window, frame, ChartConfig::default())?;
            (
                format!(
                    "{template}\n\nThe plots show the main technical indicators and this is the Time Series Data:\n\n{}\nTechnical Indicators:",
                    serialize_close(window)
                ),
                Some(chart),
            )
        }
    };
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    if let Some(image) = &image {
        hasher.update(image);
    }
    Ok(PromptPayload {
        prompt_hash: hex::encode(hasher.finalize()),
        text,
        image,
        report_type,
        window_id: format!("{}_{}", window.series_ref, window.id()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::{compute_frame, IndicatorConfig};
    use crate::market::PricePoint;
    use chrono::{Days, NaiveDate};

    fn sample_window() -> Window {
        let rows = [
            ("2020-04-28", 8607.7),
            ("2020-04-29", 8914.7),
            ("2020-04-30", 8889.6),
            ("2020-05-01", 8605.0),
        ];
        let points: Vec<PricePoint> = rows
            .iter()
            .map(|(d, c)| PricePoint {
                date: d.parse().unwrap(),
                close: *c,
            })
            .collect();
        Window {
            series_ref: "nikkei225".into(),
            start_date: "2020-04-28".parse().unwrap(),
            end_date: "2020-05-02".parse().unwrap(),
            points,
        }
    }

    /// Frame carrying the illustrative appendix-style values.
    fn sample_frame() -> IndicatorFrame {
        let w = sample_window();
        IndicatorFrame {
            dates: w.dates(),
            close: w.closes(),
            sma: vec![Some(8210.1), Some(8193.7), Some(8175.2), Some(8152.2)],
            ema: vec![None; 4],
            volatility: vec![Some(0.416), Some(0.425), Some(0.381), Some(0.408)],
            rsi: vec![Some(68.1), Some(69.7), Some(67.9), Some(59.0)],
            macd: vec![Some(175.7), Some(200.0), Some(214.8), Some(201.2)],
            macd_signal: vec![None; 4],
            macd_histogram: vec![None; 4],
            bb_middle: vec![None; 4],
            bb_upper: vec![None; 4],
            bb_lower: vec![None; 4],
            fib_levels: vec![],
            sma_period: 50,
            ema_period: 50,
        }
    }

    #[test]
    fn close_block_matches_reference_rows() {
        let block = serialize_close(&sample_window());
        assert_eq!(
            block,
            "Date       Close\n2020-04-28 8607.7\n2020-04-29 8914.7\n2020-04-30 8889.6\n2020-05-01 8605.0\n"
        );
    }

    #[test]
    fn close_block_single_point() {
        let mut w = sample_window();
        w.points.truncate(1);
        let block = serialize_close(&w);
        assert_eq!(block.lines().count(), 2);
    }

    #[test]
    fn close_block_round_trips_at_one_decimal() {
        let w = sample_window();
        let block = serialize_close(&w);
        for (line, p) in block.lines().skip(1).zip(&w.points) {
            let (d, c) = line.split_once(' ').unwrap();
            assert_eq!(d.parse::<NaiveDate>().unwrap(), p.date);
            assert!((c.trim().parse::<f64>().unwrap() - p.close).abs() < 0.05);
        }
    }

    #[test]
    fn indicator_block_matches_reference_row() {
        let block = serialize_with_indicators(&sample_window(), &sample_frame()).unwrap();
        let lines: Vec<&str> = block.lines().collect();
        assert_eq!(lines[0], "Date       Close    SMA_50  RSI   MACD    Volatility");
        assert_eq!(lines[1], "2020-04-28 8607.7   8210.1   68.1  175.7   0.416");
        assert_eq!(lines[2], "2020-04-29 8914.7   8193.7   69.7  200.0   0.425");
        assert_eq!(lines[3], "2020-04-30 8889.6   8175.2   67.9  214.8   0.381");
        assert_eq!(lines[4], "2020-05-01 8605.0   8152.2   59.0  201.2   0.408");
    }

    #[test]
    fn warm_up_rows_render_na_with_constant_widths() {
        let w = sample_window();
        let frame = compute_frame(&w, &IndicatorConfig::default()).unwrap();
        let block = serialize_with_indicators(&w, &frame).unwrap();
        let lines: Vec<&str> = block.lines().collect();
        // 4-point window with 50-period lookbacks: all indicator cells NA
        for line in &lines[1..] {
            assert_eq!(line.matches("NA").count(), 4, "{line}");
        }
        let close_col: Vec<usize> = lines[1..]
            .iter()
            .map(|l| l.find("NA").unwrap())
            .collect();
        assert!(close_col.windows(2).all(|w| w[0] == w[1]), "NA column drifts");
    }

    #[test]
    fn date_mismatch_is_an_error() {
        let w = sample_window();
        let mut frame = sample_frame();
        frame.dates[0] = frame.dates[0] + Days::new(1);
        assert!(serialize_with_indicators(&w, &frame).is_err());
    }

    #[test]
    fn short_prompt_opens_with_substituted_index_name() {
        let p = build_prompt(ReportType::Short, "Nikkei 225", &sample_window(), None).unwrap();
        assert!(p.text.starts_with(
            "You are a financial analyst tasked with writing a short report analyzing the main aspects of the Nikkei 225 index"
        ));
        assert!(p.image.is_none());
        assert!(!p.text.contains("{index_name}"));
    }

    #[test]
    fn ti_prompts_require_a_frame() {
        assert!(build_prompt(ReportType::Ti, "X", &sample_window(), None).is_err());
        assert!(build_prompt(ReportType::TiPlots, "X", &sample_window(), None).is_err());
    }

    #[test]
    fn plots_prompt_carries_image_and_marker() {
        let w = sample_window();
        let frame = compute_frame(&w, &IndicatorConfig::default()).unwrap();
        let p = build_prompt(ReportType::TiPlots, "S&P 500", &w, Some(&frame)).unwrap();
        assert!(p.text.ends_with("Technical Indicators:"));
        assert!(p.image.is_some());
    }

    #[test]
    fn prompt_hash_is_stable_and_input_sensitive() {
        let w = sample_window();
        let frame = sample_frame();
        let a = build_prompt(ReportType::Ti, "N", &w, Some(&frame)).unwrap();
        let b = build_prompt(ReportType::Ti, "N", &w, Some(&frame)).unwrap();
        assert_eq!(a.prompt_hash, b.prompt_hash);
        let c = build_prompt(ReportType::Ti, "Other", &w, Some(&frame)).unwrap();
        assert_ne!(a.prompt_hash, c.prompt_hash);
    }

    #[test]
    fn stripping_data_blocks_recovers_template() {
        for (rt, marker) in [
            (ReportType::Short, "\n\nClosing Prices:\n"),
            (ReportType::Ti, "\n\nTime Series Data with Technical Indicators:\n"),
            (
                ReportType::TiPlots,
                "\n\nThe plots show the main technical indicators and this is the Time Series Data:\n",
            ),
        ] {
            let w = sample_window();
            let frame = compute_frame(&w, &IndicatorConfig::default()).unwrap();
            let p = build_prompt(rt, "Dow Jones", &w, Some(&frame)).unwrap();
            let head = p.text.split(marker).next().unwrap();
            assert_eq!(head, template_text(rt).replace("{index_name}", "Dow Jones"));
        }
    }
}
