//! Deterministic chart rendering for multimodal prompts.
//!
//! Four stacked panels: close with moving averages, Bollinger overlay, RSI,
//! and MACD. Rasterization is done in-process with integer line drawing and a
//! built-in 5x7 bitmap font, so identical inputs produce identical PNG bytes
//! on any platform.

use std::io::Cursor;

use image::{ImageBuffer, Rgb};

use crate::error::{Error, Result};
use crate::indicators::IndicatorFrame;
use crate::market::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartConfig {
    pub width: u32,
    pub panel_height: u32,
}

impl Default for ChartConfig {
    fn default() -> Self {
        Self {
            width: 900,
            panel_height: 300,
        }
    }
}

const BLACK: Rgb<u8> = Rgb([20, 20, 20]);
const BLUE: Rgb<u8> = Rgb([40, 90, 200]);
const ORANGE: Rgb<u8> = Rgb([230, 140, 20]);
const GRAY: Rgb<u8> = Rgb([150, 150, 150]);
const LIGHT: Rgb<u8> = Rgb([220, 220, 220]);
const PURPLE: Rgb<u8> = Rgb([130, 60, 180]);
const RED: Rgb<u8> = Rgb([200, 40, 40]);
const WHITE: Rgb<u8> = Rgb([255, 255, 255]);

type Canvas = ImageBuffer<Rgb<u8>, Vec<u8>>;

/// Renders the four-panel indicator chart for one window as PNG bytes.
pub fn render_chart(window: &Window, frame: &IndicatorFrame, cfg: ChartConfig) -> Result<Vec<u8>> {
    if frame.dates.len() != window.points.len() {
        return Err(Error::Prompt(format!(
            "frame has {} rows but window {} has {} points",
            frame.dates.len(),
            window.id(),
            window.points.len()
        )));
    }
    let width = cfg.width;
    let height = cfg.panel_height * 4;
    let mut img: Canvas = ImageBuffer::from_pixel(width, height, WHITE);

    let closes: Vec<Option<f64>> = frame.close.iter().map(|c| Some(*c)).collect();

    let panel = |img: &mut Canvas, index: u32, title: &str, series: &[(&[Option<f64>], Rgb<u8>)], bars: Option<&[Option<f64>]>, ylines: &[f64]| {
        let top = index * cfg.panel_height;
        draw_panel(img, width, top, cfg.panel_height, title, series, bars, ylines);
    };

    panel(
        &mut img,
        0,
        "CLOSE / SMA / EMA",
        &[(&closes, BLACK), (&frame.sma, BLUE), (&frame.ema, ORANGE)],
        None,
        &[],
    );
    panel(
        &mut img,
        1,
        "BOLLINGER",
        &[
            (&closes, BLACK),
            (&frame.bb_upper, GRAY),
            (&frame.bb_middle, LIGHT),
            (&frame.bb_lower, GRAY),
        ],
        None,
        &[],
    );
    panel(
        &mut img,
        2,
        "RSI",
        &[(&frame.rsi, PURPLE)],
        None,
        &[30.0, 70.0],
    );
    panel(
        &mut img,
        3,
        "MACD",
        &[(&frame.macd, BLUE), (&frame.macd_signal, RED)],
        Some(&frame.macd_histogram),
        &[0.0],
    );

    let mut bytes = Vec::new();
    img.write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::Prompt(format!("png encoding failed: {e}")))?;
    Ok(bytes)
}

#[allow(clippy::too_many_arguments)]
fn draw_panel(
    img: &mut Canvas,
    width: u32,
    top: u32,
    height: u32,
    title: &str,
    series: &[(&[Option<f64>], Rgb<u8>)],
    bars: Option<&[Option<f64>]>,
    ylines: &[f64],
) {
    let pad = 12i64;
    let left = pad;
    let right = width as i64 - pad;
    let p_top = top as i64 + pad + 18; // room for the title row
    let p_bottom = (top + height) as i64 - pad;

    // border
    draw_rect(img, left, top as i64 + pad, right, p_bottom, LIGHT);
    draw_text(img, left + 4, top as i64 + pad + 4, title, BLACK, 2);

    // y-range over everything drawn in this panel
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for (col, _) in series {
        for v in col.iter().flatten() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if let Some(bars) = bars {
        for v in bars.iter().flatten() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    for y in ylines {
        lo = lo.min(*y);
        hi = hi.max(*y);
    }
    if lo > hi {
        // nothing defined: fix an arbitrary range so the panel stays valid
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let span = hi - lo;
    lo -= span * 0.05;
    hi += span * 0.05;

    let n = series
        .iter()
        .map(|(col, _)| col.len())
        .chain(bars.map(|b| b.len()))
        .max()
        .unwrap_or(1)
        .max(1);
    let x_at = |i: usize| -> i64 {
        if n <= 1 {
            (left + right) / 2
        } else {
            left + 1 + ((right - left - 2) as f64 * i as f64 / (n - 1) as f64).round() as i64
        }
    };
    let y_at = |v: f64| -> i64 {
        p_bottom - 1 - (((p_bottom - p_top - 2) as f64) * (v - lo) / (hi - lo)).round() as i64
    };

    for y in ylines {
        let py = y_at(*y);
        let mut x = left + 2;
        while x < right - 2 {
            draw_line(img, x, py, (x + 4).min(right - 3), py, LIGHT);
            x += 9;
        }
    }

    if let Some(bars) = bars {
        let y0 = y_at(0.0);
        for (i, v) in bars.iter().enumerate() {
            if let Some(v) = v {
                let x = x_at(i);
                draw_line(img, x, y0, x, y_at(*v), GRAY);
            }
        }
    }

    for (col, color) in series {
        let mut prev: Option<(i64, i64)> = None;
        for (i, v) in col.iter().enumerate() {
            match v {
                Some(v) => {
                    let pt = (x_at(i), y_at(*v));
                    if let Some(p) = prev {
                        draw_line(img, p.0, p.1, pt.0, pt.1, *color);
                    } else {
                        draw_line(img, pt.0, pt.1, pt.0, pt.1, *color);
                    }
                    prev = Some(pt);
                }
                None => prev = None,
            }
        }
    }
}

fn put(img: &mut Canvas, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}

fn draw_rect(img: &mut Canvas, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb<u8>) {
    draw_line(img, x0, y0, x1, y0, color);
    draw_line(img, x0, y1, x1, y1, color);
    draw_line(img, x0, y0, x0, y1, color);
    draw_line(img, x1, y0, x1, y1, color);
}

fn draw_line(img: &mut Canvas, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb<u8>) {
    let (mut x, mut y) = (x0, y0);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn draw_text(img: &mut Canvas, x: i64, y: i64, text: &str, color: Rgb<u8>, scale: i64) {
    let mut cx = x;
    for ch in text.chars() {
        let glyph = glyph(ch);
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..5 {
                if bits & (0x10 >> col) != 0 {
                    for dy in 0..scale {
                        for dx in 0..scale {
                            put(
                                img,
                                cx + col as i64 * scale + dx,
                                y + row as i64 * scale + dy,
                                color,
                            );
                        }
                    }
                }
            }
        }
        cx += 6 * scale;
    }
}

/// 5x7 glyphs, one byte per row, low 5 bits used, MSB on the left.
fn glyph(c: char) -> [u8; 7] {
    match c.to_ascii_uppercase() {
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'G' => [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
        'H' => [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'J' => [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C],
        'K' => [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
        'L' => [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'Q' => [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'S' => [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'U' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'V' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'W' => [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A],
        'X' => [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
        'Y' => [0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04],
        'Z' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        '_' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        '/' => [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10],
        '%' => [0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13],
        _ => [0x00; 7],
    }
}
