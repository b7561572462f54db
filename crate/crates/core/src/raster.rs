//! Mapping a [`TimeSeries`] into pixel space and drawing charts.
//!
//! A chart is represented by one real-valued y per pixel column
//! ([`PixelSeries`]); y is measured upward from the bottom edge and spans
//! `[0, height]`. Values stay unrounded so that entropy tolerances keep
//! sub-pixel meaning. Images are only quantized when drawn.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::TimeSeries;

/// Chart resolution in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChartDims {
    pub width: usize,
    pub height: usize,
}

impl ChartDims {
    pub const MIN_SIDE: usize = 4;

    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < Self::MIN_SIDE || height < Self::MIN_SIDE {
            return Err(invalid(format!(
                "chart dimensions must be at least {m}x{m}, got {width}x{height}",
                m = Self::MIN_SIDE
            )));
        }
        Ok(Self { width, height })
    }

    pub fn scaled(self, width_factor: usize, height_factor: usize) -> Self {
        Self {
            width: self.width * width_factor,
            height: self.height * height_factor,
        }
    }
}

impl Default for ChartDims {
    fn default() -> Self {
        Self {
            width: 300,
            height: 200,
        }
    }
}

impl fmt::Display for ChartDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for ChartDims {
    type Err = Error;

    /// Parses `WxH`, e.g. `300x200`.
    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| invalid(format!("expected WxH, got '{s}'")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("bad dimension '{v}' in '{s}'")))
        };
        ChartDims::new(parse(w)?, parse(h)?)
    }
}

/// One y value per pixel column, in pixel units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelSeries {
    ys: Vec<f64>,
    dims: ChartDims,
    /// Pixels per data unit on the y axis; 1.0 when built directly in pixels.
    y_scale: f64,
}

impl PixelSeries {
    pub fn new(ys: Vec<f64>, dims: ChartDims) -> Result<Self> {
        Self::with_scale(ys, dims, 1.0)
    }

    pub fn with_scale(ys: Vec<f64>, dims: ChartDims, y_scale: f64) -> Result<Self> {
        ChartDims::new(dims.width, dims.height)?;
        if ys.len() != dims.width {
            return Err(Error::Validation(format!(
                "pixel series has {} columns but the chart is {} wide",
                ys.len(),
                dims.width
            )));
        }
        let h = dims.height as f64;
        if let Some((i, y)) = ys
            .iter()
            .enumerate()
            .find(|(_, y)| !(0.0..=h).contains(*y))
        {
            return Err(Error::Validation(format!(
                "column {i} has y = {y}, outside [0, {h}]"
            )));
        }
        if !(y_scale.is_finite() && y_scale >= 0.0) {
            return Err(invalid(format!("y scale must be finite and >= 0, got {y_scale}")));
        }
        Ok(Self { ys, dims, y_scale })
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn dims(&self) -> ChartDims {
        self.dims
    }

    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Returns a copy with new column values; values are clamped into
    /// `[0, height]`.
    pub(crate) fn with_values(&self, ys: Vec<f64>) -> Self {
        debug_assert_eq!(ys.len(), self.dims.width);
        let h = self.dims.height as f64;
        Self {
            ys: ys.into_iter().map(|y| y.clamp(0.0, h)).collect(),
            dims: self.dims,
            y_scale: self.y_scale,
        }
    }

    /// Reinterprets the pixel values as a data series with x = column index.
    pub fn to_time_series(&self) -> TimeSeries {
        TimeSeries::from_values(self.ys.clone()).expect("chart width is at least 4")
    }
}

/// Rasterizes `series` to one value per column of `dims`.
///
/// The x range maps affinely onto columns `0..width-1` and the y range onto
/// `[0, height]`; each column samples the data polyline by linear
/// interpolation. A flat series lands at `height / 2`.
pub fn rasterize(series: &TimeSeries, dims: ChartDims) -> Result<PixelSeries> {
    let dims = ChartDims::new(dims.width, dims.height)?;
    let xs = series.xs();
    let ys = series.ys();
    let (x0, x1) = series.x_range();
    let (lo, hi) = series.y_range();
    let h = dims.height as f64;
    let last_col = (dims.width - 1) as f64;

    if hi <= lo {
        return PixelSeries::with_scale(vec![h / 2.0; dims.width], dims, 0.0);
    }
    let scale = h / (hi - lo);

    let mut out = Vec::with_capacity(dims.width);
    let mut seg = 0;
    for col in 0..dims.width {
        let x = if col + 1 == dims.width {
            x1
        } else {
            x0 + (x1 - x0) * (col as f64 / last_col)
        };
        while seg + 2 < xs.len() && xs[seg + 1] < x {
            seg += 1;
        }
        let t = ((x - xs[seg]) / (xs[seg + 1] - xs[seg])).clamp(0.0, 1.0);
        let v = ys[seg] + t * (ys[seg + 1] - ys[seg]);
        out.push(((v - lo) * scale).clamp(0.0, h));
    }
    PixelSeries::with_scale(out, dims, scale)
}

/// An 8-bit RGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const BLACK: Rgb = Rgb(0, 0, 0);
    pub const WHITE: Rgb = Rgb(255, 255, 255);

    /// Integer Rec. 601 luma, used for the grayscale raster.
    pub fn luma(self) -> u8 {
        let Rgb(r, g, b) = self;
        ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
    }

    fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartStyle {
    pub line: Rgb,
    pub background: Rgb,
    pub stroke_width: f64,
}

impl Default for ChartStyle {
    fn default() -> Self {
        Self {
            line: Rgb::BLACK,
            background: Rgb::WHITE,
            stroke_width: 1.0,
        }
    }
}

/// The two encodings produced for every chart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedChart {
    pub svg: String,
    pub pgm: Vec<u8>,
}

pub fn render_chart(ps: &PixelSeries, style: &ChartStyle) -> RenderedChart {
    RenderedChart {
        svg: render_svg(ps, style),
        pgm: render_pgm(ps, style),
    }
}

/// SVG 1.1 document with a single polyline through the column points.
pub fn render_svg(ps: &PixelSeries, style: &ChartStyle) -> String {
    let ChartDims { width, height } = ps.dims();
    let h = height as f64;
    let mut points = String::with_capacity(ps.len() * 14);
    for (col, y) in ps.ys().iter().enumerate() {
        if col > 0 {
            points.push(' ');
        }
        let _ = write!(points, "{col},{:.3}", h - y);
    }
    format!(
        concat!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ",
            "width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"{bg}\"/>\n",
            "<polyline fill=\"none\" stroke=\"{fg}\" stroke-width=\"{sw}\" points=\"{pts}\"/>\n",
            "</svg>\n"
        ),
        w = width,
        h = height,
        bg = style.background.hex(),
        fg = style.line.hex(),
        sw = style.stroke_width,
        pts = points,
    )
}

/// Binary PGM (P5, maxval 255) with 1px Bresenham segments between adjacent
/// columns, widened by a square brush when `stroke_width > 1`.
pub fn render_pgm(ps: &PixelSeries, style: &ChartStyle) -> Vec<u8> {
    let ChartDims { width, height } = ps.dims();
    let header = format!("P5 {width} {height} 255\n");
    let mut raster = vec![style.background.luma(); width * height];
    let ink = style.line.luma();
    let brush = style.stroke_width.round().max(1.0) as i64;
    let lo = -(brush - 1) / 2;
    let hi = brush / 2;

    let rows: Vec<i64> = ps.ys().iter().map(|&y| pixel_row(y, height)).collect();
    let mut plot = |x: i64, y: i64| {
        for dy in lo..=hi {
            for dx in lo..=hi {
                let (px, py) = (x + dx, y + dy);
                if (0..width as i64).contains(&px) && (0..height as i64).contains(&py) {
                    raster[py as usize * width + px as usize] = ink;
                }
            }
        }
    };
    if rows.len() == 1 {
        plot(0, rows[0]);
    }
    for (col, pair) in rows.windows(2).enumerate() {
        bresenham(col as i64, pair[0], col as i64 + 1, pair[1], &mut plot);
    }

    let mut out = header.into_bytes();
    out.extend_from_slice(&raster);
    out
}

/// Image row of a pixel-space y (row 0 at the top).
fn pixel_row(y: f64, height: usize) -> i64 {
    let h = height as f64;
    let row = ((h - 1.0) * (1.0 - y / h)).round() as i64;
    row.clamp(0, height as i64 - 1)
}

fn bresenham(mut x0: i64, mut y0: i64, x1: i64, y1: i64, plot: &mut impl FnMut(i64, i64)) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(x0, y0);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// The information-free chart shown between stimulus and response: i.i.d.
/// uniform column heights, which keeps the line-chart look at a very high PAE.
pub fn mask_series(dims: ChartDims, seed: u64) -> Result<PixelSeries> {
    let dims = ChartDims::new(dims.width, dims.height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = dims.height as f64;
    let ys = (0..dims.width).map(|_| rng.gen_range(0.0..=h)).collect();
    PixelSeries::new(ys, dims)
}

pub fn render_mask(dims: ChartDims, seed: u64) -> Result<RenderedChart> {
    Ok(render_chart(&mask_series(dims, seed)?, &ChartStyle::default()))
}
