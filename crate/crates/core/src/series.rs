//! Time series in data units, the clean base curves used by the experiments,
//! and CSV/JSON ingestion.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Ordered `(x, y)` samples in data units.
///
/// Construction validates that both arrays have the same length (at least 2)
/// and that `xs` is strictly increasing; the value is immutable afterwards.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TimeSeries {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Validation(format!(
                "xs has {} samples but ys has {}",
                xs.len(),
                ys.len()
            )));
        }
        if ys.len() < 2 {
            return Err(Error::Validation(format!(
                "a series needs at least 2 samples, got {}",
                ys.len()
            )));
        }
        if let Some(v) = xs.iter().chain(ys.iter()).find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite value {v}")));
        }
        if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "xs must be strictly increasing: xs[{}] = {} is not above xs[{}] = {}",
                i + 1,
                xs[i + 1],
                i,
                xs[i]
            )));
        }
        Ok(Self { xs, ys })
    }

    /// Builds a series whose x values are the sample indices `0..n`.
    pub fn from_values(ys: Vec<f64>) -> Result<Self> {
        let xs = (0..ys.len()).map(|i| i as f64).collect();
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Returns `(min, max)` of the y values.
    pub fn y_range(&self) -> (f64, f64) {
        min_max(&self.ys)
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Population standard deviation of the y values.
    pub fn std_dev(&self) -> f64 {
        std_dev(&self.ys)
    }

    /// Applies `f` to every y value, keeping xs.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.xs.clone(), self.ys.iter().map(|&y| f(y)).collect())
    }
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn std_dev(values: &[f64]) -> f64 {
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// The clean curves charts are built from.
///
/// `Linear`, `Cosine`, `Gaussian` and `Poly3` are the general-purpose bases;
/// the remaining four form the shape-identification set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseFunctionKind {
    Linear,
    Cosine,
    Gaussian,
    Poly3,
    IncreasingTrend,
    DecreasingTrend,
    Peak,
    Trough,
}

impl BaseFunctionKind {
    pub const GENERAL: [BaseFunctionKind; 4] = [
        BaseFunctionKind::Linear,
        BaseFunctionKind::Cosine,
        BaseFunctionKind::Gaussian,
        BaseFunctionKind::Poly3,
    ];

    pub const SHAPES: [BaseFunctionKind; 4] = [
        BaseFunctionKind::IncreasingTrend,
        BaseFunctionKind::DecreasingTrend,
        BaseFunctionKind::Peak,
        BaseFunctionKind::Trough,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseFunctionKind::Linear => "linear",
            BaseFunctionKind::Cosine => "cosine",
            BaseFunctionKind::Gaussian => "gaussian",
            BaseFunctionKind::Poly3 => "poly3",
            BaseFunctionKind::IncreasingTrend => "increasing-trend",
            BaseFunctionKind::DecreasingTrend => "decreasing-trend",
            BaseFunctionKind::Peak => "peak",
            BaseFunctionKind::Trough => "trough",
        }
    }

    pub fn is_shape(self) -> bool {
        Self::SHAPES.contains(&self)
    }
}

impl fmt::Display for BaseFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseFunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = Self::GENERAL.iter().chain(Self::SHAPES.iter());
        all.copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown base function '{s}'")))
    }
}

// Shape constants. Each noiseless curve stays below PAE 0.1 at 300x200.
const COSINE_PERIODS: f64 = 2.0;
const GAUSSIAN_CENTER: f64 = 0.5;
const GAUSSIAN_WIDTH: f64 = 0.12;
// t^3 - 0.75 t on t in [-1, 1] has its extrema at t = +-0.5.
const POLY3_LINEAR_COEF: f64 = 0.75;

/// Samples the clean curve `kind` at `n_samples` evenly spaced x values in
/// `[0, 1]`.
///
/// The seed is accepted for signature uniformity; every kind is currently
/// deterministic.
pub fn generate_base(kind: BaseFunctionKind, n_samples: usize, _seed: u64) -> Result<TimeSeries> {
    if n_samples < 2 {
        return Err(invalid(format!(
            "n_samples must be at least 2, got {n_samples}"
        )));
    }
    let last = (n_samples - 1) as f64;
    let xs: Vec<f64> = (0..n_samples).map(|i| i as f64 / last).collect();
    let gaussian = |x: f64| {
        let z = (x - GAUSSIAN_CENTER) / GAUSSIAN_WIDTH;
        (-0.5 * z * z).exp()
    };
    let f = |x: f64| match kind {
        BaseFunctionKind::Linear | BaseFunctionKind::IncreasingTrend => x,
        BaseFunctionKind::DecreasingTrend => -x,
        BaseFunctionKind::Cosine => (2.0 * std::f64::consts::PI * COSINE_PERIODS * x).cos(),
        BaseFunctionKind::Gaussian | BaseFunctionKind::Peak => gaussian(x),
        BaseFunctionKind::Trough => -gaussian(x),
        BaseFunctionKind::Poly3 => {
            let t = 2.0 * x - 1.0;
            t * t * t - POLY3_LINEAR_COEF * t
        }
    };
    let ys = xs.iter().map(|&x| f(x)).collect();
    TimeSeries::new(xs, ys)
}

/// Input encodings accepted by [`load_series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesFormat {
    Csv,
    Json,
}

impl SeriesFormat {
    /// Guesses the format from a file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => SeriesFormat::Json,
            _ => SeriesFormat::Csv,
        }
    }
}

impl FromStr for SeriesFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(SeriesFormat::Csv),
            "json" => Ok(SeriesFormat::Json),
            other => Err(invalid(format!("unknown format '{other}'"))),
        }
    }
}

pub fn load_series(path: impl AsRef<Path>, format: SeriesFormat) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path)?;
    parse_series(&text, format)
}

pub fn parse_series(text: &str, format: SeriesFormat) -> Result<TimeSeries> {
    match format {
        SeriesFormat::Csv => parse_csv(text),
        SeriesFormat::Json => parse_json(text),
    }
}

/// Two-column `x,y` CSV with a header row; reads back with [`parse_series`].
pub fn series_to_csv(series: &TimeSeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y"]).map_err(csv_io)?;
    for (x, y) in series.xs().iter().zip(series.ys()) {
        w.write_record([x.to_string(), y.to_string()]).map_err(csv_io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("numbers format as ASCII"))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Deserialize)]
struct JsonSeries {
    #[serde(default)]
    xs: Option<Vec<f64>>,
    ys: Vec<f64>,
}

fn parse_json(text: &str) -> Result<TimeSeries> {
    let raw: JsonSeries = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    match raw.xs {
        Some(xs) => TimeSeries::new(xs, raw.ys),
        None => TimeSeries::from_values(raw.ys),
    }
}

fn parse_csv(text: &str) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut columns: Option<usize> = None;
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            // A non-numeric first row is a header.
            Err(_) if first => {
                first = false;
                columns = Some(record.len());
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    message: format!("{e} in row {:?}", record.iter().collect::<Vec<_>>()),
                })
            }
        };
        first = false;
        let width = *columns.get_or_insert(values.len());
        if values.len() != width || !(1..=2).contains(&width) {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} column(s) (1 or 2), found {}", values.len()),
            });
        }
        if width == 2 {
            xs.push(values[0]);
            ys.push(values[1]);
        } else {
            ys.push(values[0]);
        }
    }
    if xs.is_empty() {
        TimeSeries::from_values(ys)
    } else {
        TimeSeries::new(xs, ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sign_changes(ys: &[f64]) -> usize {
        let signs: Vec<f64> = ys
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d != 0.0)
            .map(f64::signum)
            .collect();
        signs.windows(2).filter(|s| s[0] != s[1]).count()
    }

    #[test]
    fn linear_is_exactly_affine() {
        let s = generate_base(BaseFunctionKind::Linear, 300, 7).unwrap();
        // Least-squares line through (i, ys[i]).
        let n = s.len() as f64;
        let is: Vec<f64> = (0..s.len()).map(|i| i as f64).collect();
        let mi = mean(&is);
        let my = mean(s.ys());
        let sxy: f64 = is.iter().zip(s.ys()).map(|(i, y)| (i - mi) * (y - my)).sum();
        let sxx: f64 = is.iter().map(|i| (i - mi) * (i - mi)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mi;
        let max_resid = is
            .iter()
            .zip(s.ys())
            .map(|(i, y)| (y - (icpt + slope * i)).abs())
            .fold(0.0, f64::max);
        assert!(max_resid < 1e-12, "residual {max_resid} (n = {n})");
    }

    #[test]
    fn gaussian_peaks_at_center() {
        let s = generate_base(BaseFunctionKind::Gaussian, 300, 0).unwrap();
        let (imax, _) = s
            .ys()
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!((imax as f64 - 149.5).abs() <= 1.0, "argmax {imax}");
    }

    #[test]
    fn poly3_has_two_interior_extrema() {
        let s = generate_base(BaseFunctionKind::Poly3, 300, 0).unwrap();
        assert_eq!(sign_changes(s.ys()), 2);
    }

    #[test]
    fn shapes_have_expected_silhouettes() {
        let inc = generate_base(BaseFunctionKind::IncreasingTrend, 100, 0).unwrap();
        assert!(inc.ys().windows(2).all(|w| w[1] > w[0]));
        let dec = generate_base(BaseFunctionKind::DecreasingTrend, 100, 0).unwrap();
        assert!(dec.ys().windows(2).all(|w| w[1] < w[0]));
        for kind in [BaseFunctionKind::Peak, BaseFunctionKind::Trough] {
            let s = generate_base(kind, 101, 0).unwrap();
            assert_eq!(sign_changes(s.ys()), 1, "{kind}");
        }
        let cos = generate_base(BaseFunctionKind::Cosine, 300, 0).unwrap();
        // Two full periods starting at a crest: three interior extrema.
        assert_eq!(sign_changes(cos.ys()), 3);
    }

    #[test]
    fn generation_is_pure_and_nondegenerate() {
        for kind in BaseFunctionKind::GENERAL.iter().chain(&BaseFunctionKind::SHAPES) {
            let a = generate_base(*kind, 257, 1).unwrap();
            let b = generate_base(*kind, 257, 99).unwrap();
            assert_eq!(a, b);
            assert!(a.std_dev() > 0.0, "{kind}");
            let (lo, hi) = a.y_range();
            assert!(hi > lo);
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(matches!(
            generate_base(BaseFunctionKind::Linear, 1, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn csv_single_column_synthesizes_index() {
        let s = parse_series("y\n1\n2\n3", SeriesFormat::Csv).unwrap();
        assert_eq!(s.xs(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.ys(), &[1.0, 2.0, 3.0]);
        let headerless = parse_series("4\n5\n", SeriesFormat::Csv).unwrap();
        assert_eq!(headerless.ys(), &[4.0, 5.0]);
    }

    #[test]
    fn csv_two_columns() {
        let s = parse_series("x,y\n0.5,1\n1.5,4\n", SeriesFormat::Csv).unwrap();
        assert_eq!(s.xs(), &[0.5, 1.5]);
        assert_eq!(s.ys(), &[1.0, 4.0]);
    }

    #[test]
    fn csv_non_increasing_x_is_validation_error() {
        let err = parse_series("x,y\n0,1\n1,2\n1,3\n", SeriesFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let err = parse_series("y\n1\nabc\n3\n", SeriesFormat::Csv).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn json_mapping() {
        let s = parse_series(r#"{"xs":[0,1],"ys":[5,7]}"#, SeriesFormat::Json).unwrap();
        assert_eq!(s.xs(), &[0.0, 1.0]);
        assert_eq!(s.ys(), &[5.0, 7.0]);
        let s = parse_series(r#"{"ys":[5,7,9]}"#, SeriesFormat::Json).unwrap();
        assert_eq!(s.xs(), &[0.0, 1.0, 2.0]);
        assert!(parse_series(r#"{"xs":[0,0],"ys":[5,7]}"#, SeriesFormat::Json).is_err());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(SeriesFormat::from_path(Path::new("a.JSON")), SeriesFormat::Json);
        assert_eq!(SeriesFormat::from_path(Path::new("a.csv")), SeriesFormat::Csv);
        assert_eq!("json".parse::<SeriesFormat>().unwrap(), SeriesFormat::Json);
    }

    #[test]
    fn kind_round_trips_through_name() {
        for kind in BaseFunctionKind::GENERAL.iter().chain(&BaseFunctionKind::SHAPES) {
            assert_eq!(kind.name().parse::<BaseFunctionKind>().unwrap(), *kind);
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = TimeSeries::new(vec![0.0, 1.5, 3.0], vec![0.1, -2.0, 1e-9]).unwrap();
        let text = series_to_csv(&s).unwrap();
        assert!(text.starts_with("x,y\n"));
        assert_eq!(parse_series(&text, SeriesFormat::Csv).unwrap(), s);
    }
}
