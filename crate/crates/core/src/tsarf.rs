//! Three-stage adjusted regression forecasting.
//!
//! The training curve is cut into `W` consecutive, non-overlapping blocks of
//! `k` points aligned to the end of training. Each block gets its own
//! straight-line fit on raw time (stage 1). Every coefficient column of the
//! resulting `W × 2` history is then regressed on the window index
//! `i = 1..W` and extrapolated to `i = W + 1` (stage 2). The extrapolation is
//! shifted by the residual of the trend line at the last window, and finally
//! blended with the mean of the `d` coefficients preceding the last window
//! (stage 3). The outcome is the *predicted line* for the next window.

use serde::{Deserialize, Serialize};

use crate::dataset::GrowthCurve;
use crate::error::{Error, Result};
use crate::regression::fit_line;

/// Default stage-3 blend weight.
pub const DEFAULT_BLEND_WEIGHT: f64 = 0.5;

/// Relative tolerance under which two holdout MSEs are considered equal.
pub const MSE_TIE_TOLERANCE: f64 = 1e-12;

/// Smallest admissible window size.
pub const MIN_WINDOW: usize = 3;

/// Intercept and slope of a straight line `y = intercept + slope · t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub intercept: f64,
    pub slope: f64,
}

impl Line {
    pub fn new(intercept: f64, slope: f64) -> Self {
        Line { intercept, slope }
    }

    /// Coefficient `rho` (0 = intercept, 1 = slope).
    pub fn get(&self, rho: usize) -> f64 {
        match rho {
            0 => self.intercept,
            1 => self.slope,
            _ => panic!("line coefficient index {rho} out of range"),
        }
    }

    fn from_fn(mut f: impl FnMut(usize) -> f64) -> Self {
        Line::new(f(0), f(1))
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }

    pub fn is_finite(&self) -> bool {
        self.intercept.is_finite() && self.slope.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSize {
    /// `max(3, floor(0.1 · n_train))`.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaLength {
    /// Chosen by holding out the last training window.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsarfConfig {
    pub window: WindowSize,
    pub ma: MaLength,
    /// Weight on the corrected forecast; the moving average gets `1 − w`.
    pub blend_weight: f64,
}

impl Default for TsarfConfig {
    fn default() -> Self {
        TsarfConfig {
            window: WindowSize::Auto,
            ma: MaLength::Auto,
            blend_weight: DEFAULT_BLEND_WEIGHT,
        }
    }
}

impl TsarfConfig {
    pub fn fixed(k: usize, d: usize) -> Self {
        TsarfConfig {
            window: WindowSize::Fixed(k),
            ma: MaLength::Fixed(d),
            blend_weight: DEFAULT_BLEND_WEIGHT,
        }
    }

    pub fn window_size(&self, n_train: usize) -> usize {
        match self.window {
            WindowSize::Auto => auto_window_size(n_train),
            WindowSize::Fixed(k) => k,
        }
    }
}

/// Ten percent of the training length, floored, but never below three.
pub fn auto_window_size(n_train: usize) -> usize {
    (n_train / 10).max(MIN_WINDOW)
}

/// Half-open range `[start, end)` of training point indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// Splits training into `floor(n / k)` blocks of `k` points ending at the
/// last training point. Leading points that do not fill a block are dropped.
pub fn partition_windows(train: &GrowthCurve, k: usize) -> Result<Vec<Window>> {
    if k < MIN_WINDOW {
        return Err(Error::usage(format!("window size {k} is below the minimum of {MIN_WINDOW}")));
    }
    let n = train.len();
    if n < 2 * k {
        return Err(Error::InsufficientData(format!(
            "{n} training points give fewer than two windows of size {k}"
        )));
    }
    let count = n / k;
    let offset = n - count * k;
    Ok((0..count)
        .map(|w| Window {
            start: offset + w * k,
            end: offset + (w + 1) * k,
        })
        .collect())
}

/// Per-window line fits, ordered by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientHistory {
    pub rows: Vec<Line>,
    pub windows: Vec<Window>,
    /// First and last time of each window.
    pub spans: Vec<(f64, f64)>,
}

impl CoefficientHistory {
    /// Builds a history directly from coefficient rows, without windows.
    pub fn from_rows(rows: Vec<Line>) -> Self {
        CoefficientHistory {
            rows,
            windows: Vec::new(),
            spans: Vec::new(),
        }
    }

    pub fn window_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, rho: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(rho)).collect()
    }

    pub fn last(&self) -> Line {
        *self.rows.last().expect("coefficient history is never empty")
    }

    fn truncated(&self, w: usize) -> CoefficientHistory {
        CoefficientHistory {
            rows: self.rows[..w].to_vec(),
            windows: self.windows.iter().take(w).copied().collect(),
            spans: self.spans.iter().take(w).copied().collect(),
        }
    }
}

/// Stage 1: cumulative count regressed on raw time inside every window.
pub fn fit_windows(train: &GrowthCurve, windows: &[Window]) -> Result<CoefficientHistory> {
    let pts = train.points();
    let mut rows = Vec::with_capacity(windows.len());
    let mut spans = Vec::with_capacity(windows.len());
    for (w, win) in windows.iter().enumerate() {
        if win.end > pts.len() || win.start >= win.end {
            return Err(Error::usage(format!("window {w} does not lie inside the training data")));
        }
        let slice = &pts[win.range()];
        let t: Vec<f64> = slice.iter().map(|p| p.t).collect();
        let y: Vec<f64> = slice.iter().map(|p| p.count).collect();
        let beta = fit_line(&t, &y).map_err(|e| match e {
            Error::RankDeficient { .. } => Error::DegenerateWindow { window: w + 1 },
            other => other,
        })?;
        rows.push(Line::new(beta[0], beta[1]));
        spans.push((t[0], t[t.len() - 1]));
    }
    Ok(CoefficientHistory {
        rows,
        windows: windows.to_vec(),
        spans,
    })
}

/// Stage 2 trend lines, one per coefficient, over window index `i = 1..W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTwoFit {
    pub intercept_trend: Line,
    pub slope_trend: Line,
    pub window_count: usize,
}

impl StageTwoFit {
    pub fn trend(&self, rho: usize) -> Line {
        match rho {
            0 => self.intercept_trend,
            1 => self.slope_trend,
            _ => panic!("line coefficient index {rho} out of range"),
        }
    }

    /// Trend-line value of every coefficient at window index `i`.
    pub fn at(&self, i: f64) -> Line {
        Line::from_fn(|rho| self.trend(rho).eval(i))
    }
}

/// Stage 2: fits each history column against its window index and
/// extrapolates one window ahead.
pub fn forecast_coefficients(history: &CoefficientHistory) -> Result<(StageTwoFit, Line)> {
    let w = history.window_count();
    if w < 2 {
        return Err(Error::InsufficientData(format!(
            "{w} window(s); at least two are needed to forecast coefficients"
        )));
    }
    let index: Vec<f64> = (1..=w).map(|i| i as f64).collect();
    let trend = |rho: usize| -> Result<Line> {
        let b = fit_line(&index, &history.column(rho))?;
        Ok(Line::new(b[0], b[1]))
    };
    let stage2 = StageTwoFit {
        intercept_trend: trend(0)?,
        slope_trend: trend(1)?,
        window_count: w,
    };
    let raw = stage2.at((w + 1) as f64);
    Ok((stage2, raw))
}

/// Stage 3a: `ε = β̂_W − trend(W)`, added to the raw forecast.
///
/// Returns `(corrected, epsilon)`.
pub fn error_correct(raw: Line, stage2: &StageTwoFit, history: &CoefficientHistory) -> (Line, Line) {
    let w = history.window_count() as f64;
    let last = history.last();
    let fitted = stage2.at(w);
    let epsilon = Line::from_fn(|rho| last.get(rho) - fitted.get(rho));
    let corrected = Line::from_fn(|rho| raw.get(rho) + epsilon.get(rho));
    (corrected, epsilon)
}

/// Mean of the `d` history rows immediately before the last window.
pub fn moving_average(history: &CoefficientHistory, d: usize) -> Result<Line> {
    let w = history.window_count();
    if d == 0 || d >= w {
        return Err(Error::usage(format!(
            "moving-average length {d} must lie in 1..={} for {w} windows",
            w.saturating_sub(1)
        )));
    }
    let prior = &history.rows[w - 1 - d..w - 1];
    Ok(Line::from_fn(|rho| {
        prior.iter().map(|r| r.get(rho)).sum::<f64>() / d as f64
    }))
}

/// Stage 3b: `w · corrected + (1 − w) · MA_d`. With the default weight of
/// one half this is the plain average of the two.
pub fn apply_moving_average(corrected: Line, history: &CoefficientHistory, d: usize, blend_weight: f64) -> Result<Line> {
    if !(0.0..=1.0).contains(&blend_weight) {
        return Err(Error::usage(format!("blend weight {blend_weight} must lie in [0, 1]")));
    }
    let ma = moving_average(history, d)?;
    Ok(Line::from_fn(|rho| {
        blend_weight * corrected.get(rho) + (1.0 - blend_weight) * ma.get(rho)
    }))
}

/// Stages 2 and 3 for a given history and MA length.
fn forecast_from_history(history: &CoefficientHistory, d: usize, blend_weight: f64) -> Result<Line> {
    let (stage2, raw) = forecast_coefficients(history)?;
    let (corrected, _) = error_correct(raw, &stage2, history);
    apply_moving_average(corrected, history, d, blend_weight)
}

/// Outcome of the holdout search over moving-average lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaSelection {
    pub d: usize,
    /// `(d, holdout MSE)` for every candidate evaluated.
    pub candidates: Vec<(usize, f64)>,
    /// Set when too few windows were available and `d = 1` was used.
    pub fallback: bool,
}

/// Holds out the last training window, forecasts it from the preceding
/// `W − 1` windows with every `d ∈ 1..=W−2`, and returns the `d` whose
/// predicted line has the smallest MSE on the held-out points. Ties go to
/// the smaller `d`.
pub fn select_ma_length(history: &CoefficientHistory, train: &GrowthCurve, blend_weight: f64) -> Result<MaSelection> {
    let w = history.window_count();
    if w < 3 {
        return Ok(MaSelection {
            d: 1,
            candidates: Vec::new(),
            fallback: true,
        });
    }
    let held = history
        .windows
        .get(w - 1)
        .copied()
        .ok_or_else(|| Error::usage("coefficient history carries no window ranges"))?;
    let held_points = &train.points()[held.range()];
    let earlier = history.truncated(w - 1);

    let mut candidates = Vec::with_capacity(w - 2);
    for d in 1..=w - 2 {
        let line = forecast_from_history(&earlier, d, blend_weight)?;
        let mse = held_points
            .iter()
            .map(|p| (line.eval(p.t) - p.count).powi(2))
            .sum::<f64>()
            / held_points.len() as f64;
        candidates.push((d, mse));
    }

    // MSEs within rounding of each other, relative to the squared counts
    // of the held-out window, count as ties.
    let scale = held_points.iter().map(|p| p.count * p.count).sum::<f64>() / held_points.len() as f64;
    let tie = MSE_TIE_TOLERANCE * scale.max(1.0);
    let mut best = candidates[0];
    for &(d, mse) in &candidates[1..] {
        if mse < best.1 - tie {
            best = (d, mse);
        }
    }
    Ok(MaSelection {
        d: best.0,
        candidates,
        fallback: false,
    })
}

/// The forecast predicted line plus every intermediate that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsarfModel {
    /// Final predicted-line coefficients.
    pub line: Line,
    pub raw_forecast: Line,
    pub corrected: Line,
    pub epsilon: Line,
    pub stage_two: StageTwoFit,
    pub history: CoefficientHistory,
    pub k_used: usize,
    pub d_used: usize,
    pub blend_weight: f64,
    pub ma_selection: Option<MaSelection>,
    pub diagnostics: Vec<String>,
}

impl TsarfModel {
    pub fn predicted_line(&self, times: &[f64]) -> Vec<f64> {
        predicted_line(self.line, times)
    }

    /// Stage-1 fitted value for each training point, `None` for points
    /// dropped ahead of the first window.
    pub fn window_fit_values(&self, train: &GrowthCurve) -> Vec<Option<f64>> {
        let pts = train.points();
        let mut out = vec![None; pts.len()];
        for (win, line) in self.history.windows.iter().zip(&self.history.rows) {
            for i in win.range().filter(|&i| i < pts.len()) {
                out[i] = Some(line.eval(pts[i].t));
            }
        }
        out
    }
}

/// Evaluates `y₀ + y₁·t` at each time.
pub fn predicted_line(line: Line, times: &[f64]) -> Vec<f64> {
    times.iter().map(|&t| line.eval(t)).collect()
}

/// Runs all three stages on a training curve.
pub fn tsarf_forecast(train: &GrowthCurve, config: &TsarfConfig) -> Result<TsarfModel> {
    let k = config.window_size(train.len());
    let windows = partition_windows(train, k)?;
    let history = fit_windows(train, &windows)?;
    let (stage_two, raw_forecast) = forecast_coefficients(&history)?;
    let (corrected, epsilon) = error_correct(raw_forecast, &stage_two, &history);

    let mut diagnostics = Vec::new();
    let (d_used, ma_selection) = match config.ma {
        MaLength::Fixed(d) => (d, None),
        MaLength::Auto => {
            let sel = select_ma_length(&history, train, config.blend_weight)?;
            if sel.fallback {
                diagnostics.push(format!(
                    "only {} windows; moving-average length fell back to 1",
                    history.window_count()
                ));
            }
            (sel.d, Some(sel))
        }
    };
    let line = apply_moving_average(corrected, &history, d_used, config.blend_weight)?;
    if !line.is_finite() {
        return Err(Error::DegenerateData("predicted line is not finite".into()));
    }
    Ok(TsarfModel {
        line,
        raw_forecast,
        corrected,
        epsilon,
        stage_two,
        history,
        k_used: k,
        d_used,
        blend_weight: config.blend_weight,
        ma_selection,
        diagnostics,
    })
}
