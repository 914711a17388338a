//! Browser bindings for the defect forecasting demo in `www/`.
//!
//! Each exported function takes plain strings and numbers and returns a
//! JSON string, so the page needs no generated TypeScript types. The
//! `*_json` functions hold the logic and are callable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tsarf_core::dataset::{load_curve_auto, write_failure_times};
use tsarf_core::report::{run_compare, run_sweep, CompareOptions, ModelId, SplitOptions, SweepCell, SweepParameter};
use tsarf_core::srgm::{mvf, simulate_nhpp, SrgmKind, SrgmParams};
use tsarf_core::tsarf::{MaLength, TsarfConfig, WindowSize};

#[derive(Serialize)]
struct WindowLine {
    t0: f64,
    t1: f64,
    intercept: f64,
    slope: f64,
}

#[derive(Serialize)]
struct ModelSummary {
    id: &'static str,
    label: &'static str,
    pmse: Option<f64>,
    prr: Option<f64>,
    pp: Option<f64>,
    error: Option<String>,
    fitted: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct TsarfSummary {
    k: usize,
    d: usize,
    intercept: f64,
    slope: f64,
    windows: Vec<WindowLine>,
    ma_candidates: Vec<(usize, f64)>,
}

#[derive(Serialize)]
struct CompareView {
    t: Vec<f64>,
    actual: Vec<f64>,
    n_train: usize,
    table: String,
    models: Vec<ModelSummary>,
    tsarf: Option<TsarfSummary>,
}

/// `0` means automatic for `window`, `ma` and `test_len`.
fn options(window: u32, ma: u32, test_len: u32, blend_weight: f64, models: Vec<ModelId>) -> CompareOptions {
    CompareOptions {
        split: SplitOptions {
            test_len: (test_len > 0).then_some(test_len as usize),
            test_fraction: None,
        },
        tsarf: TsarfConfig {
            window: if window == 0 { WindowSize::Auto } else { WindowSize::Fixed(window as usize) },
            ma: if ma == 0 { MaLength::Auto } else { MaLength::Fixed(ma as usize) },
            blend_weight,
        },
        models,
    }
}

pub fn compare_json(input: &str, window: u32, ma: u32, test_len: u32, blend_weight: f64) -> Result<String, String> {
    let (curve, _) = load_curve_auto(input).map_err(|e| e.to_string())?;
    let opts = options(window, ma, test_len, blend_weight, ModelId::DEFAULT.to_vec());
    let report = run_compare(&curve, "browser", false, &opts).map_err(|e| e.to_string())?;

    let models = report
        .models
        .iter()
        .map(|o| ModelSummary {
            id: o.model.id(),
            label: o.model.label(),
            pmse: o.metrics.as_ref().map(|m| m.pmse),
            prr: o.metrics.as_ref().map(|m| m.prr),
            pp: o.metrics.as_ref().map(|m| m.pp),
            error: o.error.clone(),
            fitted: o.fitted.clone(),
        })
        .collect();
    let tsarf = report
        .outcome(ModelId::Tsarf)
        .and_then(|o| o.tsarf.as_ref())
        .map(|m| TsarfSummary {
            k: m.k_used,
            d: m.d_used,
            intercept: m.line.intercept,
            slope: m.line.slope,
            windows: m
                .history
                .spans
                .iter()
                .zip(&m.history.rows)
                .map(|(&(t0, t1), l)| WindowLine {
                    t0,
                    t1,
                    intercept: l.intercept,
                    slope: l.slope,
                })
                .collect(),
            ma_candidates: m.ma_selection.as_ref().map(|s| s.candidates.clone()).unwrap_or_default(),
        });
    let view = CompareView {
        t: report.dataset.points.iter().map(|p| p.t).collect(),
        actual: report.dataset.points.iter().map(|p| p.count).collect(),
        n_train: report.dataset.n_train,
        table: report.metrics_table(),
        models,
        tsarf,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SweepView {
    parameter: &'static str,
    values: Vec<usize>,
    pmse: Vec<Option<f64>>,
    errors: Vec<Option<String>>,
    csv: String,
}

pub fn sweep_json(input: &str, parameter: &str, from: u32, to: u32) -> Result<String, String> {
    let parameter: SweepParameter = parameter.parse().map_err(|e: tsarf_core::Error| e.to_string())?;
    if from == 0 || from > to {
        return Err(format!("invalid range {from}..{to}"));
    }
    let (curve, _) = load_curve_auto(input).map_err(|e| e.to_string())?;
    let values: Vec<usize> = (from as usize..=to as usize).collect();
    let table = run_sweep(&[("data".to_string(), curve)], parameter, &values, &SplitOptions::default(), 0.5)
        .map_err(|e| e.to_string())?;
    let view = SweepView {
        parameter: parameter.column_name(),
        values: table.rows.iter().map(|r| r.value).collect(),
        pmse: table.rows.iter().map(|r| r.cells[0].pmse()).collect(),
        errors: table
            .rows
            .iter()
            .map(|r| match &r.cells[0] {
                SweepCell::Error(e) => Some(e.clone()),
                SweepCell::Pmse(_) => None,
            })
            .collect(),
        csv: table.to_csv(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Simulated failure times in the one-time-per-line format.
pub fn simulate_text(kind: &str, a: f64, b: f64, c: f64, horizon: f64, seed: u64) -> Result<String, String> {
    let kind: SrgmKind = kind.parse().map_err(|e: tsarf_core::Error| e.to_string())?;
    let params = SrgmParams::new(a, b, if kind == SrgmKind::Weibull { c } else { 1.0 });
    let times = simulate_nhpp(kind, &params, horizon, seed).map_err(|e| e.to_string())?;
    let expected = mvf(kind, &params, horizon).map_err(|e| e.to_string())?;
    let header = format!(
        "simulated {} a={a} b={b} c={} horizon={horizon} seed={seed}\nexpected events {expected:.2}, realized {}",
        kind.id(),
        params.c,
        times.len()
    );
    let mut buf = Vec::new();
    write_failure_times(&mut buf, &times, Some(&header)).map_err(|e| e.to_string())?;
    String::from_utf8(buf).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn compare(input: &str, window: u32, ma: u32, test_len: u32, blend_weight: f64) -> Result<String, JsValue> {
    compare_json(input, window, ma, test_len, blend_weight).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sweep(input: &str, parameter: &str, from: u32, to: u32) -> Result<String, JsValue> {
    sweep_json(input, parameter, from, to).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate(kind: &str, a: f64, b: f64, c: f64, horizon: f64, seed: u64) -> Result<String, JsValue> {
    simulate_text(kind, a, b, c, horizon, seed).map_err(|e| JsValue::from_str(&e))
}
