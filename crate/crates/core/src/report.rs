//! Model comparison runs and parameter sweeps, with their serializable
//! reports.
//!
//! A [`RunReport`] carries everything needed to re-render the metrics table
//! and the curves CSV without touching the input again.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{split_with_policy, fraction_policy, CurvePoint, GrowthCurve, SplitCurve, SplitPolicy};
use crate::error::{Error, ErrorClass, Result};
use crate::metrics::{evaluate, pmse, MetricsReport};
use crate::srgm::{fit_srgm, srgm_predict, SrgmFit, SrgmKind};
use crate::tsarf::{tsarf_forecast, MaLength, TsarfConfig, TsarfModel, WindowSize, MIN_WINDOW};

pub const TOOL_NAME: &str = "tsarf";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Tsarf,
    Go,
    Dss,
    Weibull,
}

impl ModelId {
    /// Row order of the metrics table.
    pub const TABLE_ORDER: [ModelId; 4] = [ModelId::Tsarf, ModelId::Dss, ModelId::Go, ModelId::Weibull];
    pub const DEFAULT: [ModelId; 4] = [ModelId::Tsarf, ModelId::Go, ModelId::Dss, ModelId::Weibull];

    pub fn id(self) -> &'static str {
        match self {
            ModelId::Tsarf => "tsarf",
            ModelId::Go => "go",
            ModelId::Dss => "dss",
            ModelId::Weibull => "weibull",
        }
    }

    pub fn label(self) -> &'static str {
        match self.srgm_kind() {
            Some(k) => k.label(),
            None => "TSARF",
        }
    }

    pub fn srgm_kind(self) -> Option<SrgmKind> {
        match self {
            ModelId::Tsarf => None,
            ModelId::Go => Some(SrgmKind::GoelOkumoto),
            ModelId::Dss => Some(SrgmKind::DelayedSShaped),
            ModelId::Weibull => Some(SrgmKind::Weibull),
        }
    }

    /// Parses a comma-separated list such as `tsarf,go,dss,weibull`.
    pub fn parse_list(s: &str) -> Result<Vec<ModelId>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: ModelId = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::usage("model list is empty"));
        }
        Ok(out)
    }
}

impl std::str::FromStr for ModelId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsarf" => Ok(ModelId::Tsarf),
            other => match other.parse::<SrgmKind>() {
                Ok(SrgmKind::GoelOkumoto) => Ok(ModelId::Go),
                Ok(SrgmKind::DelayedSShaped) => Ok(ModelId::Dss),
                Ok(SrgmKind::Weibull) => Ok(ModelId::Weibull),
                Err(_) => Err(Error::usage(format!("unknown model {s:?}"))),
            },
        }
    }
}

/// How to carve off the test partition. With neither field set the test
/// partition is one TSARF window long.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub test_len: Option<usize>,
    pub test_fraction: Option<f64>,
}

/// Window size used when the test partition is a single window: the
/// training part then holds ten windows, so `k = floor(n / 11)`.
pub fn one_window_ahead_size(n: usize) -> usize {
    (n / 11).max(MIN_WINDOW)
}

/// Resolves the split and the TSARF configuration that goes with it.
///
/// When the split length follows the window size, an automatic window size
/// is pinned to that same `k` so that exactly one window is forecast.
pub fn resolve_split(curve: &GrowthCurve, split: &SplitOptions, config: &TsarfConfig) -> Result<(SplitCurve, TsarfConfig)> {
    let policy = match (split.test_len, split.test_fraction) {
        (Some(_), Some(_)) => return Err(Error::usage("give either a test length or a test fraction, not both")),
        (Some(test_len), None) => SplitPolicy::Length { test_len },
        (None, Some(f)) => fraction_policy(curve, f)?,
        (None, None) => {
            let k = match config.window {
                WindowSize::Fixed(k) => k,
                WindowSize::Auto => one_window_ahead_size(curve.len()),
            };
            SplitPolicy::WindowSize { test_len: k }
        }
    };
    let parts = split_with_policy(curve, policy)?;
    let mut resolved = *config;
    if let (SplitPolicy::WindowSize { test_len }, WindowSize::Auto) = (policy, config.window) {
        resolved.window = WindowSize::Fixed(test_len);
    }
    Ok((parts, resolved))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub n: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub split: SplitPolicy,
    /// Input times had to be sorted on load.
    pub input_sorted: bool,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub model: ModelId,
    pub status: ModelStatus,
    pub error: Option<String>,
    pub error_class: Option<String>,
    pub metrics: Option<MetricsReport>,
    /// One value per curve point: in-sample fit on training points (stage-1
    /// window lines for TSARF, empty ahead of the first window) and the
    /// forecast on test points.
    pub fitted: Vec<Option<f64>>,
    pub tsarf: Option<TsarfModel>,
    pub srgm: Option<SrgmFit>,
}

impl ModelOutcome {
    fn failed(model: ModelId, err: &Error, n: usize) -> Self {
        ModelOutcome {
            model,
            status: ModelStatus::Failed,
            error: Some(err.to_string()),
            error_class: Some(class_name(err.class()).to_string()),
            metrics: None,
            fitted: vec![None; n],
            tsarf: None,
            srgm: None,
        }
    }
}

fn class_name(c: ErrorClass) -> &'static str {
    match c {
        ErrorClass::Usage => "usage",
        ErrorClass::Data => "data",
        ErrorClass::Convergence => "convergence",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub dataset: DatasetInfo,
    pub tsarf_config: TsarfConfig,
    pub models: Vec<ModelOutcome>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub split: SplitOptions,
    pub tsarf: TsarfConfig,
    pub models: Vec<ModelId>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            split: SplitOptions::default(),
            tsarf: TsarfConfig::default(),
            models: ModelId::DEFAULT.to_vec(),
        }
    }
}

/// Fits every requested model on the training partition and scores it on
/// the test partition. Model failures are recorded, not propagated; only
/// an invalid split aborts the run.
pub fn run_compare(curve: &GrowthCurve, source: &str, input_sorted: bool, opts: &CompareOptions) -> Result<RunReport> {
    let (parts, config) = resolve_split(curve, &opts.split, &opts.tsarf)?;
    let n = curve.len();
    let n_train = parts.train.len();
    let test_t = parts.test.times();
    let test_y = parts.test.counts();

    let models = opts
        .models
        .iter()
        .map(|&model| {
            let outcome = match model.srgm_kind() {
                None => run_tsarf(&parts, &config, &test_t, &test_y),
                Some(kind) => run_srgm(&parts, kind, &test_t, &test_y),
            };
            outcome.unwrap_or_else(|e| ModelOutcome::failed(model, &e, n))
        })
        .collect();

    Ok(RunReport {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        dataset: DatasetInfo {
            source: source.to_string(),
            n,
            n_train,
            n_test: parts.test.len(),
            split: parts.policy,
            input_sorted,
            points: curve.points().to_vec(),
        },
        tsarf_config: config,
        models,
        seed: None,
    })
}

fn run_tsarf(parts: &SplitCurve, config: &TsarfConfig, test_t: &[f64], test_y: &[f64]) -> Result<ModelOutcome> {
    let model = tsarf_forecast(&parts.train, config)?;
    let pred = model.predicted_line(test_t);
    let metrics = evaluate(ModelId::Tsarf.label(), &pred, test_y)?;
    let mut fitted = model.window_fit_values(&parts.train);
    fitted.extend(pred.into_iter().map(Some));
    Ok(ModelOutcome {
        model: ModelId::Tsarf,
        status: ModelStatus::Ok,
        error: None,
        error_class: None,
        metrics: Some(metrics),
        fitted,
        tsarf: Some(model),
        srgm: None,
    })
}

fn run_srgm(parts: &SplitCurve, kind: SrgmKind, test_t: &[f64], test_y: &[f64]) -> Result<ModelOutcome> {
    let fit = fit_srgm(&parts.train, kind)?;
    let pred = srgm_predict(&fit, test_t)?;
    let metrics = evaluate(kind.label(), &pred, test_y)?;
    let mut fitted: Vec<Option<f64>> = srgm_predict(&fit, &parts.train.times())?.into_iter().map(Some).collect();
    fitted.extend(pred.into_iter().map(Some));
    let model = match kind {
        SrgmKind::GoelOkumoto => ModelId::Go,
        SrgmKind::DelayedSShaped => ModelId::Dss,
        SrgmKind::Weibull => ModelId::Weibull,
    };
    Ok(ModelOutcome {
        model,
        status: ModelStatus::Ok,
        error: None,
        error_class: None,
        metrics: Some(metrics),
        fitted,
        tsarf: None,
        srgm: Some(fit),
    })
}

impl RunReport {
    pub fn outcome(&self, model: ModelId) -> Option<&ModelOutcome> {
        self.models.iter().find(|m| m.model == model)
    }

    pub fn pmse_of(&self, model: ModelId) -> Option<f64> {
        self.outcome(model).and_then(|o| o.metrics.as_ref()).map(|m| m.pmse)
    }

    /// Most severe failure class among the models, if any failed.
    pub fn worst_failure(&self) -> Option<ErrorClass> {
        let classes: Vec<&str> = self.models.iter().filter_map(|m| m.error_class.as_deref()).collect();
        if classes.contains(&"data") {
            Some(ErrorClass::Data)
        } else if classes.contains(&"usage") {
            Some(ErrorClass::Usage)
        } else if classes.contains(&"convergence") {
            Some(ErrorClass::Convergence)
        } else {
            None
        }
    }

    /// Tab-separated `Model PMSE PRR PP` table, rows in the canonical
    /// TSARF, DSS, GO, Weibull order.
    pub fn metrics_table(&self) -> String {
        let mut out = String::from("Model\tPMSE\tPRR\tPP\n");
        for id in ModelId::TABLE_ORDER {
            let Some(o) = self.outcome(id) else { continue };
            match &o.metrics {
                Some(m) => {
                    let _ = writeln!(out, "{}\t{:.3}\t{:.3}\t{:.3}", id.label(), m.pmse, m.prr, m.pp);
                }
                None => {
                    let _ = writeln!(out, "{}\tfailed: {}", id.label(), o.error.as_deref().unwrap_or("unknown"));
                }
            }
        }
        out
    }

    /// CSV with header `t,actual,partition,<model>...` in request order.
    pub fn curves_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::data(e.to_string());
        let mut header = vec!["t".to_string(), "actual".into(), "partition".into()];
        header.extend(self.models.iter().map(|m| m.model.id().to_string()));
        w.write_record(&header).map_err(err)?;
        for (i, p) in self.dataset.points.iter().enumerate() {
            let partition = if i < self.dataset.n_train { "train" } else { "test" };
            let mut row = vec![p.t.to_string(), p.count.to_string(), partition.to_string()];
            for m in &self.models {
                row.push(m.fitted.get(i).copied().flatten().map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(&row).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::data(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Window,
    Ma,
}

impl SweepParameter {
    pub fn column_name(self) -> &'static str {
        match self {
            SweepParameter::Window => "size",
            SweepParameter::Ma => "length",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window" => Ok(SweepParameter::Window),
            "ma" => Ok(SweepParameter::Ma),
            other => Err(Error::usage(format!("unknown sweep parameter {other:?}; use window or ma"))),
        }
    }
}

/// One sweep cell: a test PMSE or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepCell {
    Pmse(f64),
    Error(String),
}

impl SweepCell {
    pub fn pmse(&self) -> Option<f64> {
        match self {
            SweepCell::Pmse(v) => Some(*v),
            SweepCell::Error(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub datasets: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Marker written to CSV cells that failed.
pub const SWEEP_ERROR_MARKER: &str = "ERR";

impl SweepTable {
    /// `size,<dataset>...` or `length,<dataset>...` followed by one row per
    /// swept value.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(self.parameter.column_name());
        for d in &self.datasets {
            out.push(',');
            out.push_str(d);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.value);
            for cell in &row.cells {
                match cell {
                    SweepCell::Pmse(v) => {
                        let _ = write!(out, ",{v:.2}");
                    }
                    SweepCell::Error(_) => {
                        let _ = write!(out, ",{SWEEP_ERROR_MARKER}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// TSARF test PMSE for each swept value on each dataset.
///
/// The split is resolved once per dataset under the default policy and held
/// fixed across the sweep, so every row scores the same test points. The
/// parameter not being swept keeps its default policy.
pub fn run_sweep(
    datasets: &[(String, GrowthCurve)],
    parameter: SweepParameter,
    values: &[usize],
    split: &SplitOptions,
    blend_weight: f64,
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::usage("sweep range is empty"));
    }
    let mut sorted: Vec<usize> = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let base = TsarfConfig {
        blend_weight,
        ..TsarfConfig::default()
    };
    let resolved: Vec<(SplitCurve, TsarfConfig)> = datasets
        .iter()
        .map(|(_, c)| resolve_split(c, split, &base))
        .collect::<Result<_>>()?;

    let rows = sorted
        .iter()
        .map(|&value| {
            let cells = resolved
                .iter()
                .map(|(parts, cfg)| {
                    let config = match parameter {
                        SweepParameter::Window => TsarfConfig {
                            window: WindowSize::Fixed(value),
                            ma: MaLength::Auto,
                            blend_weight,
                        },
                        SweepParameter::Ma => TsarfConfig {
                            ma: MaLength::Fixed(value),
                            ..*cfg
                        },
                    };
                    match tsarf_test_pmse(parts, &config) {
                        Ok(v) => SweepCell::Pmse(v),
                        Err(e) => SweepCell::Error(e.to_string()),
                    }
                })
                .collect();
            SweepRow { value, cells }
        })
        .collect();

    Ok(SweepTable {
        parameter,
        datasets: datasets.iter().map(|(l, _)| l.clone()).collect(),
        rows,
    })
}

/// Test-partition PMSE of a TSARF forecast.
pub fn tsarf_test_pmse(parts: &SplitCurve, config: &TsarfConfig) -> Result<f64> {
    let model = tsarf_forecast(&parts.train, config)?;
    pmse(&model.predicted_line(&parts.test.times()), &parts.test.counts())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_curve(n: usize) -> GrowthCurve {
        let pairs: Vec<(f64, f64)> = (1..=n).map(|i| (i as f64, 1.0 + 2.0 * i as f64)).collect();
        GrowthCurve::from_pairs(&pairs).unwrap()
    }

    #[test]
    fn default_split_is_one_window() {
        let c = line_curve(104);
        let (parts, cfg) = resolve_split(&c, &SplitOptions::default(), &TsarfConfig::default()).unwrap();
        assert_eq!(parts.test.len(), 9);
        assert_eq!(parts.train.len(), 95);
        assert_eq!(cfg.window, WindowSize::Fixed(9));

        let (parts, cfg) = resolve_split(
            &c,
            &SplitOptions { test_len: Some(14), test_fraction: None },
            &TsarfConfig::default(),
        )
        .unwrap();
        assert_eq!(parts.train.len(), 90);
        assert_eq!(cfg.window, WindowSize::Auto);
        assert!(resolve_split(
            &c,
            &SplitOptions { test_len: Some(3), test_fraction: Some(0.1) },
            &TsarfConfig::default()
        )
        .is_err());
    }

    #[test]
    fn compare_on_exact_line() {
        let c = line_curve(60);
        let opts = CompareOptions {
            models: vec![ModelId::Tsarf],
            ..Default::default()
        };
        let r = run_compare(&c, "line", false, &opts).unwrap();
        assert!(r.pmse_of(ModelId::Tsarf).unwrap() < 1e-9);
        assert!(r.worst_failure().is_none());
    }

    #[test]
    fn failures_are_recorded() {
        let c = line_curve(12);
        let opts = CompareOptions {
            split: SplitOptions { test_len: Some(6), test_fraction: None },
            tsarf: TsarfConfig { window: WindowSize::Fixed(4), ..Default::default() },
            models: vec![ModelId::Tsarf, ModelId::Go],
        };
        let r = run_compare(&c, "short", false, &opts).unwrap();
        let t = r.outcome(ModelId::Tsarf).unwrap();
        assert_eq!(t.status, ModelStatus::Failed);
        assert_eq!(r.worst_failure(), Some(ErrorClass::Data));
        assert!(r.metrics_table().contains("TSARF\tfailed"));
    }

    #[test]
    fn table_and_curves_layout() {
        let c = line_curve(60);
        let r = run_compare(&c, "line", false, &CompareOptions::default()).unwrap();
        let table = r.metrics_table();
        let labels: Vec<&str> = table.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(labels, vec!["TSARF", "DSS", "GO", "Weibull"]);
        let csv = r.curves_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,actual,partition,tsarf,go,dss,weibull");
        assert_eq!(csv.lines().count(), 61);
        assert_eq!(csv.lines().filter(|l| l.contains(",test,")).count(), r.dataset.n_test);
    }

    #[test]
    fn report_round_trips_through_json() {
        let c = line_curve(40);
        let r = run_compare(&c, "line", false, &CompareOptions::default()).unwrap();
        let json = serde_json::to_string_pretty(&r).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.metrics_table(), r.metrics_table());
        assert_eq!(back.models.len(), 4);
    }

    #[test]
    fn sweep_marks_infeasible_rows() {
        let c = line_curve(60);
        let t = run_sweep(
            &[("line".into(), c)],
            SweepParameter::Window,
            &[4, 5, 30],
            &SplitOptions::default(),
            0.5,
        )
        .unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows[0].cells[0].pmse().unwrap() < 1e-9);
        assert!(matches!(t.rows[2].cells[0], SweepCell::Error(_)));
        let csv = t.to_csv();
        assert!(csv.starts_with("size,line\n"));
        assert!(csv.lines().last().unwrap().ends_with(",ERR"));
    }

    #[test]
    fn ma_sweep_rows() {
        let c = line_curve(110);
        let t = run_sweep(&[("a".into(), c.clone()), ("b".into(), c)], SweepParameter::Ma, &[6, 1, 2, 3, 4, 5], &SplitOptions::default(), 0.5).unwrap();
        let values: Vec<usize> = t.rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![1, 2, 3, 4, 5, 6]);
        assert!(t.to_csv().starts_with("length,a,b\n"));
    }

    #[test]
    fn model_list_parsing() {
        assert_eq!(ModelId::parse_list("tsarf, GO,dss,go").unwrap(), vec![ModelId::Tsarf, ModelId::Go, ModelId::Dss]);
        assert!(ModelId::parse_list("").is_err());
        assert!(ModelId::parse_list("tsarf,arima").is_err());
    }
}
