//! JSON run configurations, one parameter set per command.
//!
//! Every key is optional; omitted keys take the defaults below. The accepted
//! key set of a command is exactly the key set of its serialized defaults,
//! plus `command`, `seed` and `workers`.

use std::collections::BTreeSet;
use std::fmt;

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use sofi_crb::fisher::FisherMode;
use sofi_crb::geometry::{GridSpec, PsfModel, ShapeKind, ShapeTemplate, SourceParam, DEFAULT_MAX_GRID_POINTS};
use sofi_crb::sweep::{Scenario, ScanSettings, DEFAULT_ALPHA, DEFAULT_THRESHOLDS, DEFAULT_XI};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Field,
    ErrorVsScale,
    ErrorVsOrder,
    ResolutionScan,
    DipContrast,
    BlinkRatio,
    ShotNoise,
    CumulantImage,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Field,
        Command::ErrorVsScale,
        Command::ErrorVsOrder,
        Command::ResolutionScan,
        Command::DipContrast,
        Command::BlinkRatio,
        Command::ShotNoise,
        Command::CumulantImage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Field => "field",
            Command::ErrorVsScale => "error-vs-scale",
            Command::ErrorVsOrder => "error-vs-order",
            Command::ResolutionScan => "resolution-scan",
            Command::DipContrast => "dip-contrast",
            Command::BlinkRatio => "blink-ratio",
            Command::ShotNoise => "shot-noise",
            Command::CumulantImage => "cumulant-image",
        }
    }

    /// Serialized default parameters.
    pub fn defaults(self) -> Value {
        let v = match self {
            Command::Field => serde_json::to_value(FieldParams::default()),
            Command::ErrorVsScale => serde_json::to_value(ScaleParams::default()),
            Command::ErrorVsOrder => serde_json::to_value(OrderParams::default()),
            Command::ResolutionScan => serde_json::to_value(ResolutionParams::default()),
            Command::DipContrast => serde_json::to_value(DipParams::default()),
            Command::BlinkRatio => serde_json::to_value(BlinkParams::default()),
            Command::ShotNoise => serde_json::to_value(ShotParams::default()),
            Command::CumulantImage => serde_json::to_value(ImageParams::default()),
        };
        v.expect("defaults serialize")
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Source amplitudes, bright-state probabilities and sampling, shared by
/// every geometric command. Grid step and margin are in units of `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Optics {
    pub alpha: SourceParam,
    pub xi: SourceParam,
    pub w: f64,
    pub grid_step: f64,
    pub grid_margin: f64,
    pub max_grid_points: usize,
}

impl Default for Optics {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA.into(),
            xi: DEFAULT_XI.into(),
            w: 1.0,
            grid_step: 0.02,
            grid_margin: 2.0,
            max_grid_points: DEFAULT_MAX_GRID_POINTS,
        }
    }
}

impl Optics {
    fn psf(&self) -> CliResult<PsfModel> {
        Ok(PsfModel::new(self.w)?)
    }

    fn grid(&self) -> CliResult<GridSpec> {
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return Err(CliError::Config(format!("grid_step must be positive, got {}", self.grid_step)));
        }
        if !(self.grid_margin.is_finite() && self.grid_margin >= 0.0) {
            return Err(CliError::Config(format!("grid_margin must be non-negative, got {}", self.grid_margin)));
        }
        Ok(GridSpec {
            step: self.grid_step * self.w,
            margin: self.grid_margin * self.w,
            max_points: self.max_grid_points,
        })
    }

    pub fn scenario(&self, shape: ShapeTemplate) -> CliResult<Scenario> {
        let mut sc = Scenario::new(shape).with_alphas(self.alpha.clone()).with_xis(self.xi.clone());
        sc.psf = self.psf()?;
        sc.grid = self.grid()?;
        Ok(sc)
    }
}

/// `line-1d:3`, `pair-2d`, ... ; a bare `line-1d` takes its count from `M`.
pub fn parse_shape(text: &str, count: Option<usize>) -> CliResult<ShapeTemplate> {
    let shape = match (text.parse::<ShapeKind>(), count) {
        (Ok(ShapeKind::Line1d), Some(m)) if !text.contains(':') => ShapeTemplate::line(m)?,
        _ => text.parse::<ShapeTemplate>()?,
    };
    if let Some(m) = count {
        if m != shape.count() {
            return Err(CliError::Config(format!("M = {m} conflicts with shape {shape}")));
        }
    }
    Ok(shape)
}

fn shape_list(shape: &Option<String>, shapes: &Option<Vec<String>>, count: Option<usize>) -> CliResult<Vec<ShapeTemplate>> {
    let names: Vec<String> = match (shape, shapes) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either `shape` or `shapes`, not both".into())),
        (Some(s), None) => vec![s.clone()],
        (None, Some(list)) => list.clone(),
        (None, None) => return Err(CliError::Config("no shape given".into())),
    };
    if names.is_empty() {
        return Err(CliError::Config("`shapes` is empty".into()));
    }
    names.iter().map(|s| parse_shape(s, count)).collect()
}

fn standard_shapes() -> Vec<String> {
    ShapeTemplate::standard_set().iter().map(|s| s.to_string()).collect()
}

fn check_positive(name: &str, values: &[f64]) -> CliResult<()> {
    if values.is_empty() {
        return Err(CliError::Config(format!("`{name}` is empty")));
    }
    match values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(v) => Err(CliError::Config(format!("`{name}` must hold positive values, got {v}"))),
        None => Ok(()),
    }
}

fn check_orders(name: &str, orders: &[usize]) -> CliResult<()> {
    if orders.is_empty() || orders.contains(&0) {
        return Err(CliError::Config(format!("`{name}` must be a non-empty list of orders >= 1")));
    }
    Ok(())
}

/// Builds the source configuration at every requested scale so parameter
/// errors surface before any computation.
fn check_scenario(sc: &Scenario, d_list: &[f64]) -> CliResult<()> {
    for &d in d_list {
        sc.config(d)?;
    }
    let largest = d_list.iter().cloned().fold(0.0, f64::max);
    sc.setup(largest)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldParams {
    pub shape: String,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub d_over_w: f64,
    pub orders: Vec<usize>,
    /// Also write the normalized probability field and its gradients.
    pub probability: bool,
    #[serde(flatten)]
    pub optics: Optics,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            shape: "line-1d:3".into(),
            m: None,
            d_over_w: 0.5,
            orders: vec![1, 2, 3, 4],
            probability: true,
            optics: Optics::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleParams {
    pub shape: Option<String>,
    pub shapes: Option<Vec<String>>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub d_over_w: Vec<f64>,
    pub orders: Vec<usize>,
    pub mode: FisherMode,
    /// Detected events `N`; bounds are divided by it.
    pub events: f64,
    #[serde(flatten)]
    pub optics: Optics,
}

impl Default for ScaleParams {
    fn default() -> Self {
        Self {
            shape: None,
            shapes: Some(vec!["line-1d:3".into()]),
            m: None,
            d_over_w: vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0],
            orders: vec![1, 2, 3, 4, 5],
            mode: FisherMode::PerOrder,
            events: 1.0,
            optics: Optics::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrderParams {
    pub shape: Option<String>,
    pub shapes: Option<Vec<String>>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub d_over_w: Vec<f64>,
    pub n_max: usize,
    pub mode: FisherMode,
    pub events: f64,
    #[serde(flatten)]
    pub optics: Optics,
}

impl Default for OrderParams {
    fn default() -> Self {
        Self {
            shape: None,
            shapes: Some(standard_shapes()),
            m: None,
            d_over_w: vec![0.2, 0.3, 0.5, 1.0],
            n_max: 8,
            mode: FisherMode::PerOrder,
            events: 1.0,
            optics: Optics::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolutionParams {
    pub shape: Option<String>,
    pub shapes: Option<Vec<String>>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub thresholds: Vec<f64>,
    pub n_max: usize,
    pub mode: FisherMode,
    pub d_lo: f64,
    pub d_hi: f64,
    pub tolerance: f64,
    #[serde(flatten)]
    pub optics: Optics,
}

impl Default for ResolutionParams {
    fn default() -> Self {
        let scan = ScanSettings::default();
        Self {
            shape: None,
            shapes: Some(standard_shapes()),
            m: None,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            n_max: 8,
            mode: FisherMode::Cumulative,
            d_lo: scan.d_lo,
            d_hi: scan.d_hi,
            tolerance: scan.tolerance,
            optics: Optics::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DipParams {
    pub shape: String,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub d_over_w: Vec<f64>,
    pub n_max: usize,
    /// Sample spacing along the source axis, units of `w`.
    pub profile_step: f64,
    #[serde(flatten)]
    pub optics: Optics,
}

impl Default for DipParams {
    fn default() -> Self {
        Self {
            shape: "line-1d:2".into(),
            m: None,
            d_over_w: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            n_max: 10,
            profile_step: 0.01,
            optics: Optics::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlinkParams {
    pub alpha_pl: Vec<f64>,
    pub tau0: f64,
    pub duty: f64,
    /// Frame duration in units of `tau0`.
    pub frame: f64,
    pub i_on: f64,
    /// Dwell-time cutoff in units of `tau0`.
    pub tau_max: f64,
    pub patterns: Vec<String>,
    pub t_over_tau0: Vec<f64>,
    pub n_realizations: usize,
}

impl Default for BlinkParams {
    fn default() -> Self {
        Self {
            alpha_pl: vec![2.0, 3.0],
            tau0: 1.0,
            duty: 0.5,
            frame: 1.0,
            i_on: 1.0,
            tau_max: 1e3,
            patterns: ["0.0", "0.0.0.0", "0.0.0.0.0.0", "0.1", "0.0.1.1", "0.0.1.1.2.2"]
                .map(String::from)
                .to_vec(),
            t_over_tau0: vec![1e2, 1e3, 1e4, 1e5],
            n_realizations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotParams {
    pub shape: String,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub d_over_w: f64,
    pub orders: Vec<usize>,
    pub mean_peak_counts: f64,
    pub n_frames: usize,
    pub n_realizations: usize,
    #[serde(flatten)]
    pub optics: Optics,
}

impl Default for ShotParams {
    fn default() -> Self {
        Self {
            shape: "line-1d:2".into(),
            m: None,
            d_over_w: 1.0,
            orders: vec![1, 2, 3, 4],
            mean_peak_counts: 400.0,
            n_frames: 400,
            n_realizations: 200,
            optics: Optics::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImageParams {
    pub shape: String,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub d_over_w: f64,
    pub orders: Vec<usize>,
    #[serde(flatten)]
    pub optics: Optics,
}

impl Default for ImageParams {
    fn default() -> Self {
        Self {
            shape: "line-1d:2".into(),
            m: None,
            d_over_w: 1.0,
            orders: vec![1, 2, 3, 4],
            optics: Optics::default(),
        }
    }
}

/// A fully validated command, ready to run.
#[derive(Debug, Clone)]
pub enum Plan {
    Field { params: FieldParams, scenario: Scenario },
    ErrorVsScale { params: ScaleParams, scenarios: Vec<Scenario> },
    ErrorVsOrder { params: OrderParams, scenarios: Vec<Scenario> },
    ResolutionScan { params: ResolutionParams, scenarios: Vec<Scenario>, scan: ScanSettings },
    DipContrast { params: DipParams, scenario: Scenario },
    BlinkRatio { params: BlinkParams },
    ShotNoise { params: ShotParams, scenario: Scenario },
    CumulantImage { params: ImageParams, scenario: Scenario },
}

impl Plan {
    /// Resolved parameters, defaults filled in.
    pub fn params_json(&self) -> Value {
        let v = match self {
            Plan::Field { params, .. } => serde_json::to_value(params),
            Plan::ErrorVsScale { params, .. } => serde_json::to_value(params),
            Plan::ErrorVsOrder { params, .. } => serde_json::to_value(params),
            Plan::ResolutionScan { params, .. } => serde_json::to_value(params),
            Plan::DipContrast { params, .. } => serde_json::to_value(params),
            Plan::BlinkRatio { params } => serde_json::to_value(params),
            Plan::ShotNoise { params, .. } => serde_json::to_value(params),
            Plan::CumulantImage { params, .. } => serde_json::to_value(params),
        };
        v.expect("params serialize")
    }
}

/// Top-level keys accepted alongside the command parameters.
const RUN_KEYS: [&str; 3] = ["command", "seed", "workers"];

/// Settings that may come from the file and be overridden on the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunSettings {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

fn decode<T: DeserializeOwned>(object: Map<String, Value>) -> CliResult<T> {
    serde_json::from_value(Value::Object(object)).map_err(|e| CliError::Config(e.to_string()))
}

/// Parses and validates a JSON config for `command`.
pub fn resolve(command: Command, text: &str) -> CliResult<(Plan, RunSettings)> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let Value::Object(mut object) = value else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };

    let allowed: BTreeSet<String> = match command.defaults() {
        Value::Object(d) => d.keys().cloned().chain(RUN_KEYS.map(String::from)).collect(),
        _ => unreachable!("defaults are objects"),
    };
    let unknown: Vec<&String> = object.keys().filter(|k| !allowed.contains(*k)).collect();
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown keys for {command}: {unknown:?}")));
    }

    let mut settings = RunSettings::default();
    if let Some(c) = object.remove("command") {
        let named: Command = serde_json::from_value(c).map_err(|e| CliError::Config(e.to_string()))?;
        if named != command {
            return Err(CliError::Config(format!("config is for `{named}`, not `{command}`")));
        }
    }
    if let Some(s) = object.remove("seed") {
        settings.seed = Some(serde_json::from_value(s).map_err(|e| CliError::Config(format!("seed: {e}")))?);
    }
    if let Some(w) = object.remove("workers") {
        settings.workers = Some(serde_json::from_value(w).map_err(|e| CliError::Config(format!("workers: {e}")))?);
    }

    // an explicit `shape` replaces the default `shapes` list
    let single_shape = object.contains_key("shape") && !object.contains_key("shapes");

    let plan = match command {
        Command::Field => {
            let params: FieldParams = decode(object)?;
            let scenario = params.optics.scenario(parse_shape(&params.shape, params.m)?)?;
            check_positive("d_over_w", &[params.d_over_w])?;
            check_orders("orders", &params.orders)?;
            check_scenario(&scenario, &[params.d_over_w])?;
            Plan::Field { params, scenario }
        }
        Command::ErrorVsScale => {
            let mut params: ScaleParams = decode(object)?;
            if single_shape {
                params.shapes = None;
            }
            check_positive("d_over_w", &params.d_over_w)?;
            check_orders("orders", &params.orders)?;
            check_events(params.events)?;
            let scenarios = scenarios(&params.shape, &params.shapes, params.m, &params.optics, &params.d_over_w)?;
            Plan::ErrorVsScale { params, scenarios }
        }
        Command::ErrorVsOrder => {
            let mut params: OrderParams = decode(object)?;
            if single_shape {
                params.shapes = None;
            }
            check_positive("d_over_w", &params.d_over_w)?;
            check_orders("n_max", &[params.n_max])?;
            check_events(params.events)?;
            let scenarios = scenarios(&params.shape, &params.shapes, params.m, &params.optics, &params.d_over_w)?;
            Plan::ErrorVsOrder { params, scenarios }
        }
        Command::ResolutionScan => {
            let mut params: ResolutionParams = decode(object)?;
            if single_shape {
                params.shapes = None;
            }
            check_positive("thresholds", &params.thresholds)?;
            check_orders("n_max", &[params.n_max])?;
            if !(params.d_lo > 0.0 && params.d_hi > params.d_lo && params.tolerance > 0.0) {
                return Err(CliError::Config("need 0 < d_lo < d_hi and tolerance > 0".into()));
            }
            let scan = ScanSettings {
                d_lo: params.d_lo,
                d_hi: params.d_hi,
                tolerance: params.tolerance,
            };
            let scenarios = scenarios(
                &params.shape,
                &params.shapes,
                params.m,
                &params.optics,
                &[params.d_lo, 2.0 * params.d_hi],
            )?;
            Plan::ResolutionScan { params, scenarios, scan }
        }
        Command::DipContrast => {
            let params: DipParams = decode(object)?;
            let shape = parse_shape(&params.shape, params.m)?;
            if shape.count() != 2 {
                return Err(CliError::Config(format!("dip contrast needs a 2-source shape, got {shape}")));
            }
            check_positive("d_over_w", &params.d_over_w)?;
            check_positive("profile_step", &[params.profile_step])?;
            check_orders("n_max", &[params.n_max])?;
            let scenario = params.optics.scenario(shape)?;
            for &d in &params.d_over_w {
                scenario.config(d)?;
            }
            Plan::DipContrast { params, scenario }
        }
        Command::BlinkRatio => {
            let params: BlinkParams = decode(object)?;
            check_positive("alpha_pl", &params.alpha_pl)?;
            check_positive("t_over_tau0", &params.t_over_tau0)?;
            for &a in &params.alpha_pl {
                let model = blink_model(&params, a);
                model.validate()?;
                for &t in &params.t_over_tau0 {
                    if t * model.tau0 < model.frame {
                        return Err(CliError::Config(format!("T/tau0 = {t} is shorter than one frame")));
                    }
                }
            }
            if params.n_realizations < 2 {
                return Err(CliError::Config("n_realizations must be at least 2".into()));
            }
            if params.patterns.is_empty() {
                return Err(CliError::Config("`patterns` is empty".into()));
            }
            for p in &params.patterns {
                p.parse::<sofi_crb::blink::Pattern>()?;
            }
            Plan::BlinkRatio { params }
        }
        Command::ShotNoise => {
            let params: ShotParams = decode(object)?;
            let shape = parse_shape(&params.shape, params.m)?;
            check_positive("d_over_w", &[params.d_over_w])?;
            check_positive("mean_peak_counts", &[params.mean_peak_counts])?;
            check_orders("orders", &params.orders)?;
            let n_max = *params.orders.iter().max().expect("non-empty");
            if params.n_frames < n_max {
                return Err(CliError::Config(format!(
                    "n_frames = {} cannot support order {n_max}",
                    params.n_frames
                )));
            }
            if params.n_realizations < 2 {
                return Err(CliError::Config("n_realizations must be at least 2".into()));
            }
            let scenario = params.optics.scenario(shape)?;
            check_scenario(&scenario, &[params.d_over_w])?;
            Plan::ShotNoise { params, scenario }
        }
        Command::CumulantImage => {
            let params: ImageParams = decode(object)?;
            let shape = parse_shape(&params.shape, params.m)?;
            check_positive("d_over_w", &[params.d_over_w])?;
            check_orders("orders", &params.orders)?;
            let scenario = params.optics.scenario(shape)?;
            check_scenario(&scenario, &[params.d_over_w])?;
            Plan::CumulantImage { params, scenario }
        }
    };
    Ok((plan, settings))
}

fn check_events(events: f64) -> CliResult<()> {
    if events.is_finite() && events >= 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("events must be >= 1, got {events}")))
    }
}

fn scenarios(
    shape: &Option<String>,
    shapes: &Option<Vec<String>>,
    count: Option<usize>,
    optics: &Optics,
    d_list: &[f64],
) -> CliResult<Vec<Scenario>> {
    shape_list(shape, shapes, count)?
        .into_iter()
        .map(|s| {
            let sc = optics.scenario(s)?;
            check_scenario(&sc, d_list)?;
            Ok(sc)
        })
        .collect()
}

pub fn blink_model(params: &BlinkParams, alpha_pl: f64) -> sofi_crb::blink::BlinkModel {
    sofi_crb::blink::BlinkModel {
        tau0: params.tau0,
        alpha_pl,
        duty: params.duty,
        frame: params.frame * params.tau0,
        i_on: params.i_on,
        tau_max: params.tau_max * params.tau0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        for c in Command::ALL {
            let (plan, settings) = resolve(c, "{}").unwrap();
            assert_eq!(plan.params_json(), c.defaults());
            assert_eq!(settings, RunSettings::default());
        }
    }

    #[test]
    fn shapes_and_counts() {
        assert_eq!(parse_shape("line-1d", Some(4)).unwrap(), ShapeTemplate::line(4).unwrap());
        assert_eq!(parse_shape("line-1d:3", None).unwrap().count(), 3);
        assert!(parse_shape("line-1d:3", Some(2)).is_err());
        assert!(parse_shape("line-1d", None).is_err());
        assert!(parse_shape("hexagon", None).is_err());
        assert_eq!(parse_shape("triangle-2d", Some(3)).unwrap().count(), 3);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            (Command::Field, r#"{"shape": "hexagon"}"#),
            (Command::Field, r#"{"unknown_key": 1}"#),
            (Command::Field, r#"{"alpha": [0.3, 0.3]}"#),
            (Command::Field, r#"{"xi": 1.5}"#),
            (Command::Field, r#"{"orders": [0]}"#),
            (Command::Field, r#"{"command": "shot-noise"}"#),
            (Command::Field, r#"[1, 2]"#),
            (Command::ErrorVsScale, r#"{"shape": "pair-2d", "shapes": ["pair-2d"]}"#),
            (Command::ErrorVsScale, r#"{"d_over_w": [0.5, -1]}"#),
            (Command::ErrorVsScale, r#"{"events": 0.5}"#),
            (Command::ErrorVsOrder, r#"{"mode": "sideways"}"#),
            (Command::ResolutionScan, r#"{"thresholds": [0]}"#),
            (Command::DipContrast, r#"{"shape": "triangle-2d"}"#),
            (Command::BlinkRatio, r#"{"patterns": ["0.x"]}"#),
            (Command::BlinkRatio, r#"{"alpha_pl": [1.0]}"#),
            (Command::ShotNoise, r#"{"orders": [4], "n_frames": 3}"#),
            (Command::CumulantImage, r#"{"grid_step": 0}"#),
        ];
        for (c, text) in bad {
            assert!(matches!(resolve(c, text), Err(CliError::Config(_))), "{c}: {text}");
        }
    }

    #[test]
    fn single_shape_replaces_default_list() {
        let (plan, _) = resolve(Command::ErrorVsOrder, r#"{"shape": "pair-2d"}"#).unwrap();
        match plan {
            Plan::ErrorVsOrder { scenarios, params } => {
                assert_eq!(scenarios.len(), 1);
                assert_eq!(params.shapes, None);
            }
            other => panic!("unexpected plan {other:?}"),
        }
    }

    #[test]
    fn per_source_lists_and_run_keys() {
        let text = r#"{"command": "error-vs-order", "shapes": ["line-1d:3"], "alpha": [0.285, 0.3, 0.309], "seed": 7, "workers": 2}"#;
        let (plan, settings) = resolve(Command::ErrorVsOrder, text).unwrap();
        assert_eq!(settings.seed, Some(7));
        assert_eq!(settings.workers, Some(2));
        match plan {
            Plan::ErrorVsOrder { scenarios, .. } => {
                assert_eq!(scenarios[0].config(0.5).unwrap().alphas(), &[0.285, 0.3, 0.309]);
            }
            other => panic!("unexpected plan {other:?}"),
        }
    }
}
