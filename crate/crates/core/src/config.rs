//! Run configuration documents.
//!
//! ```toml
//! schema_version = 1
//! path = "validation"          # validation | avoidance | suite:<seed> | a path file
//! controller = "predictive"    # predictive | backstepping | lateral_servoing
//! speed = 1.0
//! seed = 0
//!
//! [offset]
//! slot = "rear_right"          # or longitudinal = ..., lateral = ...
//!
//! [plant]
//! kind = "dynamic"             # ideal | slip | dynamic
//! steer_time_constant = 0.5
//!
//! [gains]
//! lambda = 0.15
//! k_psi = 0.6
//! # s_h = 2.0                  # default: front or rear table value
//! ```
//!
//! Overrides use dotted keys (`gains.lambda=0.2`) and are applied to the
//! document before validation, so errors point at the same key paths.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bench::{canonical_offset, offset_grid, default_speeds, ControllerKind, HorizonChoice, Template};
use crate::control::{ControlLaw, ServoGains};
use crate::observer::ObserverGains;
use crate::path::{parse_path_document, ImplementOffset, MatchingConfig};
use crate::plant::{PlantKind, SlipProfile, VehicleParams};
use crate::sim::{InitialOffset, Scenario, SimSettings, SlipSource};
use crate::suite::{
    build_avoidance_path, build_validation_path, tagged_suite, PathTag, TaggedPath, EVALUATION_SEED, SUITE_SIZE,
    TRAINING_SEED,
};
use crate::tuner::TuneSpec;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("config: {message} (at `{key}`{})", line.map_or(String::new(), |l| format!(", line {l}")))]
    Schema {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("config: unsupported schema_version {0} (expected {CONFIG_SCHEMA_VERSION})")]
    Version(u32),
    #[error("config: bad override `{0}` (expected key=value)")]
    Override(String),
    #[error("config: `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("config: cannot read path file {file}: {message}")]
    PathFile { file: PathBuf, message: String },
    #[error("config: offset infeasible for path `{path}`: {message}")]
    Infeasible { path: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    schema_version: u32,
    path: String,
    #[serde(default)]
    controller: Option<String>,
    #[serde(default)]
    speed: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    offset: OffsetDoc,
    #[serde(default)]
    plant: PlantDoc,
    #[serde(default)]
    gains: GainsDoc,
    #[serde(default)]
    observer: ObserverDoc,
    #[serde(default)]
    sim: SimDoc,
    #[serde(default)]
    tune: TuneDoc,
    #[serde(default)]
    sweep: SweepDoc,
    #[serde(default)]
    compare: CompareDoc,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OffsetDoc {
    slot: Option<String>,
    longitudinal: Option<f64>,
    lateral: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantDoc {
    kind: Option<String>,
    wheelbase: Option<f64>,
    max_steer: Option<f64>,
    steer_time_constant: Option<f64>,
    cornering_stiffness: Option<f64>,
    mass: Option<f64>,
    yaw_inertia: Option<f64>,
    /// Prescribed slips for `kind = "slip"`, rad.
    slip_rear: Option<f64>,
    slip_front: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsDoc {
    lambda: Option<f64>,
    k_psi: Option<f64>,
    s_h: Option<f64>,
    horizon_step: Option<f64>,
    k_y: Option<f64>,
    k_d: Option<f64>,
    k_p: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObserverDoc {
    /// observer | disabled | exact
    mode: Option<String>,
    lateral: Option<f64>,
    angular: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDoc {
    dt: Option<f64>,
    control_period: Option<f64>,
    end_margin: Option<f64>,
    yaw_rate_noise: Option<f64>,
    corridor: Option<f64>,
    initial_s: Option<f64>,
    initial_y: Option<f64>,
    initial_psi: Option<f64>,
    /// Default start: implement on the path (true) or rear axle on it.
    implement_on_path: Option<bool>,
    stop_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TuneDoc {
    range: Option<(f64, f64)>,
    step: Option<f64>,
    speeds: Option<Vec<f64>>,
    training_seed: Option<u64>,
    training_paths: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    speeds: Option<Vec<f64>>,
    grid_limit: Option<f64>,
    grid_step: Option<f64>,
    suite_size: Option<usize>,
    mirror_closed: Option<bool>,
    /// table | tuned
    horizon: Option<String>,
    tune_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareDoc {
    controllers: Option<Vec<String>>,
    observer_ablation: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub spec: TuneSpec,
    pub speeds: Vec<f64>,
    pub training_seed: u64,
    pub training_paths: usize,
}

impl TuneConfig {
    pub fn training_suite(&self) -> Vec<TaggedPath> {
        tagged_suite(self.training_seed, self.training_paths, PathTag::Training)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepHorizon {
    Table,
    Tuned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub speeds: Vec<f64>,
    pub grid: Vec<f64>,
    pub mirror_closed: bool,
    pub horizon: SweepHorizon,
    pub tune_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub controllers: Vec<ControllerKind>,
    pub observer_ablation: bool,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub path_name: String,
    /// Resolved paths; one unless the path is a suite.
    pub paths: Vec<TaggedPath>,
    pub controller: ControllerKind,
    pub offset: ImplementOffset<f64>,
    pub speed: f64,
    pub template: Template,
    pub initial: InitialOffset,
    pub stop_s: Option<f64>,
    pub tune: TuneConfig,
    pub sweep: SweepConfig,
    pub compare: CompareConfig,
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.template.seed
    }

    pub fn law(&self, kind: ControllerKind) -> ControlLaw<f64> {
        self.template.law(kind, &self.offset, self.speed)
    }

    /// Scenario of the configured controller on one resolved path.
    pub fn scenario(&self, path: &TaggedPath) -> Scenario {
        let mut sc = self
            .template
            .scenario(&path.path, self.law(self.controller), self.offset, self.speed);
        sc.initial = self.initial;
        sc.stop_s = self.stop_s;
        sc
    }
}

/// Applies `key=value` overrides to a TOML document. Values parse as TOML
/// and fall back to plain strings.
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<String, ConfigError> {
    if overrides.is_empty() {
        return Ok(text.to_string());
    }
    let mut doc: toml_edit::DocumentMut = text.parse().map_err(|e: toml_edit::TomlError| ConfigError::Schema {
        key: String::new(),
        line: None,
        message: e.to_string(),
    })?;
    for o in overrides {
        let (key, raw) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.clone()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Override(o.clone()));
        }
        let value: toml_edit::Value = raw
            .trim()
            .parse()
            .unwrap_or_else(|_| toml_edit::Value::from(raw.trim()));
        let parts: Vec<&str> = key.split('.').collect();
        let (last, tables) = parts.split_last().expect("non-empty key");
        let mut item = doc.as_item_mut();
        for t in tables {
            let table = item
                .as_table_like_mut()
                .ok_or_else(|| ConfigError::Override(o.clone()))?;
            if table.get(t).is_none() {
                table.insert(t, toml_edit::table());
            }
            item = table.get_mut(t).expect("just inserted");
        }
        let table = item
            .as_table_like_mut()
            .ok_or_else(|| ConfigError::Override(o.clone()))?;
        table.insert(last, toml_edit::Item::Value(value));
    }
    Ok(doc.to_string())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses, fills defaults and validates. Relative path files resolve
/// against `base_dir`.
pub fn parse_config(text: &str, overrides: &[String], base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let text = apply_overrides(text, overrides)?;
    let de = toml::Deserializer::new(&text);
    let doc: Doc = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Schema {
            key,
            line: inner.span().map(|s| line_of(&text, s.start)),
            message: inner.message().to_string(),
        }
    })?;
    if doc.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(ConfigError::Version(doc.schema_version));
    }
    build(doc, base_dir)
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

fn speeds(key: &str, v: Option<Vec<f64>>, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    let v = v.unwrap_or(default);
    if v.is_empty() {
        return Err(invalid(key, "empty list"));
    }
    for s in &v {
        positive(key, *s)?;
    }
    Ok(v)
}

pub fn resolve_path(name: &str, base_dir: &Path, suite_size: usize) -> Result<Vec<TaggedPath>, ConfigError> {
    let one = |path| {
        vec![TaggedPath {
            name: name.to_string(),
            tag: PathTag::Evaluation,
            path,
        }]
    };
    match name {
        "validation" => Ok(one(build_validation_path())),
        "avoidance" => Ok(one(build_avoidance_path())),
        _ => {
            if let Some(seed) = name.strip_prefix("suite:") {
                let seed: u64 = seed
                    .parse()
                    .map_err(|_| invalid("path", format!("bad suite seed in `{name}`")))?;
                return Ok(tagged_suite(seed, suite_size, PathTag::Evaluation));
            }
            let file = base_dir.join(name);
            let text = std::fs::read_to_string(&file).map_err(|e| ConfigError::PathFile {
                file: file.clone(),
                message: e.to_string(),
            })?;
            let path = parse_path_document(&text).map_err(|e| ConfigError::PathFile {
                file,
                message: e.to_string(),
            })?;
            Ok(one(path))
        }
    }
}

fn build(doc: Doc, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let controller = match doc.controller.as_deref() {
        None => ControllerKind::Predictive,
        Some(c) => ControllerKind::parse(c).ok_or_else(|| invalid("controller", format!("unknown controller `{c}`")))?,
    };
    let speed = positive("speed", doc.speed.unwrap_or(1.0))?;

    let offset = match (doc.offset.slot.as_deref(), doc.offset.longitudinal, doc.offset.lateral) {
        (Some(slot), None, None) => {
            canonical_offset(slot).ok_or_else(|| invalid("offset.slot", format!("unknown slot `{slot}`")))?
        }
        (Some(_), _, _) => return Err(invalid("offset", "give either `slot` or coordinates, not both")),
        (None, None, None) => canonical_offset("rear_right").expect("canonical"),
        (None, s, y) => ImplementOffset::new(s.unwrap_or(0.0), y.unwrap_or(0.0)),
    };
    if !(offset.longitudinal.is_finite() && offset.lateral.is_finite()) {
        return Err(invalid("offset", "non-finite coordinate"));
    }

    let p = &doc.plant;
    let defaults = VehicleParams::<f64>::default();
    let mut params = VehicleParams {
        wheelbase: p.wheelbase.unwrap_or(defaults.wheelbase),
        speed,
        max_steer: defaults.max_steer,
        steer_time_constant: p.steer_time_constant.unwrap_or(defaults.steer_time_constant),
        cornering_stiffness: p.cornering_stiffness.unwrap_or(defaults.cornering_stiffness),
        mass: p.mass.unwrap_or(defaults.mass),
        yaw_inertia: p.yaw_inertia.unwrap_or(defaults.yaw_inertia),
    };
    params.max_steer = p
        .max_steer
        .unwrap_or_else(|| (params.wheelbase / crate::path::DEFAULT_MIN_RADIUS).atan());
    params.validate().map_err(|e| invalid("plant", e.to_string()))?;
    let plant = match p.kind.as_deref().unwrap_or("dynamic") {
        "ideal" => PlantKind::IdealKinematic,
        "dynamic" => PlantKind::DynamicSingleTrack,
        "slip" => {
            let profile = SlipProfile::Constant {
                rear: p.slip_rear.unwrap_or(0.0),
                front: p.slip_front.unwrap_or(0.0),
            };
            profile.validate().map_err(|e| invalid("plant", e.to_string()))?;
            PlantKind::PrescribedSlip(profile)
        }
        other => return Err(invalid("plant.kind", format!("unknown plant `{other}`"))),
    };
    if !matches!(plant, PlantKind::PrescribedSlip(_)) && (p.slip_rear.is_some() || p.slip_front.is_some()) {
        return Err(invalid("plant", "slip_rear/slip_front need kind = \"slip\""));
    }

    let g = &doc.gains;
    let lambda = positive("gains.lambda", g.lambda.unwrap_or(0.15))?;
    let k_psi = positive("gains.k_psi", g.k_psi.unwrap_or(0.6))?;
    let horizon = match g.s_h {
        Some(h) => HorizonChoice::Fixed(positive("gains.s_h", h)?),
        None => HorizonChoice::Table,
    };
    let horizon_step = positive(
        "gains.horizon_step",
        g.horizon_step.unwrap_or(crate::control::DEFAULT_HORIZON_STEP),
    )?;
    let k_y = g.k_y.map(|k| positive("gains.k_y", k)).transpose()?;
    let servo_default = ServoGains::<f64>::default();
    let servo = ServoGains {
        k_d: positive("gains.k_d", g.k_d.unwrap_or(servo_default.k_d))?,
        k_p: positive("gains.k_p", g.k_p.unwrap_or(servo_default.k_p))?,
    };

    let og = ObserverGains::<f64>::default();
    let gains = ObserverGains {
        lateral: positive("observer.lateral", doc.observer.lateral.unwrap_or(og.lateral))?,
        angular: positive("observer.angular", doc.observer.angular.unwrap_or(og.angular))?,
    };
    let slip_source = match doc.observer.mode.as_deref().unwrap_or("observer") {
        "observer" => SlipSource::Observer(gains),
        "disabled" => SlipSource::Disabled,
        "exact" => SlipSource::Exact,
        other => return Err(invalid("observer.mode", format!("unknown mode `{other}`"))),
    };

    let s = &doc.sim;
    let sd = SimSettings::default();
    let settings = SimSettings {
        dt: positive("sim.dt", s.dt.unwrap_or(sd.dt))?,
        control_period: positive("sim.control_period", s.control_period.unwrap_or(sd.control_period))?,
        end_margin: s.end_margin.unwrap_or(sd.end_margin),
        yaw_rate_noise: s.yaw_rate_noise.unwrap_or(sd.yaw_rate_noise),
        matching: MatchingConfig {
            corridor: positive("sim.corridor", s.corridor.unwrap_or(sd.matching.corridor))?,
        },
    };
    if !(settings.end_margin >= 0.0) {
        return Err(invalid("sim.end_margin", "must be non-negative"));
    }
    if !(settings.yaw_rate_noise >= 0.0) {
        return Err(invalid("sim.yaw_rate_noise", "must be non-negative"));
    }
    let implement_on_path = s.implement_on_path.unwrap_or(true);
    let initial = InitialOffset {
        s: s.initial_s,
        y: s.initial_y.unwrap_or(if implement_on_path { -offset.lateral } else { 0.0 }),
        psi_tilde: s.initial_psi.unwrap_or(0.0),
    };

    let t = &doc.tune;
    let tune = TuneConfig {
        spec: TuneSpec {
            range: t.range.unwrap_or((0.5, 3.0)),
            step: t.step.unwrap_or(0.01),
            speed,
            offset,
        },
        speeds: speeds("tune.speeds", t.speeds.clone(), vec![speed])?,
        training_seed: t.training_seed.unwrap_or(TRAINING_SEED),
        training_paths: t.training_paths.unwrap_or(SUITE_SIZE),
    };
    tune.spec.grid().map_err(|e| invalid("tune.range", e.to_string()))?;
    if tune.training_paths == 0 {
        return Err(invalid("tune.training_paths", "at least one training path"));
    }

    let w = &doc.sweep;
    let grid_limit = positive("sweep.grid_limit", w.grid_limit.unwrap_or(3.0))?;
    let grid_step = positive("sweep.grid_step", w.grid_step.unwrap_or(0.25))?;
    let sweep = SweepConfig {
        speeds: speeds("sweep.speeds", w.speeds.clone(), default_speeds())?,
        grid: offset_grid(grid_limit, grid_step),
        mirror_closed: w.mirror_closed.unwrap_or(true),
        horizon: match w.horizon.as_deref().unwrap_or("tuned") {
            "table" => SweepHorizon::Table,
            "tuned" => SweepHorizon::Tuned,
            other => return Err(invalid("sweep.horizon", format!("unknown horizon rule `{other}`"))),
        },
        tune_step: positive("sweep.tune_step", w.tune_step.unwrap_or(0.1))?,
    };
    let suite_size = w.suite_size.unwrap_or(SUITE_SIZE);
    if suite_size == 0 {
        return Err(invalid("sweep.suite_size", "at least one path"));
    }

    let compare = CompareConfig {
        controllers: match &doc.compare.controllers {
            None => vec![ControllerKind::Predictive, ControllerKind::Backstepping],
            Some(list) if list.is_empty() => return Err(invalid("compare.controllers", "empty list")),
            Some(list) => list
                .iter()
                .map(|c| {
                    ControllerKind::parse(c)
                        .ok_or_else(|| invalid("compare.controllers", format!("unknown controller `{c}`")))
                })
                .collect::<Result<_, _>>()?,
        },
        observer_ablation: doc.compare.observer_ablation.unwrap_or(false),
    };

    let paths = resolve_path(&doc.path, base_dir, suite_size)?;
    if let Some(seed) = doc.path.strip_prefix("suite:").and_then(|s| s.parse::<u64>().ok()) {
        if seed == tune.training_seed {
            return Err(invalid("tune.training_seed", "training and evaluation suites must differ"));
        }
    }
    for p in &paths {
        offset.check_feasible(&p.path).map_err(|e| ConfigError::Infeasible {
            path: p.name.clone(),
            message: e.to_string(),
        })?;
    }

    let template = Template {
        plant,
        params,
        slip_source,
        settings,
        seed: doc.seed.unwrap_or(0),
        lambda,
        k_psi,
        k_y,
        servo,
        horizon,
        horizon_step,
        implement_on_path,
    };
    let cfg = RunConfig {
        path_name: doc.path,
        paths,
        controller,
        offset,
        speed,
        template,
        initial,
        stop_s: s.stop_s,
        tune,
        sweep,
        compare,
    };
    for p in &cfg.paths {
        cfg.scenario(p).validate().map_err(|e| invalid("path", format!("`{}`: {e}", p.name)))?;
    }
    Ok(cfg)
}

/// Default evaluation suite name.
pub fn default_suite_name() -> String {
    format!("suite:{EVALUATION_SEED}")
}
