//! Batch execution: scenario templates, the speed sweep and the offset
//! colormap.

use std::io::Write;

use rayon::prelude::*;

use crate::control::{BackstepGains, ControlLaw, PredictiveGains, ServoGains, DEFAULT_HORIZON_STEP};
use crate::metrics::summarize;
use crate::observer::ObserverGains;
use crate::path::{ImplementOffset, PathModel};
use crate::plant::{PlantKind, VehicleParams};
use crate::sim::{run, Scenario, SimError, SimSettings, SlipSource};
use crate::suite::{PathTag, TaggedPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    LateralServoing,
    Backstepping,
    Predictive,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::LateralServoing => "lateral_servoing",
            ControllerKind::Backstepping => "backstepping",
            ControllerKind::Predictive => "predictive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lateral_servoing" => Some(ControllerKind::LateralServoing),
            "backstepping" => Some(ControllerKind::Backstepping),
            "predictive" => Some(ControllerKind::Predictive),
            _ => None,
        }
    }
}

/// The four canonical implement positions: front/rear, left/right.
pub const CANONICAL_OFFSETS: [(&str, f64, f64); 4] = [
    ("front_left", 2.0, 0.5),
    ("front_right", 2.0, -0.5),
    ("rear_left", -2.0, 0.5),
    ("rear_right", -2.0, -0.5),
];

/// Horizons of the front and rear slots of the reference parameter table, m.
pub const FRONT_HORIZON: f64 = 0.5;
pub const REAR_HORIZON: f64 = 2.0;

pub fn canonical_offset(name: &str) -> Option<ImplementOffset<f64>> {
    CANONICAL_OFFSETS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|&(_, s, y)| ImplementOffset::new(s, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OffsetGroup {
    Front,
    Rear,
}

impl OffsetGroup {
    pub fn of(off: &ImplementOffset<f64>) -> Self {
        if off.longitudinal >= 0.0 {
            OffsetGroup::Front
        } else {
            OffsetGroup::Rear
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OffsetGroup::Front => "front",
            OffsetGroup::Rear => "rear",
        }
    }

    pub fn members(&self) -> Vec<ImplementOffset<f64>> {
        CANONICAL_OFFSETS
            .iter()
            .map(|&(_, s, y)| ImplementOffset::new(s, y))
            .filter(|o| OffsetGroup::of(o) == *self)
            .collect()
    }
}

/// Horizon of the table slot on the same side (front or rear) as `off`.
pub fn table_horizon(off: &ImplementOffset<f64>) -> f64 {
    match OffsetGroup::of(off) {
        OffsetGroup::Front => FRONT_HORIZON,
        OffsetGroup::Rear => REAR_HORIZON,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HorizonChoice {
    /// Front or rear slot of the reference table, by the sign of `I_s`.
    Table,
    Fixed(f64),
    /// Per (speed, group) horizons from a tuning pass; pairs missing from
    /// the table fall back to `Table`.
    Tuned(Vec<TunedHorizon>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedHorizon {
    pub speed: f64,
    pub group: OffsetGroup,
    pub s_h: f64,
}

/// Everything of a scenario except path, controller, offset and speed.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub plant: PlantKind<f64>,
    pub params: VehicleParams<f64>,
    pub slip_source: SlipSource,
    pub settings: SimSettings,
    pub seed: u64,
    pub lambda: f64,
    pub k_psi: f64,
    /// Backstepping error gain; `None` uses `lambda`.
    pub k_y: Option<f64>,
    pub servo: ServoGains<f64>,
    pub horizon: HorizonChoice,
    pub horizon_step: f64,
    /// Start with the implement on the path instead of the rear axle, so
    /// that the statistics measure curvature changes rather than the initial
    /// approach.
    pub implement_on_path: bool,
}

impl Default for Template {
    fn default() -> Self {
        Self {
            plant: PlantKind::DynamicSingleTrack,
            params: VehicleParams::default(),
            slip_source: SlipSource::Observer(ObserverGains::default()),
            settings: SimSettings::default(),
            seed: 0,
            lambda: 0.15,
            k_psi: 0.6,
            k_y: None,
            servo: ServoGains::default(),
            horizon: HorizonChoice::Table,
            horizon_step: DEFAULT_HORIZON_STEP,
            implement_on_path: true,
        }
    }
}

impl Template {
    pub fn horizon_for(&self, off: &ImplementOffset<f64>, speed: f64) -> f64 {
        match &self.horizon {
            HorizonChoice::Table => table_horizon(off),
            HorizonChoice::Fixed(h) => *h,
            HorizonChoice::Tuned(table) => table
                .iter()
                .find(|t| t.group == OffsetGroup::of(off) && (t.speed - speed).abs() < 1e-9)
                .map_or_else(|| table_horizon(off), |t| t.s_h),
        }
    }

    pub fn law(&self, kind: ControllerKind, off: &ImplementOffset<f64>, speed: f64) -> ControlLaw<f64> {
        match kind {
            ControllerKind::LateralServoing => ControlLaw::LateralServoing(self.servo),
            ControllerKind::Backstepping => ControlLaw::Backstepping(BackstepGains {
                k_y: self.k_y.unwrap_or(self.lambda),
                k_psi: self.k_psi,
            }),
            ControllerKind::Predictive => ControlLaw::Predictive(PredictiveGains::with_step(
                self.lambda,
                self.k_psi,
                self.horizon_for(off, speed),
                self.horizon_step,
            )),
        }
    }

    pub fn scenario(
        &self,
        path: &PathModel<f64>,
        law: ControlLaw<f64>,
        offset: ImplementOffset<f64>,
        speed: f64,
    ) -> Scenario {
        let mut sc = Scenario::new(path.clone(), law, offset);
        sc.plant = self.plant;
        sc.params = VehicleParams { speed, ..self.params };
        sc.slip_source = self.slip_source;
        sc.settings = self.settings;
        sc.seed = self.seed;
        if self.implement_on_path {
            // generated paths start with a line, where e_I = y + I_y
            sc.initial.y = -offset.lateral;
        }
        sc
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("path `{0}` is tagged for training and cannot be used for evaluation")]
    TrainingPathInEvaluation(String),
    #[error("path `{0}` is not tagged for training")]
    NotTraining(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("every run failed; first failure: {0}")]
    AllFailed(String),
}

pub fn ensure_tag(paths: &[TaggedPath], tag: PathTag) -> Result<(), BenchError> {
    if paths.is_empty() {
        return Err(BenchError::Empty("path set"));
    }
    match paths.iter().find(|p| p.tag != tag) {
        None => Ok(()),
        Some(p) if tag == PathTag::Evaluation => Err(BenchError::TrainingPathInEvaluation(p.name.clone())),
        Some(p) => Err(BenchError::NotTraining(p.name.clone())),
    }
}

/// True implement errors of one run.
pub fn run_errors(sc: &Scenario) -> Result<Vec<f64>, SimError> {
    run(sc).map(|log| log.true_errors().collect())
}

/// Runs every scenario in parallel; results keep the input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<Vec<f64>, SimError>> {
    scenarios.par_iter().map(run_errors).collect()
}

/// Pooled statistics of a group of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledStats {
    pub median: f64,
    pub iqr: f64,
    pub rmse: f64,
    pub samples: usize,
    pub runs: usize,
    pub failures: Vec<String>,
}

pub fn pool(results: &[Result<Vec<f64>, SimError>]) -> PooledStats {
    let mut all = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(v) => all.extend_from_slice(v),
            Err(e) => failures.push(e.to_string()),
        }
    }
    let s = summarize(all.iter().copied());
    PooledStats {
        median: s.median,
        iqr: s.iqr(),
        rmse: s.rmse,
        samples: all.len(),
        runs: results.len(),
        failures,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRow {
    pub speed: f64,
    pub group: OffsetGroup,
    /// Horizon used by the predictive law, if that was the controller.
    pub s_h: Option<f64>,
    pub stats: PooledStats,
}

/// The eight sweep speeds, 0.25 to 2.0 m/s.
pub fn default_speeds() -> Vec<f64> {
    (1..=8).map(|i| 0.25 * i as f64).collect()
}

/// Median and IQR per (speed, front/rear group) across the suite; left and
/// right offsets of a group are pooled.
pub fn sweep_speed(
    template: &Template,
    kind: ControllerKind,
    speeds: &[f64],
    suite: &[TaggedPath],
) -> Result<Vec<SpeedRow>, BenchError> {
    ensure_tag(suite, PathTag::Evaluation)?;
    let mut keys = Vec::new();
    let mut scenarios = Vec::new();
    for &v in speeds {
        for group in [OffsetGroup::Front, OffsetGroup::Rear] {
            for off in group.members() {
                for p in suite {
                    keys.push((v, group));
                    scenarios.push(template.scenario(&p.path, template.law(kind, &off, v), off, v));
                }
            }
        }
    }
    let results = run_batch(&scenarios);
    let mut rows = Vec::new();
    for &v in speeds {
        for group in [OffsetGroup::Front, OffsetGroup::Rear] {
            let sel: Vec<_> = keys
                .iter()
                .zip(&results)
                .filter(|(k, _)| **k == (v, group))
                .map(|(_, r)| r.clone())
                .collect();
            let s_h = (kind == ControllerKind::Predictive).then(|| template.horizon_for(&group.members()[0], v));
            rows.push(SpeedRow {
                speed: v,
                group,
                s_h,
                stats: pool(&sel),
            });
        }
    }
    if rows.iter().all(|r| r.stats.samples == 0) {
        let first = rows
            .iter()
            .flat_map(|r| r.stats.failures.first())
            .next()
            .cloned()
            .unwrap_or_default();
        return Err(BenchError::AllFailed(first));
    }
    Ok(rows)
}

pub fn write_speed_csv<W: Write>(rows: &[SpeedRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["speed_mps", "group", "s_h_m", "median_m", "iqr_m", "rmse_m", "samples", "failed_runs"])?;
    for r in rows {
        out.write_record([
            format!("{}", r.speed),
            r.group.name().to_string(),
            r.s_h.map_or(String::new(), |h| format!("{h}")),
            format!("{}", r.stats.median),
            format!("{}", r.stats.iqr),
            format!("{}", r.stats.rmse),
            r.stats.samples.to_string(),
            r.stats.failures.len().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetCell {
    pub i_s: f64,
    pub i_y: f64,
    pub stats: PooledStats,
}

/// Symmetric grid `−limit, −limit + step, …, limit`.
pub fn offset_grid(limit: f64, step: f64) -> Vec<f64> {
    let n = (limit / step).round() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

/// Median and IQR over the suite for every `(I_s, I_y)` grid cell.
pub fn sweep_offset(
    template: &Template,
    kind: ControllerKind,
    grid: &[f64],
    speed: f64,
    suite: &[TaggedPath],
) -> Result<Vec<OffsetCell>, BenchError> {
    ensure_tag(suite, PathTag::Evaluation)?;
    let mut cells = Vec::new();
    for &i_s in grid {
        for &i_y in grid {
            let off = ImplementOffset::new(i_s, i_y);
            let scenarios: Vec<Scenario> = suite
                .iter()
                .map(|p| template.scenario(&p.path, template.law(kind, &off, speed), off, speed))
                .collect();
            cells.push(OffsetCell {
                i_s,
                i_y,
                stats: pool(&run_batch(&scenarios)),
            });
        }
    }
    if cells.iter().all(|c| c.stats.samples == 0) {
        return Err(BenchError::AllFailed(
            cells[0].stats.failures.first().cloned().unwrap_or_default(),
        ));
    }
    Ok(cells)
}

pub fn write_offset_csv<W: Write>(cells: &[OffsetCell], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["i_s_m", "i_y_m", "median_m", "iqr_m", "rmse_m", "samples", "failed_runs"])?;
    for c in cells {
        out.write_record([
            format!("{}", c.i_s),
            format!("{}", c.i_y),
            format!("{}", c.stats.median),
            format!("{}", c.stats.iqr),
            format!("{}", c.stats.rmse),
            c.stats.samples.to_string(),
            c.stats.failures.len().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
