//! Closed-loop simulation of plant, observer and controller.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::control::{ControlInput, ControlLaw, Controller};
use crate::observer::{observer_step, ObserverGains, ObserverState};
use crate::path::{
    implement_error, implement_world_position, match_point, match_to_path, ImplementOffset, MatchError,
    MatchingConfig, PathModel, Pose2,
};
use crate::plant::{kinematic_step, kinematic_yaw_rate, PlantError, PlantKind, PlantState, SideslipState, StepContext, VehicleParams};

/// Source of the sideslip values fed to the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlipSource {
    /// Online observer estimates.
    Observer(ObserverGains<f64>),
    /// No compensation, `β̂ ≡ 0`.
    Disabled,
    /// The plant's true sideslip.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    /// Physics step, s.
    pub dt: f64,
    /// Control and logging period, s. Rounded to a whole number of steps.
    pub control_period: f64,
    /// Distance kept clear of both path ends, beyond the implement's
    /// longitudinal offset, m.
    pub end_margin: f64,
    /// Standard deviation of the yaw-rate measurement noise, rad/s.
    pub yaw_rate_noise: f64,
    pub matching: MatchingConfig<f64>,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 0.01,
            control_period: 0.05,
            end_margin: 1.0,
            yaw_rate_noise: 0.0,
            matching: MatchingConfig::default(),
        }
    }
}

/// Initial placement of the vehicle relative to the path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialOffset {
    /// Start abscissa; `None` starts as early as the implement allows.
    pub s: Option<f64>,
    pub y: f64,
    pub psi_tilde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub path: PathModel<f64>,
    pub plant: PlantKind<f64>,
    pub params: VehicleParams<f64>,
    pub law: ControlLaw<f64>,
    pub offset: ImplementOffset<f64>,
    pub slip_source: SlipSource,
    pub initial: InitialOffset,
    /// Abscissa at which the run stops; `None` stops at the path end minus
    /// the margin.
    pub stop_s: Option<f64>,
    pub settings: SimSettings,
    pub seed: u64,
}

impl Scenario {
    pub fn new(path: PathModel<f64>, law: ControlLaw<f64>, offset: ImplementOffset<f64>) -> Self {
        Self {
            path,
            plant: PlantKind::IdealKinematic,
            params: VehicleParams::default(),
            law,
            offset,
            slip_source: SlipSource::Observer(ObserverGains::default()),
            initial: InitialOffset::default(),
            stop_s: None,
            settings: SimSettings::default(),
            seed: 0,
        }
    }

    /// Abscissa range `[start, stop]` of the run.
    pub fn span(&self) -> (f64, f64) {
        let m = self.settings.end_margin;
        let start = self
            .initial
            .s
            .unwrap_or(m + (-self.offset.longitudinal).max(0.0));
        let stop = self
            .stop_s
            .unwrap_or(self.path.total_length() - m - self.offset.longitudinal.max(0.0));
        (start, stop)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        if let PlantKind::PrescribedSlip(p) = &self.plant {
            p.validate()?;
        }
        self.offset
            .check_feasible(&self.path)
            .map_err(|e| SimError::Invalid(e.to_string()))?;
        let s = &self.settings;
        if !(s.dt > 0.0 && s.dt <= 0.1) {
            return Err(PlantError::InvalidStep(s.dt).into());
        }
        if !(s.control_period >= s.dt) {
            return Err(SimError::Invalid("control period shorter than the physics step".into()));
        }
        if !(s.yaw_rate_noise >= 0.0) {
            return Err(SimError::Invalid("yaw-rate noise must be non-negative".into()));
        }
        let (a, b) = self.span();
        if !(a >= 0.0 && a < b && b <= self.path.total_length()) {
            return Err(SimError::Invalid(format!(
                "run span [{a:.3}, {b:.3}] m does not fit the {:.3} m path",
                self.path.total_length()
            )));
        }
        if let SlipSource::Observer(g) = &self.slip_source {
            ObserverState::new(*g).validate().map_err(SimError::Invalid)?;
        }
        match &self.law {
            ControlLaw::Predictive(g) => g.validate().map_err(SimError::Invalid)?,
            ControlLaw::Backstepping(g) if !(g.k_y > 0.0 && g.k_psi > 0.0) => {
                return Err(SimError::Invalid("backstepping gains must be positive".into()))
            }
            ControlLaw::LateralServoing(g) if !(g.k_d > 0.0 && g.k_p > 0.0) => {
                return Err(SimError::Invalid("servoing gains must be positive".into()))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("corridor departure at step {step} (t = {t:.2} s): {source}")]
    CorridorDeparture { step: usize, t: f64, source: MatchError },
}

/// One logged sample, taken at each control update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub delta_cmd: f64,
    pub delta_act: f64,
    pub y_err: f64,
    pub psi_err: f64,
    /// Control-model implement error; NaN when infeasible at this state.
    pub e_i: f64,
    /// Geometric implement error from matching the implement point itself.
    pub e_true: f64,
    pub beta_r_true: f64,
    pub beta_f_true: f64,
    pub beta_r_hat: f64,
    pub beta_f_hat: f64,
    pub curvature: f64,
    /// Abscissa of the implement's own closest path point (not exported).
    pub implement_s: f64,
}

pub const CSV_HEADER: [&str; 16] = [
    "t_s",
    "s_m",
    "x_m",
    "y_m",
    "heading_rad",
    "delta_cmd_rad",
    "delta_act_rad",
    "y_err_m",
    "psi_err_rad",
    "e_I_m",
    "e_true_m",
    "beta_r_true_rad",
    "beta_f_true_rad",
    "beta_r_hat_rad",
    "beta_f_hat_rad",
    "curvature_1pm",
];

impl LogRecord {
    fn row(&self) -> [f64; 16] {
        [
            self.t,
            self.s,
            self.x,
            self.y,
            self.heading,
            self.delta_cmd,
            self.delta_act,
            self.y_err,
            self.psi_err,
            self.e_i,
            self.e_true,
            self.beta_r_true,
            self.beta_f_true,
            self.beta_r_hat,
            self.beta_f_hat,
            self.curvature,
        ]
    }
}

/// A controller failure during the run; the command was held.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlEvent {
    pub record: usize,
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    /// Sampling period, s.
    pub period: f64,
    pub records: Vec<LogRecord>,
    pub events: Vec<ControlEvent>,
    /// The run reached its stop abscissa (rather than the time cap).
    pub completed: bool,
}

impl RunLog {
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.records {
            out.write_record(r.row().iter().map(|v| format!("{v}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn true_errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.e_true)
    }
}

/// Runs a scenario to its stop abscissa. Controller failures hold the last
/// command and are recorded; only leaving the matching corridor aborts.
pub fn run(sc: &Scenario) -> Result<RunLog, SimError> {
    sc.validate()?;
    let set = &sc.settings;
    let params = &sc.params;
    let v = params.speed;
    let (s_start, s_stop) = sc.span();
    let steps_per_control = ((set.control_period / set.dt).round() as usize).max(1);
    let period = steps_per_control as f64 * set.dt;
    // generous cap: twice the nominal travel time plus a minute
    let t_max = 2.0 * (s_stop - s_start) / v + 60.0;

    let start = sc
        .path
        .pose_at(s_start)
        .map_err(|e| SimError::Invalid(e.to_string()))?;
    let pose0 = start.compose(&Pose2::new(0.0, sc.initial.y, sc.initial.psi_tilde));
    let mut state = PlantState::at_pose(pose0);
    if let PlantKind::PrescribedSlip(profile) = &sc.plant {
        let (br, bf) = profile.sample(0.0, sc.path.curvature_at_clamped(s_start));
        state.sideslip = SideslipState::new(br, bf);
        state.yaw_rate = kinematic_yaw_rate(state.delta, &state.sideslip, params);
        state.lateral_velocity = v * br.tan();
    }
    let mut controller = Controller::new(sc.law);
    let mut observer = match sc.slip_source {
        SlipSource::Observer(g) => Some(ObserverState::new(g)),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let noise = if set.yaw_rate_noise > 0.0 {
        Some(Normal::new(0.0, set.yaw_rate_noise).map_err(|e| SimError::Invalid(e.to_string()))?)
    } else {
        None
    };

    let mut log = RunLog {
        period,
        records: Vec::with_capacity(((t_max / period) as usize).min(1 << 20)),
        events: Vec::new(),
        completed: false,
    };
    let mut step = 0usize;
    // steering seen by the observer over the last interval
    let mut delta_eff = state.delta;
    loop {
        let m = match_to_path(&sc.path, &state.pose, &set.matching).map_err(|source| {
            SimError::CorridorDeparture {
                step,
                t: state.t,
                source,
            }
        })?;
        let f = m.frenet;
        let c = sc.path.curvature_at_clamped(f.s);
        let imp = implement_world_position(&state.pose, &sc.offset);
        let imp_match = match_point(&sc.path, imp, &set.matching).map_err(|source| {
            SimError::CorridorDeparture {
                step,
                t: state.t,
                source,
            }
        })?;

        let slip_hat = match (&mut observer, sc.slip_source) {
            (Some(obs), _) => {
                *obs = observer_step(obs, &f, delta_eff, v, c, params.wheelbase, period);
                obs.sideslip(f.psi_tilde, v)
            }
            (None, SlipSource::Exact) => {
                SideslipState::new(state.sideslip.beta_rear, state.sideslip.beta_front).with_disturbance(f.psi_tilde, v)
            }
            (None, _) => SideslipState::new(0.0, 0.0),
        };
        let yaw_meas = state.yaw_rate + noise.map_or(0.0, |n| n.sample(&mut rng));
        let inp = ControlInput::on_path(
            &sc.path,
            f,
            controller.law.horizon(),
            yaw_meas,
            slip_hat,
            sc.offset,
        );
        let out = controller.step(&inp, params);
        if let Some(err) = &out.error {
            log.events.push(ControlEvent {
                record: log.records.len(),
                t: state.t,
                message: err.to_string(),
            });
        }
        let e_i = match &out.terms {
            Some(t) => t.implement.e_i,
            None => implement_error(&f, c, &sc.offset).map_or(f64::NAN, |e| e.e_i),
        };
        log.records.push(LogRecord {
            t: state.t,
            s: f.s,
            x: state.pose.x,
            y: state.pose.y,
            heading: state.pose.heading,
            delta_cmd: out.delta_cmd,
            delta_act: state.delta,
            y_err: f.y,
            psi_err: f.psi_tilde,
            e_i,
            e_true: imp_match.lateral,
            beta_r_true: state.sideslip.beta_rear,
            beta_f_true: state.sideslip.beta_front,
            beta_r_hat: slip_hat.beta_rear,
            beta_f_hat: slip_hat.beta_front,
            curvature: c,
            implement_s: imp_match.s,
        });

        if f.s >= s_stop {
            log.completed = true;
            break;
        }
        if state.t >= t_max {
            break;
        }
        let ctx = StepContext { curvature: c };
        let mut tan_sum = 0.0;
        for _ in 0..steps_per_control {
            state = kinematic_step(&state, out.delta_cmd, set.dt, params, &sc.plant, &ctx)?;
            tan_sum += state.delta.tan();
            step += 1;
        }
        delta_eff = (tan_sum / steps_per_control as f64).atan();
        // keep the logged time free of accumulated rounding
        state.t = step as f64 * set.dt;
    }
    Ok(log)
}
