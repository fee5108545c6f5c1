//! Ground-truth vehicle simulation.
//!
//! The kinematic plant is a bicycle model whose rear axle center `O` moves
//! with longitudinal body speed `v` and lateral body speed `v tan β_R`, while
//! the heading rate is `v (tan(δ + β_F) − tan β_R) cos β_R / L`. Projected on a
//! Frenet frame this gives exactly `ẏ = v sin ψ̃ + v cos ψ̃ tan β_R`.
//!
//! The dynamic plant is the linear single-track model with linear tire
//! forces `F_y = −C α` on each axle. Its sideslip angles are reported at the
//! axles in the same convention as the kinematic plant.
//!
//! Both are integrated with a fixed-step classical Runge–Kutta scheme. The
//! steering actuator is a first-order lag with hard angle clamping.

use crate::path::Pose2;
use crate::scalar::{clamp_sym, wrap_angle, Scalar};

/// Vehicle geometry, speed and actuator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams<T> {
    /// Wheelbase `L`, m.
    pub wheelbase: T,
    /// Constant forward speed, m/s.
    pub speed: T,
    /// Steering limit, rad.
    pub max_steer: T,
    /// Actuator time constant, s. Zero means instantaneous.
    pub steer_time_constant: T,
    /// Cornering stiffness per axle, N/rad.
    pub cornering_stiffness: T,
    /// Mass, kg (dynamic plant only).
    pub mass: T,
    /// Yaw inertia, kg·m² (dynamic plant only).
    pub yaw_inertia: T,
}

impl<T: Scalar> Default for VehicleParams<T> {
    fn default() -> Self {
        let wheelbase = T::lit(2.0);
        Self {
            wheelbase,
            speed: T::one(),
            max_steer: (wheelbase / T::lit(crate::path::DEFAULT_MIN_RADIUS)).atan(),
            steer_time_constant: T::lit(0.5),
            cornering_stiffness: T::lit(7500.0),
            mass: T::lit(800.0),
            yaw_inertia: T::lit(600.0),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid vehicle parameter: {0}")]
    InvalidParams(String),
    #[error("time step {0} s outside (0, 0.1]")]
    InvalidStep(f64),
    #[error("speed {0} m/s too low for the dynamic tire model (needs > 0.1)")]
    DegenerateSpeed(f64),
    #[error("prescribed sideslip {0} rad exceeds the 0.2 rad bound")]
    SlipOutOfBounds(f64),
}

impl<T: Scalar> VehicleParams<T> {
    /// Rear-to-CG distance (50/50 axle split).
    pub fn rear_to_cg(&self) -> T {
        self.wheelbase / T::lit(2.0)
    }

    pub fn front_to_cg(&self) -> T {
        self.wheelbase - self.rear_to_cg()
    }

    /// Tightest curvature reachable at full lock, 1/m.
    pub fn max_curvature(&self) -> T {
        self.max_steer.tan() / self.wheelbase
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let bad = |m: &str| Err(PlantError::InvalidParams(m.to_string()));
        if !(self.wheelbase > T::zero()) {
            return bad("wheelbase must be positive");
        }
        if !(self.speed > T::zero()) {
            return bad("speed must be positive");
        }
        if !(self.max_steer > T::zero() && self.max_steer < T::FRAC_PI_2()) {
            return bad("max_steer must lie in (0, π/2)");
        }
        if !(self.steer_time_constant >= T::zero()) {
            return bad("steer_time_constant must be non-negative");
        }
        if !(self.cornering_stiffness > T::zero()) {
            return bad("cornering_stiffness must be positive");
        }
        if !(self.mass > T::zero() && self.yaw_inertia > T::zero()) {
            return bad("mass and yaw_inertia must be positive");
        }
        let limit = T::lit(1.0 / crate::path::DEFAULT_MIN_RADIUS);
        if self.max_curvature() > limit * (T::one() + T::epsilon() * T::lit(8.0)) {
            return bad("tan(max_steer)/wheelbase exceeds 1/R_min = 0.2 1/m");
        }
        Ok(())
    }
}

/// Rear and front sideslip angles and the lateral speed disturbance they
/// induce on the rear-axle center.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SideslipState<T> {
    pub beta_rear: T,
    pub beta_front: T,
    /// `v cos ψ̃ tan β_R`, m/s.
    pub lateral_disturbance: T,
}

impl<T: Scalar> SideslipState<T> {
    pub fn new(beta_rear: T, beta_front: T) -> Self {
        Self {
            beta_rear,
            beta_front,
            lateral_disturbance: T::zero(),
        }
    }

    /// Fills the disturbance for a given angular deviation and speed.
    pub fn with_disturbance(mut self, psi_tilde: T, speed: T) -> Self {
        self.lateral_disturbance = lateral_disturbance(self.beta_rear, psi_tilde, speed);
        self
    }

    pub fn mirrored(&self) -> Self {
        Self {
            beta_rear: -self.beta_rear,
            beta_front: -self.beta_front,
            lateral_disturbance: -self.lateral_disturbance,
        }
    }
}

/// `Ẏ_P = v cos ψ̃ tan β_R`.
pub fn lateral_disturbance<T: Scalar>(beta_rear: T, psi_tilde: T, speed: T) -> T {
    speed * psi_tilde.cos() * beta_rear.tan()
}

/// Sideslip profiles for the prescribed-slip plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlipProfile<T> {
    Constant { rear: T, front: T },
    /// Linear in time from zero, saturating at `(rear_max, front_max)`.
    Ramp {
        rear_rate: T,
        front_rate: T,
        rear_max: T,
        front_max: T,
    },
    /// `β = gain · c(s)`, the path curvature under the vehicle.
    CurvatureProportional { rear_gain: T, front_gain: T },
}

/// Absolute bound on prescribed sideslip angles, rad.
pub const MAX_PRESCRIBED_SLIP: f64 = 0.2;

impl<T: Scalar> SlipProfile<T> {
    /// `(β_R, β_F)` at time `t` with path curvature `curvature` under the
    /// vehicle.
    pub fn sample(&self, t: T, curvature: T) -> (T, T) {
        let bound = T::lit(MAX_PRESCRIBED_SLIP);
        let (r, f) = match *self {
            SlipProfile::Constant { rear, front } => (rear, front),
            SlipProfile::Ramp {
                rear_rate,
                front_rate,
                rear_max,
                front_max,
            } => (
                clamp_sym(rear_rate * t, rear_max.abs()),
                clamp_sym(front_rate * t, front_max.abs()),
            ),
            SlipProfile::CurvatureProportional {
                rear_gain,
                front_gain,
            } => (rear_gain * curvature, front_gain * curvature),
        };
        (clamp_sym(r, bound), clamp_sym(f, bound))
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let bound = T::lit(MAX_PRESCRIBED_SLIP);
        let check = |v: T| {
            if v.abs() > bound {
                Err(PlantError::SlipOutOfBounds(v.to_f64_lossy()))
            } else {
                Ok(())
            }
        };
        match *self {
            SlipProfile::Constant { rear, front } => {
                check(rear)?;
                check(front)
            }
            SlipProfile::Ramp {
                rear_max,
                front_max,
                ..
            } => {
                check(rear_max)?;
                check(front_max)
            }
            // |c| ≤ 0.2 on admissible paths
            SlipProfile::CurvatureProportional {
                rear_gain,
                front_gain,
            } => {
                check(rear_gain * T::lit(0.2))?;
                check(front_gain * T::lit(0.2))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantKind<T> {
    IdealKinematic,
    PrescribedSlip(SlipProfile<T>),
    DynamicSingleTrack,
}

/// Simulated vehicle state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState<T> {
    /// Rear-axle center pose.
    pub pose: Pose2<T>,
    /// Actual steering angle, rad.
    pub delta: T,
    /// True sideslip angles (disturbance field filled by the simulator when a
    /// Frenet state is known).
    pub sideslip: SideslipState<T>,
    /// Lateral velocity at the center of gravity, m/s (dynamic plant).
    pub lateral_velocity: T,
    /// Yaw rate, rad/s.
    pub yaw_rate: T,
    pub t: T,
}

impl<T: Scalar> PlantState<T> {
    pub fn at_pose(pose: Pose2<T>) -> Self {
        Self {
            pose,
            ..Default::default()
        }
    }
}

/// Exogenous inputs the plant may depend on during one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepContext<T> {
    /// Path curvature under the vehicle, 1/m.
    pub curvature: T,
}

/// Advances the steering actuator by `dt` toward `delta_cmd` (clamped).
///
/// The lag is discretized exactly, `δ ← δ_c + (δ − δ_c) e^{−dt/τ}`, so a
/// step never overshoots the target regardless of `dt/τ`.
pub fn actuator_step<T: Scalar>(delta: T, delta_cmd: T, dt: T, params: &VehicleParams<T>) -> T {
    let target = clamp_sym(delta_cmd, params.max_steer);
    let next = if params.steer_time_constant <= T::zero() {
        target
    } else {
        target + (delta - target) * (-dt / params.steer_time_constant).exp()
    };
    clamp_sym(next, params.max_steer)
}

/// Heading rate of the slip-aware kinematic bicycle.
pub fn kinematic_yaw_rate<T: Scalar>(delta: T, slip: &SideslipState<T>, params: &VehicleParams<T>) -> T {
    params.speed * ((delta + slip.beta_front).tan() - slip.beta_rear.tan()) * slip.beta_rear.cos()
        / params.wheelbase
}

fn rk4<T: Scalar, const N: usize>(x: [T; N], dt: T, f: impl Fn(&[T; N]) -> [T; N]) -> [T; N] {
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let add = |a: &[T; N], b: &[T; N], h: T| {
        let mut o = *a;
        for i in 0..N {
            o[i] = a[i] + b[i] * h;
        }
        o
    };
    let k1 = f(&x);
    let k2 = f(&add(&x, &k1, dt / two));
    let k3 = f(&add(&x, &k2, dt / two));
    let k4 = f(&add(&x, &k3, dt));
    let mut out = x;
    for i in 0..N {
        out[i] = x[i] + dt / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    out
}

/// Lateral-dynamics derivatives of the linear single-track model:
/// `(v̇_y, ṙ)` at CG lateral velocity `vy` and yaw rate `r`.
pub fn single_track_derivatives<T: Scalar>(vy: T, r: T, delta: T, params: &VehicleParams<T>) -> (T, T) {
    let v = params.speed;
    let c = params.cornering_stiffness;
    let (lf, lr) = (params.front_to_cg(), params.rear_to_cg());
    let alpha_f = (vy + lf * r) / v - delta;
    let alpha_r = (vy - lr * r) / v;
    let ff = -c * alpha_f;
    let fr = -c * alpha_r;
    (
        (ff + fr) / params.mass - v * r,
        (lf * ff - lr * fr) / params.yaw_inertia,
    )
}

/// Sideslip angles of the dynamic plant at its current lateral states.
pub fn dynamic_slip<T: Scalar>(
    state: &PlantState<T>,
    params: &VehicleParams<T>,
) -> Result<SideslipState<T>, PlantError> {
    let v = params.speed;
    if !(v > T::lit(0.1)) {
        return Err(PlantError::DegenerateSpeed(v.to_f64_lossy()));
    }
    let vy_rear = state.lateral_velocity - params.rear_to_cg() * state.yaw_rate;
    let vy_front = state.lateral_velocity + params.front_to_cg() * state.yaw_rate;
    Ok(SideslipState::new(
        (vy_rear / v).atan(),
        (vy_front / v).atan() - state.delta,
    ))
}

/// Advances the plant by one physics step of length `dt`.
///
/// The actuator moves first; the new steering angle and the sideslip from
/// `kind` are then held over the Runge–Kutta step.
pub fn kinematic_step<T: Scalar>(
    state: &PlantState<T>,
    delta_cmd: T,
    dt: T,
    params: &VehicleParams<T>,
    kind: &PlantKind<T>,
    ctx: &StepContext<T>,
) -> Result<PlantState<T>, PlantError> {
    if !(dt > T::zero() && dt <= T::lit(0.1) + T::lit(1e-12)) {
        return Err(PlantError::InvalidStep(dt.to_f64_lossy()));
    }
    let delta = actuator_step(state.delta, delta_cmd, dt, params);
    let v = params.speed;
    let mut next = *state;
    next.delta = delta;
    next.t = state.t + dt;
    match kind {
        PlantKind::IdealKinematic | PlantKind::PrescribedSlip(_) => {
            let (br, bf) = match kind {
                PlantKind::PrescribedSlip(p) => p.sample(state.t, ctx.curvature),
                _ => (T::zero(), T::zero()),
            };
            let slip = SideslipState::new(br, bf);
            let yaw_rate = kinematic_yaw_rate(delta, &slip, params);
            let lat = v * br.tan();
            let p = state.pose;
            let x = rk4([p.x, p.y, p.heading], dt, |s| {
                let (sin, cos) = s[2].sin_cos();
                [v * cos - lat * sin, v * sin + lat * cos, yaw_rate]
            });
            next.pose = Pose2::new(x[0], x[1], wrap_angle(x[2]));
            next.yaw_rate = yaw_rate;
            next.lateral_velocity = lat;
            next.sideslip = slip;
        }
        PlantKind::DynamicSingleTrack => {
            if !(v > T::lit(0.1)) {
                return Err(PlantError::DegenerateSpeed(v.to_f64_lossy()));
            }
            let lr = params.rear_to_cg();
            let p = state.pose;
            let x = rk4(
                [p.x, p.y, p.heading, state.lateral_velocity, state.yaw_rate],
                dt,
                |s| {
                    let (sin, cos) = s[2].sin_cos();
                    let vy_o = s[3] - lr * s[4];
                    let (dvy, dr) = single_track_derivatives(s[3], s[4], delta, params);
                    [v * cos - vy_o * sin, v * sin + vy_o * cos, s[4], dvy, dr]
                },
            );
            next.pose = Pose2::new(x[0], x[1], wrap_angle(x[2]));
            next.lateral_velocity = x[3];
            next.yaw_rate = x[4];
            next.sideslip = dynamic_slip(&next, params)?;
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(tau: f64) -> VehicleParams<f64> {
        VehicleParams {
            steer_time_constant: tau,
            ..Default::default()
        }
    }

    #[test]
    fn default_params_valid() {
        let p = VehicleParams::<f64>::default();
        p.validate().unwrap();
        assert!((p.max_steer.to_degrees() - 21.801).abs() < 1e-3);
        let bad = VehicleParams { max_steer: 0.5, ..p };
        assert!(bad.validate().is_err());
        assert!(VehicleParams::<f32>::default().validate().is_ok());
    }

    #[test]
    fn instantaneous_actuator() {
        assert_eq!(actuator_step(0.0, 0.2, 0.01, &params(0.0)), 0.2);
        assert_eq!(actuator_step(0.0, 0.2, 1.0, &params(0.0)), 0.2);
    }

    #[test]
    fn actuator_half_life() {
        let p = params(0.5);
        let n = 1000;
        let dt = 0.5 * 2f64.ln() / n as f64;
        let d = (0..n).fold(0.0, |d, _| actuator_step(d, 0.2, dt, &p));
        assert!((d - 0.1).abs() < 1e-12, "{d}");
    }

    #[test]
    fn actuator_saturates() {
        let p = VehicleParams {
            max_steer: 0.46,
            wheelbase: 1.0,
            ..params(0.5)
        };
        let mut d = 0.0;
        let mut sup: f64 = 0.0;
        for _ in 0..500 {
            d = actuator_step(d, 0.6, 0.01, &p);
            sup = sup.max(d);
        }
        assert!(sup <= 0.46);
        assert!((d - 0.46).abs() < 1e-3);
    }

    #[test]
    fn straight_step() {
        let s = PlantState::at_pose(Pose2::new(0.0, 0.0, 0.0));
        let n = kinematic_step(&s, 0.0, 0.1, &params(0.0), &PlantKind::IdealKinematic, &Default::default())
            .unwrap();
        assert!((n.pose.x - 0.1).abs() < 1e-15);
        assert_eq!(n.pose.heading, 0.0);
        assert_eq!(n.pose.y, 0.0);
    }

    #[test]
    fn invalid_step_rejected() {
        let s = PlantState::<f64>::default();
        for dt in [0.0, -0.01, 0.2] {
            assert!(kinematic_step(&s, 0.0, dt, &params(0.0), &PlantKind::IdealKinematic, &Default::default())
                .is_err());
        }
    }

    #[test]
    fn circle_closes() {
        let p = params(0.0);
        let delta = (p.wheelbase / 10.0).atan();
        let dt = 0.01;
        let period = 2.0 * PI * 10.0 / p.speed;
        let steps = (period / dt).floor() as usize;
        let mut s = PlantState::at_pose(Pose2::new(0.0, 0.0, 0.0));
        s.delta = delta;
        for _ in 0..steps {
            s = kinematic_step(&s, delta, dt, &p, &PlantKind::IdealKinematic, &Default::default()).unwrap();
        }
        let rest = period - steps as f64 * dt;
        s = kinematic_step(&s, delta, rest, &p, &PlantKind::IdealKinematic, &Default::default()).unwrap();
        assert!(s.pose.x.abs() < 1e-6 && s.pose.y.abs() < 1e-6, "{:?}", s.pose);
    }

    #[test]
    fn constant_rear_slip_drift() {
        let p = params(0.0);
        let beta = 2f64.to_radians();
        let kind = PlantKind::PrescribedSlip(SlipProfile::Constant { rear: beta, front: 0.0 });
        let mut s = PlantState::at_pose(Pose2::new(0.0, 0.0, 0.0));
        // δ such that the heading rate cancels: tan(δ) = tan β_R
        let delta = beta;
        s.delta = delta;
        let dt = 0.01;
        let y0 = s.pose.y;
        for _ in 0..100 {
            s = kinematic_step(&s, delta, dt, &p, &kind, &Default::default()).unwrap();
        }
        assert!(s.pose.heading.abs() < 1e-15);
        let rate = (s.pose.y - y0) / 1.0;
        assert!((rate - beta.tan()).abs() < 1e-9, "{rate}");
    }

    #[test]
    fn heading_preserved_without_steering() {
        let mut s = PlantState::at_pose(Pose2::new(1.0, 2.0, 0.7));
        for _ in 0..1000 {
            s = kinematic_step(&s, 0.0, 0.01, &params(0.5), &PlantKind::IdealKinematic, &Default::default())
                .unwrap();
        }
        assert_eq!(s.pose.heading, 0.7);
    }

    #[test]
    fn dynamic_zero_excitation() {
        let p = params(0.0);
        let mut s = PlantState::at_pose(Pose2::new(0.0, 0.0, 0.0));
        for _ in 0..500 {
            s = kinematic_step(&s, 0.0, 0.01, &p, &PlantKind::DynamicSingleTrack, &Default::default())
                .unwrap();
            assert_eq!(s.sideslip.beta_rear, 0.0);
            assert_eq!(s.sideslip.beta_front, 0.0);
        }
    }

    #[test]
    fn dynamic_degenerate_speed() {
        let p = VehicleParams { speed: 0.05, ..params(0.0) };
        let s = PlantState::<f64>::default();
        assert!(matches!(dynamic_slip(&s, &p), Err(PlantError::DegenerateSpeed(_))));
        assert!(kinematic_step(&s, 0.0, 0.01, &p, &PlantKind::DynamicSingleTrack, &Default::default())
            .is_err());
    }

    #[test]
    fn slip_profiles() {
        let ramp = SlipProfile::Ramp {
            rear_rate: 0.01,
            front_rate: -0.02,
            rear_max: 0.03,
            front_max: 0.03,
        };
        assert_eq!(ramp.sample(1.0, 0.0), (0.01, -0.02));
        assert_eq!(ramp.sample(10.0, 0.0), (0.03, -0.03));
        let prop = SlipProfile::CurvatureProportional { rear_gain: 0.2f64, front_gain: 0.1 };
        let (r, f) = prop.sample(0.0, 0.1);
        assert!((r - 0.02).abs() < 1e-15 && (f - 0.01).abs() < 1e-15);
        assert!(SlipProfile::Constant { rear: 0.3, front: 0.0 }.validate().is_err());
        assert!(SlipProfile::CurvatureProportional { rear_gain: 2.0, front_gain: 0.0 }
            .validate()
            .is_err());
    }

    #[test]
    fn disturbance_formula() {
        assert_eq!(lateral_disturbance(0.0, 0.3, 1.0), 0.0);
        assert!((lateral_disturbance(0.0349f64, 0.0, 1.0) - 0.03491).abs() < 1e-5);
        assert!(lateral_disturbance(0.1, PI / 2.0, 1.0).abs() < 1e-16);
    }
}
