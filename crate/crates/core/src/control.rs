//! Steering laws for offset-point tracking.
//!
//! All three controllers share the same structure: compute a target for the
//! rear-axle center (a desired angular deviation, or a desired lateral error
//! for the servoing baseline) that makes the implement point converge, then
//! steer so that the vehicle reaches it.
//!
//! The yaw rate fed to the laws is the measured vehicle yaw rate. The rate of
//! the angular deviation, `ω̄ = ψ̇ − c ṡ`, is derived from it internally.

use crate::path::{implement_error, FeasibilityError, FrenetState, ImplementError, ImplementOffset, PathModel};
use crate::plant::{SideslipState, VehicleParams};
use crate::scalar::{clamp_sym, wrap_angle, Scalar};

/// Magnitude below which `α` and `1 − γ I_y` count as singular.
pub const SINGULARITY_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("alpha = 1 - c y = {alpha:e}: robot at the center of the osculating circle")]
    CurvatureCenter { alpha: f64 },
    #[error("1 - gamma I_y = {value:e}: implement lever arm equals the turning radius")]
    LeverArm { value: f64 },
    #[error("angular deviation {psi_tilde} rad is outside (-pi/2, pi/2)")]
    HeadingOutOfRange { psi_tilde: f64 },
    #[error("rear sideslip {beta} rad makes cos(beta_R) vanish")]
    SlipSingular { beta: f64 },
    #[error("speed {speed} m/s is not positive")]
    DegenerateSpeed { speed: f64 },
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
    #[error("steering command is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackstepGains<T> {
    /// Implement error convergence gain, 1/m.
    pub k_y: T,
    /// Angular convergence gain, 1/m.
    pub k_psi: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoGains<T> {
    pub k_d: T,
    pub k_p: T,
}

impl<T: Scalar> Default for ServoGains<T> {
    fn default() -> Self {
        Self {
            k_d: T::lit(0.7),
            k_p: T::lit(0.13),
        }
    }
}

/// Gains of the predictive law. The horizon `[0, s_h]` is sampled at
/// `n_h` points spaced `Δs = s_h / n_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveGains<T> {
    pub lambda: T,
    pub k_psi: T,
    pub s_h: T,
    pub n_h: usize,
}

/// Default horizon sample spacing used to derive `n_h`, m.
pub const DEFAULT_HORIZON_STEP: f64 = 0.1;

impl<T: Scalar> PredictiveGains<T> {
    /// Gains with `n_h = max(1, round(s_h / step))`.
    pub fn with_step(lambda: T, k_psi: T, s_h: T, step: T) -> Self {
        let n = (s_h / step).round().to_f64_lossy();
        let n_h = if n.is_finite() && n >= 1.0 { n as usize } else { 1 };
        Self {
            lambda,
            k_psi,
            s_h,
            n_h,
        }
    }

    pub fn new(lambda: T, k_psi: T, s_h: T) -> Self {
        Self::with_step(lambda, k_psi, s_h, T::lit(DEFAULT_HORIZON_STEP))
    }

    pub fn delta_s(&self) -> T {
        self.s_h / T::from_usize(self.n_h).expect("sample count fits the scalar")
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.lambda > T::zero()) {
            return Err("lambda must be positive".into());
        }
        if !(self.k_psi > T::zero()) {
            return Err("k_psi must be positive".into());
        }
        if !(self.s_h > T::zero()) || self.n_h == 0 {
            return Err("horizon must be positive with at least one sample".into());
        }
        Ok(())
    }
}

/// Intermediate quantities shared by the laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxTerms<T> {
    /// `1 − c y`.
    pub alpha: T,
    /// `ω̄ / v`, 1/m.
    pub gamma: T,
    /// Rate of the angular deviation, rad/s.
    pub omega_bar: T,
    /// `α tan β_R`.
    pub a: T,
}

/// Power sums over the horizon samples `kΔs`, `k = 1..n_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonSums<T> {
    pub sigma1: T,
    pub sigma2: T,
    pub sigma3: T,
    pub sigma_e: T,
    /// `σ₁ − σ_e`, accumulated without cancellation.
    pub sigma1_minus_e: T,
}

pub fn horizon_sums<T: Scalar>(gains: &PredictiveGains<T>) -> HorizonSums<T> {
    let ds = gains.delta_s();
    let mut h = HorizonSums {
        sigma1: T::zero(),
        sigma2: T::zero(),
        sigma3: T::zero(),
        sigma_e: T::zero(),
        sigma1_minus_e: T::zero(),
    };
    for k in 1..=gains.n_h {
        let x = T::from_usize(k).expect("sample index fits the scalar") * ds;
        let decay = (-gains.lambda * x).exp();
        h.sigma1 = h.sigma1 + x;
        h.sigma2 = h.sigma2 + x * x;
        h.sigma3 = h.sigma3 + x * x * x;
        h.sigma_e = h.sigma_e + x * decay;
        h.sigma1_minus_e = h.sigma1_minus_e - x * (-gains.lambda * x).exp_m1();
    }
    h
}

fn check_heading<T: Scalar>(psi: T) -> Result<(), ControlError> {
    if psi.abs() < T::FRAC_PI_2() {
        Ok(())
    } else {
        Err(ControlError::HeadingOutOfRange {
            psi_tilde: psi.to_f64_lossy(),
        })
    }
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<(), ControlError> {
    if alpha.abs() > T::lit(SINGULARITY_EPS) {
        Ok(())
    } else {
        Err(ControlError::CurvatureCenter {
            alpha: alpha.to_f64_lossy(),
        })
    }
}

fn lever<T: Scalar>(aux: &AuxTerms<T>, off: &ImplementOffset<T>) -> Result<T, ControlError> {
    let l = T::one() - aux.gamma * off.lateral;
    if l.abs() > T::lit(SINGULARITY_EPS) {
        Ok(l)
    } else {
        Err(ControlError::LeverArm {
            value: l.to_f64_lossy(),
        })
    }
}

/// Spatial derivative of the implement error,
/// `e_I′ = α [tan ψ̃ + tan β_R + γ (I_s − I_y tan ψ̃)]` with `γ = ω̄ / v`.
///
/// `omega_bar` is the rate of the angular deviation.
pub fn spatial_error_derivative<T: Scalar>(
    f: &FrenetState<T>,
    slip: &SideslipState<T>,
    omega_bar: T,
    v: T,
    c: T,
    off: &ImplementOffset<T>,
) -> Result<(T, AuxTerms<T>), ControlError> {
    check_heading(f.psi_tilde)?;
    if !(v > T::zero()) {
        return Err(ControlError::DegenerateSpeed { speed: v.to_f64_lossy() });
    }
    let alpha = T::one() - c * f.y;
    check_alpha(alpha)?;
    let gamma = omega_bar / v;
    let t = f.psi_tilde.tan();
    let tb = slip.beta_rear.tan();
    let d = alpha * (t + tb + gamma * (off.longitudinal - off.lateral * t));
    Ok((
        d,
        AuxTerms {
            alpha,
            gamma,
            omega_bar,
            a: alpha * tb,
        },
    ))
}

/// Rate of the angular deviation from the measured yaw rate:
/// `ω̄ = ψ̇ − c v cos ψ̃ / α`.
pub fn angular_deviation_rate<T: Scalar>(f: &FrenetState<T>, yaw_rate: T, v: T, c: T) -> Result<T, ControlError> {
    let alpha = T::one() - c * f.y;
    check_alpha(alpha)?;
    Ok(yaw_rate - c * v * f.psi_tilde.cos() / alpha)
}

/// First backstepping stage: the angular deviation that makes
/// `e_I′ = −k_y e_I + α γ I_s`.
pub fn backstepping_psi_d<T: Scalar>(
    e_i: T,
    aux: &AuxTerms<T>,
    gains: &BackstepGains<T>,
    off: &ImplementOffset<T>,
) -> Result<T, ControlError> {
    check_alpha(aux.alpha)?;
    let l = lever(aux, off)?;
    Ok(((-gains.k_y * e_i - aux.a) / (aux.alpha * l)).atan())
}

/// Second stage: steering angle giving `e_ψ′ = −k_ψ e_ψ`.
pub fn steering_law<T: Scalar>(
    e_psi: T,
    f: &FrenetState<T>,
    slip: &SideslipState<T>,
    c: T,
    k_psi: T,
    alpha: T,
    wheelbase: T,
) -> Result<T, ControlError> {
    check_heading(f.psi_tilde)?;
    check_alpha(alpha)?;
    let cb = slip.beta_rear.cos();
    if !(cb.abs() > T::lit(SINGULARITY_EPS)) {
        return Err(ControlError::SlipSingular {
            beta: slip.beta_rear.to_f64_lossy(),
        });
    }
    let arg = (-k_psi * e_psi + c) / (alpha * cb) * wheelbase * f.psi_tilde.cos() + slip.beta_rear.tan();
    Ok(arg.atan() - slip.beta_front)
}

/// `e_I″ = (α² / cos ψ̃)(1 − tan ψ̃ tan β_R) γ`. The predictive law passes the
/// `γ` evaluated with the curvature at the horizon end.
pub fn second_derivative_ei<T: Scalar>(f: &FrenetState<T>, slip: &SideslipState<T>, gamma: T, alpha: T) -> T {
    let (t, tb) = (f.psi_tilde.tan(), slip.beta_rear.tan());
    alpha * alpha / f.psi_tilde.cos() * (T::one() - t * tb) * gamma
}

/// Minimizer of the horizon criterion in the variable
/// `ξ = α (1 − γ I_y) tan ψ̃`.
pub fn predictive_xi<T: Scalar>(e_i: T, a: T, e_pp: T, sums: &HorizonSums<T>) -> T {
    -(e_i * sums.sigma1_minus_e + a * sums.sigma2 + e_pp * sums.sigma3) / sums.sigma2
}

/// Optimal angular deviation over the horizon. Returns `(ψ̃_d^h, ξ_d^h)`.
pub fn predictive_psi_d<T: Scalar>(
    e_i: T,
    aux: &AuxTerms<T>,
    e_pp: T,
    gains: &PredictiveGains<T>,
    off: &ImplementOffset<T>,
) -> Result<(T, T), ControlError> {
    check_alpha(aux.alpha)?;
    let l = lever(aux, off)?;
    let xi = predictive_xi(e_i, aux.a, e_pp, &horizon_sums(gains));
    Ok(((xi / (aux.alpha * l)).atan(), xi))
}

/// Angular velocity command of a skid-steer platform reproducing the
/// curvature of steering angle `delta`.
pub fn skid_steer_command<T: Scalar>(delta: T, v: T, wheelbase: T) -> T {
    v * delta.tan() / wheelbase
}

/// Everything a controller needs for one command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput<T> {
    pub frenet: FrenetState<T>,
    /// Path curvature at the matched abscissa.
    pub curvature: T,
    /// Path curvature at the end of the prediction horizon.
    pub curvature_ahead: T,
    /// Measured yaw rate, rad/s.
    pub yaw_rate: T,
    /// Sideslip estimates.
    pub slip: SideslipState<T>,
    pub offset: ImplementOffset<T>,
}

impl<T: Scalar> ControlInput<T> {
    /// Looks up both curvatures on `path`; `horizon` is 0 for the reactive laws.
    pub fn on_path(
        path: &PathModel<T>,
        frenet: FrenetState<T>,
        horizon: T,
        yaw_rate: T,
        slip: SideslipState<T>,
        offset: ImplementOffset<T>,
    ) -> Self {
        Self {
            frenet,
            curvature: path.curvature_at_clamped(frenet.s),
            curvature_ahead: path.curvature_at_clamped(frenet.s + horizon),
            yaw_rate,
            slip,
            offset,
        }
    }

    /// Lateral mirror image: every signed lateral quantity negated.
    pub fn mirrored(&self) -> Self {
        Self {
            frenet: self.frenet.mirrored(),
            curvature: -self.curvature,
            curvature_ahead: -self.curvature_ahead,
            yaw_rate: -self.yaw_rate,
            slip: self.slip.mirrored(),
            offset: self.offset.mirrored(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlLaw<T> {
    LateralServoing(ServoGains<T>),
    Backstepping(BackstepGains<T>),
    Predictive(PredictiveGains<T>),
}

impl<T: Scalar> ControlLaw<T> {
    /// Look-ahead distance for the curvature lookup.
    pub fn horizon(&self) -> T {
        match self {
            ControlLaw::Predictive(g) => g.s_h,
            _ => T::zero(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ControlLaw::LateralServoing(_) => "lateral_servoing",
            ControlLaw::Backstepping(_) => "backstepping",
            ControlLaw::Predictive(_) => "predictive",
        }
    }
}

/// Result of one successful command computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandTerms<T> {
    /// Steering command after clamping, rad.
    pub delta: T,
    /// Steering angle before clamping, rad.
    pub delta_raw: T,
    pub implement: ImplementError<T>,
    /// Desired angular deviation (servoing: desired lateral error), rad or m.
    pub target: T,
}

fn finish<T: Scalar>(
    delta_raw: T,
    implement: ImplementError<T>,
    target: T,
    params: &VehicleParams<T>,
) -> Result<CommandTerms<T>, ControlError> {
    if !delta_raw.is_finite() {
        return Err(ControlError::NonFinite);
    }
    Ok(CommandTerms {
        delta: clamp_sym(delta_raw, params.max_steer),
        delta_raw,
        implement,
        target,
    })
}

/// Backstepping in two stages: desired angular deviation, then steering.
pub fn backstepping_command<T: Scalar>(
    inp: &ControlInput<T>,
    gains: &BackstepGains<T>,
    params: &VehicleParams<T>,
) -> Result<CommandTerms<T>, ControlError> {
    let f = &inp.frenet;
    let c = inp.curvature;
    let ie = implement_error(f, c, &inp.offset)?;
    let wbar = angular_deviation_rate(f, inp.yaw_rate, params.speed, c)?;
    let (_, aux) = spatial_error_derivative(f, &inp.slip, wbar, params.speed, c, &inp.offset)?;
    let psi_d = backstepping_psi_d(ie.e_i, &aux, gains, &inp.offset)?;
    let e_psi = wrap_angle(f.psi_tilde - psi_d);
    let d = steering_law(e_psi, f, &inp.slip, c, gains.k_psi, aux.alpha, params.wheelbase)?;
    finish(d, ie, psi_d, params)
}

/// Predictive law: the first stage minimizes the horizon criterion, with the
/// second derivative of the implement error taken at the horizon-end
/// curvature; the second stage is the backstepping steering law.
pub fn predictive_command<T: Scalar>(
    inp: &ControlInput<T>,
    gains: &PredictiveGains<T>,
    params: &VehicleParams<T>,
) -> Result<CommandTerms<T>, ControlError> {
    let f = &inp.frenet;
    let c = inp.curvature;
    let v = params.speed;
    let ie = implement_error(f, c, &inp.offset)?;
    let wbar = angular_deviation_rate(f, inp.yaw_rate, v, c)?;
    let (_, aux) = spatial_error_derivative(f, &inp.slip, wbar, v, c, &inp.offset)?;
    // only the curvature is taken at the horizon end; y and ψ̃ stay frozen
    let gamma_end = inp.yaw_rate / v - inp.curvature_ahead * f.psi_tilde.cos() / aux.alpha;
    let e_pp = second_derivative_ei(f, &inp.slip, gamma_end, aux.alpha);
    let (psi_d, _) = predictive_psi_d(ie.e_i, &aux, e_pp, gains, &inp.offset)?;
    let e_psi = wrap_angle(f.psi_tilde - psi_d);
    let d = steering_law(e_psi, f, &inp.slip, c, gains.k_psi, aux.alpha, params.wheelbase)?;
    finish(d, ie, psi_d, params)
}

/// Lateral servoing baseline. The rear-axle center is regulated to the
/// lateral error `y_d` that puts the implement on the path at the current
/// `ψ̃`, with a proportional-derivative law on `z = y − y_d` in the path
/// abscissa, `z″ = −k_d z′ − k_p z`, slip-compensated like the backstepping
/// steering law.
pub fn lateral_servoing_command<T: Scalar>(
    inp: &ControlInput<T>,
    gains: &ServoGains<T>,
    params: &VehicleParams<T>,
) -> Result<CommandTerms<T>, ControlError> {
    let f = &inp.frenet;
    let c = inp.curvature;
    check_heading(f.psi_tilde)?;
    let ie = implement_error(f, c, &inp.offset)?;
    let y_d = f.y - ie.e_i;
    let alpha = T::one() - c * f.y;
    check_alpha(alpha)?;
    let cb = inp.slip.beta_rear.cos();
    if !(cb.abs() > T::lit(SINGULARITY_EPS)) {
        return Err(ControlError::SlipSingular {
            beta: inp.slip.beta_rear.to_f64_lossy(),
        });
    }
    let tb = inp.slip.beta_rear.tan();
    let (sin_p, cos_p) = f.psi_tilde.sin_cos();
    let slope = sin_p / cos_p + tb;
    let u = -gains.k_d * alpha * slope - gains.k_p * (f.y - y_d);
    let turn = c + cos_p * cos_p * (u + c * alpha * slope * slope) / alpha;
    let arg = tb + params.wheelbase * cos_p * turn / (alpha * cb);
    finish(arg.atan() - inp.slip.beta_front, ie, y_d, params)
}

pub fn command<T: Scalar>(
    law: &ControlLaw<T>,
    inp: &ControlInput<T>,
    params: &VehicleParams<T>,
) -> Result<CommandTerms<T>, ControlError> {
    match law {
        ControlLaw::LateralServoing(g) => lateral_servoing_command(inp, g, params),
        ControlLaw::Backstepping(g) => backstepping_command(inp, g, params),
        ControlLaw::Predictive(g) => predictive_command(inp, g, params),
    }
}

/// Output of one controller step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlStep<T> {
    pub delta_cmd: T,
    pub terms: Option<CommandTerms<T>>,
    /// Set when the command was held because the law failed.
    pub error: Option<ControlError>,
}

/// A control law with hold-on-error state.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller<T> {
    pub law: ControlLaw<T>,
    last: T,
    pub flagged_steps: usize,
}

impl<T: Scalar> Controller<T> {
    pub fn new(law: ControlLaw<T>) -> Self {
        Self {
            law,
            last: T::zero(),
            flagged_steps: 0,
        }
    }

    pub fn last_command(&self) -> T {
        self.last
    }

    pub fn step(&mut self, inp: &ControlInput<T>, params: &VehicleParams<T>) -> ControlStep<T> {
        match command(&self.law, inp, params) {
            Ok(terms) => {
                self.last = terms.delta;
                ControlStep {
                    delta_cmd: terms.delta,
                    terms: Some(terms),
                    error: None,
                }
            }
            Err(e) => {
                self.flagged_steps += 1;
                ControlStep {
                    delta_cmd: self.last,
                    terms: None,
                    error: Some(e),
                }
            }
        }
    }
}
