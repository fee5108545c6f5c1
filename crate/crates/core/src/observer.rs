//! Sideslip estimation from measured Frenet errors.
//!
//! The observer runs a copy of the slip-aware kinematic model in the Frenet
//! frame. Each control period it predicts the lateral error `ŷ` and angular
//! deviation `ψ̂̃` from the previous estimates, then corrects:
//!
//! * the rear slip from the lateral innovation `y − ŷ`,
//! * the front slip from the angular innovation `ψ̃ − ψ̂̃`.
//!
//! The angular channel estimates an effective steering bias `φ` with
//! `ψ̇ = v tan(δ + φ) / L`, which does not depend on the rear slip. The front
//! slip follows from `φ` and the rear estimate through
//! `tan(δ + β_F) = tan(δ + φ) / cos β_R + tan β_R`, so an error in the rear
//! estimate does not feed back into the angular loop.
//!
//! Gains are given as convergence rates in 1/s: each channel behaves like a
//! critically damped second-order error system with a double pole at `−g`.

use crate::plant::{lateral_disturbance, SideslipState};
use crate::path::FrenetState;
use crate::scalar::{clamp_sym, wrap_angle, Scalar};

/// Saturation of the slip estimates, rad.
pub const MAX_SLIP_ESTIMATE: f64 = 0.3;
/// Below this speed the estimates are frozen, m/s.
pub const MIN_OBSERVER_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverGains<T> {
    /// Lateral (rear slip) channel rate, 1/s.
    pub lateral: T,
    /// Angular (front slip) channel rate, 1/s.
    pub angular: T,
}

impl<T: Scalar> Default for ObserverGains<T> {
    fn default() -> Self {
        Self {
            lateral: T::lit(3.0),
            angular: T::lit(3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverState<T> {
    pub beta_rear_hat: T,
    pub beta_front_hat: T,
    pub y_hat: T,
    pub psi_tilde_hat: T,
    /// Effective steering bias of the angular channel, rad.
    pub steer_bias_hat: T,
    pub gains: ObserverGains<T>,
    /// Previous measured angular deviation, for midpoint propagation.
    last_psi: T,
    initialized: bool,
    /// Set when the last step was skipped because of a degenerate speed.
    pub frozen: bool,
}

impl<T: Scalar> ObserverState<T> {
    pub fn new(gains: ObserverGains<T>) -> Self {
        Self {
            beta_rear_hat: T::zero(),
            beta_front_hat: T::zero(),
            y_hat: T::zero(),
            psi_tilde_hat: T::zero(),
            steer_bias_hat: T::zero(),
            gains,
            last_psi: T::zero(),
            initialized: false,
            frozen: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.gains.lateral > T::zero() && self.gains.angular > T::zero() {
            Ok(())
        } else {
            Err("observer gains must be positive".into())
        }
    }

    /// Current estimates as a sideslip state (disturbance for `psi_tilde`).
    pub fn sideslip(&self, psi_tilde: T, speed: T) -> SideslipState<T> {
        SideslipState::new(self.beta_rear_hat, self.beta_front_hat).with_disturbance(psi_tilde, speed)
    }
}

/// One observer update with measurement `meas` taken `dt` after the previous
/// one. `delta` is the steering angle over the interval; when it varies, pass
/// `atan` of the interval mean of `tan δ`.
pub fn observer_step<T: Scalar>(
    obs: &ObserverState<T>,
    meas: &FrenetState<T>,
    delta: T,
    speed: T,
    curvature: T,
    wheelbase: T,
    dt: T,
) -> ObserverState<T> {
    let mut o = *obs;
    if !o.initialized {
        o.y_hat = meas.y;
        o.psi_tilde_hat = meas.psi_tilde;
        o.last_psi = meas.psi_tilde;
        o.initialized = true;
        o.frozen = false;
        return o;
    }
    if !(speed > T::lit(MIN_OBSERVER_SPEED)) || !(dt > T::zero()) {
        o.y_hat = meas.y;
        o.psi_tilde_hat = meas.psi_tilde;
        o.last_psi = meas.psi_tilde;
        o.frozen = true;
        return o;
    }
    o.frozen = false;
    let two = T::lit(2.0);
    let psi_mid = o.last_psi + wrap_angle(meas.psi_tilde - o.last_psi) / two;
    let (br, phi) = (o.beta_rear_hat, o.steer_bias_hat);

    // prediction through the slip-aware kinematics
    let y_rate = speed * psi_mid.sin() + lateral_disturbance(br, psi_mid, speed);
    let alpha = T::one() - curvature * meas.y;
    let path_rate = curvature * speed * psi_mid.cos() / alpha;
    let yaw_rate = speed * (delta + phi).tan() / wheelbase;
    let y_pred = o.y_hat + dt * y_rate;
    let psi_pred = o.psi_tilde_hat + dt * (yaw_rate - path_rate);

    let innov_y = meas.y - y_pred;
    let innov_psi = wrap_angle(meas.psi_tilde - psi_pred);
    let (gy, gp) = (o.gains.lateral, o.gains.angular);

    o.y_hat = y_pred + two * gy * dt * innov_y;
    o.psi_tilde_hat = psi_pred + two * gp * dt * innov_psi;

    // sensitivities of the two channels to their parameter
    let dy_dbr = speed * psi_mid.cos() / (br.cos() * br.cos());
    let dpsi_dphi = speed / (wheelbase * (delta + phi).cos().powi(2));
    let limit = T::lit(MAX_SLIP_ESTIMATE);
    o.beta_rear_hat = clamp_sym(br + dt * gy * gy / dy_dbr * innov_y, limit);
    o.steer_bias_hat = clamp_sym(phi + dt * gp * gp / dpsi_dphi * innov_psi, limit);
    let br = o.beta_rear_hat;
    let front = ((delta + o.steer_bias_hat).tan() / br.cos() + br.tan()).atan() - delta;
    o.beta_front_hat = clamp_sym(front, limit);
    o.last_psi = meas.psi_tilde;
    o
}

/// `Ẏ_P` from the current rear slip estimate.
pub fn disturbance_from<T: Scalar>(obs: &ObserverState<T>, psi_tilde: T, speed: T) -> T {
    lateral_disturbance(obs.beta_rear_hat, psi_tilde, speed)
}
