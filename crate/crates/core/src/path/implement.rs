//! Geometry of the rigidly attached implement point.

use super::{FrenetState, PathModel, Point2, Pose2};
use crate::scalar::Scalar;

/// Body-frame coordinates of the controlled implement point, relative to the
/// rear-axle center.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImplementOffset<T> {
    /// Longitudinal offset, m, positive toward the front.
    pub longitudinal: T,
    /// Lateral offset, m, positive to the left.
    pub lateral: T,
}

impl<T: Scalar> ImplementOffset<T> {
    pub fn new(longitudinal: T, lateral: T) -> Self {
        Self {
            longitudinal,
            lateral,
        }
    }

    pub fn norm(&self) -> T {
        self.longitudinal.hypot(self.lateral)
    }

    pub fn mirrored(&self) -> Self {
        Self::new(self.longitudinal, -self.lateral)
    }

    /// Checks that the offset stays inside every osculating circle of the
    /// path: `|I| < 1/|c|` for all segments.
    pub fn check_feasible(&self, path: &PathModel<T>) -> Result<(), FeasibilityError> {
        let c = path.max_abs_curvature();
        if self.norm() * c >= T::one() {
            return Err(FeasibilityError {
                curvature: c.to_f64_lossy(),
                offset_norm: self.norm().to_f64_lossy(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("implement offset {offset_norm:.3} m is not inside the osculating circle of curvature {curvature}")]
pub struct FeasibilityError {
    pub curvature: f64,
    pub offset_norm: f64,
}

/// Implement tracking error and its osculating-circle decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImplementError<T> {
    /// Lateral error of the implement point, m.
    pub e_i: T,
    /// Osculating-circle correction, m.
    pub correction: T,
    /// Angle subtended on the osculating circle, rad.
    pub epsilon: T,
    /// Longitudinal coordinate of the implement along the path tangent, m.
    pub r_i: T,
}

/// Lateral error of the implement point measured parallel to the Frenet
/// normal at the rear-axle foot point, with the path locally replaced by its
/// osculating circle of curvature `c`.
///
/// The longitudinal coordinate of the implement along the tangent is
/// `r_i = I_s cos ψ̃ − I_y sin ψ̃`; the circle sits `(1 − cos ε)/c` off the
/// tangent there, with `sin ε = c r_i`.
pub fn implement_error<T: Scalar>(
    f: &FrenetState<T>,
    c: T,
    off: &ImplementOffset<T>,
) -> Result<ImplementError<T>, FeasibilityError> {
    let (sin_p, cos_p) = f.psi_tilde.sin_cos();
    let (is, iy) = (off.longitudinal, off.lateral);
    let r_i = is * cos_p - iy * sin_p;
    let base = f.y + is * sin_p + iy * cos_p;
    if c == T::zero() {
        return Ok(ImplementError {
            e_i: base,
            correction: T::zero(),
            epsilon: T::zero(),
            r_i,
        });
    }
    let arg = c * r_i;
    if !(arg.abs() < T::one()) {
        return Err(FeasibilityError {
            curvature: c.to_f64_lossy(),
            offset_norm: off.norm().to_f64_lossy(),
        });
    }
    let epsilon = arg.asin();
    // 1 - cos ε written as 2 sin²(ε/2) to avoid cancellation for small c
    let half = (epsilon / T::lit(2.0)).sin();
    let correction = -T::lit(2.0) * half * half / c;
    Ok(ImplementError {
        e_i: base + correction,
        correction,
        epsilon,
        r_i,
    })
}

/// World position of the implement point for a given rear-axle pose.
pub fn implement_world_position<T: Scalar>(pose: &Pose2<T>, off: &ImplementOffset<T>) -> Point2<T> {
    pose.transform(off.longitudinal, off.lateral)
}
