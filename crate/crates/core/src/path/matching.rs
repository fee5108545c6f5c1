//! Closest-point matching of world poses onto a [`PathModel`].
//!
//! Each segment is projected in closed form (orthogonal projection for
//! lines, projection through the circle center for arcs) and the nearest
//! candidate wins. Exact distance ties go to the larger abscissa; if the tied
//! candidates are more than [`AMBIGUITY_GAP`] apart along the path the result
//! is flagged as ambiguous.

use super::{PathModel, Point2, Pose2};
use crate::scalar::{wrap_angle, Scalar};

/// Abscissa separation above which equidistant candidates are ambiguous.
pub const AMBIGUITY_GAP: f64 = 0.5;

/// Frenet coordinates of the rear-axle center.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrenetState<T> {
    /// Curvilinear abscissa, m.
    pub s: T,
    /// Lateral error, m, positive left of the path.
    pub y: T,
    /// Heading minus path tangent heading, wrapped to `(-π, π]`.
    pub psi_tilde: T,
}

impl<T: Scalar> FrenetState<T> {
    pub fn new(s: T, y: T, psi_tilde: T) -> Self {
        Self { s, y, psi_tilde }
    }

    /// Lateral mirror image (negated `y` and `psi_tilde`).
    pub fn mirrored(&self) -> Self {
        Self::new(self.s, -self.y, -self.psi_tilde)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingConfig<T> {
    /// Maximum admissible distance between the pose and the path, m.
    pub corridor: T,
}

impl<T: Scalar> Default for MatchingConfig<T> {
    fn default() -> Self {
        Self {
            corridor: T::lit(10.0),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("point is {distance:.3} m from the path, outside the {corridor} m corridor")]
    OutsideCorridor { distance: f64, corridor: f64 },
}

/// Closest path point to a bare world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMatch<T> {
    pub s: T,
    /// Signed lateral distance, positive left.
    pub lateral: T,
    pub distance: T,
    pub segment: usize,
    /// The closest point is a path endpoint reached by clamping.
    pub clamped: bool,
    /// Equidistant candidates more than 0.5 m apart in abscissa were found.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult<T> {
    pub frenet: FrenetState<T>,
    pub segment: usize,
    pub distance: T,
    pub clamped: bool,
    pub ambiguous: bool,
}

pub fn match_point<T: Scalar>(
    path: &PathModel<T>,
    p: Point2<T>,
    cfg: &MatchingConfig<T>,
) -> Result<PointMatch<T>, MatchError> {
    let tie_tol = T::lit(1e-9);
    let mut best: Option<PointMatch<T>> = None;
    let mut best_other_s: Option<T> = None;
    for (i, seg) in path.segments().iter().enumerate() {
        let proj = seg.project(p);
        let cand = PointMatch {
            s: path.segment_start(i) + proj.local_s,
            lateral: proj.lateral,
            distance: proj.distance,
            segment: i,
            clamped: proj.clamped,
            ambiguous: false,
        };
        match best {
            None => best = Some(cand),
            Some(b) => {
                let tol = tie_tol * T::one().max(b.distance);
                if cand.distance < b.distance - tol {
                    best = Some(cand);
                    best_other_s = None;
                } else if (cand.distance - b.distance).abs() <= tol {
                    // equidistant: prefer larger s, then the downstream segment
                    let (keep, other) = if cand.s >= b.s { (cand, b) } else { (b, cand) };
                    best_other_s = Some(match best_other_s {
                        Some(o) => o.min(other.s),
                        None => other.s,
                    });
                    best = Some(keep);
                }
            }
        }
    }
    let mut m = best.expect("path has at least one segment");
    if let Some(o) = best_other_s {
        m.ambiguous = (m.s - o).abs() > T::lit(AMBIGUITY_GAP);
    }
    // a point exactly at an interior joint is an interior match of the
    // downstream segment, not an endpoint
    if m.clamped {
        let total = path.total_length();
        m.clamped = m.s <= T::zero() || m.s >= total;
    }
    if m.distance > cfg.corridor {
        return Err(MatchError::OutsideCorridor {
            distance: m.distance.to_f64_lossy(),
            corridor: cfg.corridor.to_f64_lossy(),
        });
    }
    Ok(m)
}

/// Matches the rear-axle pose to the path and returns its Frenet errors.
pub fn match_to_path<T: Scalar>(
    path: &PathModel<T>,
    pose: &Pose2<T>,
    cfg: &MatchingConfig<T>,
) -> Result<MatchResult<T>, MatchError> {
    let m = match_point(path, pose.position(), cfg)?;
    let seg = &path.segments()[m.segment];
    let local = (m.s - path.segment_start(m.segment))
        .max(T::zero())
        .min(seg.length);
    let tangent = seg.pose_at(local).heading;
    Ok(MatchResult {
        frenet: FrenetState::new(m.s, m.lateral, wrap_angle(pose.heading - tangent)),
        segment: m.segment,
        distance: m.distance,
        clamped: m.clamped,
        ambiguous: m.ambiguous,
    })
}

/// Signed lateral distance of the implement's world position from its own
/// closest path point.
pub fn true_implement_error<T: Scalar>(
    path: &PathModel<T>,
    implement_point: Point2<T>,
    cfg: &MatchingConfig<T>,
) -> Result<T, MatchError> {
    match_point(path, implement_point, cfg).map(|m| m.lateral)
}
