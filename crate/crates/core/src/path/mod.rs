//! Reference paths made of straight lines and circular arcs, indexed by
//! curvilinear abscissa.
//!
//! Sign conventions used throughout the crate: lateral quantities are positive
//! to the LEFT of the direction of travel and curvature is positive for LEFT
//! turns.

mod file;
mod implement;
mod matching;

pub use file::{parse_path_document, path_to_document, PathFileError};
pub use implement::{
    implement_error, implement_world_position, FeasibilityError, ImplementError, ImplementOffset,
};
pub use matching::{
    match_point, match_to_path, true_implement_error, FrenetState, MatchError, MatchResult,
    MatchingConfig, PointMatch,
};

use crate::scalar::{wrap_angle, Scalar};

/// Minimum admissible turning radius of the reference path, meters.
pub const DEFAULT_MIN_RADIUS: f64 = 5.0;

const CONTINUITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Planar pose: position and heading (radians, counter-clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2<T> {
    pub x: T,
    pub y: T,
    pub heading: T,
}

impl<T: Scalar> Pose2<T> {
    pub fn new(x: T, y: T, heading: T) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    /// Maps body-frame coordinates (forward, left) to the world frame.
    pub fn transform(&self, forward: T, left: T) -> Point2<T> {
        let (sin, cos) = self.heading.sin_cos();
        Point2::new(
            self.x + forward * cos - left * sin,
            self.y + forward * sin + left * cos,
        )
    }

    /// Composes `self` with a pose expressed in `self`'s body frame.
    pub fn compose(&self, rel: &Pose2<T>) -> Pose2<T> {
        let p = self.transform(rel.x, rel.y);
        Pose2::new(p.x, p.y, wrap_angle(self.heading + rel.heading))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Line,
    Arc,
}

/// One piece of a reference path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub kind: SegmentKind,
    pub start: Pose2<T>,
    pub length: T,
    /// Signed curvature, 1/m. Zero for lines, positive for left turns.
    pub curvature: T,
}

/// Closest-point projection of a world point onto a single segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Projection<T> {
    pub local_s: T,
    pub lateral: T,
    pub distance: T,
    pub clamped: bool,
}

impl<T: Scalar> Segment<T> {
    pub fn line(start: Pose2<T>, length: T) -> Self {
        Self {
            kind: SegmentKind::Line,
            start,
            length,
            curvature: T::zero(),
        }
    }

    pub fn arc(start: Pose2<T>, length: T, curvature: T) -> Self {
        Self {
            kind: SegmentKind::Arc,
            start,
            length,
            curvature,
        }
    }

    /// Signed radius for arcs, `None` for lines.
    pub fn radius(&self) -> Option<T> {
        match self.kind {
            SegmentKind::Line => None,
            SegmentKind::Arc => Some(self.curvature.recip()),
        }
    }

    /// Pose at local abscissa `ls` in `[0, length]`.
    pub fn pose_at(&self, ls: T) -> Pose2<T> {
        let h0 = self.start.heading;
        let k = self.curvature;
        let half_turn = k * ls / T::lit(2.0);
        // chord form stays accurate for small curvatures
        let chord = if half_turn.abs() < T::lit(1e-9) {
            ls
        } else {
            T::lit(2.0) * half_turn.sin() / k
        };
        let dir = h0 + half_turn;
        Pose2::new(
            self.start.x + chord * dir.cos(),
            self.start.y + chord * dir.sin(),
            wrap_angle(h0 + k * ls),
        )
    }

    pub fn end_pose(&self) -> Pose2<T> {
        self.pose_at(self.length)
    }

    fn endpoint_projection(&self, p: Point2<T>) -> Projection<T> {
        let start = self.start;
        let end = self.end_pose();
        let d0 = start.position().distance(&p);
        let d1 = end.position().distance(&p);
        let (pose, ls, d) = if d1 <= d0 {
            (end, self.length, d1)
        } else {
            (start, T::zero(), d0)
        };
        let (sin, cos) = pose.heading.sin_cos();
        let lateral = cos * (p.y - pose.y) - sin * (p.x - pose.x);
        Projection {
            local_s: ls,
            lateral,
            distance: d,
            clamped: true,
        }
    }

    pub(crate) fn project(&self, p: Point2<T>) -> Projection<T> {
        let h0 = self.start.heading;
        let (sin0, cos0) = h0.sin_cos();
        match self.kind {
            SegmentKind::Line => {
                let dx = p.x - self.start.x;
                let dy = p.y - self.start.y;
                let t = dx * cos0 + dy * sin0;
                if t < T::zero() || t > self.length {
                    return self.endpoint_projection(p);
                }
                let lateral = cos0 * dy - sin0 * dx;
                Projection {
                    local_s: t,
                    lateral,
                    distance: lateral.abs(),
                    clamped: false,
                }
            }
            SegmentKind::Arc => {
                let k = self.curvature;
                let r = k.abs().recip();
                let cx = self.start.x - sin0 / k;
                let cy = self.start.y + cos0 / k;
                let dx = p.x - cx;
                let dy = p.y - cy;
                let rho = dx.hypot(dy);
                let phi0 = (self.start.y - cy).atan2(self.start.x - cx);
                let phi = dy.atan2(dx);
                let sweep = if k > T::zero() { phi - phi0 } else { phi0 - phi };
                let mut sweep = sweep % T::TAU();
                if sweep < T::zero() {
                    sweep = sweep + T::TAU();
                }
                let ls = sweep * r;
                if ls > self.length {
                    return self.endpoint_projection(p);
                }
                let lateral = k.signum() * (r - rho);
                Projection {
                    local_s: ls,
                    lateral,
                    distance: lateral.abs(),
                    clamped: false,
                }
            }
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PathError {
    #[error("path has no segments")]
    Empty,
    #[error("segment {index}: length must be positive (got {length})")]
    NonPositiveLength { index: usize, length: f64 },
    #[error("segment {index}: line segment with nonzero curvature {curvature}")]
    CurvedLine { index: usize, curvature: f64 },
    #[error("segment {index}: arc radius {radius} m is below the minimum {min_radius} m")]
    RadiusTooSmall {
        index: usize,
        radius: f64,
        min_radius: f64,
    },
    #[error("segments {index} and {next}: discontinuous joint (position gap {gap} m, heading gap {heading_gap} rad)")]
    Discontinuous {
        index: usize,
        next: usize,
        gap: f64,
        heading_gap: f64,
    },
    #[error("abscissa {s} outside [0, {total}]")]
    OutOfRange { s: f64, total: f64 },
}

/// Piecewise line/arc reference path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathModel<T> {
    segments: Vec<Segment<T>>,
    starts: Vec<T>,
    total_length: T,
}

impl<T: Scalar> PathModel<T> {
    /// Validates and assembles a path with the default 5 m minimum radius.
    pub fn new(segments: Vec<Segment<T>>) -> Result<Self, PathError> {
        Self::with_min_radius(segments, T::lit(DEFAULT_MIN_RADIUS))
    }

    pub fn with_min_radius(segments: Vec<Segment<T>>, min_radius: T) -> Result<Self, PathError> {
        if segments.is_empty() {
            return Err(PathError::Empty);
        }
        let tol = T::lit(CONTINUITY_TOL);
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.length > T::zero()) {
                return Err(PathError::NonPositiveLength {
                    index: i,
                    length: seg.length.to_f64_lossy(),
                });
            }
            match seg.kind {
                SegmentKind::Line if seg.curvature != T::zero() => {
                    return Err(PathError::CurvedLine {
                        index: i,
                        curvature: seg.curvature.to_f64_lossy(),
                    })
                }
                SegmentKind::Arc if seg.curvature.abs() * min_radius > T::one() + tol => {
                    return Err(PathError::RadiusTooSmall {
                        index: i,
                        radius: seg.curvature.recip().to_f64_lossy(),
                        min_radius: min_radius.to_f64_lossy(),
                    })
                }
                _ => {}
            }
        }
        for (i, pair) in segments.windows(2).enumerate() {
            let end = pair[0].end_pose();
            let next = pair[1].start;
            let gap = end.position().distance(&next.position());
            let heading_gap = wrap_angle(end.heading - next.heading).abs();
            if gap > tol || heading_gap > tol {
                return Err(PathError::Discontinuous {
                    index: i,
                    next: i + 1,
                    gap: gap.to_f64_lossy(),
                    heading_gap: heading_gap.to_f64_lossy(),
                });
            }
        }
        let mut starts = Vec::with_capacity(segments.len());
        let mut acc = T::zero();
        for seg in &segments {
            starts.push(acc);
            acc = acc + seg.length;
        }
        Ok(Self {
            segments,
            starts,
            total_length: acc,
        })
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn total_length(&self) -> T {
        self.total_length
    }

    /// Abscissa at which segment `index` begins.
    pub fn segment_start(&self, index: usize) -> T {
        self.starts[index]
    }

    /// Abscissae of the joints between consecutive segments.
    pub fn joints(&self) -> &[T] {
        &self.starts[1..]
    }

    pub fn start_pose(&self) -> Pose2<T> {
        self.segments[0].start
    }

    pub fn max_abs_curvature(&self) -> T {
        self.segments
            .iter()
            .fold(T::zero(), |m, s| m.max(s.curvature.abs()))
    }

    fn check_range(&self, s: T) -> Result<(), PathError> {
        let tol = T::lit(1e-9);
        if s.is_nan() || s < -tol || s > self.total_length + tol {
            return Err(PathError::OutOfRange {
                s: s.to_f64_lossy(),
                total: self.total_length.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Index of the segment containing `s`; at a joint the downstream one.
    pub fn segment_index(&self, s: T) -> Result<usize, PathError> {
        self.check_range(s)?;
        let idx = self.starts.partition_point(|&st| st <= s);
        Ok(idx.saturating_sub(1))
    }

    /// Signed curvature at `s`. At a joint the downstream segment wins.
    pub fn curvature_at(&self, s: T) -> Result<T, PathError> {
        Ok(self.segments[self.segment_index(s)?].curvature)
    }

    /// Curvature at `s`, with `s` clamped into the path range.
    pub fn curvature_at_clamped(&self, s: T) -> T {
        let s = s.max(T::zero()).min(self.total_length);
        self.segments[self.segment_index(s).unwrap_or(0)].curvature
    }

    pub fn pose_at(&self, s: T) -> Result<Pose2<T>, PathError> {
        let i = self.segment_index(s)?;
        let ls = (s - self.starts[i]).max(T::zero()).min(self.segments[i].length);
        Ok(self.segments[i].pose_at(ls))
    }

    /// World point at abscissa `s` and lateral offset `y` (positive left).
    pub fn point_at(&self, s: T, y: T) -> Result<Point2<T>, PathError> {
        let pose = self.pose_at(s)?;
        Ok(pose.transform(T::zero(), y))
    }

    /// Mirror image of the path about its initial heading axis.
    pub fn mirrored(&self) -> Self {
        let origin = self.start_pose();
        let mut builder = PathBuilder::new(origin);
        for seg in &self.segments {
            builder = match seg.kind {
                SegmentKind::Line => builder.line(seg.length),
                SegmentKind::Arc => builder.arc(-seg.curvature.recip(), seg.length),
            };
        }
        builder
            .build()
            .expect("mirroring preserves path validity")
    }
}

/// Incremental construction of G¹-continuous paths.
#[derive(Debug, Clone)]
pub struct PathBuilder<T> {
    cursor: Pose2<T>,
    segments: Vec<Segment<T>>,
    min_radius: T,
}

impl<T: Scalar> PathBuilder<T> {
    pub fn new(start: Pose2<T>) -> Self {
        Self {
            cursor: start,
            segments: Vec::new(),
            min_radius: T::lit(DEFAULT_MIN_RADIUS),
        }
    }

    pub fn min_radius(mut self, r: T) -> Self {
        self.min_radius = r;
        self
    }

    pub fn line(mut self, length: T) -> Self {
        let seg = Segment::line(self.cursor, length);
        self.cursor = seg.end_pose();
        self.segments.push(seg);
        self
    }

    /// Arc with signed radius (positive = left turn) and arc length.
    pub fn arc(mut self, radius: T, length: T) -> Self {
        let seg = Segment::arc(self.cursor, length, radius.recip());
        self.cursor = seg.end_pose();
        self.segments.push(seg);
        self
    }

    /// Arc with signed radius and unsigned turn angle in radians.
    pub fn arc_angle(self, radius: T, angle: T) -> Self {
        let length = radius.abs() * angle;
        self.arc(radius, length)
    }

    pub fn cursor(&self) -> Pose2<T> {
        self.cursor
    }

    pub fn build(self) -> Result<PathModel<T>, PathError> {
        PathModel::with_min_radius(self.segments, self.min_radius)
    }
}
