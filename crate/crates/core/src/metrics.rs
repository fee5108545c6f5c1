//! Error statistics of a run.
//!
//! Percentiles interpolate linearly between order statistics: the `q`
//! quantile of `n` sorted samples sits at fractional rank `q (n − 1)`.

use crate::path::{PathModel, SegmentKind};
use crate::sim::RunLog;

/// Half-width of the window around each joint, m.
pub const TRANSITION_WINDOW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionKind {
    LineToArc,
    ArcToLine,
    /// Consecutive arcs turning the same way.
    ArcToArc,
    /// Consecutive arcs turning opposite ways.
    ArcToArcFlip,
    LineToLine,
}

impl TransitionKind {
    pub fn label(&self) -> &'static str {
        match self {
            TransitionKind::LineToArc => "line_to_arc",
            TransitionKind::ArcToLine => "arc_to_line",
            TransitionKind::ArcToArc => "arc_to_arc",
            TransitionKind::ArcToArcFlip => "arc_to_arc_flip",
            TransitionKind::LineToLine => "line_to_line",
        }
    }
}

/// Kinds of all joints of `path`, in order.
pub fn transitions(path: &PathModel<f64>) -> Vec<(f64, TransitionKind)> {
    path.segments()
        .windows(2)
        .zip(path.joints())
        .map(|(w, &s)| {
            let kind = match (w[0].kind, w[1].kind) {
                (SegmentKind::Line, SegmentKind::Arc) => TransitionKind::LineToArc,
                (SegmentKind::Arc, SegmentKind::Line) => TransitionKind::ArcToLine,
                (SegmentKind::Line, SegmentKind::Line) => TransitionKind::LineToLine,
                (SegmentKind::Arc, SegmentKind::Arc) => {
                    if w[0].curvature.signum() != w[1].curvature.signum() {
                        TransitionKind::ArcToArcFlip
                    } else {
                        TransitionKind::ArcToArc
                    }
                }
            };
            (s, kind)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMax {
    /// Index of the joint (joint `i` sits between segments `i` and `i + 1`).
    pub joint: usize,
    pub s: f64,
    pub kind: TransitionKind,
    /// Largest absolute error in the window; `None` if no sample fell in it.
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub samples: usize,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub iqr: f64,
    pub rmse: f64,
    pub max: f64,
    pub transitions: Vec<TransitionMax>,
}

/// Linear-interpolation percentile of already sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let rank = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = rank.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = rank - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

/// Median, quartiles and RMSE of `|x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub rmse: f64,
    pub max: f64,
}

impl Summary {
    pub fn iqr(&self) -> f64 {
        self.p75 - self.p25
    }
}

pub fn summarize(values: impl IntoIterator<Item = f64>) -> Summary {
    let mut abs: Vec<f64> = values.into_iter().map(f64::abs).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len().max(1) as f64;
    Summary {
        median: percentile_sorted(&abs, 0.5),
        p25: percentile_sorted(&abs, 0.25),
        p75: percentile_sorted(&abs, 0.75),
        rmse: (abs.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
        max: abs.last().copied().unwrap_or(f64::NAN),
    }
}

/// Statistics of the true implement error. Transition windows select
/// samples by the abscissa of the implement's own closest path point.
pub fn metrics(log: &RunLog, path: &PathModel<f64>) -> MetricReport {
    let sum = summarize(log.true_errors());
    let transitions = transitions(path)
        .into_iter()
        .enumerate()
        .map(|(joint, (s, kind))| {
            let max = log
                .records
                .iter()
                .filter(|r| (r.implement_s - s).abs() <= TRANSITION_WINDOW)
                .map(|r| r.e_true.abs())
                .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))));
            TransitionMax { joint, s, kind, max }
        })
        .collect();
    MetricReport {
        samples: log.records.len(),
        median: sum.median,
        p25: sum.p25,
        p75: sum.p75,
        iqr: sum.iqr(),
        rmse: sum.rmse,
        max: sum.max,
        transitions,
    }
}
