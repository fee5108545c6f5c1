//! Reference paths for benchmarking: a seeded random suite and two fixed
//! reconstructions (a validation path covering every transition type and an
//! obstacle-avoidance field scenario).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::metrics::{transitions, TransitionKind};
use crate::path::{PathBuilder, PathModel, Pose2, SegmentKind};

/// Whether a path may be used for tuning or for evaluation, never both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathTag {
    Training,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPath {
    pub name: String,
    pub tag: PathTag,
    pub path: PathModel<f64>,
}

/// Default size of a suite.
pub const SUITE_SIZE: usize = 17;
/// Default seeds of the evaluation and training suites.
pub const EVALUATION_SEED: u64 = 2024;
pub const TRAINING_SEED: u64 = 7;

/// Generator limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteLimits {
    pub line_length: (f64, f64),
    pub radius: (f64, f64),
    /// Arc turning angle, rad.
    pub arc_angle: (f64, f64),
    pub total_length: (f64, f64),
    /// Points farther apart than `clearance_gap` along the path must be at
    /// least `clearance` apart in the plane.
    pub clearance: f64,
    pub clearance_gap: f64,
}

impl Default for SuiteLimits {
    fn default() -> Self {
        Self {
            line_length: (10.0, 50.0),
            radius: (5.0, 30.0),
            arc_angle: (30f64.to_radians(), 180f64.to_radians()),
            total_length: (100.0, 300.0),
            clearance: 12.0,
            clearance_gap: 30.0,
        }
    }
}

enum Piece {
    Line(f64),
    Arc { radius: f64, angle: f64 },
}

fn build(pieces: &[Piece]) -> Option<PathModel<f64>> {
    let mut b = PathBuilder::new(Pose2::new(0.0, 0.0, 0.0));
    for p in pieces {
        b = match *p {
            Piece::Line(l) => b.line(l),
            Piece::Arc { radius, angle } => b.arc_angle(radius, angle),
        };
    }
    b.build().ok()
}

/// No two parts of the path that are far apart in abscissa come close in
/// the plane (keeps closest-point matching local).
pub fn has_clearance(path: &PathModel<f64>, limits: &SuiteLimits) -> bool {
    let n = path.total_length().floor() as usize;
    let pts: Vec<_> = (0..=n)
        .map(|i| path.pose_at(i as f64).expect("in range").position())
        .collect();
    let gap = limits.clearance_gap.ceil() as usize;
    pts.iter().enumerate().all(|(i, p)| {
        pts.iter()
            .skip(i + gap + 1)
            .all(|q| p.distance(q) >= limits.clearance)
    })
}

fn random_path(rng: &mut ChaCha8Rng, lim: &SuiteLimits) -> PathModel<f64> {
    loop {
        let target = rng.gen_range(lim.total_length.0 + 30.0..lim.total_length.1 - 40.0);
        let mut pieces = vec![Piece::Line(rng.gen_range(lim.line_length.0..lim.line_length.1))];
        let mut length = match pieces[0] {
            Piece::Line(l) => l,
            _ => unreachable!(),
        };
        let mut last_sign: Option<f64> = None;
        let mut flipped = false;
        while length < target {
            let after_arc = last_sign.is_some();
            let want_arc = !after_arc || rng.gen_bool(0.5) || (!flipped && length > target * 0.5);
            if want_arc {
                let sign = match last_sign {
                    Some(prev) if !flipped || rng.gen_bool(0.6) => -prev,
                    Some(prev) => prev,
                    None => {
                        if rng.gen_bool(0.5) {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                if last_sign.is_some_and(|prev| prev != sign) {
                    flipped = true;
                }
                let radius = rng.gen_range(lim.radius.0..lim.radius.1);
                let angle = rng.gen_range(lim.arc_angle.0..lim.arc_angle.1);
                length += radius * angle;
                pieces.push(Piece::Arc {
                    radius: sign * radius,
                    angle,
                });
                last_sign = Some(sign);
            } else {
                let l = rng.gen_range(lim.line_length.0..lim.line_length.1);
                length += l;
                pieces.push(Piece::Line(l));
                last_sign = None;
            }
        }
        if last_sign.is_some() {
            let l = rng.gen_range(lim.line_length.0..lim.line_length.1);
            length += l;
            pieces.push(Piece::Line(l));
        }
        if !flipped || length < lim.total_length.0 || length > lim.total_length.1 {
            continue;
        }
        if let Some(path) = build(&pieces) {
            if has_clearance(&path, lim) {
                return path;
            }
        }
    }
}

/// `n` random line/arc paths. Each starts and ends with a line and contains
/// at least one arc-to-arc turn reversal. Path `i` depends only on
/// `(seed, i)`.
pub fn generate_suite(seed: u64, n: usize) -> Vec<PathModel<f64>> {
    generate_suite_with(seed, n, &SuiteLimits::default())
}

pub fn generate_suite_with(seed: u64, n: usize, limits: &SuiteLimits) -> Vec<PathModel<f64>> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            random_path(&mut rng, limits)
        })
        .collect()
}

pub fn tagged_suite(seed: u64, n: usize, tag: PathTag) -> Vec<TaggedPath> {
    generate_suite(seed, n)
        .into_iter()
        .enumerate()
        .map(|(i, path)| TaggedPath {
            name: format!("suite:{seed}:{i}"),
            tag,
            path,
        })
        .collect()
}

/// `paths` followed by their mirror images, so that every left turn has a
/// matching right turn.
pub fn mirror_closed(paths: &[TaggedPath]) -> Vec<TaggedPath> {
    let mirrors = paths.iter().map(|p| TaggedPath {
        name: format!("{}:mirror", p.name),
        tag: p.tag,
        path: p.path.mirrored(),
    });
    paths.iter().cloned().chain(mirrors).collect()
}

/// Three lines and three arcs, `L1 C1 L2 C2 C3 L3`, with `C2` and `C3`
/// turning opposite ways: every transition type occurs.
pub fn build_validation_path() -> PathModel<f64> {
    PathBuilder::new(Pose2::new(0.0, 0.0, 0.0))
        .line(40.0)
        .arc_angle(12.0, 90f64.to_radians())
        .line(35.0)
        .arc_angle(-10.0, 90f64.to_radians())
        .arc_angle(8.0, 120f64.to_radians())
        .line(40.0)
        .build()
        .expect("validation path is valid")
}

/// Field scenario: a line, a U-turn, a return line interrupted by a lateral
/// jog around an obstacle and the jog back, then a second U-turn.
pub fn build_avoidance_path() -> PathModel<f64> {
    let jog = 25f64.to_radians();
    PathBuilder::new(Pose2::new(0.0, 0.0, 0.0))
        .line(30.0)
        .arc_angle(6.0, std::f64::consts::PI)
        .line(25.0)
        .arc_angle(-10.0, jog)
        .arc_angle(10.0, jog)
        .line(20.0)
        .arc_angle(10.0, jog)
        .arc_angle(-10.0, jog)
        .line(25.0)
        .arc_angle(-6.0, std::f64::consts::PI)
        .build()
        .expect("avoidance path is valid")
}

/// Number of joints of each kind.
pub fn transition_census(path: &PathModel<f64>) -> Vec<(TransitionKind, usize)> {
    let kinds = [
        TransitionKind::LineToArc,
        TransitionKind::ArcToLine,
        TransitionKind::ArcToArc,
        TransitionKind::ArcToArcFlip,
        TransitionKind::LineToLine,
    ];
    let t = transitions(path);
    kinds
        .iter()
        .map(|k| (*k, t.iter().filter(|(_, kind)| kind == k).count()))
        .collect()
}

/// Arc segments of a path as abscissa intervals.
pub fn arc_intervals(path: &PathModel<f64>) -> Vec<(f64, f64)> {
    path.segments()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SegmentKind::Arc)
        .map(|(i, s)| (path.segment_start(i), path.segment_start(i) + s.length))
        .collect()
}
