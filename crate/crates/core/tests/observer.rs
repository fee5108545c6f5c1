use offset_track::control::{ControlLaw, PredictiveGains};
use offset_track::path::{ImplementOffset, PathBuilder, Pose2};
use offset_track::plant::{PlantKind, SlipProfile};
use offset_track::sim::{run, RunLog, Scenario};

const LAMBDA: f64 = 0.15;

fn constant_slip_run(rear: f64, front: f64) -> RunLog {
    let path = PathBuilder::new(Pose2::new(0.0, 0.0, 0.0)).line(40.0).build().unwrap();
    let mut sc = Scenario::new(
        path,
        ControlLaw::Predictive(PredictiveGains::new(LAMBDA, 0.6, 0.5)),
        ImplementOffset::new(2.0, 0.5),
    );
    sc.plant = PlantKind::PrescribedSlip(SlipProfile::Constant { rear, front });
    sc.initial.y = -0.5;
    run(&sc).unwrap()
}

/// Distance travelled until the estimate error drops below `1/e` of the
/// constant slip `truth` (the estimate starts at zero) and stays there.
fn convergence_distance(log: &RunLog, truth: f64, pick: impl Fn(&offset_track::sim::LogRecord) -> f64) -> f64 {
    let last_bad = log
        .records
        .iter()
        .rposition(|r| (pick(r) - truth).abs() > truth.abs() / std::f64::consts::E)
        .expect("estimate starts away from the truth");
    log.records[last_bad + 1].s - log.records[0].s
}

#[test]
fn converges_five_times_faster_than_the_controller() {
    let log = constant_slip_run(0.05, -0.03);
    let rear = convergence_distance(&log, 0.05, |r| r.beta_r_hat);
    let front = convergence_distance(&log, -0.03, |r| r.beta_f_hat);
    let bound = 1.0 / LAMBDA / 5.0;
    assert!(rear <= bound && front <= bound, "rear {rear} m, front {front} m, bound {bound} m");
    let end = log.records.last().unwrap();
    assert!((end.beta_r_hat - 0.05).abs() < 1e-4 && (end.beta_f_hat + 0.03).abs() < 1e-4);
}

#[test]
fn estimates_follow_the_sign_and_order_of_the_slip() {
    let settled = |rear: f64| {
        let log = constant_slip_run(rear, 0.0);
        let tail = &log.records[log.records.len() - 20..];
        tail.iter().map(|r| r.beta_r_hat).sum::<f64>() / tail.len() as f64
    };
    let values: Vec<f64> = [-0.08, -0.03, 0.0, 0.03, 0.08].into_iter().map(settled).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
    assert!(values[2].abs() < 1e-6);
    assert!(values[0] < 0.0 && values[4] > 0.0);
}
