//! Several controllers, or observer settings, on one scenario.

use std::io::Write;

use rayon::prelude::*;

use crate::control::ControlLaw;
use crate::metrics::{metrics, summarize, MetricReport};
use crate::sim::{run, RunLog, Scenario, SimError, SlipSource};

#[derive(Debug, Clone, PartialEq)]
pub struct Contender {
    pub label: String,
    pub law: ControlLaw<f64>,
    pub slip_source: SlipSource,
}

impl Contender {
    pub fn new(law: ControlLaw<f64>, slip_source: SlipSource) -> Self {
        let label = match slip_source {
            SlipSource::Disabled => format!("{}_no_observer", law.name()),
            SlipSource::Exact => format!("{}_exact_slip", law.name()),
            SlipSource::Observer(_) => law.name().to_string(),
        };
        Self { label, law, slip_source }
    }
}

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub label: String,
    pub outcome: Result<(MetricReport, RunLog), SimError>,
}

/// Runs every contender on `base` with only the law and slip source
/// replaced. A failed run marks its row; the others proceed.
pub fn compare(base: &Scenario, contenders: &[Contender]) -> Vec<CompareRow> {
    contenders
        .par_iter()
        .map(|c| {
            let sc = Scenario {
                law: c.law,
                slip_source: c.slip_source,
                ..base.clone()
            };
            CompareRow {
                label: c.label.clone(),
                outcome: run(&sc).map(|log| (metrics(&log, &sc.path), log)),
            }
        })
        .collect()
}

/// Median of `|e_true|` over samples whose implement lies inside one of the
/// abscissa intervals.
pub fn median_within(log: &RunLog, intervals: &[(f64, f64)]) -> f64 {
    summarize(
        log.records
            .iter()
            .filter(|r| intervals.iter().any(|&(a, b)| r.implement_s >= a && r.implement_s <= b))
            .map(|r| r.e_true),
    )
    .median
}

/// One row per contender; per-transition maxima as `kind@s` columns.
pub fn write_compare_csv<W: Write>(rows: &[CompareRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let joints: Vec<String> = rows
        .iter()
        .find_map(|r| r.outcome.as_ref().ok())
        .map(|(m, _)| {
            m.transitions
                .iter()
                .map(|t| format!("max_{}@{:.1}_m", t.kind.label(), t.s))
                .collect()
        })
        .unwrap_or_default();
    let mut header: Vec<String> = ["controller", "status", "median_m", "iqr_m", "rmse_m", "max_m", "samples", "flagged_steps"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(joints.iter().cloned());
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.label.clone()];
        match &r.outcome {
            Ok((m, log)) => {
                rec.push("ok".into());
                rec.extend(
                    [m.median, m.iqr, m.rmse, m.max]
                        .iter()
                        .map(|v| format!("{v}")),
                );
                rec.push(m.samples.to_string());
                rec.push(log.events.len().to_string());
                rec.extend(
                    m.transitions
                        .iter()
                        .map(|t| t.max.map_or(String::new(), |v| format!("{v}"))),
                );
            }
            Err(e) => {
                rec.push(format!("failed: {e}"));
                rec.extend(std::iter::repeat_n(String::new(), 6 + joints.len()));
            }
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
