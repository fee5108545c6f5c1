//! Grid search of the prediction horizon.

use std::io::Write;

use crate::bench::{run_batch, ControllerKind, HorizonChoice, OffsetGroup, Template, TunedHorizon};
use crate::metrics::summarize;
use crate::path::ImplementOffset;
use crate::sim::Scenario;
use crate::suite::TaggedPath;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneSpec {
    pub range: (f64, f64),
    pub step: f64,
    pub speed: f64,
    pub offset: ImplementOffset<f64>,
}

impl Default for TuneSpec {
    fn default() -> Self {
        Self {
            range: (0.5, 3.0),
            step: 0.01,
            speed: 1.0,
            offset: ImplementOffset::new(-2.0, -0.5),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TuneError {
    #[error("invalid horizon range [{0}, {1}] or step {2}")]
    Range(f64, f64, f64),
    #[error("no training paths")]
    NoPaths,
    #[error(transparent)]
    Bench(#[from] crate::bench::BenchError),
    #[error("every grid point failed; first failure: {0}")]
    AllFailed(String),
}

impl TuneSpec {
    /// Grid values `lo, lo + step, …` up to `hi` inclusive, computed from an
    /// integer index to avoid drift.
    pub fn grid(&self) -> Result<Vec<f64>, TuneError> {
        let (lo, hi) = self.range;
        if !(lo > 0.0 && hi >= lo && self.step > 0.0 && hi.is_finite()) {
            return Err(TuneError::Range(lo, hi, self.step));
        }
        let n = ((hi - lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| lo + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub s_h: f64,
    /// `None` when some run at this horizon failed.
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: f64,
    pub best_rmse: f64,
    pub curve: Vec<CurvePoint>,
    pub warnings: Vec<String>,
}

impl TuneResult {
    /// Width of the contiguous grid interval around the optimum where the
    /// RMSE stays within `rel` of the minimum.
    pub fn flat_width(&self, rel: f64) -> f64 {
        let limit = self.best_rmse * (1.0 + rel);
        let ok = |p: &CurvePoint| p.rmse.is_some_and(|r| r <= limit);
        let i = self.curve.iter().position(|p| p.s_h == self.best).expect("best on grid");
        let mut lo = i;
        while lo > 0 && ok(&self.curve[lo - 1]) {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < self.curve.len() && ok(&self.curve[hi + 1]) {
            hi += 1;
        }
        self.curve[hi].s_h - self.curve[lo].s_h
    }

    pub fn is_interior(&self) -> bool {
        let first = self.curve.first().map(|p| p.s_h);
        let last = self.curve.last().map(|p| p.s_h);
        Some(self.best) != first && Some(self.best) != last
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s_h_m", "rmse_m"])?;
        for p in &self.curve {
            out.write_record([format!("{}", p.s_h), p.rmse.map_or(String::new(), |r| format!("{r}"))])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Pooled RMSE of the true implement error for every grid horizon over the
/// training paths. The template's horizon choice is ignored.
pub fn tune(spec: &TuneSpec, template: &Template, paths: &[TaggedPath]) -> Result<TuneResult, TuneError> {
    tune_offsets(spec, &[spec.offset], template, paths)
}

/// Horizon per (speed, front/rear group); the two offsets of a group are
/// pooled into one objective.
pub fn tune_table(
    base: &TuneSpec,
    speeds: &[f64],
    template: &Template,
    paths: &[TaggedPath],
) -> Result<Vec<(TunedHorizon, TuneResult)>, TuneError> {
    let mut out = Vec::new();
    for &speed in speeds {
        for group in [OffsetGroup::Front, OffsetGroup::Rear] {
            let spec = TuneSpec { speed, ..base.clone() };
            let r = tune_offsets(&spec, &group.members(), template, paths)?;
            out.push((TunedHorizon { speed, group, s_h: r.best }, r));
        }
    }
    Ok(out)
}

fn tune_offsets(
    spec: &TuneSpec,
    offsets: &[ImplementOffset<f64>],
    template: &Template,
    paths: &[TaggedPath],
) -> Result<TuneResult, TuneError> {
    let grid = spec.grid()?;
    if paths.is_empty() {
        return Err(TuneError::NoPaths);
    }
    crate::bench::ensure_tag(paths, crate::suite::PathTag::Training)?;
    let scenarios: Vec<Scenario> = grid
        .iter()
        .flat_map(|&h| {
            let t = Template {
                horizon: HorizonChoice::Fixed(h),
                ..template.clone()
            };
            offsets
                .iter()
                .flat_map(|off| {
                    paths.iter().map(|p| {
                        let law = t.law(ControllerKind::Predictive, off, spec.speed);
                        t.scenario(&p.path, law, *off, spec.speed)
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let results = run_batch(&scenarios);
    let mut warnings = Vec::new();
    let curve: Vec<CurvePoint> = grid
        .iter()
        .zip(results.chunks(paths.len() * offsets.len()))
        .map(|(&s_h, chunk)| {
            let mut all = Vec::new();
            for (r, p) in chunk.iter().zip(paths.iter().cycle()) {
                match r {
                    Ok(v) => all.extend_from_slice(v),
                    Err(e) => {
                        let msg = format!("s_h = {s_h}: `{}` failed: {e}", p.name);
                        log::warn!("{msg}");
                        warnings.push(msg);
                        return CurvePoint { s_h, rmse: None };
                    }
                }
            }
            CurvePoint {
                s_h,
                rmse: Some(summarize(all).rmse),
            }
        })
        .collect();
    // strict `<` keeps the smaller horizon on ties
    let (best, best_rmse) = curve
        .iter()
        .filter_map(|p| p.rmse.map(|r| (p.s_h, r)))
        .fold(None, |acc: Option<(f64, f64)>, (h, r)| match acc {
            Some((_, br)) if r >= br => acc,
            _ => Some((h, r)),
        })
        .ok_or_else(|| TuneError::AllFailed(warnings.first().cloned().unwrap_or_default()))?;
    Ok(TuneResult {
        best,
        best_rmse,
        curve,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{tagged_suite, PathTag};

    #[test]
    fn grid_endpoints() {
        let g = TuneSpec::default().grid().unwrap();
        assert_eq!(g.len(), 251);
        assert_eq!(g[0], 0.5);
        assert!((g[250] - 3.0).abs() < 1e-12);
        let bad = TuneSpec {
            range: (2.0, 1.0),
            ..TuneSpec::default()
        };
        assert!(matches!(bad.grid(), Err(TuneError::Range(..))));
    }

    #[test]
    fn refuses_evaluation_paths() {
        let eval = tagged_suite(3, 1, PathTag::Evaluation);
        let err = tune(&TuneSpec::default(), &Template::default(), &eval).unwrap_err();
        assert!(matches!(err, TuneError::Bench(_)));
    }

    #[test]
    fn argmin_rescan_and_ties() {
        let r = TuneResult {
            best: 1.0,
            best_rmse: 0.1,
            curve: vec![
                CurvePoint { s_h: 0.5, rmse: Some(0.2) },
                CurvePoint { s_h: 1.0, rmse: Some(0.1) },
                CurvePoint { s_h: 1.5, rmse: Some(0.104) },
                CurvePoint { s_h: 2.0, rmse: None },
            ],
            warnings: vec![],
        };
        assert!(r.is_interior());
        assert!((r.flat_width(0.05) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_tune_is_consistent() {
        let paths = tagged_suite(5, 1, PathTag::Training);
        let spec = TuneSpec {
            range: (0.5, 2.5),
            step: 1.0,
            ..TuneSpec::default()
        };
        let r = tune(&spec, &Template::default(), &paths).unwrap();
        assert_eq!(r.curve.len(), 3);
        let min = r.curve.iter().filter_map(|p| p.rmse).fold(f64::INFINITY, f64::min);
        assert_eq!(min, r.best_rmse);
        let first_min = r.curve.iter().find(|p| p.rmse == Some(min)).unwrap().s_h;
        assert_eq!(first_min, r.best);
        assert_eq!(tune(&spec, &Template::default(), &paths).unwrap(), r);
    }
}
