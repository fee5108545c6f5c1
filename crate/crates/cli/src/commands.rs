use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde_json::json;

use offset_track::bench::{
    sweep_offset, sweep_speed, write_offset_csv, write_speed_csv, HorizonChoice, Template,
};
use offset_track::compare::{compare, write_compare_csv, Contender};
use offset_track::config::{apply_overrides, parse_config, RunConfig, SweepHorizon};
use offset_track::metrics::metrics;
use offset_track::sim::{run, SlipSource};
use offset_track::suite::mirror_closed;
use offset_track::tuner::{tune, tune_table, TuneSpec};

use crate::output::{sha256_hex, OutputDir};

pub struct Context {
    pub command: String,
    pub config_file: PathBuf,
    pub config: RunConfig,
    /// Config text with overrides applied; hashed into the manifest.
    pub effective: String,
    pub overrides: Vec<String>,
    pub threads: Option<usize>,
    pub out: OutputDir,
}

#[derive(Debug, Default)]
pub struct Report {
    pub failures: Vec<String>,
}

impl Context {
    pub fn load(
        command: &str,
        file: &Path,
        out: &Path,
        overrides: Vec<String>,
        threads: Option<usize>,
    ) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(file).with_context(|| format!("reading config {}", file.display()))?;
        let base = file.parent().unwrap_or(Path::new("."));
        let config = parse_config(&text, &overrides, base)?;
        let effective = apply_overrides(&text, &overrides)?;
        Ok(Self {
            command: command.to_string(),
            config_file: file.to_path_buf(),
            config,
            effective,
            overrides,
            threads,
            out: OutputDir::create(out)?,
        })
    }

    fn manifest(&self, report: &Report) -> anyhow::Result<()> {
        let mut outputs = self.out.written();
        outputs.push("manifest.json".into());
        let value = json!({
            "command": self.command,
            "config_file": self.config_file.display().to_string(),
            "config_sha256": sha256_hex(self.effective.as_bytes()),
            "overrides": self.overrides,
            "seed": self.config.seed(),
            "path": self.config.path_name,
            "versions": {
                "offset-track": env!("CARGO_PKG_VERSION"),
                "rustc_target": std::env::consts::ARCH,
            },
            "threads": self.threads,
            "completed": report.failures.is_empty(),
            "failed_runs": report.failures,
            "outputs": outputs,
        });
        self.out.write("manifest.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

pub fn dispatch(name: &str, ctx: &Context) -> anyhow::Result<Report> {
    let report = match name {
        "simulate" => simulate(ctx)?,
        "tune" => tune_cmd(ctx)?,
        "sweep-speed" => speed_cmd(ctx)?,
        "sweep-offset" => offset_cmd(ctx)?,
        "compare" => compare_cmd(ctx)?,
        other => anyhow::bail!("unknown command `{other}`"),
    };
    ctx.manifest(&report)?;
    Ok(report)
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn simulate(ctx: &Context) -> anyhow::Result<Report> {
    let cfg = &ctx.config;
    let mut report = Report::default();
    let mut summary = Vec::new();
    for p in &cfg.paths {
        let sc = cfg.scenario(p);
        match run(&sc) {
            Ok(log) => {
                ctx.out
                    .write(&format!("run_{}.csv", file_stem(&p.name)), |w| Ok(log.write_csv(w)?))?;
                if !log.completed {
                    report.failures.push(format!("{}: time cap reached before the stop abscissa", p.name));
                }
                summary.push((p.name.clone(), Ok(metrics(&log, &p.path)), log.events.len()));
            }
            Err(e) => {
                report.failures.push(format!("{}: {e}", p.name));
                summary.push((p.name.clone(), Err(e.to_string()), 0));
            }
        }
    }
    ctx.out.write("metrics.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["path", "status", "median_m", "iqr_m", "rmse_m", "max_m", "samples", "flagged_steps"])?;
        for (name, m, events) in &summary {
            match m {
                Ok(m) => out.write_record([
                    name.clone(),
                    "ok".into(),
                    m.median.to_string(),
                    m.iqr.to_string(),
                    m.rmse.to_string(),
                    m.max.to_string(),
                    m.samples.to_string(),
                    events.to_string(),
                ])?,
                Err(e) => out.write_record([name.clone(), format!("failed: {e}"), "".into(), "".into(), "".into(), "".into(), "".into(), "".into()])?,
            }
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(report)
}

fn tune_cmd(ctx: &Context) -> anyhow::Result<Report> {
    let cfg = &ctx.config;
    let train = cfg.tune.training_suite();
    let mut report = Report::default();
    let mut rows = Vec::new();
    for &speed in &cfg.tune.speeds {
        let spec = TuneSpec {
            speed,
            ..cfg.tune.spec.clone()
        };
        let r = tune(&spec, &cfg.template, &train)?;
        report.failures.extend(r.warnings.iter().cloned());
        ctx.out
            .write(&format!("tune_curve_v{speed}.csv"), |w| Ok(r.write_csv(w)?))?;
        rows.push((speed, r.best, r.best_rmse, r.flat_width(0.05), r.is_interior()));
    }
    ctx.out.write("tune_summary.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["speed_mps", "s_h_star_m", "rmse_m", "flat_width_5pct_m", "interior"])?;
        for (v, h, r, fw, interior) in &rows {
            out.write_record([v.to_string(), h.to_string(), r.to_string(), fw.to_string(), interior.to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(report)
}

fn evaluation_paths(ctx: &Context) -> Vec<offset_track::suite::TaggedPath> {
    if ctx.config.sweep.mirror_closed {
        mirror_closed(&ctx.config.paths)
    } else {
        ctx.config.paths.clone()
    }
}

fn speed_cmd(ctx: &Context) -> anyhow::Result<Report> {
    let cfg = &ctx.config;
    let eval = evaluation_paths(ctx);
    let template = match (cfg.sweep.horizon, &cfg.template.horizon) {
        (SweepHorizon::Tuned, HorizonChoice::Table) => {
            let base = TuneSpec {
                step: cfg.sweep.tune_step,
                ..cfg.tune.spec.clone()
            };
            let table = tune_table(&base, &cfg.sweep.speeds, &cfg.template, &cfg.tune.training_suite())?;
            Template {
                horizon: HorizonChoice::Tuned(table.into_iter().map(|(h, _)| h).collect()),
                ..cfg.template.clone()
            }
        }
        _ => cfg.template.clone(),
    };
    let rows = sweep_speed(&template, cfg.controller, &cfg.sweep.speeds, &eval)?;
    ctx.out.write("sweep_speed.csv", |w| Ok(write_speed_csv(&rows, w)?))?;
    Ok(Report {
        failures: rows.iter().flat_map(|r| r.stats.failures.iter().cloned()).collect(),
    })
}

fn offset_cmd(ctx: &Context) -> anyhow::Result<Report> {
    let cfg = &ctx.config;
    let eval = evaluation_paths(ctx);
    let cells = sweep_offset(&cfg.template, cfg.controller, &cfg.sweep.grid, cfg.speed, &eval)?;
    ctx.out.write("sweep_offset.csv", |w| Ok(write_offset_csv(&cells, w)?))?;
    Ok(Report {
        failures: cells.iter().flat_map(|c| c.stats.failures.iter().cloned()).collect(),
    })
}

fn compare_cmd(ctx: &Context) -> anyhow::Result<Report> {
    let cfg = &ctx.config;
    let mut contenders = Vec::new();
    for &kind in &cfg.compare.controllers {
        contenders.push(Contender::new(cfg.law(kind), cfg.template.slip_source));
        if cfg.compare.observer_ablation && cfg.template.slip_source != SlipSource::Disabled {
            contenders.push(Contender::new(cfg.law(kind), SlipSource::Disabled));
        }
    }
    let mut report = Report::default();
    for p in &cfg.paths {
        let rows = compare(&cfg.scenario(p), &contenders);
        let stem = file_stem(&p.name);
        for r in &rows {
            match &r.outcome {
                Ok((_, log)) => {
                    ctx.out
                        .write(&format!("run_{stem}_{}.csv", r.label), |w| Ok(log.write_csv(w)?))?;
                    if !log.completed {
                        report.failures.push(format!("{} on {}: time cap reached", r.label, p.name));
                    }
                }
                Err(e) => report.failures.push(format!("{} on {}: {e}", r.label, p.name)),
            }
        }
        ctx.out
            .write(&format!("compare_{stem}.csv"), |w| Ok(write_compare_csv(&rows, w)?))?;
    }
    Ok(report)
}
