use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

mod commands;
mod output;

/// Path following simulations for an implement rigidly attached to an
/// Ackermann vehicle.
#[derive(Debug, Parser)]
#[command(name = "offset-track", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-loop run of the configured controller on every configured path.
    Simulate(Common),
    /// Grid search of the prediction horizon on the training suite.
    Tune(Common),
    /// Median/IQR per speed and front/rear group over the evaluation suite.
    SweepSpeed(Common),
    /// Median/IQR per implement position over the evaluation suite.
    SweepOffset {
        #[command(flatten)]
        common: Common,
        /// Use a 9×9 grid (0.75 m step) instead of the configured one.
        #[arg(long)]
        coarse: bool,
    },
    /// Several controllers on the same scenario.
    Compare(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Config override, `key=value` with a dotted key. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Config overrides as flags: `--gains.lambda 0.2` or `--speed=1.5`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
    rest: Vec<String>,
}

/// `--a.b v` and `--a.b=v` pairs into `a.b=v`.
fn flag_overrides(rest: &[String]) -> anyhow::Result<Vec<String>> {
    let mut out = Vec::new();
    let mut it = rest.iter();
    while let Some(arg) = it.next() {
        let key = arg
            .strip_prefix("--")
            .with_context(|| format!("unexpected argument `{arg}`"))?;
        if let Some(kv) = key.strip_prefix("set=") {
            out.push(kv.to_string());
        } else if key == "set" {
            out.push(it.next().with_context(|| "`--set` needs KEY=VALUE")?.clone());
        } else if key.contains('=') {
            out.push(key.to_string());
        } else {
            let value = it.next().with_context(|| format!("flag `{arg}` needs a value"))?;
            out.push(format!("{key}={value}"));
        }
    }
    Ok(out)
}

fn configure_threads() -> anyhow::Result<Option<usize>> {
    let Ok(raw) = std::env::var("OFFSET_TRACK_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .with_context(|| format!("OFFSET_TRACK_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(Some(n))
}

fn error_summary(command: &str, err: &anyhow::Error) -> serde_json::Value {
    json!({
        "status": "error",
        "command": command,
        "error": err.to_string(),
        "causes": err.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, common, coarse) = match &cli.command {
        Command::Simulate(c) => ("simulate", c, false),
        Command::Tune(c) => ("tune", c, false),
        Command::SweepSpeed(c) => ("sweep-speed", c, false),
        Command::SweepOffset { common, coarse } => ("sweep-offset", common, *coarse),
        Command::Compare(c) => ("compare", c, false),
    };
    let result = configure_threads().and_then(|threads| {
        let mut overrides = common.set.clone();
        overrides.extend(flag_overrides(&common.rest)?);
        if coarse {
            overrides.push("sweep.grid_step=0.75".into());
        }
        let ctx = commands::Context::load(name, &common.config, &common.out, overrides, threads)?;
        commands::dispatch(name, &ctx)
    });
    match result {
        Ok(report) if report.failures.is_empty() => ExitCode::SUCCESS,
        Ok(report) => {
            let summary = json!({
                "status": "incomplete",
                "command": name,
                "failed_runs": report.failures,
            });
            eprintln!("{summary}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{}", error_summary(name, &e));
            ExitCode::from(2)
        }
    }
}
