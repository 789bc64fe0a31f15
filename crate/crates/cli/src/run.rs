use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use gpargmax::{Execution, RngPolicy};

use crate::config::{config_hash, RunConfig};
use crate::experiments::{self, Context};
use crate::report::{Summary, SCHEMA_VERSION};

pub const SUMMARY_FILE: &str = "summary.json";

/// Refuses to overwrite a directory that holds results of another config,
/// or anything that is not a previous run.
fn check_target(out: &Path, hash: &str) -> Result<()> {
    if !out.exists() {
        return Ok(());
    }
    if !out.is_dir() {
        bail!("{} exists and is not a directory", out.display());
    }
    let summary = out.join(SUMMARY_FILE);
    if summary.exists() {
        let text = fs::read_to_string(&summary).with_context(|| format!("reading {}", summary.display()))?;
        let previous: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", summary.display()))?;
        let old = previous.get("config_hash").and_then(|v| v.as_str()).unwrap_or("");
        if old != hash {
            bail!(
                "refusing to reuse {}: it holds results for config hash {old}, this config hashes to {hash}",
                out.display()
            );
        }
        return Ok(());
    }
    if fs::read_dir(out)?.next().is_some() {
        bail!("refusing to write into {}: not empty and holds no {SUMMARY_FILE}", out.display());
    }
    Ok(())
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!(".{name}.partial-{}", std::process::id()))
}

/// Runs one experiment into `out`. Artifacts are written to a sibling
/// staging directory and moved into place only when the run completes.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Summary> {
    let hash = config_hash(cfg);
    check_target(out, &hash)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let staged = staging_dir(out);
    if staged.exists() {
        fs::remove_dir_all(&staged)?;
    }
    fs::create_dir(&staged).with_context(|| format!("creating {}", staged.display()))?;
    match execute(cfg, &hash, &staged) {
        Ok(summary) => {
            if out.exists() {
                fs::remove_dir_all(out).with_context(|| format!("replacing {}", out.display()))?;
            }
            fs::rename(&staged, out).with_context(|| format!("moving results into {}", out.display()))?;
            Ok(summary)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staged);
            Err(e)
        }
    }
}

fn execute(cfg: &RunConfig, hash: &str, dir: &Path) -> Result<Summary> {
    let ctx = Context {
        dir,
        config_hash: hash,
        rngp: RngPolicy::new(cfg.seed),
        sampler: cfg.sampler,
        execution: Execution::default(),
        tolerance_scale: cfg.tolerance_scale,
    };
    let outcome = experiments::run(&cfg.experiment, &ctx)?;
    let mut artifacts: Vec<String> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<std::io::Result<_>>()?;
    artifacts.push(SUMMARY_FILE.into());
    artifacts.sort();
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        kind: cfg.experiment.kind().into(),
        criterion: cfg.criterion.clone(),
        config_hash: hash.into(),
        seed: cfg.seed,
        tolerance_scale: cfg.tolerance_scale,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        status: outcome.status(),
        checks: outcome.checks,
        metrics: outcome.metrics,
        warnings: outcome.warnings,
        artifacts,
    };
    gpargmax::io::write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}
