use anyhow::{anyhow, Result};

use crate::config::{self, RunConfig};

/// Bundled configs, one per acceptance criterion (AC3 has one per family).
pub const BUNDLED: &[(&str, &str)] = &[
    ("kernel-identities", include_str!("../configs/kernel-identities.toml")),
    ("mean-tail", include_str!("../configs/mean-tail.toml")),
    ("rkhs-maxscore", include_str!("../configs/rkhs-maxscore.toml")),
    ("rkhs-erm", include_str!("../configs/rkhs-erm.toml")),
    ("rkhs-threshreg", include_str!("../configs/rkhs-threshreg.toml")),
    ("chernoff-baseline", include_str!("../configs/chernoff-baseline.toml")),
    ("multidim-continuity", include_str!("../configs/multidim-continuity.toml")),
    ("discontinuity", include_str!("../configs/discontinuity.toml")),
    ("bilinear-closed-form", include_str!("../configs/bilinear-closed-form.toml")),
    ("estimator-oracle", include_str!("../configs/estimator-oracle.toml")),
    ("erm-convergence", include_str!("../configs/erm-convergence.toml")),
    ("percentile-ci", include_str!("../configs/percentile-ci.toml")),
];

pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<RunConfig> {
    let text = source(name).ok_or_else(|| anyhow!("no bundled config named `{name}`"))?;
    config::parse(text)
}

pub struct Entry {
    pub name: &'static str,
    pub criterion: String,
    pub kind: &'static str,
    pub description: String,
}

pub fn entries() -> Result<Vec<Entry>> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let cfg = config::parse(text).map_err(|e| anyhow!("bundled config `{name}`: {e}"))?;
            Ok(Entry {
                name,
                criterion: cfg.criterion.clone().unwrap_or_default(),
                kind: cfg.experiment.kind(),
                description: cfg.description.clone().unwrap_or_default(),
            })
        })
        .collect()
}
