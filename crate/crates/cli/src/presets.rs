//! Desk-scale configurations for every figure, embedded at build time. The
//! leading comment of each preset states what it reproduces and where it
//! departs from the published run.

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../presets/fig2a.toml")),
    ("fig2b", include_str!("../presets/fig2b.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("lgtR", include_str!("../presets/lgtR.toml")),
    ("mutualinfo2", include_str!("../presets/mutualinfo2.toml")),
    ("QFIlatetime", include_str!("../presets/QFIlatetime.toml")),
    ("heating", include_str!("../presets/heating.toml")),
    ("EEloglog", include_str!("../presets/EEloglog.toml")),
    ("PRloglog", include_str!("../presets/PRloglog.toml")),
    ("fig10", include_str!("../presets/fig10.toml")),
];

pub fn preset_source(id: &str) -> CliResult<&'static str> {
    PRESETS
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| *text)
        .ok_or_else(|| CliError::Config(format!("unknown preset '{id}'")))
}

pub fn preset(id: &str) -> CliResult<ExperimentConfig> {
    ExperimentConfig::from_toml(preset_source(id)?)
}

/// First comment line of a preset.
pub fn summary(text: &str) -> &str {
    text.lines().next().and_then(|l| l.strip_prefix("# ")).unwrap_or("")
}
