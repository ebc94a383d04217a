//! Plot-ready text files: one CSV per panel, columns matching the figure axes.

use std::path::{Path, PathBuf};

use gdtc::diagnostics::fit_power_law;

use crate::config::{DriveConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::runner::ResultTable;
use crate::table::format_number;

/// Axis layout of one figure.
#[derive(Clone, Copy, Debug)]
pub struct Figure {
    pub id: &'static str,
    pub kind: ExperimentKind,
    /// Coordinates written as leading columns; all other coordinates split panels.
    pub axes: &'static [&'static str],
    /// Metrics whose name starts with this are emitted.
    pub metric: &'static str,
    /// Replace `gradient_mhz` by `g / J`.
    pub gradient_ratio: bool,
    /// Power-law fit over `g / J >= tail`, written as a footer.
    pub fit_tail: Option<f64>,
    pub description: &'static str,
}

pub const FIGURES: &[Figure] = &[
    Figure {
        id: "fig2",
        kind: ExperimentKind::PhaseDiagram,
        axes: &["epsilon", "coupling_mhz"],
        metric: "sz",
        gradient_ratio: false,
        fit_tail: None,
        description: "time- and disorder-averaged spin projection over pulse error and coupling (delta pulses)",
    },
    Figure {
        id: "fig3",
        kind: ExperimentKind::Trajectory,
        axes: &["time_ns"],
        metric: "sz",
        gradient_ratio: false,
        fit_tail: None,
        description: "disorder-averaged stroboscopic spin trajectories",
    },
    Figure {
        id: "fig4",
        kind: ExperimentKind::PhaseDiagram,
        axes: &["epsilon", "coupling_mhz"],
        metric: "sz",
        gradient_ratio: false,
        fit_tail: None,
        description: "time- and disorder-averaged spin projection under finite EDSR pulses",
    },
    Figure {
        id: "lgtR",
        kind: ExperimentKind::ReversalTime,
        axes: &["sites"],
        metric: "reversal_ns",
        gradient_ratio: false,
        fit_tail: None,
        description: "mean end-spin reversal time versus chain length",
    },
    Figure {
        id: "mutualinfo2",
        kind: ExperimentKind::MutualInfo,
        axes: &["gradient_mhz"],
        metric: "mutual_info",
        gradient_ratio: false,
        fit_tail: None,
        description: "Floquet-eigenstate-averaged end-to-end mutual information versus gradient",
    },
    Figure {
        id: "QFIlatetime",
        kind: ExperimentKind::Qfi,
        axes: &["gradient_mhz"],
        metric: "qfi",
        gradient_ratio: true,
        fit_tail: Some(30.0),
        description: "late-time Fisher information of the staggered magnetization versus g/J",
    },
    Figure {
        id: "heating",
        kind: ExperimentKind::Heating,
        axes: &["gradient_mhz"],
        metric: "q",
        gradient_ratio: false,
        fit_tail: None,
        description: "dimensionless energy Q versus gradient",
    },
    Figure {
        id: "EEloglog",
        kind: ExperimentKind::Entropy,
        axes: &["gradient_mhz"],
        metric: "entropy_density",
        gradient_ratio: true,
        fit_tail: Some(10.0),
        description: "half-chain entanglement entropy per site versus g/J",
    },
    Figure {
        id: "PRloglog",
        kind: ExperimentKind::Participation,
        axes: &["gradient_mhz"],
        metric: "participation_ratio",
        gradient_ratio: true,
        fit_tail: None,
        description: "participation ratio of the initial state versus g/J",
    },
    Figure {
        id: "fig10",
        kind: ExperimentKind::SwChecks,
        axes: &["gradient_mhz"],
        metric: "eta",
        gradient_ratio: true,
        fit_tail: Some(0.0),
        description: "spectral distance between the Heisenberg and effective Ising spectra versus g/J",
    },
];

pub fn figure(id: &str) -> Option<&'static Figure> {
    FIGURES.iter().find(|f| f.id == id)
}

fn display_name(coord: &str, ratio: bool) -> &str {
    match coord {
        "coupling_mhz" => "J_mhz",
        "gradient_mhz" if ratio => "g_over_J",
        "gradient_mhz" => "g_mhz",
        "field_mhz" => "B0_mhz",
        "disorder_width_mhz" => "sigma_B_mhz",
        other => other,
    }
}

fn schema(msg: String) -> CliError {
    CliError::Schema(msg)
}

/// Renders every panel of `figure_id` from `table` as `(file name, contents)`.
pub fn render_plot_data(table: &ResultTable, figure_id: &str) -> CliResult<Vec<(String, String)>> {
    let fig = figure(figure_id).ok_or_else(|| {
        schema(format!("unknown figure '{figure_id}'; known: {:?}", FIGURES.iter().map(|f| f.id).collect::<Vec<_>>()))
    })?;
    if table.experiment != fig.kind {
        return Err(schema(format!("figure {} needs a {} table, got {}", fig.id, fig.kind.name(), table.experiment.name())));
    }
    let drive = &table.meta.config.drive;
    match (fig.id, drive) {
        ("fig2", Some(DriveConfig::Edsr { .. })) => return Err(schema("fig2 is the delta-pulse diagram; use fig4".into())),
        ("fig4", Some(d)) if !matches!(d, DriveConfig::Edsr { .. }) => {
            return Err(schema("fig4 needs an EDSR drive".into()))
        }
        _ => {}
    }
    let axis_idx = fig
        .axes
        .iter()
        .map(|a| table.coord_index(a).ok_or_else(|| schema(format!("figure {} needs coordinate '{a}'", fig.id))))
        .collect::<CliResult<Vec<_>>>()?;
    let metrics: Vec<usize> =
        (0..table.metric_names.len()).filter(|&k| table.metric_names[k].starts_with(fig.metric)).collect();
    if metrics.is_empty() || table.rows.is_empty() {
        return Err(schema(format!("figure {}: empty selection", fig.id)));
    }
    let coupling_idx = table.coord_index("coupling_mhz");
    let default_coupling = table.meta.config.model.coupling_mhz;
    if fig.gradient_ratio && coupling_idx.is_none() && default_coupling == 0.0 {
        return Err(schema("g/J axis needs a nonzero coupling".into()));
    }
    let panel_idx: Vec<usize> = (0..table.coord_names.len()).filter(|k| !axis_idx.contains(k)).collect();
    let mut panels: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (r, row) in table.rows.iter().enumerate() {
        let key: Vec<f64> = panel_idx.iter().map(|&k| row.coords[k]).collect();
        match panels.iter_mut().find(|(k, _)| *k == key) {
            Some((_, rows)) => rows.push(r),
            None => panels.push((key, vec![r])),
        }
    }

    let mut files = Vec::new();
    for &m in &metrics {
        let metric = &table.metric_names[m];
        for (p, (key, rows)) in panels.iter().enumerate() {
            let mut text = String::new();
            text.push_str(&format!("# figure = {}: {}\n", fig.id, fig.description));
            text.push_str(&format!("# metric = {metric} (ensemble mean and sample std)\n"));
            let panel: Vec<String> =
                panel_idx.iter().zip(key).map(|(&k, v)| format!("{}={v}", table.coord_names[k])).collect();
            if !panel.is_empty() {
                text.push_str(&format!("# panel = {}\n", panel.join(", ")));
            }
            let mut cols: Vec<&str> = fig.axes.iter().map(|a| display_name(a, fig.gradient_ratio)).collect();
            cols.extend(["mean", "std"]);
            text.push_str(&cols.join(","));
            text.push('\n');
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &r in rows {
                let row = &table.rows[r];
                let mut fields = Vec::new();
                for (a, &k) in fig.axes.iter().zip(&axis_idx) {
                    let mut v = row.coords[k];
                    if *a == "gradient_mhz" && fig.gradient_ratio {
                        v /= coupling_idx.map_or(default_coupling, |c| row.coords[c]);
                    }
                    if a == &fig.axes[0] {
                        xs.push(v);
                    }
                    fields.push(format_number(v));
                }
                let s = &row.stats[m];
                ys.push(s.mean);
                fields.push(format_number(s.mean));
                fields.push(format_number(s.std));
                text.push_str(&fields.join(","));
                text.push('\n');
            }
            if let Some(tail) = fig.fit_tail {
                let (tx, ty): (Vec<f64>, Vec<f64>) =
                    xs.iter().zip(&ys).filter(|(x, y)| **x >= tail && **y > 0.0).map(|(x, y)| (*x, *y)).unzip();
                match fit_power_law(&tx, &ty) {
                    Ok(fit) => text.push_str(&format!(
                        "# fit: mean = alpha * x^exponent over x >= {tail} ({} points): alpha = {}, exponent = {}\n",
                        tx.len(),
                        format_number(fit.prefactor),
                        format_number(fit.exponent)
                    )),
                    Err(e) => text.push_str(&format!("# fit: not available ({e})\n")),
                }
            }
            let name = if panels.len() == 1 {
                format!("{}_{metric}.csv", fig.id)
            } else {
                format!("{}_{metric}_panel{p}.csv", fig.id)
            };
            files.push((name, text));
        }
    }
    Ok(files)
}

/// Writes the panels of `figure_id` into `dir`. Nothing is written on error.
pub fn emit_plot_data(table: &ResultTable, figure_id: &str, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let files = render_plot_data(table, figure_id)?;
    std::fs::create_dir_all(dir)?;
    files
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            Ok(path)
        })
        .collect()
}
