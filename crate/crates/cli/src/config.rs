//! Experiment configuration: a TOML document with unit-suffixed field names.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use gdtc::evolve::{DeltaDrive, Drive, EdsrDrive, SquareDrive, DEFAULT_STEPS_PER_CYCLE};
use gdtc::models::{Disorder, GradientAxis, InitialPattern, ModelSpec};
use gdtc::diagnostics::LateTimeWindow;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseDiagram,
    Trajectory,
    ReversalTime,
    MutualInfo,
    Qfi,
    Heating,
    Entropy,
    Participation,
    SwChecks,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::PhaseDiagram => "phase_diagram",
            Self::Trajectory => "trajectory",
            Self::ReversalTime => "reversal_time",
            Self::MutualInfo => "mutual_info",
            Self::Qfi => "qfi",
            Self::Heating => "heating",
            Self::Entropy => "entropy",
            Self::Participation => "participation",
            Self::SwChecks => "sw_checks",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    #[default]
    Gaussian,
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    #[default]
    Z,
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub sites: usize,
    pub coupling_mhz: f64,
    pub field_mhz: f64,
    pub gradient_mhz: f64,
    #[serde(default)]
    pub disorder: DisorderKind,
    /// Standard deviation (Gaussian) or half-width (uniform).
    #[serde(default)]
    pub disorder_width_mhz: f64,
    #[serde(default)]
    pub gradient_axis: AxisName,
}

impl ModelConfig {
    pub fn to_spec(&self) -> ModelSpec {
        let disorder = match self.disorder {
            DisorderKind::Gaussian => Disorder::Gaussian { sigma_mhz: self.disorder_width_mhz },
            DisorderKind::Uniform => Disorder::Uniform { half_width_mhz: self.disorder_width_mhz },
        };
        let axis = match self.gradient_axis {
            AxisName::Z => GradientAxis::Z,
            AxisName::Y => GradientAxis::Y,
        };
        ModelSpec::new(self.sites, self.coupling_mhz, self.field_mhz, self.gradient_mhz)
            .with_disorder(disorder)
            .with_gradient_axis(axis)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveConfig {
    Delta {
        epsilon: f64,
        period_ns: f64,
    },
    /// Carriers follow the clean Zeeman frequencies of the model.
    Edsr {
        epsilon: f64,
        period_ns: f64,
        duty: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        steps_per_cycle: Option<usize>,
    },
    Square {
        amplitude_mhz: f64,
        period_ns: f64,
        duty: f64,
    },
    None {
        period_ns: f64,
    },
}

impl DriveConfig {
    pub fn to_drive(&self, spec: &ModelSpec) -> Drive {
        match *self {
            DriveConfig::Delta { epsilon, period_ns } => Drive::Delta(DeltaDrive { epsilon, period_ns }),
            DriveConfig::Edsr { epsilon, period_ns, duty, steps_per_cycle } => {
                let mut d = EdsrDrive::resonant(spec, epsilon, period_ns, duty);
                d.steps_per_cycle = steps_per_cycle.unwrap_or(DEFAULT_STEPS_PER_CYCLE);
                Drive::Edsr(d)
            }
            DriveConfig::Square { amplitude_mhz, period_ns, duty } => {
                Drive::Square(SquareDrive { amplitude_mhz, period_ns, duty })
            }
            DriveConfig::None { period_ns } => Drive::None { period_ns },
        }
    }

    fn name(&self) -> &'static str {
        match self {
            DriveConfig::Delta { .. } => "delta",
            DriveConfig::Edsr { .. } => "edsr",
            DriveConfig::Square { .. } => "square",
            DriveConfig::None { .. } => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// One swept parameter: either explicit `values` or `min`/`max`/`points`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub scale: Scale,
}

/// Parameters a grid axis may sweep.
pub const GRID_PARAMETERS: [&str; 9] = [
    "sites",
    "coupling_mhz",
    "field_mhz",
    "gradient_mhz",
    "disorder_width_mhz",
    "epsilon",
    "period_ns",
    "duty",
    "amplitude_mhz",
];

impl GridAxis {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        let bad = |msg: &str| CliError::Config(format!("grid axis '{}': {msg}", self.parameter));
        if !GRID_PARAMETERS.contains(&self.parameter.as_str()) {
            return Err(bad(&format!("unknown parameter; expected one of {GRID_PARAMETERS:?}")));
        }
        let pts = match (&self.values, self.min, self.max, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(lo), Some(hi), Some(n)) => {
                if n == 0 {
                    return Err(bad("points must be at least 1"));
                }
                if n == 1 {
                    if lo != hi {
                        return Err(bad("a single point needs min == max"));
                    }
                    vec![lo]
                } else {
                    match self.scale {
                        Scale::Linear => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
                        Scale::Log => {
                            if !(lo > 0.0 && hi > 0.0) {
                                return Err(bad("log scale needs positive bounds"));
                            }
                            let (a, b) = (lo.ln(), hi.ln());
                            (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
                        }
                    }
                }
            }
            _ => return Err(bad("give either `values` or all of `min`, `max`, `points`")),
        };
        if pts.is_empty() {
            return Err(bad("no grid points"));
        }
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(bad("grid values must be finite"));
        }
        if self.parameter == "sites" && pts.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
            return Err(bad("sites must be positive integers"));
        }
        Ok(pts)
    }
}

fn default_initial_state() -> String {
    "neel".to_string()
}

fn default_sample_every() -> usize {
    2
}

/// Which states the entropy is evaluated on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMode {
    /// Initial state evolved under the static Hamiltonian, averaged over the window.
    #[default]
    LateTime,
    /// Unweighted average over all eigenstates.
    Eigenstates,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub start_jt: f64,
    pub end_jt: f64,
    pub samples: usize,
}

impl From<WindowConfig> for LateTimeWindow {
    fn from(w: WindowConfig) -> Self {
        LateTimeWindow { start_jt: w.start_jt, end_jt: w.end_jt, samples: w.samples }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub realizations: usize,
    pub master_seed: u64,
    #[serde(default = "default_initial_state")]
    pub initial_state: String,
    /// Simulated drive periods (trajectory, heating).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_periods: Option<usize>,
    /// Stroboscopic samples in the phase-diagram time average.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<usize>,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Sites whose magnetization is reported; defaults to site 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe_sites: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
    /// Period cap for spin-reversal runs; unreversed runs count at the cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_periods: Option<usize>,
    /// Periods at which the heating ratio is reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_a: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_b: Option<Vec<usize>>,
    #[serde(default)]
    pub state_mode: StateMode,
}

fn default_directory() -> String {
    "results".to_string()
}

fn default_format() -> String {
    "csv".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_format")]
    pub format: String,
    /// File stem; defaults to the experiment kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Plot file set emitted after the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), format: default_format(), name: None, figure: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    #[serde(default)]
    pub grid: Vec<GridAxis>,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn observe_sites(&self) -> Vec<usize> {
        self.run.observe_sites.clone().unwrap_or_else(|| vec![1])
    }

    pub fn window(&self) -> LateTimeWindow {
        self.run.window.map(Into::into).unwrap_or_default()
    }

    /// Grid axes with their points, in declaration order.
    pub fn grid_points(&self) -> CliResult<Vec<(String, Vec<f64>)>> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for axis in &self.grid {
            if seen.contains(&axis.parameter) {
                return Err(CliError::Config(format!("grid parameter '{}' repeated", axis.parameter)));
            }
            seen.push(axis.parameter.clone());
            out.push((axis.parameter.clone(), axis.points()?));
        }
        Ok(out)
    }

    /// Every grid point as coordinate values, first axis slowest.
    pub fn grid_coordinates(&self) -> CliResult<Vec<Vec<f64>>> {
        let axes = self.grid_points()?;
        let mut coords = vec![Vec::new()];
        for (_, pts) in &axes {
            coords = coords
                .into_iter()
                .flat_map(|c| {
                    pts.iter().map(move |&p| {
                        let mut c = c.clone();
                        c.push(p);
                        c
                    })
                })
                .collect();
        }
        Ok(coords)
    }

    /// Copy with `parameter` set to `value`.
    pub fn with_parameter(&self, parameter: &str, value: f64) -> CliResult<Self> {
        let mut c = self.clone();
        let missing = || CliError::Config(format!("parameter '{parameter}' is not defined for this drive"));
        match parameter {
            "sites" => c.model.sites = value as usize,
            "coupling_mhz" => c.model.coupling_mhz = value,
            "field_mhz" => c.model.field_mhz = value,
            "gradient_mhz" => c.model.gradient_mhz = value,
            "disorder_width_mhz" => c.model.disorder_width_mhz = value,
            _ => {
                let drive = c.drive.as_mut().ok_or_else(missing)?;
                let slot = match (parameter, drive) {
                    ("epsilon", DriveConfig::Delta { epsilon, .. } | DriveConfig::Edsr { epsilon, .. }) => epsilon,
                    (
                        "period_ns",
                        DriveConfig::Delta { period_ns, .. }
                        | DriveConfig::Edsr { period_ns, .. }
                        | DriveConfig::Square { period_ns, .. }
                        | DriveConfig::None { period_ns },
                    ) => period_ns,
                    ("duty", DriveConfig::Edsr { duty, .. } | DriveConfig::Square { duty, .. }) => duty,
                    ("amplitude_mhz", DriveConfig::Square { amplitude_mhz, .. }) => amplitude_mhz,
                    _ => return Err(missing()),
                };
                *slot = value;
            }
        }
        Ok(c)
    }

    /// Configs for every grid point, in grid order.
    pub fn expand(&self) -> CliResult<Vec<(Vec<f64>, ExperimentConfig)>> {
        let axes = self.grid_points()?;
        self.grid_coordinates()?
            .into_iter()
            .map(|coords| {
                let mut c = self.clone();
                for ((name, _), &v) in axes.iter().zip(&coords) {
                    c = c.with_parameter(name, v)?;
                }
                Ok((coords, c))
            })
            .collect()
    }

    fn require<T: Copy>(&self, value: Option<T>, field: &str) -> CliResult<T> {
        value.ok_or_else(|| CliError::Config(format!("{} needs run.{field}", self.experiment.name())))
    }

    fn require_drive(&self, allowed: &[&str]) -> CliResult<()> {
        match &self.drive {
            Some(d) if allowed.contains(&d.name()) => Ok(()),
            Some(d) => Err(CliError::Config(format!(
                "{} does not support a {} drive (allowed: {allowed:?})",
                self.experiment.name(),
                d.name()
            ))),
            None => Err(CliError::Config(format!("{} needs a [drive] table", self.experiment.name()))),
        }
    }

    fn forbid_drive(&self) -> CliResult<()> {
        match &self.drive {
            None | Some(DriveConfig::None { .. }) => Ok(()),
            Some(_) => Err(CliError::Config(format!("{} evolves the undriven chain; remove [drive]", self.experiment.name()))),
        }
    }

    /// Checks units, grid sanity, per-experiment fields and every expanded
    /// grid point's model and drive.
    pub fn validate(&self) -> CliResult<()> {
        if self.run.realizations == 0 {
            return Err(CliError::Config("run.realizations must be at least 1".into()));
        }
        if self.output.format != "csv" {
            return Err(CliError::Config(format!("unsupported output format '{}'", self.output.format)));
        }
        if self.run.sample_every == 0 {
            return Err(CliError::Config("run.sample_every must be at least 1".into()));
        }
        self.run
            .initial_state
            .parse::<InitialPattern>()
            .map_err(|e| CliError::Config(format!("run.initial_state: {e}")))?;
        match self.experiment {
            ExperimentKind::PhaseDiagram => {
                self.require_drive(&["delta", "edsr", "none"])?;
                self.require(self.run.s_max, "s_max")?;
            }
            ExperimentKind::Trajectory => {
                self.require_drive(&["delta", "edsr", "none"])?;
                let n = self.require(self.run.n_periods, "n_periods")?;
                if n % self.run.sample_every != 0 {
                    return Err(CliError::Config("run.n_periods must be a multiple of run.sample_every".into()));
                }
            }
            ExperimentKind::ReversalTime => {
                self.require_drive(&["delta"])?;
                self.require(self.run.max_periods, "max_periods")?;
            }
            ExperimentKind::MutualInfo => self.require_drive(&["delta"])?,
            ExperimentKind::Heating => {
                self.require_drive(&["square"])?;
                let n = self.require(self.run.n_periods, "n_periods")?;
                let cps = self.run.checkpoints.clone().unwrap_or_else(|| vec![n]);
                if cps.is_empty() || cps.iter().any(|&c| c == 0 || c > n) {
                    return Err(CliError::Config("run.checkpoints must lie in 1..=n_periods".into()));
                }
            }
            ExperimentKind::Qfi | ExperimentKind::Entropy | ExperimentKind::Participation | ExperimentKind::SwChecks => {
                self.forbid_drive()?
            }
        }
        let w = self.window();
        if w.samples == 0 || !(w.end_jt > w.start_jt) || w.start_jt < 0.0 {
            return Err(CliError::Config("run.window must be a nonempty increasing Jt range".into()));
        }
        for (coords, c) in self.expand()? {
            let at = || format!("grid point {coords:?}");
            let spec = c.model.to_spec();
            spec.validate().map_err(|e| CliError::Config(format!("{}: {e}", at())))?;
            if let Some(d) = &c.drive {
                let drive = d.to_drive(&spec);
                gdtc::evolve::DriveSpec { drive, n_periods: c.run.n_periods.unwrap_or(0) }
                    .validate(spec.sites)
                    .map_err(|e| CliError::Config(format!("{}: {e}", at())))?;
            }
            let basis = spec.basis().map_err(|e| CliError::Config(format!("{}: {e}", at())))?;
            for &s in &c.observe_sites() {
                basis.check_site(s).map_err(|e| CliError::Config(format!("{}: run.observe_sites: {e}", at())))?;
            }
            for region in [&c.run.region_a, &c.run.region_b].into_iter().flatten() {
                basis.check_sites(region).map_err(|e| CliError::Config(format!("{}: region: {e}", at())))?;
            }
            if let InitialPattern::Arrows(a) = c.run.initial_state.parse::<InitialPattern>().expect("checked above") {
                if a.len() != spec.sites {
                    return Err(CliError::Config(format!("{}: initial_state has {} sites", at(), a.len())));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "phase_diagram"

[model]
sites = 4
coupling_mhz = 2.5
field_mhz = 5000.0
gradient_mhz = 600.0
disorder_width_mhz = 9.0

[drive]
kind = "delta"
epsilon = 0.1
period_ns = 100.0

[[grid]]
parameter = "epsilon"
min = 0.0
max = 0.2
points = 3

[[grid]]
parameter = "coupling_mhz"
values = [1.0, 2.0]

[run]
realizations = 2
master_seed = 7
s_max = 10
"#;

    #[test]
    fn parses_and_expands_grid() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let pts = c.expand().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1].0, vec![0.0, 2.0]);
        assert_eq!(pts[1].1.model.coupling_mhz, 2.0);
        assert_eq!(pts[5].1.drive, Some(DriveConfig::Delta { epsilon: 0.2, period_ns: 100.0 }));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = MINIMAL.replace("coupling_mhz = 2.5", "couplng_mhz = 2.5");
        assert!(matches!(ExperimentConfig::from_toml(&typo), Err(CliError::Config(_))));
        let drive_typo = MINIMAL.replace("epsilon = 0.1", "epsilon = 0.1\nduty = 0.2");
        assert!(ExperimentConfig::from_toml(&drive_typo).is_err());
    }

    #[test]
    fn invalid_configs() {
        let zero = MINIMAL.replace("realizations = 2", "realizations = 0");
        assert!(ExperimentConfig::from_toml(&zero).is_err());
        let no_points = MINIMAL.replace("points = 3", "points = 0");
        assert!(ExperimentConfig::from_toml(&no_points).is_err());
        let no_smax = MINIMAL.replace("s_max = 10\n", "");
        assert!(ExperimentConfig::from_toml(&no_smax).is_err());
        let bad_param = MINIMAL.replace("parameter = \"epsilon\"", "parameter = \"amplitude_mhz\"");
        assert!(ExperimentConfig::from_toml(&bad_param).is_err());
        let negative_j = MINIMAL.replace("values = [1.0, 2.0]", "values = [-1.0]");
        assert!(ExperimentConfig::from_toml(&negative_j).is_err());
    }

    #[test]
    fn log_axis() {
        let axis = GridAxis {
            parameter: "gradient_mhz".into(),
            values: None,
            min: Some(10.0),
            max: Some(1000.0),
            points: Some(3),
            scale: Scale::Log,
        };
        let p = axis.points().unwrap();
        assert!((p[1] - 100.0).abs() < 1e-9);
    }
}
