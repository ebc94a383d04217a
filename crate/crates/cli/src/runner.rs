//! Seeded ensemble execution over parameter grids.
//!
//! One task per (grid point, realization) runs on a fixed-size worker pool.
//! Results are collected in task order and reduced in realization order, so
//! the output never depends on the worker count.

use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use gdtc::diagnostics::{
    bipartite_entropy_density, dimensionless_energy, eigenstate_entropy_density, eigenstate_mutual_information,
    late_time_average, participation_ratio, qfi_staggered, spin_reversal_time_streaming, trailing_mean,
    EnsembleStat,
};
use gdtc::evolve::{
    evolve_edsr, evolve_square_drive, evolve_stroboscopic, floquet_eigenstates, floquet_operator_delta,
    static_propagator, Drive, Trajectory,
};
use gdtc::models::{build_heisenberg, build_ising, initial_state, sample_fields, InitialPattern, ModelSpec};
use gdtc::spinops::{DenseOperator, StateVector};
use gdtc::swtheory::{build_s1, exactness_residual, qfi_dressed_twopoint, qfi_perturbative, spectral_distance, DeltaMode};

use crate::config::{ExperimentConfig, ExperimentKind, StateMode};
use crate::error::{CliError, CliResult};

/// Run provenance written alongside every table.
#[derive(Clone, Debug, PartialEq)]
pub struct Metadata {
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub master_seed: u64,
    pub version: String,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub coords: Vec<f64>,
    pub stats: Vec<EnsembleStat>,
}

/// Ensemble statistics per grid point (and per sample time or checkpoint for
/// time-resolved experiments).
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub experiment: ExperimentKind,
    pub coord_names: Vec<String>,
    pub metric_names: Vec<String>,
    pub rows: Vec<TableRow>,
    pub meta: Metadata,
}

impl ResultTable {
    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coord_names.iter().position(|c| c == name)
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metric_names.iter().position(|m| m == name)
    }

    /// Mean of `metric` in row order.
    pub fn means(&self, metric: &str) -> Option<Vec<f64>> {
        let k = self.metric_index(metric)?;
        Some(self.rows.iter().map(|r| r.stats[k].mean).collect())
    }
}

/// SHA-256 of the canonical TOML form of `config`.
pub fn config_hash(config: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(config.to_toml().as_bytes()))
}

/// Coordinates appended to the grid coordinates for time-resolved kinds.
fn extra_coord_names(kind: ExperimentKind) -> Vec<String> {
    match kind {
        ExperimentKind::Trajectory => vec!["time_ns".into()],
        ExperimentKind::Heating => vec!["periods".into()],
        _ => Vec::new(),
    }
}

fn metric_names(config: &ExperimentConfig) -> Vec<String> {
    let names: &[&str] = match config.experiment {
        ExperimentKind::PhaseDiagram | ExperimentKind::Trajectory => {
            return config.observe_sites().iter().map(|j| format!("sz{j}")).collect();
        }
        ExperimentKind::ReversalTime => &["reversal_ns", "censored"],
        ExperimentKind::MutualInfo => &["mutual_info"],
        ExperimentKind::Qfi => &["qfi"],
        ExperimentKind::Heating => &["q"],
        ExperimentKind::Entropy => &["entropy_density"],
        ExperimentKind::Participation => &["participation_ratio"],
        ExperimentKind::SwChecks => &["residual", "eta", "s_norm", "qfi_dressed", "qfi_perturbative"],
    };
    names.iter().map(|s| s.to_string()).collect()
}

/// One realization's output: rows of (extra coordinates, metric values).
type TaskOutput = Vec<(Vec<f64>, Vec<f64>)>;

struct Task<'a> {
    config: &'a ExperimentConfig,
    spec: ModelSpec,
    seed: u64,
    realization: u64,
}

impl Task<'_> {
    fn hamiltonian(&self) -> gdtc::Result<DenseOperator> {
        build_heisenberg(&self.spec, &sample_fields(&self.spec, self.seed, self.realization))
    }

    fn initial(&self, h: &DenseOperator) -> gdtc::Result<StateVector> {
        let pattern: InitialPattern = self.config.run.initial_state.parse()?;
        initial_state(h.basis(), &pattern, Some(h))
    }

    fn drive(&self) -> Drive {
        self.config.drive.as_ref().expect("validated").to_drive(&self.spec)
    }

    fn trajectory(&self, h: &DenseOperator, psi: &StateVector, n_periods: usize) -> gdtc::Result<Trajectory> {
        let every = self.config.run.sample_every;
        match self.drive() {
            Drive::Delta(d) => {
                let u = floquet_operator_delta(h, d.epsilon, d.period_ns)?;
                evolve_stroboscopic(&u, d.period_ns, psi, n_periods, every)
            }
            Drive::Edsr(d) => evolve_edsr(h, &d, psi, n_periods, every),
            Drive::None { period_ns } => {
                let u = static_propagator(h, period_ns)?;
                evolve_stroboscopic(&u, period_ns, psi, n_periods, every)
            }
            Drive::Square(_) => unreachable!("rejected by validation"),
        }
    }

    fn run(&self) -> gdtc::Result<TaskOutput> {
        let cfg = self.config;
        let run = &cfg.run;
        let h = self.hamiltonian()?;
        let psi = self.initial(&h)?;
        let sites = cfg.observe_sites();
        Ok(match cfg.experiment {
            ExperimentKind::PhaseDiagram => {
                let s_max = run.s_max.expect("validated");
                let n = run.n_periods.unwrap_or(run.sample_every * s_max);
                let traj = self.trajectory(&h, &psi, n)?;
                let avgs = sites
                    .iter()
                    .map(|&j| gdtc::diagnostics::time_average_sz(&traj, j, s_max))
                    .collect::<gdtc::Result<Vec<_>>>()?;
                vec![(Vec::new(), avgs)]
            }
            ExperimentKind::Trajectory => {
                let traj = self.trajectory(&h, &psi, run.n_periods.expect("validated"))?;
                traj.times_ns
                    .iter()
                    .zip(&traj.sz)
                    .map(|(&t, z)| (vec![t], sites.iter().map(|&j| z[j - 1]).collect()))
                    .collect()
            }
            ExperimentKind::ReversalTime => {
                let Drive::Delta(d) = self.drive() else { unreachable!("validated") };
                let cap = run.max_periods.expect("validated");
                let u = floquet_operator_delta(&h, d.epsilon, d.period_ns)?;
                let t = spin_reversal_time_streaming(&u, d.period_ns, &psi, sites[0], cap, run.sample_every)?;
                let (t, censored) = match t {
                    Some(t) => (t, 0.0),
                    None => (cap as f64 * d.period_ns, 1.0),
                };
                vec![(Vec::new(), vec![t, censored])]
            }
            ExperimentKind::MutualInfo => {
                let Drive::Delta(d) = self.drive() else { unreachable!("validated") };
                let l = self.spec.sites;
                let a = run.region_a.clone().unwrap_or_else(|| vec![1]);
                let b = run.region_b.clone().unwrap_or_else(|| vec![l]);
                let fs = floquet_eigenstates(&floquet_operator_delta(&h, d.epsilon, d.period_ns)?)?;
                vec![(Vec::new(), vec![eigenstate_mutual_information(&fs, &a, &b)?])]
            }
            ExperimentKind::Qfi => {
                let f = late_time_average(&h, &psi, self.spec.coupling_mhz, &cfg.window(), |s| Ok(qfi_staggered(s)))?;
                vec![(Vec::new(), vec![f])]
            }
            ExperimentKind::Heating => {
                let Drive::Square(d) = self.drive() else { unreachable!("validated") };
                let n = run.n_periods.expect("validated");
                let traj = evolve_square_drive(&h, &d, &psi, n)?;
                let e = traj.energy.expect("square drive records energy");
                let q = e.iter().map(|&et| dimensionless_energy(et, e[0], &h)).collect::<gdtc::Result<Vec<_>>>()?;
                run.checkpoints
                    .clone()
                    .unwrap_or_else(|| vec![n])
                    .into_iter()
                    .map(|c| Ok((vec![c as f64], vec![trailing_mean(&q, c + 1, (c / 8).max(1))?])))
                    .collect::<gdtc::Result<Vec<_>>>()?
            }
            ExperimentKind::Entropy => {
                let s = match run.state_mode {
                    StateMode::LateTime => {
                        late_time_average(&h, &psi, self.spec.coupling_mhz, &cfg.window(), bipartite_entropy_density)?
                    }
                    StateMode::Eigenstates => eigenstate_entropy_density(&h)?,
                };
                vec![(Vec::new(), vec![s])]
            }
            ExperimentKind::Participation => vec![(Vec::new(), vec![participation_ratio(&psi, &h)?])],
            ExperimentKind::SwChecks => {
                let fields = sample_fields(&self.spec, self.seed, self.realization);
                let gen = build_s1(&self.spec, &fields, DeltaMode::Exact)?;
                let eta = spectral_distance(&h, &build_ising(&self.spec, &fields)?)?;
                let values = vec![
                    exactness_residual(&gen, &h),
                    eta,
                    gen.operator().frobenius_norm(),
                    qfi_dressed_twopoint(&gen)?,
                    qfi_perturbative(self.spec.sites, self.spec.lambda()),
                ];
                vec![(Vec::new(), values)]
            }
        })
    }
}

/// Runs `config` on `workers` threads and reduces the ensemble.
pub fn execute(config: &ExperimentConfig, workers: usize) -> CliResult<ResultTable> {
    config.validate()?;
    gdtc::linalg::pin_blas_single_thread();
    let start = Instant::now();
    let points = config.expand()?;
    let realizations = config.run.realizations;
    let seed = config.run.master_seed;
    let tasks: Vec<(usize, u64)> =
        (0..points.len()).flat_map(|g| (0..realizations as u64).map(move |r| (g, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let outputs: Vec<CliResult<TaskOutput>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(g, r)| {
                let (coords, cfg) = &points[g];
                let task = Task { config: cfg, spec: cfg.model.to_spec(), seed, realization: r };
                task.run().map_err(|e| {
                    let mut context: Vec<String> = config
                        .grid
                        .iter()
                        .zip(coords)
                        .map(|(a, v)| format!("{}={v}", a.parameter))
                        .collect();
                    context.push(format!("realization={r}"));
                    CliError::from_core(context.join(", "), e)
                })
            })
            .collect()
    });
    let outputs = outputs.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut coord_names: Vec<String> = config.grid.iter().map(|a| a.parameter.clone()).collect();
    coord_names.extend(extra_coord_names(config.experiment));
    let metric_names = metric_names(config);
    let mut rows = Vec::new();
    for (g, (coords, _)) in points.iter().enumerate() {
        let ensemble = &outputs[g * realizations..(g + 1) * realizations];
        let first = &ensemble[0];
        for (k, (extra, _)) in first.iter().enumerate() {
            let mut row_coords = coords.clone();
            row_coords.extend(extra);
            let stats = (0..metric_names.len())
                .map(|m| {
                    let samples: Vec<f64> = ensemble
                        .iter()
                        .map(|out| {
                            assert_eq!(out.len(), first.len(), "realizations produced different row counts");
                            out[k].1[m]
                        })
                        .collect();
                    EnsembleStat::from_samples(&samples).expect("at least one realization")
                })
                .collect();
            rows.push(TableRow { coords: row_coords, stats });
        }
    }
    Ok(ResultTable {
        experiment: config.experiment,
        coord_names,
        metric_names,
        rows,
        meta: Metadata {
            config: config.clone(),
            config_sha256: config_hash(config),
            master_seed: seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

