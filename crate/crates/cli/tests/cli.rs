use std::path::Path;
use std::process::Command;

use gdtc_cli::config::ExperimentKind;
use gdtc_cli::plot::{emit_plot_data, render_plot_data};
use gdtc_cli::table::{read_embedded_config, read_rows, write_table};
use gdtc_cli::{execute, run_experiment, CliError, ExperimentConfig, RunOptions};

const PHASE: &str = r#"
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
values = [0.0, 0.1, 0.3]

[[grid]]
parameter = "coupling_mhz"
values = [0.0, 2.5]

[run]
realizations = 4
master_seed = 11
s_max = 20
observe_sites = [1, 2]
"#;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

fn numeric_body(table: &gdtc_cli::ResultTable) -> String {
    let mut buf = Vec::new();
    write_table(table, &mut buf).unwrap();
    String::from_utf8(buf).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn unpulsed_decoupled_chain_keeps_end_spin() {
    let text = r#"
experiment = "phase_diagram"
[model]
sites = 4
coupling_mhz = 0.0
field_mhz = 5000.0
gradient_mhz = 600.0
disorder_width_mhz = 9.0
[drive]
kind = "delta"
epsilon = 1.5707963267948966
period_ns = 100.0
[run]
realizations = 1
master_seed = 3
s_max = 50
"#;
    let t = execute(&config(text), 1).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!((t.rows[0].stats[0].mean - 1.0).abs() < 1e-12);
}

#[test]
fn row_count_is_grid_product_and_columns_carry_units() {
    let t = execute(&config(PHASE), 2).unwrap();
    assert_eq!(t.rows.len(), 6);
    assert_eq!(t.coord_names, vec!["epsilon", "coupling_mhz"]);
    assert_eq!(t.metric_names, vec!["sz1", "sz2"]);
    // Perfect pulses with no coupling: Neel projections stay at +1 / -1.
    let clean = &t.rows[0];
    assert!((clean.stats[0].mean - 1.0).abs() < 1e-9);
    assert!((clean.stats[1].mean + 1.0).abs() < 1e-9);
}

#[test]
fn output_is_independent_of_worker_count() {
    let c = config(PHASE);
    let one = execute(&c, 1).unwrap();
    let eight = execute(&c, 8).unwrap();
    assert_eq!(numeric_body(&one), numeric_body(&eight));
    assert_eq!(one.meta.config_sha256, eight.meta.config_sha256);
    let again = execute(&c, 3).unwrap();
    assert_eq!(numeric_body(&one), numeric_body(&again));
}

#[test]
fn result_file_round_trips_config_and_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { workers: Some(2), out_dir: Some(dir.path().to_path_buf()), seed: Some(99) };
    let out = run_experiment(&config(PHASE), &opts).unwrap();
    let embedded = read_embedded_config(&out.table_path).unwrap();
    assert_eq!(embedded.run.master_seed, 99);
    assert_eq!(embedded, out.table.meta.config);
    let (header, rows) = read_rows(&out.table_path).unwrap();
    assert_eq!(header[0], "epsilon");
    assert_eq!(header.last().unwrap(), "count");
    assert_eq!(rows.len(), 6);
    for (row, trow) in rows.iter().zip(&out.table.rows) {
        assert_eq!(row[2], trow.stats[0].mean, "17 significant digits reproduce the value");
        assert_eq!(row[row.len() - 1], 4.0);
    }
    // Re-running the embedded config reproduces the numeric columns.
    let rerun = execute(&embedded, 1).unwrap();
    assert_eq!(numeric_body(&rerun), numeric_body(&out.table));
}

#[test]
fn phase_diagram_plot_columns() {
    let t = execute(&config(PHASE), 1).unwrap();
    let files = render_plot_data(&t, "fig2").unwrap();
    assert_eq!(files.len(), 2, "one file per observed site");
    let body: Vec<&str> = files[0].1.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "epsilon,J_mhz,mean,std");
    assert_eq!(body.len(), 7);
}

#[test]
fn plot_schema_errors_write_nothing() {
    let t = execute(&config(PHASE), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plots");
    assert!(matches!(emit_plot_data(&t, "QFIlatetime", &out), Err(CliError::Schema(_))));
    assert!(matches!(emit_plot_data(&t, "nope", &out), Err(CliError::Schema(_))));
    assert!(matches!(emit_plot_data(&t, "fig4", &out), Err(CliError::Schema(_))));
    let mut empty = t.clone();
    empty.rows.clear();
    assert!(matches!(emit_plot_data(&empty, "fig2", &out), Err(CliError::Schema(_))));
    assert!(!out.exists());
}

#[test]
fn qfi_plot_has_fit_footer() {
    let text = r#"
experiment = "qfi"
[model]
sites = 4
coupling_mhz = 1.0
field_mhz = 5000.0
gradient_mhz = 1.0
disorder_width_mhz = 0.1
[[grid]]
parameter = "gradient_mhz"
values = [5.0, 40.0, 80.0, 160.0]
[run]
realizations = 2
master_seed = 5
"#;
    let t = execute(&config(text), 1).unwrap();
    let files = render_plot_data(&t, "QFIlatetime").unwrap();
    assert_eq!(files.len(), 1);
    let text = &files[0].1;
    assert!(text.contains("g_over_J,mean,std"));
    let footer = text.lines().find(|l| l.starts_with("# fit:")).unwrap();
    assert!(footer.contains("3 points"), "{footer}");
    let exponent: f64 = footer.rsplit("exponent = ").next().unwrap().trim().parse().unwrap();
    assert!((exponent + 2.0).abs() < 0.5, "{exponent}");
}

fn run_kind(text: &str) -> gdtc_cli::ResultTable {
    execute(&config(text), 2).unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn every_experiment_kind_runs() {
    let model = r#"
[model]
sites = 4
coupling_mhz = 1.0
field_mhz = 100.0
gradient_mhz = 30.0
disorder_width_mhz = 0.5
"#;
    let delta = "[drive]\nkind = \"delta\"\nepsilon = 0.1\nperiod_ns = 100.0\n";
    let cases: Vec<(ExperimentKind, String)> = vec![
        (ExperimentKind::Trajectory, format!("experiment = \"trajectory\"\n{model}{delta}[run]\nrealizations = 2\nmaster_seed = 1\nn_periods = 10\n")),
        (ExperimentKind::ReversalTime, format!("experiment = \"reversal_time\"\n{model}{delta}[run]\nrealizations = 2\nmaster_seed = 1\nmax_periods = 50\n")),
        (ExperimentKind::MutualInfo, format!("experiment = \"mutual_info\"\n{model}{delta}[run]\nrealizations = 2\nmaster_seed = 1\n")),
        (ExperimentKind::Qfi, format!("experiment = \"qfi\"\n{model}[run]\nrealizations = 2\nmaster_seed = 1\n")),
        (
            ExperimentKind::Heating,
            format!("experiment = \"heating\"\n{model}[drive]\nkind = \"square\"\namplitude_mhz = 5.0\nperiod_ns = 1000.0\nduty = 0.5\n[run]\nrealizations = 2\nmaster_seed = 1\ninitial_state = \"ground\"\nn_periods = 16\ncheckpoints = [8, 16]\n"),
        ),
        (ExperimentKind::Entropy, format!("experiment = \"entropy\"\n{model}[run]\nrealizations = 2\nmaster_seed = 1\nstate_mode = \"eigenstates\"\n")),
        (ExperimentKind::Participation, format!("experiment = \"participation\"\n{model}[run]\nrealizations = 2\nmaster_seed = 1\n")),
        (ExperimentKind::SwChecks, format!("experiment = \"sw_checks\"\n{model}[run]\nrealizations = 2\nmaster_seed = 1\n")),
    ];
    for (kind, text) in cases {
        let t = run_kind(&text);
        assert_eq!(t.experiment, kind);
        assert!(t.rows.iter().all(|r| r.stats.iter().all(|s| s.mean.is_finite() && s.count == 2)), "{kind:?}");
        match kind {
            ExperimentKind::Trajectory => assert_eq!(t.rows.len(), 6, "one row per stroboscopic sample"),
            ExperimentKind::Heating => assert_eq!(t.coord_names, vec!["periods"]),
            ExperimentKind::SwChecks => assert!(t.means("residual").unwrap()[0] < 1e-9),
            _ => assert_eq!(t.rows.len(), 1),
        }
    }
}

fn gdtc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gdtc")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.toml", PHASE);
    let out = gdtc(&["validate", &good]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let typo = write(dir.path(), "typo.toml", &PHASE.replace("field_mhz", "feild_mhz"));
    assert_eq!(gdtc(&["validate", &typo]).status.code(), Some(2));
    assert_eq!(gdtc(&["simulate", &typo]).status.code(), Some(2));

    let resonant = r#"
experiment = "sw_checks"
[model]
sites = 4
coupling_mhz = 1.0
field_mhz = 0.0
gradient_mhz = 0.5
[run]
realizations = 1
master_seed = 1
"#;
    let res = write(dir.path(), "res.toml", resonant);
    let out = gdtc(&["simulate", &res, "--out", &dir.path().join("o").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("resonant denominator") && err.contains("realization=0"), "{err}");

    let out = gdtc(&["simulate", &good, "--workers", "2", "--out", &dir.path().join("r").to_string_lossy()]);
    assert!(out.status.success());
    assert!(dir.path().join("r/phase_diagram.csv").exists());

    let list = gdtc(&["presets", "list"]);
    assert!(list.status.success());
    assert!(String::from_utf8_lossy(&list.stdout).contains("QFIlatetime"));
    assert_eq!(gdtc(&["presets", "run", "missing"]).status.code(), Some(2));
}

#[test]
fn invariant_breaches_map_to_exit_code_four() {
    let e = CliError::from_core("x", gdtc::Error::NotUnitary(1e-3));
    assert_eq!(e.exit_code(), 4);
    let e = CliError::from_core("x", gdtc::Error::InvariantBreach { name: "n", value: 1.0, tolerance: 0.0 });
    assert_eq!(e.exit_code(), 4);
    let e = CliError::from_core("x", gdtc::Error::ResonantDenominator { site: 1, value: 0.0 });
    assert_eq!(e.exit_code(), 3);
}
