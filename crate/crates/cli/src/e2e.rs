//! End-to-end runs of the driver, invoked in-process through the argument parser.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use hubbard_ts::model::{build_snake_layout, neel_state, HubbardParams, LatticeSpec};
use hubbard_ts::sampler::exhaustive_expectation;
use hubbard_ts::sim::hubbard_spectrum;
use tempfile::TempDir;

use crate::{run as run_cli, Cli};

/// Parses `args` as a command line and returns the exit status it would produce.
fn invoke<I, S>(args: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once("hubbard-ts".into()).chain(args.into_iter().map(Into::into));
    match Cli::try_parse_from(argv) {
        Err(e) => e.exit_code() as u8,
        Ok(cli) => match run_cli(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("{e}");
                e.status()
            }
        },
    }
}

/// Runs a subcommand with `config` text and returns the exit status.
fn run(dir: &Path, config: &str, out: &str, args: &[&str]) -> u8 {
    let cfg = dir.join(format!("{out}.toml"));
    fs::write(&cfg, config).unwrap();
    let mut argv: Vec<std::ffi::OsString> = vec!["--config".into(), cfg.into(), "--out".into(), dir.join(out).into()];
    argv.extend(args.iter().map(Into::into));
    invoke(argv)
}

fn table(path: PathBuf) -> Vec<std::collections::HashMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_owned).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(str::to_owned)).collect())
        .collect()
}

fn f(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn timeseries_exact_column_matches_the_oracle() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), "[energies]\nvalues = [0.5]\n", "ts", &["timeseries"]), 0);
    let rows = table(dir.path().join("ts/timeseries.csv"));
    let exact: Vec<_> = rows.iter().filter(|r| r["variant"] == "exact").collect();
    assert_eq!(exact.len(), 7);
    let l = LatticeSpec::new(2, 2).unwrap();
    let psi = neel_state(&l, &build_snake_layout(&l));
    let eig = hubbard_spectrum(&l, &HubbardParams::default()).unwrap();
    for r in &exact {
        let g = eig.loschmidt(&psi, f(r, "t"), 0.5);
        assert!((f(r, "re_g") - g.re).abs() < 1e-12);
    }
    for r in rows.iter().filter(|r| r["m"] == "0") {
        assert!((f(r, "re_g") - 1.0).abs() < 1e-12, "{r:?}");
    }
    let text = fs::read_to_string(dir.path().join("ts/timeseries.csv")).unwrap();
    let grid = json(dir.path().join("ts/grid.json"));
    assert!(text.starts_with(&format!("# config_sha256={}", grid["config_sha256"].as_str().unwrap())));
}

#[test]
fn dry_run_reports_the_large_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = "[lattice]\nx = 2\ny = 8\n[timeseries]\ndry_run = true\n";
    assert_eq!(run(dir.path(), cfg, "dry", &["timeseries"]), 0);
    let grid = json(dir.path().join("dry/grid.json"));
    assert_eq!(grid["n_qubits"], 32);
    assert_eq!(grid["r"], 12);
    assert_eq!(grid["points"].as_array().unwrap().len(), 13);
    assert!(!dir.path().join("dry/timeseries.csv").exists());
    // Without the dry-run flag the register is too large to simulate.
    assert_eq!(run(dir.path(), "[lattice]\nx = 2\ny = 8\n", "wet", &["timeseries"]), 2);
}

#[test]
fn fdos_wide_filter_row() {
    let dir = TempDir::new().unwrap();
    let cfg = "[filter]\ndelta = 1e6\nx = 1.0\n[energies]\nvalues = [0.0, 1.0]\n";
    assert_eq!(run(dir.path(), cfg, "wide", &["fdos"]), 0);
    for r in table(dir.path().join("wide/fdos.csv")) {
        assert!((f(&r, "exact") - 1.0).abs() < 1e-6);
    }
}

#[test]
fn fdos_on_two_by_three() {
    let dir = TempDir::new().unwrap();
    let cfg = "[lattice]\nx = 2\ny = 3\n[energies]\nstart = -2.0\nstop = 3.0\npoints = 9\n";
    assert_eq!(run(dir.path(), cfg, "f", &["fdos"]), 0);
    let rows = table(dir.path().join("f/fdos.csv"));
    assert_eq!(rows.len(), 9);
    let summary = json(dir.path().join("f/fdos_summary.json"));
    assert_eq!(summary["r"], 7);
    assert_eq!(summary["r_half"], 4);
    for r in &rows {
        let (exact, series, bound) = (f(r, "exact"), f(r, "series"), f(r, "truncation_bound"));
        assert!((series - exact).abs() <= bound + 0.02 * exact, "{r:?}");
    }
}

#[test]
fn sampling_sweep_matches_enumeration() {
    let dir = TempDir::new().unwrap();
    let cfg = "seed = 17\n[energies]\nvalues = [0.0, 1.0, 2.0, 3.0, 4.0]\n[chain]\nwrite_chains = false\n";
    assert_eq!(run(dir.path(), cfg, "s", &["sample"]), 0);
    let l = LatticeSpec::new(2, 2).unwrap();
    let rows = table(dir.path().join("s/sweep.csv"));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let want = exhaustive_expectation(&l, &HubbardParams::default(), f(r, "energy"), 1.0).unwrap();
        assert!((f(r, "exhaustive") - want).abs() < 1e-12);
        assert!((f(r, "mean") - want).abs() <= 3.0 * f(r, "stderr"), "{r:?}");
    }
    let summary = json(dir.path().join("s/summary.json"));
    assert_eq!(summary["chains"][0]["n_samples"], 5000);
}

#[test]
fn resource_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = "[resources]\nsizes = [4, 5, 6, 7, 8]\nfidelities = [0.998, 1.0]\n";
    assert_eq!(run(dir.path(), cfg, "r", &["resources"]), 0);
    let rows = table(dir.path().join("r/resources.csv"));
    assert_eq!(rows.len(), 5 * 2 * 2);
    for r in rows.iter().filter(|r| r["fidelity"] == "1") {
        assert_eq!(f(r, "overhead"), 1.0);
    }
    for enc in ["jw", "compact"] {
        let curve: Vec<f64> =
            rows.iter().filter(|r| r["encoding"] == enc && r["fidelity"] == "0.998").map(|r| f(r, "overhead")).collect();
        assert!(curve.windows(2).all(|w| w[1] > w[0]), "{enc}: {curve:?}");
    }
    let summary = json(dir.path().join("r/resources_summary.json"));
    assert_eq!(summary["n_jw_6x6"], 597);
    assert_eq!(summary["n_compact_6x6"], 648);
}

#[test]
fn mitigate_reprocesses_noisy_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = "seed = 2\n[noise]\neps_2q = 0.002\nshots = 4000\n[mitigation]\nmethod = \"zne_rescale\"\n";
    assert_eq!(run(dir.path(), cfg, "m", &["timeseries"]), 0);
    let input = dir.path().join("m/timeseries.csv");
    assert_eq!(run(dir.path(), cfg, "m2", &["mitigate", "--input", input.to_str().unwrap()]), 0);
    let inline: Vec<f64> = table(input.clone())
        .iter()
        .filter(|r| r["variant"] == "mitigated")
        .map(|r| f(r, "re_g"))
        .collect();
    let redone: Vec<f64> = table(dir.path().join("m2/mitigated.csv")).iter().map(|r| f(r, "re_g_mitigated")).collect();
    assert_eq!(inline.len(), 7);
    for (a, b) in inline.iter().zip(&redone) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn hand_written_input_and_contract_violation() {
    let dir = TempDir::new().unwrap();
    let header = "energy,m,t,n_steps,n_2q,variant,p0,p_pi,re_g,sigma,q,kept_fraction,p0_fold,p_pi_fold\n";
    let good = format!("{header}1,0,0,1,30,noisy,0.6,0.2,0.4,0.01,0.5,,,\n");
    let path = dir.path().join("in.csv");
    fs::write(&path, good).unwrap();
    assert_eq!(run(dir.path(), "[mitigation]\nmethod = \"rescale\"\n", "ok", &["mitigate", "--input", path.to_str().unwrap()]), 0);
    let rows = table(dir.path().join("ok/mitigated.csv"));
    assert!((f(&rows[0], "re_g_mitigated") - 0.8).abs() < 1e-12);
    assert!((f(&rows[0], "sigma") - 0.02).abs() < 1e-12);

    let bad = format!("{header}1,0,0,1,30,noisy,0.6,0.2,0.4,0.01,0.5,,0.1,0.3\n");
    fs::write(&path, bad).unwrap();
    let cfg = "[mitigation]\nmethod = \"zne_rescale\"\n";
    assert_eq!(run(dir.path(), cfg, "bad", &["mitigate", "--input", path.to_str().unwrap()]), 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), "colour = \"red\"\n", "a", &["resources"]), 2);
    assert_eq!(run(dir.path(), "[filter]\ndelta = -1.0\nx = 1.0\n", "b", &["fdos"]), 2);
    assert_eq!(run(dir.path(), "[chain]\nvariants = [\"shots\"]\n", "c", &["sample"]), 2);
    assert_eq!(run(dir.path(), "[mitigation]\nmethod = \"symmetry\"\n", "d", &["timeseries"]), 2);
    assert_eq!(invoke(["--config", "/nonexistent/run.toml", "resources"]), 2);
    let out = dir.path().join("e");
    assert_eq!(invoke(["--jobs", "0", "--out", out.to_str().unwrap(), "resources"]), 2);
    assert_eq!(invoke(["launch"]), 2);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = "[energies]\nvalues = [1.0, 2.0]\n[noise]\neps_2q = 0.003\nshots = 700\nsigma_series = 0.05\n\
               [mitigation]\nmethod = \"symmetry\"\n[chain]\nn_samples = 400\nvariants = [\"exact\", \"shots_gaussian\"]\n";
    for cmd in ["timeseries", "sample", "fdos"] {
        let a = format!("{cmd}_a");
        let b = format!("{cmd}_b");
        assert_eq!(run(dir.path(), cfg, &a, &[cmd, "--seed", "9", "--jobs", "1"]), 0);
        assert_eq!(run(dir.path(), cfg, &b, &[cmd, "--seed", "9", "--jobs", "4"]), 0);
        let (sa, sb) = (snapshot(&dir.path().join(&a)), snapshot(&dir.path().join(&b)));
        assert!(!sa.is_empty());
        assert_eq!(sa, sb, "{cmd}");
    }
    assert_eq!(run(dir.path(), cfg, "other", &["timeseries", "--seed", "10"]), 0);
    assert_ne!(
        fs::read(dir.path().join("other/timeseries.csv")).unwrap(),
        fs::read(dir.path().join("timeseries_a/timeseries.csv")).unwrap()
    );
}
