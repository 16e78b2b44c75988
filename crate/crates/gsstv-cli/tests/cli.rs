//! Subcommand behavior: exit codes, file outputs, CSV shapes.

use std::path::PathBuf;
use std::process::{Command, Output};

use gsstv::io::read_cube;
use gsstv::noise::{corrupt, oracle_radii, NoiseSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsstv"))
}

struct Setup {
    _dir: tempfile::TempDir,
    clean: PathBuf,
    noisy: PathBuf,
    oracle: PathBuf,
}

fn setup() -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.hsc");
    let noisy = dir.path().join("noisy.hsc");
    let oracle = dir.path().join("oracle.txt");
    let status = bin()
        .args(["synth", "--kind", "blocks", "--dims", "16", "16", "8", "--seed", "42"])
        .arg("--output")
        .arg(&clean)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args(["simulate", "--sigma", "0.05", "--sp-rate", "0.05", "--seed", "7"])
        .arg("--input")
        .arg(&clean)
        .arg("--output")
        .arg(&noisy)
        .arg("--emit-oracle")
        .arg(&oracle)
        .status()
        .unwrap();
    assert!(status.success());
    Setup {
        _dir: dir,
        clean,
        noisy,
        oracle,
    }
}

fn oracle_values(setup: &Setup) -> (String, String) {
    let text = std::fs::read_to_string(&setup.oracle).unwrap();
    let mut eps = None;
    let mut eta = None;
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some("epsilon"), Some(v)) => eps = Some(v.to_string()),
            (Some("eta"), Some(v)) => eta = Some(v.to_string()),
            _ => {}
        }
    }
    (eps.unwrap(), eta.unwrap())
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn oracle_file_matches_library_radii() {
    let setup = setup();
    let (eps_text, eta_text) = oracle_values(&setup);
    let clean = read_cube(&setup.clean).unwrap();
    let (_, n, s_bar) = corrupt(&clean, &NoiseSpec::new(0.05, 0.05, 7).unwrap()).unwrap();
    let (eps, eta) = oracle_radii(&n, &s_bar);
    // shortest round-trip text parses back to the exact values
    assert_eq!(eps_text.parse::<f64>().unwrap().to_bits(), eps.to_bits());
    assert_eq!(eta_text.parse::<f64>().unwrap().to_bits(), eta.to_bits());
}

#[test]
fn metrics_of_identical_files_prints_unit_mssim() {
    let setup = setup();
    let output = bin()
        .arg("metrics")
        .arg("--test")
        .arg(&setup.clean)
        .arg("--reference")
        .arg(&setup.clean)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout_of(&output);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mpsnr_db,mssim"));
    let row = lines.next().unwrap();
    let mssim_cell = row.split(',').nth(1).unwrap();
    assert_eq!(mssim_cell, "1");
}

#[test]
fn denoise_exit_one_on_iteration_cap_with_output_written() {
    let setup = setup();
    let (eps, eta) = oracle_values(&setup);
    let out = setup.noisy.with_file_name("capped.hsc");
    let output = bin()
        .args(["denoise", "--regularizer", "gsstv", "--max-iter", "5"])
        .args(["--epsilon", &eps, "--eta", &eta])
        .arg("--input")
        .arg(&setup.noisy)
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stdout_of(&output).contains("converged=false"));
    let cube = read_cube(&out).expect("result must still be written");
    assert_eq!(cube.dims().len(), 16 * 16 * 8);
    // the iterate is box-projected every step, even at the cap
    assert!(cube.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn denoise_writes_iteration_log() {
    let setup = setup();
    let (eps, eta) = oracle_values(&setup);
    let out = setup.noisy.with_file_name("restored.hsc");
    let log = setup.noisy.with_file_name("trace.log");
    let output = bin()
        .args(["denoise", "--regularizer", "gsstv"])
        .args(["--epsilon", &eps, "--eta", &eta])
        .arg("--input")
        .arg(&setup.noisy)
        .arg("--output")
        .arg(&out)
        .arg("--log")
        .arg(&log)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = stdout_of(&output);
    let iterations: usize = stdout
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("iterations="))
        .unwrap()
        .parse()
        .unwrap();
    let text = std::fs::read_to_string(&log).unwrap();
    assert_eq!(text.lines().count(), iterations);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("iter=1 "));
    for field in ["objective=", "rel_change=", "dual_change=", "fidelity=", "sparsity="] {
        assert!(first.contains(field), "missing {field} in {first}");
    }
}

#[test]
fn sweep_rows_are_ordered_and_plateau_above_one() {
    let setup = setup();
    let (eps, eta) = oracle_values(&setup);
    let csv_path = setup.noisy.with_file_name("sweep.csv");
    let status = bin()
        .args(["sweep", "--param", "sigma-l", "--values", "8,0.5,2,1,4"])
        .args(["--regularizer", "gsstv"])
        .args(["--epsilon", &eps, "--eta", &eta])
        .arg("--input")
        .arg(&setup.noisy)
        .arg("--reference")
        .arg(&setup.clean)
        .arg("--output")
        .arg(&csv_path)
        .status()
        .unwrap();
    assert!(status.success());

    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("param,value,regularizer,sigma,sp_rate,seed,mpsnr_db,mssim,iterations,seconds")
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    let values: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(values, vec![0.5, 1.0, 2.0, 4.0, 8.0], "rows must be sorted");
    let mpsnrs: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();

    // scale-parameter insensitivity above 1: the large-sigma_l values sit on
    // a narrow plateau
    let plateau = &mpsnrs[2..]; // sigma_l in {2, 4, 8}
    let hi = plateau.iter().cloned().fold(f64::MIN, f64::max);
    let lo = plateau.iter().cloned().fold(f64::MAX, f64::min);
    assert!(hi - lo <= 0.2, "plateau spread {:.3} dB", hi - lo);
    // and the whole sweep stays in a tight band on this instance
    let all_hi = mpsnrs.iter().cloned().fold(f64::MIN, f64::max);
    let all_lo = mpsnrs.iter().cloned().fold(f64::MAX, f64::min);
    assert!(all_hi - all_lo <= 1.0, "sweep spread {:.3} dB", all_hi - all_lo);
}

#[test]
fn synth_rejects_unknown_kind_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["synth", "--kind", "spheres", "--dims", "4", "4", "2"])
        .arg("--output")
        .arg(dir.path().join("x.hsc"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!dir.path().join("x.hsc").exists());
}

#[test]
fn unknown_flags_exit_two() {
    let output = bin().args(["denoise", "--frobnicate"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn graph_dump_has_one_row_per_edge() {
    let setup = setup();
    let csv_path = setup.noisy.with_file_name("graph.csv");
    let status = bin()
        .arg("graph-dump")
        .arg("--input")
        .arg(&setup.noisy)
        .arg("--output")
        .arg(&csv_path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,q,weight"));
    // 16x16 grid: 15*16 + 16*15 + 2*15*15 edges
    assert_eq!(lines.clone().count(), 930);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 3);
        let p: usize = cells[0].parse().unwrap();
        let q: usize = cells[1].parse().unwrap();
        let w: f64 = cells[2].parse().unwrap();
        assert!(p < q && q < 256);
        assert!(w > 0.0 && w <= 1.0);
    }
}
