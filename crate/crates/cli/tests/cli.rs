use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cavity-trio"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn ok(args: &[&str], out: &Path) -> Output {
    let o = run(args, out);
    assert_eq!(
        code(&o),
        0,
        "{args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn sidecar(dir: &Path, name: &str, command: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{name}-{command}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn csv_rows(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn preset_text(name: &str) -> String {
    let o = bin().args(["presets", name]).output().unwrap();
    assert_eq!(code(&o), 0);
    String::from_utf8(o.stdout).unwrap()
}

fn write_config(dir: &Path, file: &str, text: &str) -> PathBuf {
    let path = dir.join(file);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn spectrum_dip_reaches_zero_at_resonance() {
    let dir = TempDir::new().unwrap();
    ok(&["spectrum", "--preset", "Fig3a", "--x-range", "0:0", "--points", "1"], dir.path());
    let (header, rows) = csv_rows(dir.path().join("Fig3a-spectrum.csv"));
    assert_eq!(header, ["x_mhz", "re_eps", "im_eps", "abs_t", "arg_t", "delay_us"]);
    assert_eq!(rows.len(), 1);
    let re: f64 = rows[0][1].parse().unwrap();
    assert!(re.abs() < 1e-12, "{re}");

    ok(&["spectrum", "--preset", "Fig3a", "--svg"], dir.path());
    let (_, rows) = csv_rows(dir.path().join("Fig3a-spectrum.csv"));
    assert_eq!(rows.len(), 2001);
    let min_re = rows
        .iter()
        .map(|r| r[1].parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(min_re.abs() < 1e-6, "{min_re}");
    let svg = fs::read_to_string(dir.path().join("Fig3a-spectrum.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("Re eps_T") && svg.contains("delay"));
}

#[test]
fn spectrum_full_transmission_at_window_centre() {
    let dir = TempDir::new().unwrap();
    ok(&["spectrum", "--preset", "Fig1-inset"], dir.path());
    let side = sidecar(dir.path(), "Fig1-inset", "spectrum");
    let t_sq = side["results"]["at_pump"]["abs_t_sq"].as_f64().unwrap();
    assert!((t_sq - 1.0).abs() < 1e-12, "{t_sq}");
    assert_eq!(side["tool"], "cavity-trio-cli");
    assert_eq!(side["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(side["scenario"]["name"], "Fig1-inset");
    assert_eq!(side["results"]["stability"]["regime"], "stable");
}

#[test]
fn single_point_spectrum() {
    let dir = TempDir::new().unwrap();
    ok(&["spectrum", "--preset", "Fig1-inset", "--points", "1", "--x-range", "0:0"], dir.path());
    let (_, rows) = csv_rows(dir.path().join("Fig1-inset-spectrum.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn evolve_saturates_gain() {
    let dir = TempDir::new().unwrap();
    ok(&["evolve", "--preset", "Fig1b", "--svg"], dir.path());
    let side = sidecar(dir.path(), "Fig1b", "evolve");
    let g = side["results"]["saturated_gain_mhz"].as_f64().unwrap();
    assert!((g - 0.195).abs() < 0.005, "{g}");
    assert!(side["results"]["stabilized_at_us"].is_f64());
    let photons = side["results"]["steady_photon_numbers"].as_array().unwrap();
    assert_eq!(photons.len(), 3);
    let (header, rows) = csv_rows(dir.path().join("Fig1b-evolve.csv"));
    assert_eq!(header, ["t_us", "re_a1", "im_a1", "re_a2", "im_a2", "re_a3", "im_a3", "gain_mhz"]);
    assert!(rows.len() <= 10_000 && rows.len() > 2);
    assert!(dir.path().join("Fig1b-evolve.svg").exists());
}

#[test]
fn stronger_first_coupling_deepens_dark_state() {
    let dir = TempDir::new().unwrap();
    let base = preset_text("FigS1c");
    assert!(base.contains("couplings_mhz = [2.0, "));
    let mut finals = Vec::new();
    for j1 in ["2.0", "4.0", "8.0"] {
        let text = base
            .replace("couplings_mhz = [2.0, ", &format!("couplings_mhz = [{j1}, "))
            .replace("name = \"FigS1c\"", &format!("name = \"j1-{j1}\""));
        let path = write_config(dir.path(), &format!("j1-{j1}.toml"), &text);
        ok(&["evolve", "--config", path.to_str().unwrap()], dir.path());
        let side = sidecar(dir.path(), &format!("j1-{j1}"), "evolve");
        finals.push(side["results"]["final_photon_numbers"][0].as_f64().unwrap().sqrt());
    }
    assert!(finals[0] > finals[1] && finals[1] > finals[2], "{finals:?}");
}

#[test]
fn zero_horizon_writes_initial_row() {
    let dir = TempDir::new().unwrap();
    ok(&["evolve", "--preset", "Fig1b", "--t-end", "0"], dir.path());
    let (_, rows) = csv_rows(dir.path().join("Fig1b-evolve.csv"));
    assert_eq!(rows.len(), 1);
    let values: Vec<f64> = rows[0].iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(&values[..7], &[0.0; 7]);
    assert_eq!(values[7], 0.2);
}

#[test]
fn stability_map_reference_values() {
    let dir = TempDir::new().unwrap();
    let o = ok(&["stability-map", "--preset", "FigS2a", "--svg"], dir.path());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("0.200000") && stdout.contains("0.100000"), "{stdout}");
    let side = sidecar(dir.path(), "FigS2a", "stability-map");
    let refs = &side["results"]["reference_lines_mhz"];
    assert!((refs["sqrt_k1k2"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!((refs["sqrt_k2k3"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    let (header, rows) = csv_rows(dir.path().join("FigS2a-stability-map.csv"));
    assert_eq!(header, ["j1_mhz", "j2_mhz", "max_re_lambda_mhz", "label"]);
    assert_eq!(rows.len(), 3600);
    assert!(rows.iter().any(|r| r[3] == "unstable") && rows.iter().any(|r| r[3] == "stable"));
    let svg = fs::read_to_string(dir.path().join("FigS2a-stability-map.svg")).unwrap();
    assert!(svg.contains("sqrt(k1 k2) = 0.2000") && svg.contains("sqrt(k2 k3) = 0.1000"));
}

#[test]
fn stability_map_in_stable_region_is_uniform() {
    let dir = TempDir::new().unwrap();
    ok(
        &["stability-map", "--preset", "FigS2a", "--grid", "0.3:1:5", "--grid", "0.15:0.4:5"],
        dir.path(),
    );
    let (_, rows) = csv_rows(dir.path().join("FigS2a-stability-map.csv"));
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().all(|r| r[3] == "stable"));
}

#[test]
fn figure_four_unstable_band() {
    let dir = TempDir::new().unwrap();
    ok(&["stability-map", "--preset", "Fig4", "--grid", "1:1:1", "--grid", "0.1:0.4:31"], dir.path());
    let (_, rows) = csv_rows(dir.path().join("Fig4-stability-map.csv"));
    for r in rows {
        let j2: f64 = r[1].parse().unwrap();
        let expected = if j2 < 0.2449 { "unstable" } else { "stable" };
        assert_eq!(r[3], expected, "J2 = {j2}");
    }
}

#[test]
fn tune_saturated_transparency() {
    let dir = TempDir::new().unwrap();
    ok(&["tune", "--preset", "AppendixA-tuning"], dir.path());
    let side = sidecar(dir.path(), "AppendixA-tuning", "tune");
    let j2 = side["results"]["value_mhz"].as_f64().unwrap();
    assert!((j2 - 0.099).abs() < 0.001, "{j2}");
    assert_eq!(side["results"]["name"], "J2");
}

#[test]
fn tune_marginal_first_coupling() {
    let dir = TempDir::new().unwrap();
    ok(&["tune", "j1-marginal", "--preset", "FigS2b"], dir.path());
    let side = sidecar(dir.path(), "FigS2b", "tune");
    let j1 = side["results"]["value_mhz"].as_f64().unwrap();
    assert!((j1 - 3.017).abs() < 0.03, "{j1}");
}

#[test]
fn tune_constant_gain_is_closed_form() {
    let dir = TempDir::new().unwrap();
    ok(&["tune", "j2", "--preset", "Fig1-inset", "--bracket", "0.3:3", "--tol", "1e-12"], dir.path());
    let side = sidecar(dir.path(), "Fig1-inset", "tune");
    let j2 = side["results"]["value_mhz"].as_f64().unwrap();
    assert!((j2 - (0.2f64 * 5.0).sqrt()).abs() < 1e-10, "{j2}");
}

#[test]
fn noise_report() {
    let dir = TempDir::new().unwrap();
    ok(&["noise", "--preset", "Fig1b-noise"], dir.path());
    let side = sidecar(dir.path(), "Fig1b-noise", "noise");
    let report = &side["results"]["report"];
    let value = report["selected"].as_f64().unwrap();
    assert!((value - 3.6e-2).abs() < 0.15 * 3.6e-2, "{value}");
    let index = report["selected_index"].as_u64().unwrap() as usize;
    let lambda = &report["eigenvalues_mhz"][index];
    let modulus = lambda[0].as_f64().unwrap().hypot(lambda[1].as_f64().unwrap());
    assert!((modulus - 19.97).abs() < 0.01 * 19.97, "{modulus}");
    let floor = report["floor_power_w"].as_f64().unwrap();
    assert!((floor - 1.28e-19).abs() < 0.01 * 1.28e-19);
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad_key = preset_text("Fig4").replace("kappa_ex_mhz = 10.0", "kappa_ex_mhz = 10.0\nkappa_ex = 10.0");
    let path = write_config(dir.path(), "bad.toml", &bad_key);
    assert_eq!(code(&run(&["spectrum", "--config", path.to_str().unwrap()], dir.path())), 2);

    let cases: &[&[&str]] = &[
        &["spectrum", "--preset", "NoSuchFigure"],
        &["spectrum"],
        &["spectrum", "--preset", "Fig4", "--x-range", "1:-1"],
        &["spectrum", "--preset", "Fig4", "--points", "0"],
        &["stability-map", "--preset", "Fig4", "--grid", "0:1"],
        &["stability-map", "--preset", "Fig4", "--grid", "1:0:4"],
        &["stability-map", "--preset", "Fig4", "--grid", "0:1:4"],
        &["tune", "j2", "--preset", "Fig4", "--bracket", "0:1"],
        &["evolve", "--preset", "Fig4", "--t-end", "-1"],
        &["spectrum", "--preset", "Fig4", "--config", "x.toml"],
    ];
    for args in cases {
        let o = run(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn unstable_scenario_exits_three_with_threshold() {
    let dir = TempDir::new().unwrap();
    let text = preset_text("Fig4").replace("couplings_mhz = [1.0, 0.6]", "couplings_mhz = [1.0, 0.2]");
    let path = write_config(dir.path(), "unstable.toml", &text);
    let o = run(&["spectrum", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 3);
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("stability threshold 0.244949"), "{stderr}");

    let o = run(&["tune", "j2", "--preset", "Fig4", "--bracket", "0.01:0.3"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn numerical_failures_exit_four() {
    let dir = TempDir::new().unwrap();
    let o = run(&["tune", "j1-marginal", "--preset", "FigS2b", "--bracket", "5:10"], dir.path());
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["tune", "j2", "--preset", "Fig1-inset", "--bracket", "1.5:3"], dir.path());
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        for args in [
            &["spectrum", "--preset", "Fig4", "--svg"][..],
            &["stability-map", "--preset", "FigS2a"][..],
            &["evolve", "--preset", "Fig1b"][..],
        ] {
            let o = bin()
                .args(args)
                .arg("--out")
                .arg(dir.path())
                .env("CAVITY_TRIO_THREADS", threads)
                .output()
                .unwrap();
            assert_eq!(code(&o), 0);
        }
    }
    for file in [
        "Fig4-spectrum.csv",
        "Fig4-spectrum.json",
        "Fig4-spectrum.svg",
        "FigS2a-stability-map.csv",
        "FigS2a-stability-map.json",
        "Fig1b-evolve.csv",
        "Fig1b-evolve.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn thread_variable_is_validated() {
    let dir = TempDir::new().unwrap();
    let o = bin()
        .args(["spectrum", "--preset", "Fig4", "--out"])
        .arg(dir.path())
        .env("CAVITY_TRIO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn lab_frame_eigenvalues() {
    let dir = TempDir::new().unwrap();
    let text = preset_text("Fig1-inset").replace("omega_mhz = 0.0", "omega_mhz = 100.0");
    let path = write_config(dir.path(), "shifted.toml", &text);
    let path = path.to_str().unwrap();
    ok(&["spectrum", "--config", path, "--points", "3"], dir.path());
    let rot = sidecar(dir.path(), "Fig1-inset", "spectrum")["results"]["stability"].clone();
    ok(&["spectrum", "--config", path, "--points", "3", "--frame", "lab"], dir.path());
    let lab = sidecar(dir.path(), "Fig1-inset", "spectrum")["results"]["stability"].clone();
    assert_eq!(lab["frame"], "lab");
    assert_eq!(rot["regime"], lab["regime"]);
    let re = |v: &Value| v["max_re_lambda_mhz"].as_f64().unwrap();
    assert!((re(&rot) - re(&lab)).abs() < 1e-9);
    let im = |v: &Value| v["eigenvalues_mhz"][0][1].as_f64().unwrap();
    assert!((im(&rot) - im(&lab) - 100.0).abs() < 1e-9);
}

#[test]
fn presets_listing() {
    let o = bin().arg("presets").output().unwrap();
    let names = String::from_utf8(o.stdout).unwrap();
    for name in [
        "Fig1-inset", "Fig1b", "Fig2a", "Fig2b", "Fig3a", "Fig3b", "Fig4", "FigS1a", "FigS1b", "FigS1c", "FigS2a",
        "FigS2b", "AppendixA-tuning",
    ] {
        assert!(names.lines().any(|l| l == name), "{name}");
    }
    assert_eq!(code(&bin().args(["presets", "Fig9"]).output().unwrap()), 2);
}

#[test]
fn every_preset_runs_quickly() {
    let dir = TempDir::new().unwrap();
    let o = bin().arg("presets").output().unwrap();
    for name in String::from_utf8(o.stdout).unwrap().lines() {
        let start = Instant::now();
        for command in ["spectrum", "evolve", "stability-map", "noise"] {
            ok(&[command, "--preset", name, "--svg"], dir.path());
        }
        assert!(start.elapsed() < Duration::from_secs(60), "{name}: {:?}", start.elapsed());
    }
}
