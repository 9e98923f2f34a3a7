use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dsab_core::enumeration::{pareto_filter, read_front_csv};
use dsab_core::metrics::ObjectiveSet;
use dsab_core::study::StudyConfig;

fn dsab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dsab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = dsab(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn study(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("study.toml");
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_reports_both_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let stdout = ok(&["simulate", "-o", s(&out), "--dampers", "14-15"]);
    assert_eq!(stdout.lines().count(), 2);
    let csv = fs::read_to_string(out.join("simulate.csv")).unwrap();
    assert!(csv.starts_with("t,x_left[none],x_right[none],x_left[14-15],x_right[14-15]\n"));
    assert_eq!(csv.lines().count(), 1 + 1560);
    let peaks: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("peaks.json")).unwrap()).unwrap();
    let bare = peaks[0]["top_left"].as_f64().unwrap();
    let damped = peaks[1]["top_left"].as_f64().unwrap();
    assert!(damped < bare);
}

#[test]
fn zero_amplitude_record_gives_zero_history() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = study(tmp.path(), "[ground_motion]\nscale = 0.0\n[simulate]\nconfiguration = [2, 3]\n");
    let out = tmp.path().join("o");
    ok(&["simulate", "-c", s(&cfg), "-o", s(&out)]);
    let csv = fs::read_to_string(out.join("simulate.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0), "{line}");
    }
}

#[test]
fn enumerate_writes_full_scatter_and_a_stable_front() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = study(tmp.path(), "[objectives]\nset = \"disp-shear\"\nn_dampers = 3\n");
    let out = tmp.path().join("o");
    let stdout = ok(&["enumerate", "-c", s(&cfg), "-o", s(&out)]);
    assert!(stdout.starts_with("560 configurations"), "{stdout}");
    let scatter = fs::read_to_string(out.join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 561);
    let front = read_front_csv(BufReader::new(fs::File::open(out.join("front.csv")).unwrap()), ObjectiveSet::DispShear).unwrap();
    let items = front
        .points
        .iter()
        .flat_map(|p| p.payloads.iter().map(move |c| (p.objectives, c.clone())));
    assert_eq!(pareto_filter(items).unwrap(), front);
    let timing: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("timing.json")).unwrap()).unwrap();
    assert_eq!(timing["configurations"], 560);
    assert!(timing["mean_ms_per_evaluation"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = study(tmp.path(), "[damper]\nc_dd = 3.0\n");
    let err = fails(&["simulate", "-c", s(&cfg), "-o", s(&tmp.path().join("o"))]);
    assert!(err.contains("c_dd") && err.contains("study.toml"), "{err}");
    let err = fails(&["simulate", "-c", s(&tmp.path().join("missing.toml"))]);
    assert!(err.contains("missing.toml"), "{err}");
}

#[test]
fn unknown_algorithm_is_rejected() {
    let err = fails(&["optimize", "--algorithm", "spea2"]);
    assert!(err.contains("spea2"), "{err}");
}

#[test]
fn missing_oracle_without_enumeration_explains_itself() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = study(tmp.path(), "[benchmark]\nenumerate = false\n");
    let err = fails(&["benchmark", "-c", s(&cfg), "-o", s(&tmp.path().join("o"))]);
    assert!(err.contains("oracle") && err.contains("enumerate"), "{err}");
}

#[test]
fn cached_oracle_gives_the_same_table() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "[objectives]\nset = \"drift-acc\"\n[moea]\npopulation = 10\niterations = 10\n[benchmark]\nruns = 3\n";
    let cfg = study(tmp.path(), base);
    let fresh = tmp.path().join("fresh");
    ok(&["benchmark", "-c", s(&cfg), "-o", s(&fresh)]);

    let cached_cfg = tmp.path().join("cached.toml");
    fs::write(&cached_cfg, format!("{base}oracle = \"fresh/front.csv\"\nenumerate = false\n")).unwrap();
    let cached = tmp.path().join("cached");
    ok(&["benchmark", "-c", s(&cached_cfg), "-o", s(&cached)]);
    assert_eq!(
        fs::read(fresh.join("benchmark.csv")).unwrap(),
        fs::read(cached.join("benchmark.csv")).unwrap()
    );
    let table = fs::read_to_string(fresh.join("benchmark.csv")).unwrap();
    let exhaustive = table.lines().last().unwrap();
    assert!(exhaustive.starts_with("exhaustive,"));
    assert!(exhaustive.split(',').skip(6).all(|sr| sr == "3/3"), "{exhaustive}");

    // an oracle computed for another objective set is refused
    let wrong = tmp.path().join("wrong.toml");
    fs::write(
        &wrong,
        "[objectives]\nset = \"disp-shear\"\n[benchmark]\noracle = \"fresh/front.csv\"\n",
    )
    .unwrap();
    let err = fails(&["benchmark", "-c", s(&wrong), "-o", s(&tmp.path().join("w"))]);
    assert!(err.contains("does not belong"), "{err}");
}

#[test]
fn effective_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = study(
        tmp.path(),
        "[building]\nn_floors = 4\n[moea]\nalgorithm = \"mopso1\"\npopulation = 6\niterations = 3\n",
    );
    let out = tmp.path().join("o");
    ok(&["optimize", "-c", s(&cfg), "-o", s(&out), "--seed", "11", "--emit-effective-config"]);
    let dumped = StudyConfig::load(&out.join("effective-config.toml")).unwrap();
    let mut expected = StudyConfig::load(&cfg).unwrap();
    expected.moea.seed = 11;
    expected.benchmark.base_seed = 11;
    assert_eq!(dumped, expected);
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("runs/mopso1-seed11.json")).unwrap()).unwrap();
    assert_eq!(run["n_fe"], 18);
    assert_eq!(run["seed"], 11);
}
