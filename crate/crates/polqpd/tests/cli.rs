use std::path::Path;
use std::process::{Command, Output};

use polqpd::format::{read_tomogram, tomogram_text};
use polqpd_core::measure::{
    count_pmf, sample_setting, CountSource, SamplingPlan, WaveplateSetting,
};
use polqpd_core::states::LinearPolarizedState;

fn polqpd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polqpd"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .env_remove("POLQPD_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exact_single_photon_tomogram() {
    let dir = tempfile::tempdir().unwrap();
    let o = polqpd(
        &[
            "simulate",
            "--state",
            "fock:1",
            "--eta",
            "0.6",
            "--settings",
            "single:1.5707963267948966,0",
        ],
        dir.path(),
    );
    ok(&o);
    let t = read_tomogram(&dir.path().join("tomogram_000.csv")).unwrap();
    let p = t.pmf().unwrap();
    assert_eq!((p.get(-1), p.get(0), p.get(1)), (0.3, 0.4, 0.3));
    let side = json(&dir.path().join("tomogram_000.json"));
    assert_eq!(side["config"]["detector"]["eta"], 0.6);
    assert_eq!(side["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\n[detector]\neta = 0.5\nefficiency = 0.2\n").unwrap();
    let o = polqpd(&["pqpd", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("efficiency"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "command = \"pqpd\"\n[pqpd]\nsurface = \"sqz0\"\neps2 = 0.5\n[grid]\ncount = 21\n",
    )
    .unwrap();
    let o = polqpd(
        &["pqpd", "--config", cfg.to_str().unwrap(), "--r", "0.3"],
        dir.path(),
    );
    ok(&o);
    let side = json(&dir.path().join("pqpd.json"));
    assert_eq!(side["config"]["pqpd"]["r"], 0.3);
    assert_eq!(side["config"]["pqpd"]["eps2"], 0.5);
    assert_eq!(side["results"]["grid"]["shape"][0], 21);
    // a config written for another command is rejected
    let o = polqpd(
        &["negativity", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sampling_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = |seed: &'static str| {
        vec![
            "simulate",
            "--state",
            "vacuum",
            "--alpha0",
            "3",
            "--eta",
            "0.8",
            "--sigma",
            "0.5",
            "--shots",
            "5000",
            "--settings",
            "phi-scan:3",
            "--seed",
            seed,
        ]
    };
    ok(&polqpd(&args("11"), a.path()));
    ok(&polqpd(&args("11"), b.path()));
    ok(&polqpd(&args("12"), c.path()));
    for i in 0..3 {
        let f = format!("tomogram_{i:03}.csv");
        let x = std::fs::read(a.path().join(&f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(&f)).unwrap());
        assert_ne!(x, std::fs::read(c.path().join(&f)).unwrap());
    }
}

#[test]
fn negativity_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&polqpd(
        &["negativity", "--sweep-r", "0", "--sweep-eps2", "0,1.2"],
        dir.path(),
    ));
    let side = json(&dir.path().join("negativity.json"));
    let entries = side["results"]["entries"].as_array().unwrap();
    let v = entries[0]["v_minus"].as_f64().unwrap();
    assert!((v - 0.21306).abs() < 1e-5, "{v}");
    assert_eq!(entries[1]["v_minus"].as_f64().unwrap(), 0.0);
    let csv = std::fs::read_to_string(dir.path().join("negativity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn tomogram_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = WaveplateSetting::new(1.1, 2.3).unwrap();
    let src = CountSource::Linear(LinearPolarizedState::poissonian(2.0, None).unwrap());
    let exact = count_pmf(&src, s, 0.7, None).unwrap();
    let sampled = sample_setting(&src, s, 4, SamplingPlan::new(300, 0.7, 1.3, 9).unwrap()).unwrap();
    for (name, t) in [("exact.csv", exact), ("sampled.csv", sampled)] {
        let path = dir.path().join(name);
        std::fs::write(&path, tomogram_text(&t)).unwrap();
        assert_eq!(read_tomogram(&path).unwrap(), t);
    }
}

#[test]
fn reconstruct_from_files_matches_in_memory() {
    let sim = tempfile::tempdir().unwrap();
    let common = [
        "--state",
        "vacuum",
        "--alpha0",
        "4",
        "--eta",
        "0.9",
        "--sigma",
        "1",
        "--shots",
        "2000",
        "--settings",
        "phi-scan:12",
        "--seed",
        "3",
        "--fourier-n",
        "64",
        "--du",
        "0.04",
        "--lambda-max",
        "1.2",
        "--lambda-count",
        "64",
    ];
    let mut args = vec!["simulate"];
    args.extend(common);
    ok(&polqpd(&args, sim.path()));

    let direct = tempfile::tempdir().unwrap();
    let mut args = vec!["reconstruct"];
    args.extend(common);
    ok(&polqpd(&args, direct.path()));

    let from_files = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["reconstruct".into()];
    args.extend(common.iter().map(|s| s.to_string()));
    for i in 0..12 {
        args.push("--input".into());
        args.push(
            sim.path()
                .join(format!("tomogram_{i:03}.csv"))
                .display()
                .to_string(),
        );
    }
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    ok(&polqpd(&args, from_files.path()));

    let a = std::fs::read(direct.path().join("reconstruct.csv")).unwrap();
    assert_eq!(
        a,
        std::fs::read(from_files.path().join("reconstruct.csv")).unwrap()
    );
    let side = json(&direct.path().join("reconstruct.json"));
    let mass = side["results"]["grid"]["mass"].as_f64().unwrap();
    assert!((mass - 1.0).abs() < 1e-9, "{mass}");
    assert!(
        side["results"]["grid"]["diagnostics"]["shot_noise_bound"]
            .as_f64()
            .unwrap()
            > 0.0
    );
}

#[test]
fn exit_codes_for_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = polqpd(
        &[
            "reconstruct",
            "--state",
            "vacuum",
            "--alpha0",
            "4",
            "--settings",
            "phi-scan:1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gap"));
    let o = polqpd(
        &[
            "charfn",
            "--function",
            "highlighted-exact",
            "--state",
            "squeezed-fock1:0.5",
            "--alpha0",
            "2",
            "--grid-count",
            "3",
            "--grid-min",
            "-1",
            "--grid-max",
            "1",
            "--tolerance",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let o = polqpd(&["pqpd", "--eta", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = polqpd(&["pqpd", "--state", "laser:1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_polqpd"))
        .args(["negativity", "--sweep-r", "0", "--sweep-eps2", "0.5"])
        .env("POLQPD_OUTPUT_DIR", dir.path())
        .current_dir(dir.path())
        .output()
        .unwrap();
    ok(&o);
    assert!(dir.path().join("negativity.csv").exists());
}

#[test]
fn figures_write_every_recipe() {
    let dir = tempfile::tempdir().unwrap();
    ok(&polqpd(&["figures"], dir.path()));
    for f in [
        "fig2/w1_profile.csv",
        "fig2/w23_fock1.csv",
        "fig3/fock1_000.csv",
        "fig3/coherent_000.csv",
        "fig4/sqz1_er2_eps2_0.7.csv",
        "fig5/negativity.csv",
    ] {
        let p = dir.path().join(f);
        assert!(p.exists(), "{f}");
        assert!(p.with_extension("json").exists(), "{f} sidecar");
    }
    let side = json(&dir.path().join("fig4/sqz1_er1_eps2_0.7.json"));
    let v = side["results"]["negativity_volume"].as_f64().unwrap();
    assert!((v - 0.012598).abs() < 1e-5);
}
