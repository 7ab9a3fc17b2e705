mod common;

use std::process::Command;

use rfsplat::formats::{parse_scene, write_dataset, Grid};
use rfsplat::render::RcsConfig;
use rfsplat_cli::commands::{fit_command, map, rcs, FitArgs, MapArgs, PatternArg, RcsArgs};
use rfsplat_oracle::{generate_observations, Protocol};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rfsplat"))
}

fn rcs_args(scene: std::path::PathBuf, out: std::path::PathBuf) -> RcsArgs {
    RcsArgs {
        scene,
        range: 3.0,
        freq: Some(2.5e9),
        band: None,
        step_deg: 1.0,
        pattern: PatternArg::Horn,
        exact: false,
        out,
    }
}

#[test]
fn rcs_writes_one_row_per_degree() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_plate(dir.path());
    let out = dir.path().join("rcs.csv");
    rcs(&rcs_args(scene, out.clone())).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "angle_deg,frequency_hz,rssi_db");
    assert_eq!(rows.len(), 361);
}

#[test]
fn rcs_band_gives_angle_times_frequency_rows() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_plate(dir.path());
    let out = dir.path().join("band.csv");
    let args = RcsArgs {
        freq: None,
        band: Some("2e9:3e9:10".into()),
        ..rcs_args(scene, out.clone())
    };
    rcs(&args).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3601);
}

#[test]
fn missing_scene_and_bad_range_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "rcs",
            "--scene",
            "/nonexistent/scene.json",
            "--range",
            "3",
            "--freq",
            "2e9",
            "--out",
        ])
        .arg(dir.path().join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let scene = common::write_plate(dir.path());
    let status = bin()
        .args(["rcs", "--range=-1", "--freq", "2e9", "--scene"])
        .arg(&scene)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

fn map_args(scene: std::path::PathBuf, out: std::path::PathBuf) -> MapArgs {
    MapArgs {
        scene,
        tx: "ap".into(),
        grid: "64x64".into(),
        freq: None,
        z: None,
        threshold_db: -90.0,
        exact: false,
        out,
    }
}

#[test]
fn map_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_plate(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    map(&map_args(scene.clone(), a.clone())).unwrap();
    map(&map_args(scene, b.clone())).unwrap();
    for ext in ["csv", "grid", "json"] {
        assert_eq!(
            std::fs::read(a.with_extension(ext)).unwrap(),
            std::fs::read(b.with_extension(ext)).unwrap(),
            "{ext} differs"
        );
    }
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 4097);
    let grid = Grid::read_from(std::fs::read(a.with_extension("grid")).unwrap().as_slice()).unwrap();
    assert_eq!((grid.height, grid.width), (64, 64));
    assert_eq!(grid.channel("rssi_db").unwrap().len(), 4096);
}

#[test]
fn map_with_tx_outside_bounds_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_plate(dir.path());
    let status = bin()
        .args(["map", "--tx", "40,0,0", "--grid", "8x8", "--scene"])
        .arg(&scene)
        .arg("--out")
        .arg(dir.path().join("m.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

fn dataset(dir: &std::path::Path, scene_id: &str) -> std::path::PathBuf {
    let doc = common::plate_doc();
    let protocol = Protocol::MonostaticSweep {
        config: RcsConfig::new(2.0, (-20..=20).step_by(5).map(f64::from).collect()),
        grid: doc.grid.clone(),
    };
    let obs = generate_observations(
        &doc.scene,
        &protocol,
        &rfsplat::render::RenderOptions::default(),
        0,
        0.0,
        scene_id,
    )
    .unwrap();
    let path = dir.join("data.json");
    write_dataset(&path, &obs).unwrap();
    path
}

fn fit_args(scene: std::path::PathBuf, data: std::path::PathBuf, out: std::path::PathBuf) -> FitArgs {
    FitArgs {
        scene,
        data,
        iters: 40,
        seed: 3,
        out,
        wideband: false,
        full_network: false,
        exact: false,
        bank_out: None,
    }
}

#[test]
fn fit_is_reproducible_and_saves_the_bank() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_plate(dir.path());
    let data = dataset(dir.path(), "plate");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let bank = dir.path().join("fitted.json");
    fit_command(&FitArgs {
        bank_out: Some(bank.clone()),
        ..fit_args(scene.clone(), data.clone(), a.clone())
    })
    .unwrap();
    fit_command(&fit_args(scene, data, b.clone())).unwrap();
    let ra = std::fs::read(&a).unwrap();
    assert_eq!(ra, std::fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert!(report["final_loss"].as_f64().unwrap() < report["initial_loss"].as_f64().unwrap());
    assert_eq!(report["attributes"].as_array().unwrap().len(), 100);
    let fitted = parse_scene(&std::fs::read_to_string(bank).unwrap()).unwrap();
    assert_eq!(fitted.scene.len(), 100);
}

#[test]
fn fit_with_wrong_scene_id_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_plate(dir.path());
    let data = dataset(dir.path(), "another-scene");
    let status = bin()
        .args(["fit", "--iters", "5", "--scene"])
        .arg(&scene)
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(dir.path().join("r.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn wideband_fit_reports_network() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_plate(dir.path());
    let data = dataset(dir.path(), "plate");
    let out = dir.path().join("w.json");
    fit_command(&FitArgs {
        wideband: true,
        iters: 5,
        ..fit_args(scene, data, out.clone())
    })
    .unwrap();
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert!(report["wideband"]["final_loss"].is_number());
}

#[test]
fn oracle_checks_and_unknown_name() {
    let out = bin()
        .args(["oracle", "--check", "cross-section", "--cases", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cross-section: PASS"), "{text}");
    assert_eq!(text.lines().count(), 5);
    let out = bin()
        .args(["oracle", "--check", "gradients", "--cases", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let status = bin().args(["oracle", "--check", "everything"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
