//! Acceptance checks: one PASS/FAIL line per criterion. Set
//! `RFSPLAT_ACCEPTANCE=2,7` to run a subset.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rfsplat::bvh::{build_bvh, Bvh};
use rfsplat::formats::{parse_scene, scene_to_string, AntennaRole, NamedAntenna, SceneDocument};
use rfsplat::inverse::{
    fam_apply, fit, fit_model, fit_wideband, initial_bank, AttributeBank, AttributeView, FamConfig, FamNetwork,
    FitConfig, InitStrategy, LearnableMask, ObservationModel, WidebandConfig,
};
use rfsplat::render::{
    render_rcs_sweep, LosConfig, LosVisibility, MapSpec, Propagation, RadarPattern, RcsConfig, RenderOptions,
};
use rfsplat::{
    power_to_db, Antenna, FrequencyGrid, Measurement, Observation, ObservationSet, RfAttributes, RfGaussian, Scene,
    Split, Vec3,
};
use rfsplat_cli::commands::{fit_command, map, rcs, FitArgs, MapArgs, PatternArg, RcsArgs};
use rfsplat_oracle::{
    blend_suite, classroom_tx_positions, cross_section_suite, generate_observations, generate_scene, gradient_suite,
    metal, visibility_suite, Protocol, SyntheticSceneSpec, Template,
};

type Outcome = Result<(bool, String), String>;
type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("RFSPLAT_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [Criterion; 11] = [
        (1, "gradients match finite differences", gradients),
        (2, "inverse recovery on two-material plate", inverse_recovery),
        (3, "specular lobe narrows with roughness", specular_lobe),
        (4, "free-space scaling per distance doubling", free_space),
        (5, "projected cross-section", cross_section),
        (6, "bvh visibility matches brute force", visibility),
        (7, "renderer matches oracle", renderer_vs_oracle),
        (8, "los/nlos split lowers map error", los_ablation),
        (9, "distance-set generalization", distance_set),
        (10, "frequency-aware modulation", fam),
        (11, "determinism and lossless scene files", determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn measured_db(set: &ObservationSet) -> Vec<f64> {
    set.records
        .iter()
        .map(|r| match r.measurement {
            Measurement::RssiDb(db) => db,
            Measurement::Complex(c) => power_to_db(c.norm_sqr()),
        })
        .collect()
}

fn predicted_db(model: &ObservationModel, attrs: &[RfAttributes]) -> Vec<f64> {
    model
        .predictions(AttributeView::Shared(attrs))
        .iter()
        .map(|s| power_to_db(s.norm_sqr()))
        .collect()
}

fn subset(set: &ObservationSet, split: Split) -> ObservationSet {
    let mut out = ObservationSet::new(set.grid.clone(), set.scene_id.clone());
    out.records = set.records.iter().filter(|r| r.split == split).cloned().collect();
    out
}

/// Dataset MAE (dB) of `attrs` against the records of `set`.
fn set_mae(
    scene: &Scene,
    bvh: &Bvh,
    set: &ObservationSet,
    attrs: &[RfAttributes],
    options: &RenderOptions,
) -> Result<f64, String> {
    let model = ObservationModel::build(scene, bvh, set, options).map_err(err)?;
    Ok(mae(&predicted_db(&model, attrs), &measured_db(set)))
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let report = gradient_suite(1, 20).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        report.passed && secs < 60.0,
        format!("{}; {secs:.1} s (limit 60 s)", report.summary),
    ))
}

fn two_material_plate() -> Result<Scene, String> {
    let second = RfAttributes {
        alpha: 0.9,
        roughness: 3.0,
        gamma_mag: 0.4,
        gamma_phase: 0.5,
    };
    generate_scene(&SyntheticSceneSpec::new(
        Template::TwoMaterialPlate {
            nx: 20,
            ny: 10,
            width: 1.0,
            height: 0.5,
        },
        vec![metal(), second],
        0,
    ))
    .map_err(err)
}

/// 8 transmitters by 8 receivers spread over the half space in front of
/// the plate.
fn plate_links() -> Vec<(Antenna, Antenna)> {
    let ring = |radius: f64, k: usize, phase: f64| {
        (0..k)
            .map(|i| {
                let a = phase + 2.0 * PI * i as f64 / k as f64;
                Vec3::new(radius, 0.6 * a.cos(), 0.36 * a.sin())
            })
            .collect::<Vec<_>>()
    };
    let txs = ring(1.2, 8, 0.0);
    let rxs = ring(0.9, 8, PI / 8.0);
    txs.iter()
        .flat_map(|t| rxs.iter().map(move |r| (Antenna::omni(*t), Antenna::omni(*r))))
        .collect()
}

fn inverse_recovery() -> Outcome {
    let start = Instant::now();
    let scene = two_material_plate()?;
    let bvh = build_bvh(&scene);
    let options = RenderOptions::exact();
    // A 16 GHz span resolves path differences of about 1 cm, finer than the
    // 5 cm Gaussian spacing; 32 samples keep the unambiguous range above
    // the plate's extent.
    let grid = FrequencyGrid::linspace(2.0e9, 18.0e9, 32).map_err(err)?;
    let protocol = Protocol::Links {
        pairs: plate_links(),
        grid,
    };
    let obs = generate_observations(&scene, &protocol, &options, 0, 0.0, "two-material").map_err(err)?;
    let config = FitConfig {
        iterations: 2000,
        lr_start: 0.05,
        lr_end: 0.0025,
        seed: 11,
        init: InitStrategy::Perturbed { fraction: 0.3 },
        learnable: LearnableMask {
            alpha: false,
            ..LearnableMask::all()
        },
        render: options,
        ..FitConfig::default()
    };
    let model = ObservationModel::build(&scene, &bvh, &obs, &options).map_err(err)?;
    let bank = initial_bank(&scene, config.init, config.learnable, config.seed);
    let (report, _) = fit_model(&model, bank, &config).map_err(err)?;
    let shares = model.contribution_shares(&scene.attributes());
    let mut checked = 0;
    let (mut worst_gamma, mut worst_r): (f64, f64) = (0.0, 0.0);
    for ((g, fitted), share) in scene.gaussians().iter().zip(&report.attributes).zip(&shares) {
        if *share <= 1e-3 {
            continue;
        }
        checked += 1;
        worst_gamma = worst_gamma.max((fitted.gamma_mag - g.attributes.gamma_mag).abs());
        worst_r = worst_r.max((fitted.roughness / g.attributes.roughness - 1.0).abs());
    }
    let drop = report.loss_reduction_db();
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_gamma <= 0.05 && worst_r <= 0.10 && drop >= 30.0 && report.loss_trace.len() <= 2001 && secs < 600.0;
    Ok((
        ok,
        format!(
            "{checked} gaussians above weight 1e-3, max |Γ| err {worst_gamma:.4} (tol 0.05), max R rel err {:.2}% (tol 10%), \
             loss drop {drop:.1} dB (need 30) in {} iterations",
            100.0 * worst_r,
            report.loss_trace.len()
        ),
    ))
}

fn plate_sweep(
    scene: &Scene,
    options: &RenderOptions,
    range: f64,
    frequency: f64,
    step: f64,
) -> Result<(Vec<f64>, Vec<f64>), String> {
    let n = (120.0 / step).round() as usize;
    let angles: Vec<f64> = (0..=n).map(|i| -60.0 + i as f64 * step).collect();
    let grid = FrequencyGrid::single(frequency).map_err(err)?;
    let points = render_rcs_sweep(
        scene,
        &build_bvh(scene),
        &RcsConfig::new(range, angles.clone()),
        &grid,
        options,
    )
    .map_err(err)?;
    Ok((angles, points.iter().map(|p| p.rssi_db).collect()))
}

/// Peak angle and half-power width, interpolating the -3 dB crossings.
fn lobe(angles: &[f64], db: &[f64]) -> (f64, f64) {
    let peak = (0..db.len()).fold(0, |b, i| if db[i] > db[b] { i } else { b });
    let level = db[peak] - 10.0 * 2f64.log10();
    let crossing = |range: &mut dyn Iterator<Item = usize>, toward: isize| -> f64 {
        for i in range {
            let j = (i as isize + toward) as usize;
            if db[j] < level {
                let t = (db[i] - level) / (db[i] - db[j]);
                return angles[i] + t * (angles[j] - angles[i]);
            }
        }
        if toward < 0 {
            angles[0]
        } else {
            angles[angles.len() - 1]
        }
    };
    let left = crossing(&mut (1..=peak).rev(), -1);
    let right = crossing(&mut (peak..db.len() - 1), 1);
    (angles[peak], right - left)
}

fn specular_lobe() -> Outcome {
    let mut peaks = Vec::new();
    let mut widths = Vec::new();
    for r in [1.0, 5.0, 50.0] {
        let material = RfAttributes {
            roughness: r,
            ..metal()
        };
        // A 0.3 m plate keeps the 3 m radar in the far field at 2.4 GHz.
        let spec = SyntheticSceneSpec::new(
            Template::Plate {
                nx: 6,
                ny: 6,
                width: 0.3,
                height: 0.3,
            },
            vec![material],
            0,
        );
        let scene = generate_scene(&spec).map_err(err)?;
        let (angles, db) = plate_sweep(&scene, &RenderOptions::default(), 3.0, 2.4e9, 1.0)?;
        let (peak, width) = lobe(&angles, &db);
        peaks.push(peak);
        widths.push(width);
    }
    let ok = peaks.iter().all(|p| p.abs() <= 1.0) && widths.windows(2).all(|w| w[1] < w[0]);
    Ok((
        ok,
        format!(
            "R = 1, 5, 50: peaks {:?} deg, half-power widths {:.2}, {:.2}, {:.2} deg",
            peaks, widths[0], widths[1], widths[2]
        ),
    ))
}

fn single_gaussian_slopes(propagation: Propagation) -> Result<Vec<f64>, String> {
    let g = RfGaussian::new(Vec3::zeros(), Vec3::new(0.01, 0.1, 0.1), Vec3::x(), metal());
    let scene = Scene::from_gaussians(vec![g]);
    let bvh = build_bvh(&scene);
    let options = RenderOptions {
        propagation,
        ..RenderOptions::default()
    };
    let grid = FrequencyGrid::single(2.4e9).map_err(err)?;
    let db = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&d| {
            let config = RcsConfig::new(d, vec![0.0]);
            render_rcs_sweep(&scene, &bvh, &config, &grid, &options).map(|p| p[0].rssi_db)
        })
        .collect::<rfsplat::Result<Vec<_>>>()
        .map_err(err)?;
    Ok(db.windows(2).map(|w| w[0] - w[1]).collect())
}

fn free_space() -> Outcome {
    let within = |s: &[f64]| s.iter().all(|d| (d - 12.04).abs() <= 0.1);
    let on = single_gaussian_slopes(Propagation::Full)?;
    let off = single_gaussian_slopes(Propagation::ScatteringOnly)?;
    let ok = within(&on) && !within(&off);
    Ok((
        ok,
        format!(
            "drop per doubling {:.3?} dB (need 12.04 ± 0.1); path loss disabled {:.3?} dB fails the check as required",
            on, off
        ),
    ))
}

fn cross_section() -> Outcome {
    let r = cross_section_suite(5, 100, 1_000_000).map_err(err)?;
    Ok((r.passed, r.summary))
}

fn visibility() -> Outcome {
    let r = visibility_suite(6, 50, 1000, 500).map_err(err)?;
    Ok((r.passed, r.summary))
}

fn renderer_vs_oracle() -> Outcome {
    let exact = blend_suite(7, 50).map_err(err)?;
    let scene = generate_scene(&SyntheticSceneSpec::plate(10, metal())).map_err(err)?;
    let (_, fov_db) = plate_sweep(&scene, &RenderOptions::default(), 3.0, 2.4e9, 1.0)?;
    let (_, exact_db) = plate_sweep(&scene, &RenderOptions::exact(), 3.0, 2.4e9, 1.0)?;
    let amp = |db: f64| 10f64.powf(db / 20.0);
    let peak = exact_db.iter().copied().fold(f64::MIN, f64::max);
    let worst_peak = (amp(fov_db[60]) / amp(exact_db[60]) - 1.0).abs();
    let worst_all = fov_db
        .iter()
        .zip(&exact_db)
        .map(|(f, e)| (amp(*f) - amp(*e)).abs() / amp(peak))
        .fold(0.0, f64::max);
    let fov_ok = worst_all <= 0.03;
    Ok((
        exact.passed && fov_ok,
        format!(
            "exact mode: {}; 1 deg grid vs exact on plate sweep: max amplitude error {:.2}% of peak, {:.2}% at specular (tol 3%)",
            exact.summary,
            100.0 * worst_all,
            100.0 * worst_peak
        ),
    ))
}

const ROOM: [f64; 3] = [8.0, 6.0, 3.0];

fn classroom() -> Result<Scene, String> {
    let wall = RfAttributes {
        alpha: 0.8,
        roughness: 4.0,
        gamma_mag: 0.5,
        gamma_phase: 2.0,
    };
    let floor = RfAttributes {
        alpha: 0.9,
        roughness: 2.0,
        gamma_mag: 0.6,
        gamma_phase: -1.0,
    };
    let desk = RfAttributes {
        alpha: 0.95,
        roughness: 6.0,
        gamma_mag: 0.7,
        gamma_phase: 0.3,
    };
    generate_scene(&SyntheticSceneSpec::new(
        Template::Classroom { count: 400, size: ROOM },
        vec![wall, floor, desk],
        0,
    ))
    .map_err(err)
}

fn los_ablation() -> Outcome {
    let scene = classroom()?;
    let bvh = build_bvh(&scene);
    let los = LosConfig::new(1.0, 1.0);
    let mixed = RenderOptions::exact().with_los(Some(los));
    let forced = RenderOptions::exact().with_los(Some(LosConfig {
        visibility: LosVisibility::Forced(1.0),
        ..los
    }));
    let tx: Vec<Vec3> = classroom_tx_positions(ROOM).into_iter().step_by(7).collect();
    let spec = MapSpec {
        height: 16,
        width: 16,
        x_min: 0.2,
        x_max: ROOM[0] - 0.2,
        y_min: 0.2,
        y_max: ROOM[1] - 0.2,
        z: 0.5,
    };
    let protocol = Protocol::RadioMapGrid {
        tx_positions: tx,
        spec,
        grid: FrequencyGrid::single(2.4e9).map_err(err)?,
        test_fraction: 0.2,
    };
    let truth = generate_observations(&scene, &protocol, &mixed, 8, 0.0, "classroom").map_err(err)?;
    let train = subset(&truth, Split::Train);
    let test = subset(&truth, Split::Test);
    let mut test_mae = Vec::new();
    for options in [mixed, forced] {
        // Both models start from the same perturbed attributes, so the
        // difference in held-out error comes from the visibility model.
        let config = FitConfig {
            iterations: 300,
            lr_start: 0.05,
            seed: 8,
            init: InitStrategy::Perturbed { fraction: 0.3 },
            render: options,
            ..FitConfig::default()
        };
        let (report, _) = fit(&scene, &bvh, &train, &config).map_err(err)?;
        test_mae.push(set_mae(&scene, &bvh, &test, &report.attributes, &options)?);
    }
    let ratio = test_mae[1] / test_mae[0];
    Ok((
        ratio >= 1.2,
        format!(
            "held-out map MAE {:.3} dB with geometric visibility, {:.3} dB with v_vis = 1 (+{:.0}%, need +20%)",
            test_mae[0],
            test_mae[1],
            100.0 * (ratio - 1.0)
        ),
    ))
}

fn distance_set() -> Outcome {
    let scene = generate_scene(&SyntheticSceneSpec::plate(10, metal())).map_err(err)?;
    let bvh = build_bvh(&scene);
    let options = RenderOptions::default();
    let angles: Vec<f64> = (-30..=30).step_by(3).map(f64::from).collect();
    let grid = FrequencyGrid::linspace(2.0e9, 3.0e9, 4).map_err(err)?;
    let truth =
        generate_observations(&scene, &Protocol::distance_set(angles, grid), &options, 9, 0.0, "plate").map_err(err)?;
    let train = subset(&truth, Split::Train);
    let test = subset(&truth, Split::Test);
    let config = FitConfig {
        iterations: 2000,
        render: options,
        ..FitConfig::default()
    };
    let (report, _) = fit(&scene, &bvh, &train, &config).map_err(err)?;
    let train_mae = set_mae(&scene, &bvh, &train, &report.attributes, &options)?;
    let test_mae = set_mae(&scene, &bvh, &test, &report.attributes, &options)?;
    Ok((
        test_mae <= 2.0 * train_mae && test_mae <= 3.0,
        format!("train MAE {train_mae:.4} dB at 2, 2.5, 4, 4.5, 5 m; test MAE {test_mae:.4} dB at 3 m (need <= 2x train and <= 3 dB)"),
    ))
}

fn fam() -> Outcome {
    let (lo, hi) = (2.0e9, 3.0e9);
    let grid = FrequencyGrid::linspace(lo, hi, 10).map_err(err)?;
    let ramp = |f: f64| 0.4 + 0.4 * (f - lo) / (hi - lo);
    let base = generate_scene(&SyntheticSceneSpec::plate(
        4,
        RfAttributes {
            roughness: 4.0,
            ..metal()
        },
    ))
    .map_err(err)?;
    let bvh = build_bvh(&base);
    let options = RenderOptions::exact();
    let angles: Vec<f64> = (-40..=40).step_by(4).map(f64::from).collect();
    let mut obs = ObservationSet::new(grid.clone(), "fam");
    for (fi, &f) in grid.samples().iter().enumerate() {
        let attrs: Vec<RfAttributes> = base
            .attributes()
            .iter()
            .map(|a| RfAttributes {
                gamma_mag: ramp(f),
                ..*a
            })
            .collect();
        let scene = base.with_attributes(&attrs).map_err(err)?;
        let single = FrequencyGrid::single(f).map_err(err)?;
        let points =
            render_rcs_sweep(&scene, &bvh, &RcsConfig::new(1.5, angles.clone()), &single, &options).map_err(err)?;
        for (p, &a) in points.iter().zip(&angles) {
            let radar = RcsConfig::new(1.5, vec![]).radar(a);
            obs.records.push(Observation {
                tx: radar.clone(),
                rx: radar,
                frequency_index: fi,
                measurement: Measurement::RssiDb(p.rssi_db),
                split: Split::Train,
            });
        }
    }
    let mid: Vec<RfAttributes> = base
        .attributes()
        .iter()
        .map(|a| RfAttributes {
            gamma_mag: ramp(0.5 * (lo + hi)),
            ..*a
        })
        .collect();
    let bank = AttributeBank::from_attributes(&mid);
    let net = FamNetwork::new(FamConfig::desk(lo, hi), base.len(), 4);
    let identity = grid
        .samples()
        .iter()
        .all(|&f| fam_apply(&net, &bank, f) == bank.attributes());
    let config = WidebandConfig {
        iterations: 2000,
        render: options,
        ..WidebandConfig::default()
    };
    let (trained, report) = fit_wideband(&base, &bvh, &bank, net, &obs, &config).map_err(err)?;
    let worst = grid
        .samples()
        .iter()
        .flat_map(|&f| {
            fam_apply(&trained, &bank, f)
                .into_iter()
                .map(move |a| (a.gamma_mag - ramp(f)).abs())
        })
        .fold(0.0, f64::max);
    Ok((
        identity && worst < 0.03,
        format!(
            "zero-initialized network is identity: {identity}; max per-frequency |Γ| error {worst:.4} (tol 0.03); loss {:.3e} -> {:.3e}",
            report.initial_loss, report.final_loss
        ),
    ))
}

fn cli_doc() -> Result<SceneDocument, String> {
    let plate = generate_scene(&SyntheticSceneSpec::plate(10, metal())).map_err(err)?;
    let room = rfsplat::Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0));
    let scene = Scene::with_bounds(plate.gaussians().to_vec(), room);
    let mut doc = SceneDocument::new("plate", FrequencyGrid::linspace(2e9, 3e9, 3).map_err(err)?, scene);
    doc.antennas.push(NamedAntenna {
        name: "ap".into(),
        role: AntennaRole::Tx,
        antenna: Antenna::omni(Vec3::new(0.3, 0.1, 0.2)),
    });
    Ok(doc)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let doc = cli_doc()?;
    let scene_path = dir.path().join("plate.json");
    rfsplat::formats::write_scene(&scene_path, &doc).map_err(err)?;
    let read = |p: &std::path::Path| std::fs::read(p).map_err(err);

    let rcs_args = |out: &str| RcsArgs {
        scene: scene_path.clone(),
        range: 3.0,
        freq: None,
        band: Some("2e9:3e9:4".into()),
        step_deg: 1.0,
        pattern: PatternArg::Horn,
        exact: false,
        out: dir.path().join(out),
    };
    rcs(&rcs_args("a.csv")).map_err(err)?;
    rcs(&rcs_args("b.csv")).map_err(err)?;
    let rcs_same = read(&dir.path().join("a.csv"))? == read(&dir.path().join("b.csv"))?;

    let map_args = |out: &str| MapArgs {
        scene: scene_path.clone(),
        tx: "ap".into(),
        grid: "32x32".into(),
        freq: None,
        z: None,
        threshold_db: -90.0,
        exact: false,
        out: dir.path().join(out),
    };
    map(&map_args("ma.csv")).map_err(err)?;
    map(&map_args("mb.csv")).map_err(err)?;
    let map_same = ["csv", "json", "grid"].iter().all(|ext| {
        read(&dir.path().join("ma").with_extension(ext)).ok() == read(&dir.path().join("mb").with_extension(ext)).ok()
    });

    let protocol = Protocol::MonostaticSweep {
        config: RcsConfig {
            pattern: RadarPattern::Horn,
            ..RcsConfig::new(2.0, (-20..=20).step_by(4).map(f64::from).collect())
        },
        grid: doc.grid.clone(),
    };
    let data = generate_observations(&doc.scene, &protocol, &RenderOptions::default(), 3, 0.5, "plate").map_err(err)?;
    let data_path = dir.path().join("data.json");
    rfsplat::formats::write_dataset(&data_path, &data).map_err(err)?;
    let fit_args = |out: &str| FitArgs {
        scene: scene_path.clone(),
        data: data_path.clone(),
        iters: 30,
        seed: 5,
        out: dir.path().join(out),
        wideband: false,
        full_network: false,
        exact: false,
        bank_out: None,
    };
    fit_command(&fit_args("fa.json")).map_err(err)?;
    fit_command(&fit_args("fb.json")).map_err(err)?;
    let fit_same = read(&dir.path().join("fa.json"))? == read(&dir.path().join("fb.json"))?;

    let cloud = generate_scene(&SyntheticSceneSpec::new(
        Template::RandomCloud {
            count: 300,
            extent: [3.0, 3.0, 3.0],
        },
        vec![],
        17,
    ))
    .map_err(err)?;
    let mut round_trips = true;
    for d in [
        doc,
        SceneDocument::new("cloud", FrequencyGrid::single(5.8e9).map_err(err)?, cloud),
    ] {
        let text = scene_to_string(&d).map_err(err)?;
        let back = parse_scene(&text).map_err(err)?;
        round_trips &= back == d && scene_to_string(&back).map_err(err)? == text;
    }
    Ok((
        rcs_same && map_same && fit_same && round_trips,
        format!(
            "identical bytes: rcs csv {rcs_same}, map csv/json/grid {map_same}, fit json {fit_same}; lossless scene round trips {round_trips}"
        ),
    ))
}
