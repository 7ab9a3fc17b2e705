use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfsplat::bvh::build_bvh;
use rfsplat::render::{render_received_signal, AttenuationIndex, LosConfig, RenderOptions};
use rfsplat::visibility::visibility_chain;
use rfsplat::{Antenna, Complex64, FrequencyGrid, Vec3};
use rfsplat_oracle::{
    brute_force_render, check_gradients, generate_scene, random_gradient_case, segment_visibility, GradientTolerance,
    SyntheticSceneSpec, Template,
};

fn cloud(seed: u64, count: usize) -> rfsplat::Scene {
    generate_scene(&SyntheticSceneSpec::new(
        Template::RandomCloud {
            count,
            extent: [2.0, 2.0, 2.0],
        },
        vec![],
        seed,
    ))
    .unwrap()
}

fn point(rng: &mut ChaCha8Rng, radius: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-radius..radius),
        rng.random_range(-radius..radius),
        rng.random_range(-radius..radius),
    )
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-12 * a.norm().max(b.norm()) + 1e-300
}

#[test]
fn exact_mode_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut nonzero = 0;
    for seed in 0..12 {
        let scene = cloud(seed, rng.random_range(1..=120));
        let bvh = build_bvh(&scene);
        let tx = Antenna::omni(point(&mut rng, 3.0) + Vec3::new(4.0, 0.0, 0.0));
        let rx = Antenna::horn(Vec3::new(-3.0, 0.5, 0.2), Vec3::x());
        let grid = FrequencyGrid::new(vec![2.4e9, 5.8e9]).unwrap();
        for options in [
            RenderOptions::exact(),
            RenderOptions::exact().with_los(Some(LosConfig::new(0.3, 2.0))),
            RenderOptions {
                attenuation: AttenuationIndex::PerOccluder,
                ..RenderOptions::exact()
            },
        ] {
            let main = render_received_signal(&scene, &bvh, &tx, &rx, &grid, &options).unwrap();
            for (k, &f) in grid.samples().iter().enumerate() {
                let oracle = brute_force_render(&scene, &tx, &rx, f, &options).unwrap();
                assert!(
                    close(main.values()[k], oracle),
                    "seed {seed}: {} vs {oracle}",
                    main.values()[k]
                );
                nonzero += usize::from(oracle.norm() > 0.0);
            }
        }
    }
    assert!(nonzero >= 60, "{nonzero} of 72 signals are non-zero");
}

#[test]
fn oracle_detects_a_different_blending_rule() {
    let scene = cloud(3, 150);
    let bvh = build_bvh(&scene);
    let tx = Antenna::omni(Vec3::new(4.0, 0.3, 0.1));
    let rx = Antenna::omni(Vec3::new(-4.0, 0.2, -0.3));
    let main = render_received_signal(
        &scene,
        &bvh,
        &tx,
        &rx,
        &FrequencyGrid::single(3e9).unwrap(),
        &RenderOptions::exact(),
    )
    .unwrap();
    let other = RenderOptions {
        attenuation: AttenuationIndex::PerOccluder,
        ..RenderOptions::exact()
    };
    let oracle = brute_force_render(&scene, &tx, &rx, 3e9, &other).unwrap();
    assert!(!close(main.values()[0], oracle));
}

#[test]
fn bvh_visibility_matches_all_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..5 {
        let scene = cloud(100 + seed, 300);
        let bvh = build_bvh(&scene);
        for _ in 0..200 {
            let a = point(&mut rng, 1.5);
            let b = point(&mut rng, 1.5);
            let (v, chain) = visibility_chain(&bvh, &scene, &a, &b, None);
            let (w, hits) = segment_visibility(&scene, &a, &b, None);
            let ids: Vec<usize> = chain.hits.iter().map(|h| h.gaussian).collect();
            let oracle_ids: Vec<usize> = hits.iter().map(|h| h.gaussian).collect();
            assert_eq!(ids, oracle_ids);
            assert!((v - w).abs() <= 1e-12);
        }
    }
}

#[test]
fn gradient_cases_have_significant_partials() {
    let case = random_gradient_case(4).unwrap();
    let table = check_gradients(
        &case.scene,
        &build_bvh(&case.scene),
        &case.bank,
        &case.observations,
        &case.options,
        &GradientTolerance::default(),
    )
    .unwrap();
    let significant = table.rows.iter().filter(|r| r.analytic.abs() > 1e-3).count();
    assert!(significant >= 4, "only {significant} significant partials");
    assert!(table.summary.passed);
}
