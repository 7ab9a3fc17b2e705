//! Seeded property suites comparing the main implementation with the
//! oracle. Each suite returns a printable table and a verdict.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rfsplat::bvh::build_bvh;
use rfsplat::geometry::projected_cross_section;
use rfsplat::render::{render_received_signal, LosConfig, RenderOptions};
use rfsplat::visibility::visibility_chain;
use rfsplat::{Antenna, FrequencyGrid, Quat, Result, RfAttributes, RfGaussian, Scene, Vec3};

use crate::brute::{brute_force_render, segment_visibility};
use crate::cross_section::{analytic_projected_area, monte_carlo_cross_section};
use crate::gradcheck::{check_gradients, random_gradient_case, GradientTolerance};
use crate::scenes::{generate_scene, SyntheticSceneSpec, Template};

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    /// Header followed by one line per case.
    pub table: String,
    /// One-line summary of the worst case.
    pub summary: String,
    pub passed: bool,
}

fn random_cloud(seed: u64, count: usize, extent: f64) -> Result<Scene> {
    generate_scene(&SyntheticSceneSpec::new(
        Template::RandomCloud {
            count,
            extent: [extent; 3],
        },
        vec![],
        seed,
    ))
}

fn random_point(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = random_point(rng, 1.0);
        if v.norm() > 1e-2 && v.norm() <= 1.0 {
            return v.normalize();
        }
    }
}

/// Analytic gradients against fourth-order central differences on `cases`
/// seeded random problems.
pub fn gradient_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let tolerance = GradientTolerance::default();
    let results = (0..cases as u64)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let case = random_gradient_case(seed.wrapping_add(k))?;
            let bvh = build_bvh(&case.scene);
            let table = check_gradients(
                &case.scene,
                &bvh,
                &case.bank,
                &case.observations,
                &case.options,
                &tolerance,
            )?;
            Ok((
                seed.wrapping_add(k),
                case.scene.len(),
                case.observations.records.len(),
                table.summary,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = String::from("seed  gaussians  records  partials  max_rel_err  max_abs_err_near_zero  pass\n");
    for (s, n, r, sum) in &results {
        writeln!(
            table,
            "{s:>4}  {n:>9}  {r:>7}  {:>8}  {:>11.3e}  {:>21.3e}  {}",
            sum.partials_checked,
            sum.max_relative_error,
            sum.max_absolute_error_near_zero,
            if sum.passed { "ok" } else { "FAIL" }
        )
        .expect("writing to a string");
    }
    let worst_rel = results.iter().map(|r| r.3.max_relative_error).fold(0.0, f64::max);
    let worst_abs = results
        .iter()
        .map(|r| r.3.max_absolute_error_near_zero)
        .fold(0.0, f64::max);
    Ok(SuiteReport {
        name: "gradients",
        table,
        summary: format!(
            "{cases} cases, max rel err {worst_rel:.3e} (tol {:.0e}), max abs err near zero {worst_abs:.3e} (tol {:.0e})",
            tolerance.relative, tolerance.absolute
        ),
        passed: results.iter().all(|r| r.3.passed),
    })
}

/// Exact-direction renderer against the brute-force oracle on `cases`
/// random scenes of at most 200 Gaussians, with and without line of sight.
pub fn blend_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    const TOLERANCE: f64 = 1e-12;
    let grid = FrequencyGrid::new(vec![2.4e9, 5.8e9])?;
    let results = (0..cases as u64)
        .into_par_iter()
        .map(|k| -> Result<(u64, usize, f64, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
            let count = rng.random_range(1..=200);
            let scene = random_cloud(seed.wrapping_add(k), count, 2.0)?;
            let bvh = build_bvh(&scene);
            let tx = Antenna::omni(random_unit(&mut rng) * rng.random_range(2.5..4.0));
            let rx_pos = random_unit(&mut rng) * rng.random_range(2.5..4.0);
            let rx = if rng.random_bool(0.5) {
                Antenna::horn(rx_pos, -rx_pos.normalize())
            } else {
                Antenna::omni(rx_pos)
            };
            let los = rng.random_bool(0.5).then(|| LosConfig::new(0.4, 1.5));
            let options = RenderOptions::exact().with_los(los);
            let main = render_received_signal(&scene, &bvh, &tx, &rx, &grid, &options)?;
            let mut worst: f64 = 0.0;
            let mut nonzero = false;
            for (i, &f) in grid.samples().iter().enumerate() {
                let oracle = brute_force_render(&scene, &tx, &rx, f, &options)?;
                let m = main.values()[i];
                let scale = m.norm().max(oracle.norm());
                nonzero |= scale > 0.0;
                if scale > 0.0 {
                    worst = worst.max((m - oracle).norm() / scale);
                }
            }
            Ok((seed.wrapping_add(k), count, worst, nonzero))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = String::from("seed  gaussians  max_rel_err  pass\n");
    for (s, n, e, _) in &results {
        let ok = *e < TOLERANCE;
        writeln!(table, "{s:>4}  {n:>9}  {e:>11.3e}  {}", if ok { "ok" } else { "FAIL" }).expect("writing to a string");
    }
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let nonzero = results.iter().filter(|r| r.3).count();
    Ok(SuiteReport {
        name: "blend",
        table,
        summary: format!("{cases} scenes ({nonzero} with signal), max rel err {worst:.3e} (tol {TOLERANCE:.0e})"),
        passed: worst < TOLERANCE && nonzero * 2 >= cases,
    })
}

/// Cross-section formula against the analytic projected-ellipse area and a
/// Monte-Carlo estimate on `cases` random shapes and directions.
pub fn cross_section_suite(seed: u64, cases: usize, samples: usize) -> Result<SuiteReport> {
    const ANALYTIC_TOL: f64 = 1e-9;
    const MC_TOL: f64 = 0.01;
    let results = (0..cases as u64)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
            let scale = Vec3::new(
                10f64.powf(rng.random_range(-2.0..0.0)),
                10f64.powf(rng.random_range(-2.0..0.0)),
                10f64.powf(rng.random_range(-2.0..0.0)),
            );
            let q = loop {
                let q = Quat::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if q.norm() > 1e-2 && q.norm() <= 1.0 {
                    break q / q.norm();
                }
            };
            let g = RfGaussian::new(Vec3::zeros(), scale, Vec3::z(), RfAttributes::default()).with_rotation(q);
            let n = random_unit(&mut rng);
            let formula = projected_cross_section(&g, &n)?;
            let analytic = analytic_projected_area(&g, &n);
            let mc = monte_carlo_cross_section(&g, &n, samples, seed.wrapping_add(k) ^ 0xa5a5)?;
            Ok((
                formula,
                (formula - analytic).abs() / analytic,
                (formula - mc.estimate).abs() / formula,
                mc.stderr / mc.estimate,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = String::from("case  area_m2       rel_err_analytic  rel_err_mc  mc_rel_stderr\n");
    for (k, (a, ea, em, se)) in results.iter().enumerate() {
        writeln!(table, "{k:>4}  {a:>12.6e}  {ea:>16.3e}  {em:>10.3e}  {se:>13.3e}").expect("writing to a string");
    }
    let worst_analytic = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst_mc = results.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(SuiteReport {
        name: "cross-section",
        table,
        summary: format!(
            "{cases} cases, max rel err vs analytic {worst_analytic:.3e} (tol {ANALYTIC_TOL:.0e}), vs Monte-Carlo {worst_mc:.3e} (tol {MC_TOL})"
        ),
        passed: worst_analytic < ANALYTIC_TOL && worst_mc < MC_TOL,
    })
}

/// BVH hit chains against all-pairs segment checks: `scenes` random scenes
/// of up to `max_gaussians` Gaussians, `segments` random segments each.
pub fn visibility_suite(seed: u64, scenes: usize, segments: usize, max_gaussians: usize) -> Result<SuiteReport> {
    const TOLERANCE: f64 = 1e-12;
    let results = (0..scenes as u64)
        .into_par_iter()
        .map(|k| -> Result<(usize, usize, usize, f64, usize)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
            let count = rng.random_range(1..=max_gaussians);
            let scene = random_cloud(seed.wrapping_add(k), count, 3.0)?;
            let bvh = build_bvh(&scene);
            let (mut mismatched, mut worst, mut hits) = (0, 0.0f64, 0);
            for _ in 0..segments {
                let a = random_point(&mut rng, 2.0);
                let b = random_point(&mut rng, 2.0);
                let (v, chain) = visibility_chain(&bvh, &scene, &a, &b, None);
                let (w, oracle) = segment_visibility(&scene, &a, &b, None);
                let same = chain.hits.len() == oracle.len()
                    && chain.hits.iter().zip(&oracle).all(|(h, o)| h.gaussian == o.gaussian);
                mismatched += usize::from(!same);
                worst = worst.max((v - w).abs());
                hits += oracle.len();
            }
            Ok((k as usize, count, mismatched, worst, hits))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = String::from("scene  gaussians  segments  hits  chain_mismatches  max_abs_err_V  pass\n");
    for (k, n, m, e, h) in &results {
        let ok = *m == 0 && *e <= TOLERANCE;
        writeln!(
            table,
            "{k:>5}  {n:>9}  {segments:>8}  {h:>4}  {m:>16}  {e:>13.3e}  {}",
            if ok { "ok" } else { "FAIL" }
        )
        .expect("writing to a string");
    }
    let mismatches: usize = results.iter().map(|r| r.2).sum();
    let worst = results.iter().map(|r| r.3).fold(0.0, f64::max);
    Ok(SuiteReport {
        name: "visibility",
        table,
        summary: format!(
            "{scenes} scenes x {segments} segments, {mismatches} chain mismatches, max |dV| {worst:.3e} (tol {TOLERANCE:.0e})"
        ),
        passed: mismatches == 0 && worst <= TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(gradient_suite(0, 2).unwrap().passed);
        assert!(blend_suite(0, 4).unwrap().passed);
        assert!(cross_section_suite(0, 3, 100_000).unwrap().passed);
        assert!(visibility_suite(0, 2, 50, 100).unwrap().passed);
    }

    #[test]
    fn tables_have_one_line_per_case() {
        let r = cross_section_suite(1, 5, 100_000).unwrap();
        assert_eq!(r.table.lines().count(), 6);
    }
}
