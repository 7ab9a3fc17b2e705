//! Finite-difference check of the analytic loss gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfsplat::bvh::Bvh;
use rfsplat::inverse::{AttributeBank, AttributeView, GradientCheckSummary, ObservationModel};
use rfsplat::render::{LosConfig, RenderOptions};
use rfsplat::{Antenna, FrequencyGrid, ObservationSet, Result, Scene, Vec3};
use serde::{Deserialize, Serialize};

use crate::observations::{generate_observations, Protocol};
use crate::scenes::{generate_scene, random_attributes, SyntheticSceneSpec, Template};

/// Raw parameter names in bank order.
pub const PARAMETERS: [&str; 4] = ["alpha", "roughness", "gamma_mag", "gamma_phase"];

/// Tolerances on the loss normalized by its value at the checked point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientTolerance {
    pub relative: f64,
    /// Applies to partials whose magnitude is below `near_zero`.
    pub absolute: f64,
    pub near_zero: f64,
    /// Finite-difference step in raw parameter space.
    pub step: f64,
}

impl Default for GradientTolerance {
    fn default() -> Self {
        Self {
            relative: 1e-4,
            absolute: 1e-10,
            near_zero: 1e-6,
            step: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckRow {
    pub gaussian: usize,
    pub parameter: String,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
    pub absolute_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckTable {
    pub rows: Vec<GradientCheckRow>,
    pub summary: GradientCheckSummary,
}

/// Compares every raw partial of `L / L(bank)` with a fourth-order central
/// difference `(−L(x+2h) + 8L(x+h) − 8L(x−h) + L(x−2h)) / 12h`.
pub fn check_gradients(
    scene: &Scene,
    bvh: &Bvh,
    bank: &AttributeBank,
    observations: &ObservationSet,
    options: &RenderOptions,
    tolerance: &GradientTolerance,
) -> Result<GradientCheckTable> {
    let model = ObservationModel::build(scene, bvh, observations, options)?;
    let attrs = bank.attributes();
    let lg = model.loss_and_gradient(AttributeView::Shared(&attrs))?;
    let scale = if lg.loss > 0.0 { 1.0 / lg.loss } else { 1.0 };
    let analytic = bank.raw_gradient(&lg.total(scene.len()));
    let loss_at = |i: usize, k: usize, delta: f64| {
        let mut raw = bank.raw().to_vec();
        raw[i][k] += delta;
        let b = AttributeBank::from_raw(raw);
        model.loss(AttributeView::Shared(&b.attributes())) * scale
    };
    let h = tolerance.step;
    let mut rows = Vec::with_capacity(4 * scene.len());
    for (i, grad) in analytic.iter().enumerate() {
        for (k, name) in PARAMETERS.iter().enumerate() {
            let a = grad[k] * scale;
            let n = (-loss_at(i, k, 2.0 * h) + 8.0 * loss_at(i, k, h) - 8.0 * loss_at(i, k, -h)
                + loss_at(i, k, -2.0 * h))
                / (12.0 * h);
            let abs = (a - n).abs();
            let magnitude = a.abs().max(n.abs());
            let rel = if magnitude > 0.0 { abs / magnitude } else { 0.0 };
            let passed = if magnitude < tolerance.near_zero {
                abs < tolerance.absolute
            } else {
                rel < tolerance.relative
            };
            rows.push(GradientCheckRow {
                gaussian: i,
                parameter: name.to_string(),
                analytic: a,
                numeric: n,
                relative_error: rel,
                absolute_error: abs,
                passed,
            });
        }
    }
    let significant = |r: &&GradientCheckRow| r.analytic.abs().max(r.numeric.abs()) >= tolerance.near_zero;
    let summary = GradientCheckSummary {
        partials_checked: rows.len(),
        max_relative_error: rows
            .iter()
            .filter(significant)
            .map(|r| r.relative_error)
            .fold(0.0, f64::max),
        max_absolute_error_near_zero: rows
            .iter()
            .filter(|r| !significant(r))
            .map(|r| r.absolute_error)
            .fold(0.0, f64::max),
        passed: rows.iter().all(|r| r.passed),
    };
    Ok(GradientCheckTable { rows, summary })
}

/// A seeded gradient-check problem: a random cloud of at most 50 Gaussians,
/// at most 8 observations rendered from ground-truth attributes, and a bank
/// at different random attributes.
pub struct GradientCase {
    pub scene: Scene,
    pub observations: ObservationSet,
    pub bank: AttributeBank,
    pub options: RenderOptions,
}

pub fn random_gradient_case(seed: u64) -> Result<GradientCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(5..=50);
    let scene = generate_scene(&SyntheticSceneSpec::new(
        Template::RandomCloud {
            count,
            extent: [1.5, 1.5, 1.5],
        },
        vec![],
        seed,
    ))?;
    let n_links = rng.random_range(2..=4);
    let pairs = (0..n_links)
        .map(|_| {
            let at = |rng: &mut ChaCha8Rng| {
                let dir = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
                .normalize();
                dir * rng.random_range(2.0..4.0)
            };
            (Antenna::omni(at(&mut rng)), Antenna::omni(at(&mut rng)))
        })
        .collect();
    let grid = FrequencyGrid::new(vec![2.4e9, 2.5e9])?;
    let los = rng.random_bool(0.5).then(|| LosConfig::new(0.5, 1.0));
    let options = RenderOptions::default().with_los(los);
    let observations = generate_observations(
        &scene,
        &Protocol::Links { pairs, grid },
        &options,
        seed,
        0.0,
        "gradient",
    )?;
    let attrs: Vec<_> = (0..scene.len()).map(|_| random_attributes(&mut rng)).collect();
    Ok(GradientCase {
        scene,
        observations,
        bank: AttributeBank::from_attributes(&attrs),
        options,
    })
}
