//! Attribute fitting by gradient descent on the received-power loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bank::{AttributeBank, LearnableMask};
use super::model::{AttributeView, ObservationModel};
use super::optim::{Adam, CosineSchedule};
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::render::RenderOptions;
use crate::scene::{ObservationSet, RfAttributes, Scene};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    /// Adam steps with backtracking so the loss never increases.
    AdamMonotone,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// `α = 0.5`, `R = 2`, `|Γ| = 0.5`, `∠Γ = 0` for every Gaussian.
    #[default]
    Default,
    /// Start from the attributes stored in the scene.
    Scene,
    /// Scene attributes with each learnable raw parameter scaled by a
    /// uniform factor in `[1 − fraction, 1 + fraction]`.
    Perturbed { fraction: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub iterations: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub init: InitStrategy,
    pub learnable: LearnableMask,
    pub render: RenderOptions,
    /// Stop once the loss falls below this fraction of the initial loss.
    pub stop_relative: f64,
    /// A fit counts as converged when the final loss is at most this
    /// fraction of the initial loss.
    pub converge_relative: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            lr_start: 0.01,
            lr_end: 0.001,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            init: InitStrategy::Default,
            learnable: LearnableMask::all(),
            render: RenderOptions::default(),
            stop_relative: 1e-14,
            converge_relative: 1e-3,
        }
    }
}

/// Finite-difference agreement of the analytic gradient.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckSummary {
    pub partials_checked: usize,
    pub max_relative_error: f64,
    pub max_absolute_error_near_zero: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Loss before each optimizer step.
    pub loss_trace: Vec<f64>,
    pub initial_loss: f64,
    /// Loss of the returned attributes (the best iterate).
    pub final_loss: f64,
    pub best_iteration: usize,
    pub converged: bool,
    pub attributes: Vec<RfAttributes>,
    pub gradient_check: Option<GradientCheckSummary>,
}

impl FitReport {
    /// `10·log10(initial / final)`, infinite for an exact fit.
    pub fn loss_reduction_db(&self) -> f64 {
        10.0 * (self.initial_loss / self.final_loss).log10()
    }
}

/// Initial bank for a scene under an initialization strategy.
pub fn initial_bank(scene: &Scene, init: InitStrategy, mask: LearnableMask, seed: u64) -> AttributeBank {
    let scene_bank = AttributeBank::from_attributes(&scene.attributes());
    let learn = mask.as_array();
    match init {
        InitStrategy::Scene => scene_bank,
        InitStrategy::Default => {
            let default = AttributeBank::initial(scene.len());
            let raw = scene_bank
                .raw()
                .iter()
                .zip(default.raw())
                .map(|(s, d)| std::array::from_fn(|k| if learn[k] { d[k] } else { s[k] }))
                .collect();
            AttributeBank::from_raw(raw)
        }
        InitStrategy::Perturbed { fraction } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = scene_bank
                .raw()
                .iter()
                .map(|s| {
                    std::array::from_fn(|k| {
                        let u: f64 = rng.random_range(-fraction..=fraction);
                        if learn[k] {
                            s[k] * (1.0 + u)
                        } else {
                            s[k]
                        }
                    })
                })
                .collect();
            AttributeBank::from_raw(raw)
        }
    }
}

fn flatten(bank: &AttributeBank) -> Vec<f64> {
    bank.raw().iter().flatten().copied().collect()
}

fn unflatten(x: &[f64]) -> AttributeBank {
    AttributeBank::from_raw(x.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect())
}

/// Fits the learnable attributes to the observations. Returns the best
/// iterate and a report; deterministic for a given config.
pub fn fit(
    scene: &Scene,
    bvh: &Bvh,
    observations: &ObservationSet,
    config: &FitConfig,
) -> Result<(FitReport, AttributeBank)> {
    if observations.records.is_empty() {
        return Err(Error::Precondition("fit needs at least one observation".into()));
    }
    let model = ObservationModel::build(scene, bvh, observations, &config.render)?;
    let bank = initial_bank(scene, config.init, config.learnable, config.seed);
    fit_model(&model, bank, config)
}

/// [`fit`] on a prebuilt observation model and initial bank.
pub fn fit_model(
    model: &ObservationModel,
    bank: AttributeBank,
    config: &FitConfig,
) -> Result<(FitReport, AttributeBank)> {
    let learn = config.learnable.as_array();
    let loss_at = |x: &[f64]| model.loss(AttributeView::Shared(&unflatten(x).attributes()));

    let mut x = flatten(&bank);
    let initial_loss = loss_at(&x);
    let floor = model.loss_floor();
    let mut trace = Vec::with_capacity(config.iterations + 1);
    let mut best = (initial_loss, x.clone(), 0usize);
    let report = |trace: Vec<f64>, best: &(f64, Vec<f64>, usize)| FitReport {
        loss_trace: trace,
        initial_loss,
        final_loss: best.0,
        best_iteration: best.2,
        converged: best.0 <= config.converge_relative * initial_loss || best.0 <= floor,
        attributes: unflatten(&best.1).attributes(),
        gradient_check: None,
    };
    if !initial_loss.is_finite() {
        return Err(Error::Diverged {
            iteration: 0,
            report: Box::new(report(vec![initial_loss], &best)),
        });
    }
    if initial_loss <= floor {
        trace.push(initial_loss);
        let r = report(trace, &best);
        return Ok((r, unflatten(&best.1)));
    }
    // Adam sees the loss relative to its initial value so that the epsilon
    // term stays negligible whatever the absolute power scale.
    let scale = 1.0 / initial_loss;
    let schedule = CosineSchedule {
        start: config.lr_start,
        end: config.lr_end,
        iterations: config.iterations,
    };
    let mut adam = Adam::new(x.len());
    for it in 0..config.iterations {
        let current = unflatten(&x);
        let lg = model.loss_and_gradient(AttributeView::Shared(&current.attributes()))?;
        trace.push(lg.loss);
        if !lg.loss.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                report: Box::new(report(trace, &best)),
            });
        }
        if lg.loss < best.0 {
            best = (lg.loss, x.clone(), it);
        }
        if lg.loss <= config.stop_relative * initial_loss || lg.loss <= floor {
            break;
        }
        let raw = current.raw_gradient(&lg.total(model.n_gaussians()));
        let grad: Vec<f64> = raw
            .iter()
            .flat_map(|g| (0..4).map(move |k| if learn[k] { g[k] * scale } else { 0.0 }))
            .collect();
        let direction = adam.direction(&grad);
        let lr = schedule.rate(it);
        let step = |t: f64| -> Vec<f64> { x.iter().zip(&direction).map(|(v, d)| v - t * d).collect() };
        x = match config.optimizer {
            OptimizerKind::Adam => step(lr),
            OptimizerKind::AdamMonotone => {
                let mut t = lr;
                let mut accepted = None;
                for _ in 0..12 {
                    let candidate = step(t);
                    if loss_at(&candidate) <= lg.loss {
                        accepted = Some(candidate);
                        break;
                    }
                    t *= 0.5;
                }
                accepted.unwrap_or_else(|| x.clone())
            }
        };
    }
    let final_loss = loss_at(&x);
    if final_loss < best.0 {
        best = (final_loss, x.clone(), trace.len());
    }
    let r = report(trace, &best);
    Ok((r, unflatten(&best.1)))
}
