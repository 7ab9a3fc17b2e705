//! Frequency-aware attribute modulation: a small network that maps a
//! frequency and a learned per-Gaussian embedding to deltas on the raw
//! roughness, reflection magnitude and reflection phase.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bank::{constrain, jacobian, AttributeBank};
use super::model::{AttributeView, ObservationModel};
use super::optim::{Adam, CosineSchedule};
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::render::RenderOptions;
use crate::scene::{ObservationSet, RfAttributes, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamConfig {
    /// Hidden layers.
    pub layers: usize,
    pub hidden: usize,
    pub embedding_dim: usize,
    /// Sinusoidal feature pairs `sin(2^k π x), cos(2^k π x)`.
    pub octaves: usize,
    /// Band mapped to `x ∈ [−1, 1]` (Hz).
    pub band_min: f64,
    pub band_max: f64,
}

impl FamConfig {
    /// Three hidden layers of 64 units.
    pub fn desk(band_min: f64, band_max: f64) -> Self {
        Self {
            layers: 3,
            hidden: 64,
            embedding_dim: 8,
            octaves: 2,
            band_min,
            band_max,
        }
    }

    /// Six hidden layers of 256 units.
    pub fn full(band_min: f64, band_max: f64) -> Self {
        Self {
            layers: 6,
            hidden: 256,
            ..Self::desk(band_min, band_max)
        }
    }

    fn input_dim(&self) -> usize {
        1 + 2 * self.octaves + self.embedding_dim
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Dense {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Fully connected tanh network with a zero-initialized output layer, so a
/// fresh network deforms nothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamNetwork {
    pub config: FamConfig,
    layers: Vec<Dense>,
    /// Row-major `n_gaussians × embedding_dim`.
    embeddings: Vec<f64>,
    n_gaussians: usize,
}

impl FamNetwork {
    pub fn new(config: FamConfig, n_gaussians: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(config.layers + 1);
        let mut inputs = config.input_dim();
        for _ in 0..config.layers {
            let limit = (6.0 / (inputs + config.hidden) as f64).sqrt();
            layers.push(Dense {
                inputs,
                outputs: config.hidden,
                weights: (0..inputs * config.hidden)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect(),
                bias: vec![0.0; config.hidden],
            });
            inputs = config.hidden;
        }
        layers.push(Dense {
            inputs,
            outputs: 3,
            weights: vec![0.0; inputs * 3],
            bias: vec![0.0; 3],
        });
        let embeddings = (0..n_gaussians * config.embedding_dim)
            .map(|_| rng.random_range(-0.1..0.1))
            .collect();
        Self {
            config,
            layers,
            embeddings,
            n_gaussians,
        }
    }

    pub fn n_gaussians(&self) -> usize {
        self.n_gaussians
    }

    /// Whether `frequency` lies outside the band the network is normalized to.
    pub fn is_extrapolation(&self, frequency: f64) -> bool {
        frequency < self.config.band_min || frequency > self.config.band_max
    }

    fn features(&self, gaussian: usize, frequency: f64) -> Vec<f64> {
        let c = &self.config;
        let span = c.band_max - c.band_min;
        let x = if span > 0.0 {
            2.0 * (frequency - c.band_min) / span - 1.0
        } else {
            0.0
        };
        let mut out = Vec::with_capacity(c.input_dim());
        out.push(x);
        for k in 0..c.octaves {
            let w = std::f64::consts::PI * (1u64 << k) as f64 * x;
            out.push(w.sin());
            out.push(w.cos());
        }
        let e = c.embedding_dim;
        out.extend_from_slice(&self.embeddings[gaussian * e..(gaussian + 1) * e]);
        out
    }

    /// Activations of every layer (input first, raw output last).
    fn activations(&self, gaussian: usize, frequency: f64) -> Vec<Vec<f64>> {
        let mut acts = vec![self.features(gaussian, frequency)];
        for (k, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward(acts.last().expect("input"));
            if k + 1 < self.layers.len() {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(y);
        }
        acts
    }

    /// Deltas `(Δr, Δg, Δp)` for one Gaussian at one frequency.
    pub fn deltas(&self, gaussian: usize, frequency: f64) -> [f64; 3] {
        let out = self.activations(gaussian, frequency).pop().expect("output");
        [out[0], out[1], out[2]]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum::<usize>() + self.embeddings.len()
    }

    /// All parameters: each layer's weights then bias, then the embeddings.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out.extend_from_slice(&self.embeddings);
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[k..k + nw]);
            k += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[k..k + nb]);
            k += nb;
        }
        let ne = self.embeddings.len();
        self.embeddings.copy_from_slice(&params[k..k + ne]);
    }

    /// Frobenius norm of the output layer (weights and bias).
    pub fn output_layer_norm(&self) -> f64 {
        let l = self.layers.last().expect("output layer");
        l.weights.iter().chain(&l.bias).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Accumulates the gradient of `d_out · deltas(gaussian, f)` into `grad`
    /// (laid out as [`FamNetwork::parameters`]).
    pub fn backward(&self, gaussian: usize, frequency: f64, d_out: [f64; 3], grad: &mut [f64]) {
        let acts = self.activations(gaussian, frequency);
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut k = 0;
        for l in &self.layers {
            offsets.push(k);
            k += l.n_params();
        }
        let embed_offset = k;
        let mut delta: Vec<f64> = d_out.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[li];
            let base = offsets[li];
            for o in 0..layer.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = base + o * layer.inputs;
                for (g, x) in grad[row..row + layer.inputs].iter_mut().zip(input) {
                    *g += d * x;
                }
                grad[base + layer.weights.len() + o] += d;
            }
            let mut d_in = vec![0.0; layer.inputs];
            for (&d, row) in delta.iter().zip(layer.weights.chunks_exact(layer.inputs)) {
                if d == 0.0 {
                    continue;
                }
                for (di, w) in d_in.iter_mut().zip(row) {
                    *di += d * w;
                }
            }
            if li > 0 {
                // Inputs of this layer are tanh outputs of the previous one.
                for (di, a) in d_in.iter_mut().zip(input) {
                    *di *= 1.0 - a * a;
                }
            } else {
                let e = self.config.embedding_dim;
                let first = self.config.input_dim() - e;
                let at = embed_offset + gaussian * e;
                for (g, d) in grad[at..at + e].iter_mut().zip(&d_in[first..]) {
                    *g += d;
                }
            }
            delta = d_in;
        }
    }
}

/// Attributes at `frequency`: `R' = 1 + softplus(r + ΔR)`,
/// `|Γ|' = σ(g + Δg)`, `∠Γ' = wrap(p + Δp)`; `α` is not deformed.
pub fn fam_apply(net: &FamNetwork, bank: &AttributeBank, frequency: f64) -> Vec<RfAttributes> {
    bank.raw()
        .iter()
        .enumerate()
        .map(|(i, raw)| constrain(raw, net.deltas(i, frequency)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidebandConfig {
    pub iterations: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub render: RenderOptions,
}

impl Default for WidebandConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            lr_start: 0.01,
            lr_end: 0.001,
            render: RenderOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidebandReport {
    pub loss_trace: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub output_layer_norm: f64,
}

/// Trains only the network (weights and embeddings) against wideband
/// observations; the base bank is left untouched.
pub fn fit_wideband(
    scene: &Scene,
    bvh: &Bvh,
    bank: &AttributeBank,
    net: FamNetwork,
    observations: &ObservationSet,
    config: &WidebandConfig,
) -> Result<(FamNetwork, WidebandReport)> {
    if observations.records.is_empty() {
        return Err(Error::Precondition(
            "wideband fit needs observations in the band".into(),
        ));
    }
    if net.n_gaussians() != bank.len() || bank.len() != scene.len() {
        return Err(Error::Precondition("network, bank and scene sizes differ".into()));
    }
    let model = ObservationModel::build(scene, bvh, observations, &config.render)?;
    fit_wideband_model(&model, bank, net, config)
}

pub fn fit_wideband_model(
    model: &ObservationModel,
    bank: &AttributeBank,
    mut net: FamNetwork,
    config: &WidebandConfig,
) -> Result<(FamNetwork, WidebandReport)> {
    let freqs = model.grid().samples().to_vec();
    let used = model.used_frequencies().to_vec();
    let views = |net: &FamNetwork| -> Vec<Vec<RfAttributes>> {
        (0..freqs.len())
            .map(|fi| {
                if used.binary_search(&fi).is_ok() {
                    fam_apply(net, bank, freqs[fi])
                } else {
                    Vec::new()
                }
            })
            .collect()
    };
    let initial_loss = model.loss(AttributeView::PerFrequency(&views(&net)));
    let mut trace = Vec::new();
    let mut best = (initial_loss, net.parameters());
    let finish = |mut net: FamNetwork, trace: Vec<f64>, best: (f64, Vec<f64>)| {
        net.set_parameters(&best.1);
        let report = WidebandReport {
            loss_trace: trace,
            initial_loss,
            final_loss: best.0,
            output_layer_norm: net.output_layer_norm(),
        };
        (net, report)
    };
    if initial_loss == 0.0 || !initial_loss.is_finite() {
        if !initial_loss.is_finite() {
            return Err(Error::Numerical("wideband loss is not finite at initialization".into()));
        }
        return Ok(finish(net, vec![0.0], best));
    }
    let scale = 1.0 / initial_loss;
    let schedule = CosineSchedule {
        start: config.lr_start,
        end: config.lr_end,
        iterations: config.iterations,
    };
    let mut adam = Adam::new(net.n_params());
    let mut params = net.parameters();
    for it in 0..config.iterations {
        net.set_parameters(&params);
        let attrs = views(&net);
        let lg = model.loss_and_gradient(AttributeView::PerFrequency(&attrs))?;
        trace.push(lg.loss);
        if !lg.loss.is_finite() {
            return Err(Error::Numerical(format!("wideband loss diverged at iteration {it}")));
        }
        if lg.loss < best.0 {
            best = (lg.loss, params.clone());
        }
        let mut grad = vec![0.0; params.len()];
        for &fi in &used {
            let f = freqs[fi];
            for (i, g) in lg.per_frequency[fi].iter().enumerate() {
                let d = net.deltas(i, f);
                let j = jacobian(&bank.raw()[i], d);
                let d_out = [
                    g.roughness * j[1] * scale,
                    g.gamma_mag * j[2] * scale,
                    g.gamma_phase * scale,
                ];
                if d_out.iter().all(|v| *v == 0.0) {
                    continue;
                }
                net.backward(i, f, d_out, &mut grad);
            }
        }
        let dir = adam.direction(&grad);
        let lr = schedule.rate(it);
        for (p, d) in params.iter_mut().zip(dir) {
            *p -= lr * d;
        }
    }
    net.set_parameters(&params);
    let final_loss = model.loss(AttributeView::PerFrequency(&views(&net)));
    if final_loss < best.0 {
        best = (final_loss, params);
    }
    Ok(finish(net, trace, best))
}
