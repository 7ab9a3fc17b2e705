//! Observation model: precomputed link plans for every Tx/Rx pair in an
//! observation set, with the total loss and its analytic gradient.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::bank::AttributeBank;
use super::loss::{check_units, power_residual};
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::render::{AttributeGradient, Illumination, LinkPlan, RenderOptions};
use crate::scene::{Antenna, FrequencyGrid, ObservationSet, RfAttributes, Scene};

/// Attributes seen by the renderer, shared across frequencies or given per
/// frequency index.
#[derive(Clone, Copy, Debug)]
pub enum AttributeView<'a> {
    Shared(&'a [RfAttributes]),
    /// Indexed by frequency index; only indices that appear in the
    /// observations are read.
    PerFrequency(&'a [Vec<RfAttributes>]),
}

impl<'a> AttributeView<'a> {
    fn at(&self, frequency_index: usize) -> &'a [RfAttributes] {
        match *self {
            AttributeView::Shared(a) => a,
            AttributeView::PerFrequency(a) => &a[frequency_index],
        }
    }
}

#[derive(Clone, Debug)]
struct LinkRecords {
    plan: LinkPlan,
    /// `(record index, frequency index, measured power)`.
    records: Vec<(usize, usize, f64)>,
}

/// Loss and gradients with respect to constrained attributes, per frequency
/// index (empty for unobserved frequencies).
#[derive(Clone, Debug)]
pub struct LossGradient {
    pub loss: f64,
    pub per_frequency: Vec<Vec<AttributeGradient>>,
}

impl LossGradient {
    /// Gradients summed over frequencies.
    pub fn total(&self, n: usize) -> Vec<AttributeGradient> {
        let mut out = vec![AttributeGradient::default(); n];
        for grads in &self.per_frequency {
            for (o, g) in out.iter_mut().zip(grads) {
                o.add(g);
            }
        }
        out
    }
}

/// Relative power error attributable to dB serialization round-off.
const ROUNDOFF: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ObservationModel {
    links: Vec<LinkRecords>,
    grid: FrequencyGrid,
    n_gaussians: usize,
    n_records: usize,
    used_frequencies: Vec<usize>,
    loss_floor: f64,
}

impl ObservationModel {
    pub fn build(scene: &Scene, bvh: &Bvh, observations: &ObservationSet, options: &RenderOptions) -> Result<Self> {
        check_units(observations)?;
        observations.validate()?;
        if !scene.geometry_frozen() {
            return Err(Error::Precondition("inverse rendering requires frozen geometry".into()));
        }
        let mut illuminations: Vec<(Antenna, Arc<Illumination>)> = Vec::new();
        let mut keys: Vec<(usize, Antenna)> = Vec::new();
        let mut groups: Vec<Vec<(usize, usize, f64)>> = Vec::new();
        for (k, r) in observations.records.iter().enumerate() {
            let tx_index = match illuminations.iter().position(|(tx, _)| *tx == r.tx) {
                Some(i) => i,
                None => {
                    r.tx.validate()?;
                    let illum = Illumination::build(scene, bvh, &r.tx, options.propagation)?;
                    illuminations.push((r.tx.clone(), Arc::new(illum)));
                    illuminations.len() - 1
                }
            };
            let entry = (k, r.frequency_index, r.measurement.power());
            match keys.iter().position(|(t, rx)| *t == tx_index && *rx == r.rx) {
                Some(g) => groups[g].push(entry),
                None => {
                    r.rx.validate()?;
                    keys.push((tx_index, r.rx.clone()));
                    groups.push(vec![entry]);
                }
            }
        }
        let links = keys
            .par_iter()
            .zip(groups)
            .map(|((t, rx), records)| {
                let plan = LinkPlan::build(scene, bvh, illuminations[*t].1.clone(), rx, options)?;
                Ok(LinkRecords { plan, records })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut used: Vec<usize> = observations.records.iter().map(|r| r.frequency_index).collect();
        used.sort_unstable();
        used.dedup();
        let loss_floor = observations
            .records
            .iter()
            .map(|r| (ROUNDOFF * r.measurement.power()).powi(2))
            .sum();
        Ok(Self {
            links,
            grid: observations.grid.clone(),
            n_gaussians: scene.len(),
            n_records: observations.records.len(),
            used_frequencies: used,
            loss_floor,
        })
    }

    /// Loss reached when every predicted power matches its target to the
    /// relative precision of a dB round trip.
    pub fn loss_floor(&self) -> f64 {
        self.loss_floor
    }

    pub fn n_records(&self) -> usize {
        self.n_records
    }

    pub fn n_gaussians(&self) -> usize {
        self.n_gaussians
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Frequency indices referenced by at least one record, ascending.
    pub fn used_frequencies(&self) -> &[usize] {
        &self.used_frequencies
    }

    /// Predicted complex signal per record, in record order.
    pub fn predictions(&self, view: AttributeView) -> Vec<Complex64> {
        let per_link: Vec<Vec<(usize, Complex64)>> = self
            .links
            .par_iter()
            .map(|link| {
                link.records
                    .iter()
                    .map(|&(k, fi, _)| (k, link.plan.evaluate(view.at(fi), self.grid.samples()[fi])))
                    .collect()
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_records];
        for (k, s) in per_link.into_iter().flatten() {
            out[k] = s;
        }
        out
    }

    /// `Σ (|S|² − p)²` over all records.
    pub fn loss(&self, view: AttributeView) -> f64 {
        let per_link: Vec<f64> = self
            .links
            .par_iter()
            .map(|link| {
                link.records
                    .iter()
                    .map(|&(_, fi, p)| {
                        let s = link.plan.evaluate(view.at(fi), self.grid.samples()[fi]);
                        power_residual(s.norm_sqr(), p).powi(2)
                    })
                    .sum::<f64>()
            })
            .collect();
        per_link.iter().sum()
    }

    /// Loss and its gradient with respect to every constrained attribute.
    /// Links are processed in parallel and reduced in a fixed order.
    pub fn loss_and_gradient(&self, view: AttributeView) -> Result<LossGradient> {
        let n = self.n_gaussians;
        let n_freq = self.grid.len();
        let per_link = self
            .links
            .par_iter()
            .map(|link| -> Result<(f64, Vec<Vec<AttributeGradient>>)> {
                let mut grads: Vec<Vec<AttributeGradient>> = vec![Vec::new(); n_freq];
                let mut loss = 0.0;
                for &(_, fi, p) in &link.records {
                    let f = self.grid.samples()[fi];
                    let attrs = view.at(fi);
                    let s = link.plan.evaluate(attrs, f);
                    let r = power_residual(s.norm_sqr(), p);
                    loss += r * r;
                    if grads[fi].is_empty() {
                        grads[fi] = vec![AttributeGradient::default(); n];
                    }
                    // dL/dθ = 2r · d|S|²/dθ = Re(conj(4 r S) · dS/dθ).
                    link.plan.backward(attrs, f, s * (4.0 * r), &mut grads[fi])?;
                }
                Ok((loss, grads))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = LossGradient {
            loss: 0.0,
            per_frequency: vec![Vec::new(); n_freq],
        };
        for (loss, grads) in per_link {
            total.loss += loss;
            for (fi, g) in grads.into_iter().enumerate() {
                if g.is_empty() {
                    continue;
                }
                if total.per_frequency[fi].is_empty() {
                    total.per_frequency[fi] = g;
                } else {
                    for (t, x) in total.per_frequency[fi].iter_mut().zip(&g) {
                        t.add(x);
                    }
                }
            }
        }
        Ok(total)
    }

    /// Mean over records of each Gaussian's share `|c_l| / Σ_m |c_m|` of the
    /// scattered contributions.
    pub fn contribution_shares(&self, attrs: &[RfAttributes]) -> Vec<f64> {
        let mut shares = vec![0.0; self.n_gaussians];
        for link in &self.links {
            for &(_, fi, _) in &link.records {
                let parts = link.plan.contributions(attrs, self.grid.samples()[fi]);
                let total: f64 = parts.iter().map(|(_, c)| c.norm()).sum();
                if total > 0.0 {
                    for (i, c) in parts {
                        shares[i] += c.norm() / total;
                    }
                }
            }
        }
        if self.n_records > 0 {
            for s in &mut shares {
                *s /= self.n_records as f64;
            }
        }
        shares
    }
}

/// Total loss and its gradient with respect to the raw bank parameters.
pub fn gradients(
    scene: &Scene,
    bvh: &Bvh,
    bank: &AttributeBank,
    observations: &ObservationSet,
    options: &RenderOptions,
) -> Result<(f64, Vec<[f64; 4]>)> {
    let model = ObservationModel::build(scene, bvh, observations, options)?;
    let attrs = bank.attributes();
    let lg = model.loss_and_gradient(AttributeView::Shared(&attrs))?;
    Ok((lg.loss, bank.raw_gradient(&lg.total(scene.len()))))
}

/// Total loss at the bank's attributes.
pub fn total_loss(
    scene: &Scene,
    bvh: &Bvh,
    bank: &AttributeBank,
    observations: &ObservationSet,
    options: &RenderOptions,
) -> Result<f64> {
    let model = ObservationModel::build(scene, bvh, observations, options)?;
    Ok(model.loss(AttributeView::Shared(&bank.attributes())))
}
