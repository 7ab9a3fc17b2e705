//! Geometry-only link plans.
//!
//! Scene geometry is frozen while attributes change, so every quantity that
//! depends only on positions, shapes and antennas (distances, cross-sections,
//! lobe factors, which Gaussians lie on which ray and their densities there)
//! is computed once per Tx/Rx link. Evaluating the received signal for a set
//! of attributes, and its derivatives with respect to them, then needs no
//! ray tracing.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::blend::{spreading, DirectionalRender, DirectionalSample};
use super::{los_term, AttenuationIndex, FovGrid, FovMode, LosConfig, LosVisibility, Propagation, RenderOptions};
use crate::bsdf::{incidence_cosine, LobeTerms};
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::geometry::projected_cross_section;
use crate::scene::{wavelength, Antenna, RfAttributes, Scene, Vec3};
use crate::visibility::{
    capped_alpha, closest_approach, friis_amplitude, propagation_phase, trace_ray, visibility_chain, ALPHA_MAX,
    ENDPOINT_EPSILON, MIN_PLACEMENT_DISTANCE,
};

/// A Gaussian on a path together with its density at the path's closest
/// approach; its opacity there is `min(α·density, 0.99)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Occluder {
    pub gaussian: usize,
    pub density: f64,
}

impl Occluder {
    fn alpha(&self, attrs: &[RfAttributes]) -> f64 {
        capped_alpha(attrs[self.gaussian].alpha, self.density)
    }

    fn capped(&self, attrs: &[RfAttributes]) -> bool {
        attrs[self.gaussian].alpha * self.density >= ALPHA_MAX
    }
}

/// Transmitter-side geometry of one illuminated Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct Illum {
    /// Unit direction from the transmitter to the Gaussian.
    pub direction: Vec3,
    pub distance: f64,
    /// `√(P_T G_T A / (4π d²))`.
    pub amplitude: f64,
    /// `max(0, −ω_i·n)`.
    pub cos_in: f64,
    /// Gaussians strictly between the transmitter and this Gaussian.
    pub occluders: Vec<Occluder>,
}

/// Transmitter-side geometry for every Gaussian in a scene. Gaussians lit
/// only from behind have no entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Illumination {
    pub tx: Antenna,
    pub propagation: Propagation,
    pub entries: Vec<Option<Illum>>,
}

impl Illumination {
    pub fn build(scene: &Scene, bvh: &Bvh, tx: &Antenna, propagation: Propagation) -> Result<Self> {
        let entries = scene
            .gaussians()
            .par_iter()
            .enumerate()
            .map(|(i, g)| -> Result<Option<Illum>> {
                let delta = g.mean - tx.position;
                let distance = delta.norm();
                if distance < MIN_PLACEMENT_DISTANCE {
                    return Err(Error::DegeneratePlacement(format!(
                        "gaussian {i} is {distance:e} m from the transmitter"
                    )));
                }
                let direction = delta / distance;
                let cos_in = incidence_cosine(&direction, &g.normal);
                if cos_in == 0.0 {
                    return Ok(None);
                }
                let area = projected_cross_section(g, &direction)?;
                let (_, chain) = visibility_chain(bvh, scene, &tx.position, &g.mean, Some(i));
                Ok(Some(Illum {
                    direction,
                    distance,
                    amplitude: friis_amplitude(tx, area, distance, propagation),
                    cos_in,
                    occluders: chain
                        .hits
                        .iter()
                        .map(|h| Occluder {
                            gaussian: h.gaussian,
                            density: h.density,
                        })
                        .collect(),
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tx: tx.clone(),
            propagation,
            entries,
        })
    }

    /// Visibility `V = Π (1 − α_j)` of Gaussian `i` from the transmitter.
    pub fn visibility(&self, i: usize, attrs: &[RfAttributes]) -> f64 {
        self.entries[i]
            .as_ref()
            .map_or(0.0, |e| e.occluders.iter().map(|o| 1.0 - o.alpha(attrs)).product())
    }
}

/// An occluder on a receive ray, with its distance from the receiver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RxOccluder {
    pub gaussian: usize,
    pub density: f64,
    pub distance: f64,
}

/// Receiver-side geometry of one contributing Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct Contributor {
    pub gaussian: usize,
    /// FoV cell, when binning is enabled.
    pub cell: Option<usize>,
    /// Receive direction (cell centre or exact).
    pub direction: Vec3,
    /// `C^R` at the receive direction.
    pub pattern: Complex64,
    /// Density on the receiver ray.
    pub density: f64,
    /// Distance from the receiver to the Gaussian's mean.
    pub distance: f64,
    pub lobe: LobeTerms,
    /// Gaussians in front of this one on its receiver ray.
    pub occluders: Vec<RxOccluder>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LosPlan {
    pub config: LosConfig,
    pub distance: f64,
    pub occluders: Vec<Occluder>,
}

/// Per-Gaussian derivative of a scalar with respect to the constrained
/// attributes.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttributeGradient {
    pub alpha: f64,
    pub roughness: f64,
    pub gamma_mag: f64,
    pub gamma_phase: f64,
}

impl AttributeGradient {
    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.roughness, self.gamma_mag, self.gamma_phase]
    }

    pub fn add(&mut self, other: &AttributeGradient) {
        self.alpha += other.alpha;
        self.roughness += other.roughness;
        self.gamma_mag += other.gamma_mag;
        self.gamma_phase += other.gamma_phase;
    }
}

/// Everything needed to evaluate one Tx/Rx link for arbitrary attributes.
#[derive(Clone, Debug)]
pub struct LinkPlan {
    pub illumination: Arc<Illumination>,
    pub rx: Antenna,
    pub propagation: Propagation,
    pub attenuation: AttenuationIndex,
    pub s_tx: Complex64,
    pub contributors: Vec<Contributor>,
    pub los: Option<LosPlan>,
}

/// Attribute-independent and attribute-dependent parts of one contribution.
struct Term {
    /// Everything except `Γ` and the contributor's own opacity.
    rest: Complex64,
    own_alpha: f64,
    value: Complex64,
}

impl LinkPlan {
    pub fn build(
        scene: &Scene,
        bvh: &Bvh,
        illumination: Arc<Illumination>,
        rx: &Antenna,
        options: &RenderOptions,
    ) -> Result<Self> {
        let grid = match options.fov {
            FovMode::Grid { step_deg } => Some(FovGrid::with_step(&rx.pattern, step_deg)?),
            FovMode::Exact => None,
        };
        if illumination.propagation != options.propagation {
            return Err(Error::Precondition(
                "illumination was built for a different propagation model".into(),
            ));
        }
        let gaussians = scene.gaussians();
        let contributors = gaussians
            .par_iter()
            .enumerate()
            .map(|(i, g)| -> Result<Option<Contributor>> {
                let delta = g.mean - rx.position;
                let distance = delta.norm();
                if distance < MIN_PLACEMENT_DISTANCE {
                    return Err(Error::DegeneratePlacement(format!(
                        "gaussian {i} is {distance:e} m from the receiver"
                    )));
                }
                let Some(illum) = illumination.entries[i].as_ref() else {
                    return Ok(None);
                };
                let exact = delta / distance;
                let (cell, direction) = match &grid {
                    Some(grid) => match grid.cell_of(&exact) {
                        Some(c) => (Some(c), grid.direction(c)),
                        None => return Ok(None),
                    },
                    None => (None, exact),
                };
                // Receive patterns are frequency independent.
                let pattern = rx.pattern_gain(&direction, 0.0);
                if pattern == Complex64::new(0.0, 0.0) {
                    return Ok(None);
                }
                let lobe = LobeTerms::new(&-direction, &illum.direction, &g.normal);
                if lobe.sqrt_cos_out == 0.0 || lobe.base == 0.0 {
                    return Ok(None);
                }
                let approach = closest_approach(g, &rx.position, &exact);
                if !approach.within_cutoff() {
                    return Ok(None);
                }
                let cutoff = approach.distance * (1.0 - ENDPOINT_EPSILON);
                let chain = trace_ray(bvh, scene, &rx.position, &exact, 0.0, cutoff);
                let occluders = chain
                    .hits
                    .iter()
                    .filter(|h| h.gaussian != i)
                    .map(|h| RxOccluder {
                        gaussian: h.gaussian,
                        density: h.density,
                        distance: (gaussians[h.gaussian].mean - rx.position).norm(),
                    })
                    .collect();
                Ok(Some(Contributor {
                    gaussian: i,
                    cell,
                    direction,
                    pattern,
                    density: approach.density(),
                    distance,
                    lobe,
                    occluders,
                }))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();

        let los = match options.los {
            Some(config) => {
                config.validate()?;
                let tx = &illumination.tx.position;
                let distance = (rx.position - tx).norm();
                if distance < MIN_PLACEMENT_DISTANCE {
                    return Err(Error::DegeneratePlacement(format!(
                        "receiver is {distance:e} m from the transmitter"
                    )));
                }
                let (_, chain) = visibility_chain(bvh, scene, tx, &rx.position, None);
                Some(LosPlan {
                    config,
                    distance,
                    occluders: chain
                        .hits
                        .iter()
                        .map(|h| Occluder {
                            gaussian: h.gaussian,
                            density: h.density,
                        })
                        .collect(),
                })
            }
            None => None,
        };

        Ok(Self {
            illumination,
            rx: rx.clone(),
            propagation: options.propagation,
            attenuation: options.attenuation,
            s_tx: options.s_tx,
            contributors,
            los,
        })
    }

    fn term(&self, c: &Contributor, attrs: &[RfAttributes], lambda: f64) -> Term {
        let illum = self.illumination.entries[c.gaussian]
            .as_ref()
            .expect("contributors are illuminated");
        let a = &attrs[c.gaussian];
        let incident =
            self.s_tx * (illum.amplitude * illum.cos_in) * propagation_phase(illum.distance, lambda, self.propagation);
        let visibility: f64 = illum.occluders.iter().map(|o| 1.0 - o.alpha(attrs)).product();
        let transmittance: f64 = c
            .occluders
            .iter()
            .map(|o| 1.0 - capped_alpha(attrs[o.gaussian].alpha, o.density))
            .product();
        let to_rx = match self.attenuation {
            AttenuationIndex::PerContributor => spreading(c.distance, lambda, self.propagation),
            AttenuationIndex::PerOccluder => c
                .occluders
                .iter()
                .map(|o| spreading(o.distance, lambda, self.propagation))
                .product(),
        };
        let rest = c.pattern * incident * to_rx * (visibility * transmittance * c.lobe.value(a.roughness));
        let own_alpha = capped_alpha(a.alpha, c.density);
        Term {
            rest,
            own_alpha,
            value: a.gamma() * own_alpha * rest,
        }
    }

    fn los_value(&self, los: &LosPlan, attrs: &[RfAttributes], frequency: f64) -> Complex64 {
        let v_vis = match los.config.visibility {
            LosVisibility::Geometric => los.occluders.iter().map(|o| 1.0 - o.alpha(attrs)).product(),
            LosVisibility::Forced(v) => v,
        };
        let lambda = wavelength(frequency);
        let params = los
            .config
            .params(&self.illumination.tx, v_vis, los.distance, lambda, self.propagation);
        self.s_tx * los_term(&params, los.distance, lambda)
    }

    /// Complex contribution of every contributing Gaussian (without LoS).
    pub fn contributions(&self, attrs: &[RfAttributes], frequency: f64) -> Vec<(usize, Complex64)> {
        let lambda = wavelength(frequency);
        self.contributors
            .iter()
            .map(|c| (c.gaussian, self.term(c, attrs, lambda).value))
            .collect()
    }

    /// Received signal `S(f)` for the given attributes.
    pub fn evaluate(&self, attrs: &[RfAttributes], frequency: f64) -> Complex64 {
        let lambda = wavelength(frequency);
        let nlos: Complex64 = self
            .contributors
            .iter()
            .map(|c| self.term(c, attrs, lambda).value)
            .sum();
        match &self.los {
            Some(los) => nlos + self.los_value(los, attrs, frequency),
            None => nlos,
        }
    }

    /// Per-direction signals before receiver integration.
    pub fn directional(&self, attrs: &[RfAttributes], frequency: f64) -> DirectionalRender {
        let lambda = wavelength(frequency);
        let mut samples: Vec<(Option<usize>, DirectionalSample)> = Vec::new();
        for c in &self.contributors {
            let pattern = c.pattern;
            let signal = if pattern.norm() > 0.0 {
                self.term(c, attrs, lambda).value / pattern
            } else {
                Complex64::new(0.0, 0.0)
            };
            match samples.iter_mut().find(|(cell, _)| c.cell.is_some() && *cell == c.cell) {
                Some((_, s)) => {
                    s.signal += signal;
                    s.count += 1;
                }
                None => samples.push((
                    c.cell,
                    DirectionalSample {
                        direction: c.direction,
                        signal,
                        count: 1,
                    },
                )),
            }
        }
        DirectionalRender {
            samples: samples.into_iter().map(|(_, s)| s).collect(),
        }
    }

    /// Accumulates `Re(conj(upstream) · ∂S/∂θ)` into `grads` for every
    /// constrained attribute θ, where `S` is [`LinkPlan::evaluate`].
    pub fn backward(
        &self,
        attrs: &[RfAttributes],
        frequency: f64,
        upstream: Complex64,
        grads: &mut [AttributeGradient],
    ) -> Result<()> {
        let lambda = wavelength(frequency);
        let up = upstream.conj();
        let occluder_grad = |o_alpha: f64, density: f64, capped: bool, value: Complex64| -> f64 {
            if capped {
                0.0
            } else {
                -density * (up * value).re / (1.0 - o_alpha)
            }
        };
        for c in &self.contributors {
            let l = c.gaussian;
            let a = &attrs[l];
            let t = self.term(c, attrs, lambda);
            let re_value = (up * t.value).re;
            let phase = Complex64::from_polar(1.0, a.gamma_phase);
            let g = &mut grads[l];
            g.gamma_phase += (up * Complex64::i() * t.value).re;
            g.gamma_mag += (up * phase * t.own_alpha * t.rest).re;
            g.roughness += re_value * c.lobe.base.ln();
            if a.alpha * c.density < ALPHA_MAX {
                g.alpha += (up * a.gamma() * c.density * t.rest).re;
            }
            check_finite(l, g)?;
            let illum = self.illumination.entries[l].as_ref().expect("illuminated");
            for o in &illum.occluders {
                grads[o.gaussian].alpha += occluder_grad(o.alpha(attrs), o.density, o.capped(attrs), t.value);
            }
            for o in &c.occluders {
                let oa = capped_alpha(attrs[o.gaussian].alpha, o.density);
                let capped = attrs[o.gaussian].alpha * o.density >= ALPHA_MAX;
                grads[o.gaussian].alpha += occluder_grad(oa, o.density, capped, t.value);
            }
        }
        if let Some(los) = &self.los {
            if los.config.visibility == LosVisibility::Geometric {
                let value = self.los_value(los, attrs, frequency);
                for o in &los.occluders {
                    grads[o.gaussian].alpha += occluder_grad(o.alpha(attrs), o.density, o.capped(attrs), value);
                }
            }
        }
        for (i, g) in grads.iter().enumerate() {
            check_finite(i, g)?;
        }
        Ok(())
    }
}

fn check_finite(gaussian: usize, g: &AttributeGradient) -> Result<()> {
    let terms = [
        (g.alpha, "alpha gradient"),
        (g.roughness, "roughness gradient"),
        (g.gamma_mag, "|Γ| gradient"),
        (g.gamma_phase, "∠Γ gradient"),
    ];
    match terms.iter().find(|(v, _)| !v.is_finite()) {
        Some((_, term)) => Err(Error::NonFinite { gaussian, term }),
        None => Ok(()),
    }
}
