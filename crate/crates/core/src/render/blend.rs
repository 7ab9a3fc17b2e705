//! Per-direction alpha-blending and receiver pattern integration.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{AttenuationIndex, Propagation};
use crate::bvh::Bvh;
use crate::scene::{wavelength, Antenna, Scene, Vec3};
use crate::visibility::{propagation_phase, trace_ray, ENDPOINT_EPSILON};

/// Gaussian-to-receiver factor `√(1/(4π d²)) · e^{−j2πd/λ}`, or 1 with
/// propagation terms disabled.
pub(crate) fn spreading(distance: f64, wavelength: f64, propagation: Propagation) -> Complex64 {
    match propagation {
        Propagation::Full => propagation_phase(distance, wavelength, propagation) / ((4.0 * PI).sqrt() * distance),
        Propagation::ScatteringOnly => Complex64::new(1.0, 0.0),
    }
}

/// Coherent blend along one receive ray:
/// `S(ω) = Σ_l s_out(l) · α_l · Π_{m<l} (1 − α_m) · √(1/(4π d_l²)) · e^{−j2πd_l/λ}`.
///
/// Every Gaussian intersected by the ray occludes those behind it; only
/// Gaussians with `Some` outgoing field in `s_out` (indexed by Gaussian)
/// contribute. `d_l` is the distance from the receiver to the Gaussian's
/// mean. Occluders within `1e-6·t_l` of a contributor do not attenuate it.
#[allow(clippy::too_many_arguments)]
pub fn blend_direction(
    scene: &Scene,
    bvh: &Bvh,
    rx_position: &Vec3,
    omega: &Vec3,
    s_out: &[Option<Complex64>],
    frequency: f64,
    propagation: Propagation,
    attenuation: AttenuationIndex,
) -> Complex64 {
    let lambda = wavelength(frequency);
    let chain = trace_ray(bvh, scene, rx_position, omega, 0.0, f64::INFINITY);
    let gaussians = scene.gaussians();
    let dist = |i: usize| (gaussians[i].mean - rx_position).norm();
    let mut total = Complex64::new(0.0, 0.0);
    for (k, hit) in chain.hits.iter().enumerate() {
        let Some(s) = s_out.get(hit.gaussian).copied().flatten() else {
            continue;
        };
        let cutoff = hit.distance * (1.0 - ENDPOINT_EPSILON);
        let mut weight = Complex64::new(hit.alpha, 0.0);
        for m in chain.hits[..k].iter().filter(|m| m.distance < cutoff) {
            weight *= 1.0 - m.alpha;
            if attenuation == AttenuationIndex::PerOccluder {
                weight *= spreading(dist(m.gaussian), lambda, propagation);
            }
        }
        if attenuation == AttenuationIndex::PerContributor {
            weight *= spreading(dist(hit.gaussian), lambda, propagation);
        }
        total += s * weight;
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionalSample {
    pub direction: Vec3,
    pub signal: Complex64,
    /// Gaussians contributing to this direction.
    pub count: usize,
}

/// Per-direction signals `S(ω, f)` for the directions that received any
/// contribution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DirectionalRender {
    pub samples: Vec<DirectionalSample>,
}

/// `S(f) = Σ_ω C^R(ω, f) · S(ω, f)`.
pub fn integrate_receiver(render: &DirectionalRender, rx: &Antenna, frequency: f64) -> Complex64 {
    render
        .samples
        .iter()
        .map(|s| rx.pattern_gain(&s.direction, frequency) * s.signal)
        .sum()
}
