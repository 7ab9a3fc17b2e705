//! Brute-force forward model: an exact loop over Gaussians with all-pairs
//! segment checks, no acceleration structure and no direction binning.
//!
//! Closest approaches here use the explicit inverse covariance rather than
//! the whitening transform of the main renderer.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rfsplat::render::{AttenuationIndex, LosVisibility, Propagation, RenderOptions};
use rfsplat::scene::{wavelength, AntennaPattern};
use rfsplat::{Antenna, Error, Result, RfGaussian, Scene, Vec3};

/// Largest scene the oracle accepts; cost grows with the square of the count.
pub const MAX_GAUSSIANS: usize = 2000;

const CUTOFF_SQ: f64 = 9.0;
const ALPHA_CAP: f64 = 0.99;
const WINDOW: f64 = 1e-6;
const MIN_DISTANCE: f64 = 1e-6;

fn inverse_covariance(g: &RfGaussian) -> Matrix3<f64> {
    let q = g.rotation.normalize();
    let w = q.w;
    let (x, y, z) = (q.i, q.j, q.k);
    let r = Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    );
    let s2 = Matrix3::from_diagonal(&g.scale.component_mul(&g.scale));
    (r * s2 * r.transpose())
        .try_inverse()
        .expect("validated scales are positive")
}

/// `(t*, m²)`: ray parameter of the closest approach in the Mahalanobis
/// metric and the squared distance there.
pub fn closest_point(g: &RfGaussian, origin: &Vec3, dir: &Vec3) -> (f64, f64) {
    let inv = inverse_covariance(g);
    let o = origin - g.mean;
    let t = -(o.transpose() * inv * dir)[(0, 0)] / (dir.transpose() * inv * dir)[(0, 0)];
    let p = o + dir * t;
    (t, (p.transpose() * inv * p)[(0, 0)])
}

fn opacity(alpha: f64, m_sq: f64) -> f64 {
    (alpha * (-0.5 * m_sq).exp()).min(ALPHA_CAP)
}

/// An occluder found by the all-pairs segment check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentHit {
    pub gaussian: usize,
    pub distance: f64,
    pub alpha: f64,
}

/// Every Gaussian whose closest approach to the segment lies strictly inside
/// the open window `(ε, span − ε)`, `ε = 1e-6·span`, within three sigmas,
/// sorted by distance then index; and the product `Π (1 − α)`.
pub fn segment_visibility(scene: &Scene, from: &Vec3, to: &Vec3, exclude: Option<usize>) -> (f64, Vec<SegmentHit>) {
    let span = (to - from).norm();
    if !(span > 0.0) {
        return (1.0, Vec::new());
    }
    let dir = (to - from) / span;
    let eps = WINDOW * span;
    let mut hits: Vec<SegmentHit> = scene
        .gaussians()
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != exclude)
        .filter_map(|(j, g)| {
            let (t, m_sq) = closest_point(g, from, &dir);
            (m_sq <= CUTOFF_SQ && t > eps && t < span - eps).then(|| SegmentHit {
                gaussian: j,
                distance: t,
                alpha: opacity(g.attributes.alpha, m_sq),
            })
        })
        .collect();
    hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.gaussian.cmp(&b.gaussian)));
    (hits.iter().map(|h| 1.0 - h.alpha).product(), hits)
}

/// `π s₁s₂s₃ √(nᵀ Σ⁻¹ n)` from the explicit inverse covariance.
pub fn cross_section(g: &RfGaussian, n: &Vec3) -> f64 {
    let inv = inverse_covariance(g);
    PI * g.scale.x * g.scale.y * g.scale.z * (n.transpose() * inv * n)[(0, 0)].sqrt()
}

fn receive_gain(rx: &Antenna, dir: &Vec3) -> f64 {
    match &rx.pattern {
        AntennaPattern::Omni => 1.0,
        AntennaPattern::DirectionalHorn { boresight, exponent } => dir.dot(boresight).max(0.0).powf(*exponent),
    }
}

fn lobe(omega_o: &Vec3, omega_i: &Vec3, n: &Vec3, roughness: f64) -> f64 {
    let cos_o = omega_o.dot(n);
    if cos_o <= 0.0 {
        return 0.0;
    }
    let mirror = omega_i - n * (2.0 * omega_i.dot(n));
    let cos_psi = omega_o.dot(&mirror).clamp(-1.0, 1.0);
    cos_o.min(1.0).sqrt() * (0.5 * (1.0 + cos_psi)).powf(roughness)
}

fn phasor(distance: f64, lambda: f64, sign: f64, propagation: Propagation) -> Complex64 {
    match propagation {
        Propagation::Full => Complex64::from_polar(1.0, sign * 2.0 * PI * distance / lambda),
        Propagation::ScatteringOnly => Complex64::new(1.0, 0.0),
    }
}

fn spreading(distance: f64, lambda: f64, propagation: Propagation) -> Complex64 {
    match propagation {
        Propagation::Full => phasor(distance, lambda, -1.0, propagation) / ((4.0 * PI).sqrt() * distance),
        Propagation::ScatteringOnly => Complex64::new(1.0, 0.0),
    }
}

/// Received signal at one frequency. Every Gaussian is seen along its exact
/// receiver direction; the FoV setting in `options` is ignored.
pub fn brute_force_render(
    scene: &Scene,
    tx: &Antenna,
    rx: &Antenna,
    frequency: f64,
    options: &RenderOptions,
) -> Result<Complex64> {
    if scene.len() > MAX_GAUSSIANS {
        return Err(Error::Precondition(format!(
            "oracle refuses scenes above {MAX_GAUSSIANS} Gaussians (got {})",
            scene.len()
        )));
    }
    let lambda = wavelength(frequency);
    let prop = options.propagation;
    let gaussians = scene.gaussians();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, g) in gaussians.iter().enumerate() {
        let d_tx = (g.mean - tx.position).norm();
        let d_rx = (g.mean - rx.position).norm();
        if d_tx < MIN_DISTANCE || d_rx < MIN_DISTANCE {
            return Err(Error::DegeneratePlacement(format!(
                "gaussian {i} coincides with an antenna"
            )));
        }
        let omega_i = (g.mean - tx.position) / d_tx;
        let cos_in = -omega_i.dot(&g.normal);
        if cos_in <= 0.0 {
            continue;
        }
        let omega = (g.mean - rx.position) / d_rx;
        let c_r = receive_gain(rx, &omega);
        let f = lobe(&-omega, &omega_i, &g.normal, g.attributes.roughness);
        if c_r == 0.0 || f == 0.0 {
            continue;
        }
        let (t_own, m_own) = closest_point(g, &rx.position, &omega);
        if m_own > CUTOFF_SQ {
            continue;
        }
        let amplitude = match prop {
            Propagation::Full => {
                (tx.power_watts * tx.gain * cross_section(g, &omega_i) / (4.0 * PI * d_tx * d_tx)).sqrt()
            }
            Propagation::ScatteringOnly => (tx.power_watts * tx.gain * cross_section(g, &omega_i)).sqrt(),
        };
        let (v, _) = segment_visibility(scene, &tx.position, &g.mean, Some(i));
        let incident = options.s_tx * amplitude * v * phasor(d_tx, lambda, -1.0, prop);

        let limit = t_own * (1.0 - WINDOW);
        let mut transmittance = 1.0;
        let mut hop = Complex64::new(1.0, 0.0);
        for (j, o) in gaussians.iter().enumerate() {
            if j == i {
                continue;
            }
            let (t, m_sq) = closest_point(o, &rx.position, &omega);
            if m_sq <= CUTOFF_SQ && t > 0.0 && t < limit {
                transmittance *= 1.0 - opacity(o.attributes.alpha, m_sq);
                hop *= spreading((o.mean - rx.position).norm(), lambda, prop);
            }
        }
        let to_rx = match options.attenuation {
            AttenuationIndex::PerContributor => spreading(d_rx, lambda, prop),
            AttenuationIndex::PerOccluder => hop,
        };
        let s_out = g.attributes.gamma() * f * cos_in * incident;
        total += s_out * opacity(g.attributes.alpha, m_own) * transmittance * to_rx * c_r;
    }
    if let Some(los) = &options.los {
        let d = (rx.position - tx.position).norm();
        if d < MIN_DISTANCE {
            return Err(Error::DegeneratePlacement(
                "receiver coincides with the transmitter".into(),
            ));
        }
        let v_vis = match los.visibility {
            LosVisibility::Geometric => segment_visibility(scene, &tx.position, &rx.position, None).0,
            LosVisibility::Forced(v) => v,
        };
        let c_dis = match prop {
            Propagation::Full => los.c_dis_ref * lambda / (4.0 * PI * d),
            Propagation::ScatteringOnly => los.c_dis_ref,
        };
        let strength = los.s_tx_strength * (tx.power_watts * tx.gain).sqrt();
        total += options.s_tx * v_vis * strength * c_dis * Complex64::from_polar(1.0, 2.0 * PI * d / lambda);
    }
    Ok(total)
}
