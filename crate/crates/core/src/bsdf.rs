//! Local scattering on a single Gaussian: specular direction, the directive
//! scattering lobe, and the local rendering sum producing `s_out`.

use num_complex::Complex64;

use crate::scene::{RfAttributes, Vec3};

/// One incident field sample at a Gaussian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentSample {
    /// Unit propagation direction, pointing from the source toward the Gaussian.
    pub direction: Vec3,
    pub field: Complex64,
    /// Solid-angle weight (steradians); 1 for point sources.
    pub solid_angle: f64,
}

/// Outgoing direction (from the Gaussian toward the receiver) and frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterQuery {
    pub direction: Vec3,
    pub frequency: f64,
}

/// Mirror reflection `ω_r = ω_i − 2(ω_i·n)n`.
pub fn specular_direction(omega_i: &Vec3, n: &Vec3) -> Vec3 {
    omega_i - n * (2.0 * omega_i.dot(n))
}

/// The two factors of the scattering pattern: `√cos θ_o` and the lobe base
/// `(1 + cos ψ)/2`, so that `F = sqrt_cos · base^R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LobeTerms {
    pub sqrt_cos_out: f64,
    pub base: f64,
}

impl LobeTerms {
    pub fn new(omega_o: &Vec3, omega_i: &Vec3, n: &Vec3) -> Self {
        let cos_out = omega_o.dot(n).clamp(0.0, 1.0);
        let r = specular_direction(omega_i, n);
        let cos_psi = omega_o.dot(&r).clamp(-1.0, 1.0);
        Self {
            sqrt_cos_out: cos_out.sqrt(),
            base: 0.5 * (1.0 + cos_psi),
        }
    }

    pub fn value(&self, roughness: f64) -> f64 {
        if self.sqrt_cos_out == 0.0 {
            return 0.0;
        }
        self.sqrt_cos_out * self.base.powf(roughness)
    }
}

/// Directive pattern `F = √cos θ_o · ((1 + cos ψ)/2)^R`, zero for outgoing
/// directions behind the surface.
pub fn scattering_pattern(omega_o: &Vec3, omega_i: &Vec3, n: &Vec3, roughness: f64) -> f64 {
    LobeTerms::new(omega_o, omega_i, n).value(roughness)
}

/// Foreshortening of an incident direction: `max(0, −ω_i·n)`.
pub fn incidence_cosine(omega_i: &Vec3, n: &Vec3) -> f64 {
    (-omega_i.dot(n)).max(0.0)
}

/// `s_out = Σ Γ · F(ω_o, ω_i) · s_in · max(0, −ω_i·n) · Δω`.
pub fn local_scatter(
    normal: &Vec3,
    attributes: &RfAttributes,
    incidents: &[IncidentSample],
    query: &ScatterQuery,
) -> Complex64 {
    let sum: Complex64 = incidents
        .iter()
        .map(|s| {
            let f = scattering_pattern(&query.direction, &s.direction, normal, attributes.roughness);
            s.field * (f * incidence_cosine(&s.direction, normal) * s.solid_angle)
        })
        .sum();
    attributes.gamma() * sum
}
