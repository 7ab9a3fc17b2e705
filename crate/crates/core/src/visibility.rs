//! Ray/Gaussian opacity, transmittance along segments, and the Friis
//! incident field at each Gaussian.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bsdf::IncidentSample;
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::geometry::projected_cross_section;
use crate::render::Propagation;
use crate::scene::{Antenna, RfGaussian, Scene, Vec3};

/// Per-hop opacity cap; transmittance never reaches exactly zero.
pub const ALPHA_MAX: f64 = 0.99;

/// Gaussians farther than this many sigmas from a ray do not touch it.
pub const MAHALANOBIS_CUTOFF: f64 = 3.0;

/// Relative half-width of the window around segment endpoints in which
/// Gaussians are not counted as occluders.
pub const ENDPOINT_EPSILON: f64 = 1e-6;

/// Closest point to the segment endpoints below which a placement is degenerate (m).
pub const MIN_PLACEMENT_DISTANCE: f64 = 1e-6;

/// Closest approach of a ray to a Gaussian, in the Mahalanobis metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approach {
    pub distance: f64,
    pub mahalanobis_sq: f64,
}

impl Approach {
    pub fn density(&self) -> f64 {
        (-0.5 * self.mahalanobis_sq).exp()
    }

    pub fn within_cutoff(&self) -> bool {
        self.mahalanobis_sq <= MAHALANOBIS_CUTOFF * MAHALANOBIS_CUTOFF
    }
}

/// Ray parameter minimizing the Mahalanobis distance to the Gaussian's mean,
/// together with that distance. Computed in the whitened frame.
pub fn closest_approach(g: &RfGaussian, origin: &Vec3, dir: &Vec3) -> Approach {
    let o = g.whiten(&(origin - g.mean));
    let d = g.whiten(dir);
    let t = -o.dot(&d) / d.norm_squared();
    Approach {
        distance: t,
        mahalanobis_sq: (o + d * t).norm_squared(),
    }
}

/// Opacity a Gaussian contributes to a ray, `min(α·G(x*), 0.99)` at the
/// closest-approach point `x*`, and the ray parameter of `x*`. Zero beyond
/// the 3-sigma cutoff.
pub fn ray_gaussian_alpha(g: &RfGaussian, origin: &Vec3, dir: &Vec3) -> (f64, f64) {
    let a = closest_approach(g, origin, dir);
    if !a.within_cutoff() {
        return (0.0, a.distance);
    }
    (capped_alpha(g.attributes.alpha, a.density()), a.distance)
}

pub fn capped_alpha(alpha: f64, density: f64) -> f64 {
    (alpha * density).min(ALPHA_MAX)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub gaussian: usize,
    pub distance: f64,
    /// Geometric density at the closest approach (attribute independent).
    pub density: f64,
    /// Opacity contribution under the scene's current attributes.
    pub alpha: f64,
}

/// Hits along a ray, ascending by distance (ties broken by Gaussian index).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RayHitChain {
    pub hits: Vec<RayHit>,
}

impl RayHitChain {
    pub fn transmittance(&self) -> f64 {
        self.hits.iter().map(|h| 1.0 - h.alpha).product()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// All Gaussians whose closest approach lies strictly inside `(t_min, t_max)`
/// and within the 3-sigma cutoff.
pub fn trace_ray(bvh: &Bvh, scene: &Scene, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> RayHitChain {
    let gaussians = scene.gaussians();
    let mut hits: Vec<RayHit> = bvh
        .candidates(origin, dir, t_min, t_max)
        .into_iter()
        .filter_map(|i| {
            let g = &gaussians[i];
            let a = closest_approach(g, origin, dir);
            (a.within_cutoff() && a.distance > t_min && a.distance < t_max).then(|| {
                let density = a.density();
                RayHit {
                    gaussian: i,
                    distance: a.distance,
                    density,
                    alpha: capped_alpha(g.attributes.alpha, density),
                }
            })
        })
        .collect();
    sort_hits(&mut hits);
    RayHitChain { hits }
}

pub(crate) fn sort_hits(hits: &mut [RayHit]) {
    hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.gaussian.cmp(&b.gaussian)));
}

/// Transmittance `V = Π (1 − α_j)` over Gaussians strictly between `from`
/// and `to` (outside an endpoint window of `1e-6·span`), with `exclude`
/// (usually the destination Gaussian) left out.
pub fn visibility_chain(
    bvh: &Bvh,
    scene: &Scene,
    from: &Vec3,
    to: &Vec3,
    exclude: Option<usize>,
) -> (f64, RayHitChain) {
    let delta = to - from;
    let span = delta.norm();
    if !(span > 0.0) {
        return (1.0, RayHitChain::default());
    }
    let dir = delta / span;
    let eps = ENDPOINT_EPSILON * span;
    let mut chain = trace_ray(bvh, scene, from, &dir, eps, span - eps);
    if let Some(x) = exclude {
        chain.hits.retain(|h| h.gaussian != x);
    }
    (chain.transmittance(), chain)
}

/// Free-space amplitude factor `√(P_T G_T A / (4π d²))` (or `√(P_T G_T A)`
/// with path loss disabled).
pub fn friis_amplitude(tx: &Antenna, area: f64, distance: f64, propagation: Propagation) -> f64 {
    let pga = tx.power_watts * tx.gain * area;
    match propagation {
        Propagation::Full => (pga / (4.0 * PI * distance * distance)).sqrt(),
        Propagation::ScatteringOnly => pga.sqrt(),
    }
}

/// `e^{−j 2π d / λ}`, or 1 with propagation phase disabled.
pub fn propagation_phase(distance: f64, wavelength: f64, propagation: Propagation) -> Complex64 {
    match propagation {
        Propagation::Full => Complex64::from_polar(1.0, -2.0 * PI * distance / wavelength),
        Propagation::ScatteringOnly => Complex64::new(1.0, 0.0),
    }
}

/// Incident field at a Gaussian from a point transmitter:
/// `√(P_T G_T A / (4π d²)) · V · s_tx · e^{−j2πd/λ}`.
pub fn incident_field(
    tx: &Antenna,
    g: &RfGaussian,
    visibility: f64,
    wavelength: f64,
    s_tx: Complex64,
) -> Result<IncidentSample> {
    incident_field_with(tx, g, visibility, wavelength, s_tx, Propagation::Full)
}

pub fn incident_field_with(
    tx: &Antenna,
    g: &RfGaussian,
    visibility: f64,
    wavelength: f64,
    s_tx: Complex64,
    propagation: Propagation,
) -> Result<IncidentSample> {
    let delta = g.mean - tx.position;
    let d = delta.norm();
    if d < MIN_PLACEMENT_DISTANCE {
        return Err(Error::DegeneratePlacement(format!(
            "gaussian at {:?} is {d:e} m from the transmitter",
            g.mean.as_slice()
        )));
    }
    let direction = delta / d;
    let area = projected_cross_section(g, &direction)?;
    let amp = friis_amplitude(tx, area, d, propagation) * visibility;
    Ok(IncidentSample {
        direction,
        field: s_tx * amp * propagation_phase(d, wavelength, propagation),
        solid_angle: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvh::build_bvh;
    use crate::scene::RfAttributes;
    use approx::assert_relative_eq;

    fn blob(mean: Vec3, alpha: f64) -> RfGaussian {
        RfGaussian::new(
            mean,
            Vec3::repeat(0.2),
            Vec3::z(),
            RfAttributes {
                alpha,
                ..Default::default()
            },
        )
    }

    #[test]
    fn alpha_through_center() {
        let g = blob(Vec3::new(3.0, 0.0, 0.0), 0.8);
        let (a, t) = ray_gaussian_alpha(&g, &Vec3::zeros(), &Vec3::x());
        assert_relative_eq!(a, 0.8, epsilon = 1e-15);
        assert_relative_eq!(t, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn alpha_at_one_sigma_and_beyond_cutoff() {
        let g = blob(Vec3::new(3.0, 0.2, 0.0), 0.8);
        let (a, _) = ray_gaussian_alpha(&g, &Vec3::zeros(), &Vec3::x());
        assert_relative_eq!(a, 0.4852245277701067, epsilon = 1e-14);
        let far = blob(Vec3::new(3.0, 0.8, 0.0), 0.8);
        assert_eq!(ray_gaussian_alpha(&far, &Vec3::zeros(), &Vec3::x()).0, 0.0);
    }

    #[test]
    fn alpha_is_capped() {
        let g = blob(Vec3::new(1.0, 0.0, 0.0), 1.0);
        assert_eq!(ray_gaussian_alpha(&g, &Vec3::zeros(), &Vec3::x()).0, ALPHA_MAX);
    }

    #[test]
    fn visibility_examples() {
        let from = Vec3::zeros();
        let to = Vec3::new(10.0, 0.0, 0.0);
        let empty = Scene::empty();
        assert_eq!(visibility_chain(&build_bvh(&empty), &empty, &from, &to, None).0, 1.0);

        let one = Scene::from_gaussians(vec![blob(Vec3::new(5.0, 0.0, 0.0), 1.0)]);
        let (v, chain) = visibility_chain(&build_bvh(&one), &one, &from, &to, None);
        assert_relative_eq!(v, 0.01, epsilon = 1e-15);
        assert_eq!(chain.len(), 1);

        let two = Scene::from_gaussians(vec![
            blob(Vec3::new(6.0, 0.0, 0.0), 0.5),
            blob(Vec3::new(3.0, 0.0, 0.0), 0.3),
        ]);
        let (v, chain) = visibility_chain(&build_bvh(&two), &two, &from, &to, None);
        assert_relative_eq!(v, 0.35, epsilon = 1e-15);
        assert_eq!(chain.hits[0].gaussian, 1);
    }

    #[test]
    fn visibility_excludes_destination_and_endpoints() {
        let scene = Scene::from_gaussians(vec![
            blob(Vec3::new(3.0, 0.0, 0.0), 0.5),
            blob(Vec3::new(6.0, 0.0, 0.0), 0.5),
        ]);
        let bvh = build_bvh(&scene);
        let (v, _) = visibility_chain(&bvh, &scene, &Vec3::zeros(), &scene.gaussians()[1].mean, Some(1));
        assert_relative_eq!(v, 0.5);
        // Endpoint at a Gaussian center: that Gaussian sits inside the window.
        let (v, _) = visibility_chain(&bvh, &scene, &Vec3::zeros(), &scene.gaussians()[1].mean, None);
        assert_relative_eq!(v, 0.5);
    }

    #[test]
    fn visibility_is_reciprocal() {
        let scene = Scene::from_gaussians(vec![
            blob(Vec3::new(3.0, 0.1, 0.0), 0.7),
            blob(Vec3::new(6.0, -0.1, 0.05), 0.4),
        ]);
        let bvh = build_bvh(&scene);
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(9.0, 0.0, 0.1);
        let (v1, _) = visibility_chain(&bvh, &scene, &a, &b, None);
        let (v2, _) = visibility_chain(&bvh, &scene, &b, &a, None);
        assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn ties_break_by_index() {
        let scene = Scene::from_gaussians(vec![
            blob(Vec3::new(3.0, 0.0, 0.0), 0.5),
            blob(Vec3::new(3.0, 0.0, 0.0), 0.5),
        ]);
        let chain = trace_ray(&build_bvh(&scene), &scene, &Vec3::zeros(), &Vec3::x(), 0.0, 10.0);
        assert_eq!(chain.hits.iter().map(|h| h.gaussian).collect::<Vec<_>>(), vec![0, 1]);
    }

    fn sphere_for_area(mean: Vec3) -> RfGaussian {
        // π r² = 4π for r = 2.
        RfGaussian::new(mean, Vec3::repeat(2.0), Vec3::z(), RfAttributes::default())
    }

    #[test]
    fn incident_field_examples() {
        let tx = Antenna::omni(Vec3::zeros());
        let g = sphere_for_area(Vec3::new(1.0, 0.0, 0.0));
        let one = Complex64::new(1.0, 0.0);
        let s = incident_field(&tx, &g, 1.0, 1.0, one).unwrap();
        assert!((s.field - one).norm() < 1e-12);
        assert_eq!(s.direction, Vec3::x());
        assert_eq!(s.solid_angle, 1.0);

        let g2 = sphere_for_area(Vec3::new(2.0, 0.0, 0.0));
        let s = incident_field(&tx, &g2, 1.0, 1.0, one).unwrap();
        assert!((s.field - Complex64::new(0.5, 0.0)).norm() < 1e-12);

        let s = incident_field(&tx, &g, 0.0, 1.0, one).unwrap();
        assert_eq!(s.field.norm(), 0.0);

        let at_tx = sphere_for_area(Vec3::new(1e-8, 0.0, 0.0));
        assert!(matches!(
            incident_field(&tx, &at_tx, 1.0, 1.0, one),
            Err(Error::DegeneratePlacement(_))
        ));
    }

    #[test]
    fn incident_power_drops_six_db_per_doubling() {
        let tx = Antenna::omni(Vec3::zeros());
        let lambda = 0.125;
        let one = Complex64::new(1.0, 0.0);
        let mut prev: Option<(f64, Complex64)> = None;
        for d in [1.0f64, 2.0, 4.0, 8.0] {
            let g = blob(Vec3::new(d, 0.0, 0.0), 0.5);
            let s = incident_field(&tx, &g, 1.0, lambda, one).unwrap().field;
            if let Some((pd, ps)) = prev {
                let drop = 10.0 * (ps.norm_sqr() / s.norm_sqr()).log10();
                assert!((drop - 20.0 * 2f64.log10()).abs() < 1e-9);
                let dphase = (s / ps).arg();
                let expected = crate::scene::canonical_phase(-2.0 * PI * (d - pd) / lambda);
                assert!((crate::scene::canonical_phase(dphase - expected)).abs() < 1e-9);
            }
            prev = Some((d, s));
        }
    }
}
