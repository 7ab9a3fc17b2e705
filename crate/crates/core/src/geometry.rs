//! Pure geometric math on Gaussians: density, projected cross-section, and
//! the depth/normal map evaluators used to regularize geometry.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::scene::{RfGaussian, Scene, Vec3};
use crate::visibility::trace_ray;

/// Largest covariance condition number accepted by [`projected_cross_section`].
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

/// Squared Mahalanobis distance of `x` from the Gaussian's mean.
pub fn mahalanobis_sq(g: &RfGaussian, x: &Vec3) -> f64 {
    g.whiten(&(x - g.mean)).norm_squared()
}

/// Unnormalized density `exp(-½ (x−μ)ᵀ Σ⁻¹ (x−μ))`, equal to 1 at the mean.
pub fn gaussian_density(g: &RfGaussian, x: &Vec3) -> f64 {
    (-0.5 * mahalanobis_sq(g, x)).exp()
}

/// Area of the 1-sigma ellipsoid's silhouette seen along `direction`:
/// `π √det(Σ) √(nᵀ Σ⁻¹ n)`.
pub fn projected_cross_section(g: &RfGaussian, direction: &Vec3) -> Result<f64> {
    let smin = g.scale.min();
    let smax = g.scale.max();
    if !(smin > 0.0) {
        return Err(Error::Numerical("covariance is not positive-definite".into()));
    }
    let cond = (smax / smin).powi(2);
    if cond > MAX_CONDITION_NUMBER {
        return Err(Error::Numerical(format!(
            "covariance condition number {cond:e} exceeds {MAX_CONDITION_NUMBER:e}"
        )));
    }
    let n = direction.normalize();
    let sqrt_det = g.scale.x * g.scale.y * g.scale.z;
    let quad = g.whiten(&n).norm_squared();
    Ok(PI * sqrt_det * quad.sqrt())
}

/// Camera rays for depth/normal evaluation, stored row-major (`H×W`).
#[derive(Clone, Debug)]
pub struct CameraRayBundle {
    pub origin: Vec3,
    pub height: usize,
    pub width: usize,
    pub directions: Vec<Vec3>,
    pub intrinsics: String,
}

impl CameraRayBundle {
    /// Pinhole camera looking along `forward` with the given vertical field
    /// of view. Image rows run along `-up`, columns along `forward × up`.
    pub fn pinhole(origin: Vec3, forward: Vec3, up: Vec3, fov_y_deg: f64, height: usize, width: usize) -> Self {
        let f = forward.normalize();
        let right = f.cross(&up).normalize();
        let true_up = right.cross(&f);
        let half = (fov_y_deg.to_radians() * 0.5).tan();
        let aspect = width as f64 / height as f64;
        let mut directions = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                let v = (1.0 - 2.0 * (r as f64 + 0.5) / height as f64) * half;
                let u = (2.0 * (c as f64 + 0.5) / width as f64 - 1.0) * half * aspect;
                directions.push((f + right * u + true_up * v).normalize());
            }
        }
        Self {
            origin,
            height,
            width,
            directions,
            intrinsics: format!("pinhole fov_y={fov_y_deg}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions.len() != self.height * self.width {
            return Err(Error::Validation("ray grid size mismatch".into()));
        }
        if self.directions.iter().any(|d| (d.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::Validation("ray directions must be unit-norm".into()));
        }
        Ok(())
    }
}

/// Blended geometry of one pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PixelMoments {
    pub depth: f64,
    pub depth_sq: f64,
    pub normal: Vec3,
    pub weight: f64,
}

/// Front-to-back compositing of `(depth, alpha, normal)` samples with
/// weights `ω_i = α_i Π_{j<i} (1 − α_j)`. Samples must already be sorted.
pub fn composite_samples(samples: &[(f64, f64, Vec3)]) -> PixelMoments {
    let mut out = PixelMoments::default();
    let mut transmittance = 1.0;
    for &(d, a, n) in samples {
        let w = a * transmittance;
        out.depth += w * d;
        out.depth_sq += w * d * d;
        out.normal += n * w;
        out.weight += w;
        transmittance *= 1.0 - a;
    }
    out
}

/// Depth, normal, depth second-moment and weight maps (`H×W`, row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryMaps {
    pub height: usize,
    pub width: usize,
    pub origin: Vec3,
    pub directions: Vec<Vec3>,
    pub depth: Vec<f64>,
    pub normal: Vec<Vec3>,
    pub depth_sq: Vec<f64>,
    pub weight: Vec<f64>,
}

impl GeometryMaps {
    pub fn from_pixels(rays: &CameraRayBundle, pixels: &[PixelMoments]) -> Self {
        Self {
            height: rays.height,
            width: rays.width,
            origin: rays.origin,
            directions: rays.directions.clone(),
            depth: pixels.iter().map(|p| p.depth).collect(),
            normal: pixels.iter().map(|p| p.normal).collect(),
            depth_sq: pixels.iter().map(|p| p.depth_sq).collect(),
            weight: pixels.iter().map(|p| p.weight).collect(),
        }
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + c
    }

    fn covered(&self, r: usize, c: usize) -> bool {
        self.weight[self.idx(r, c)] > 0.0
    }

    /// Interior pixel whose 4-neighbourhood is fully covered.
    fn has_gradient(&self, r: usize, c: usize) -> bool {
        r > 0
            && c > 0
            && r + 1 < self.height
            && c + 1 < self.width
            && self.covered(r, c)
            && self.covered(r - 1, c)
            && self.covered(r + 1, c)
            && self.covered(r, c - 1)
            && self.covered(r, c + 1)
    }

    fn point(&self, r: usize, c: usize) -> Vec3 {
        let i = self.idx(r, c);
        self.origin + self.directions[i] * self.depth[i]
    }

    /// Pseudo-normal from central differences of the back-projected depth,
    /// oriented toward the camera. `None` where the gradient is undefined.
    pub fn pseudo_normal(&self, r: usize, c: usize) -> Option<Vec3> {
        if !self.has_gradient(r, c) {
            return None;
        }
        let du = (self.point(r, c + 1) - self.point(r, c - 1)) * 0.5;
        let dv = (self.point(r + 1, c) - self.point(r - 1, c)) * 0.5;
        let n = du.cross(&dv);
        let len = n.norm();
        if !(len > 0.0) {
            return None;
        }
        let n = n / len;
        Some(if n.dot(&self.directions[self.idx(r, c)]) > 0.0 {
            -n
        } else {
            n
        })
    }

    /// Channel names and values for the binary-grid export.
    pub fn channels(&self) -> Vec<(String, Vec<f64>)> {
        vec![
            ("depth".into(), self.depth.clone()),
            ("normal_x".into(), self.normal.iter().map(|n| n.x).collect()),
            ("normal_y".into(), self.normal.iter().map(|n| n.y).collect()),
            ("normal_z".into(), self.normal.iter().map(|n| n.z).collect()),
            ("depth_sq".into(), self.depth_sq.clone()),
            ("weight".into(), self.weight.clone()),
        ]
    }
}

/// Renders depth/normal maps by compositing every Gaussian hit along each
/// camera ray, front to back, with the ray-opacity contributions of the
/// visibility tracer. Depth is distance along the ray.
pub fn render_geometry_maps(scene: &Scene, bvh: &Bvh, rays: &CameraRayBundle) -> GeometryMaps {
    let pixels: Vec<PixelMoments> = rays
        .directions
        .par_iter()
        .map(|dir| {
            let chain = trace_ray(bvh, scene, &rays.origin, dir, 0.0, f64::INFINITY);
            let samples: Vec<(f64, f64, Vec3)> = chain
                .hits
                .iter()
                .map(|h| (h.distance, h.alpha, scene.gaussians()[h.gaussian].normal))
                .collect();
            composite_samples(&samples)
        })
        .collect();
    GeometryMaps::from_pixels(rays, &pixels)
}

/// Depth-normal consistency: mean `‖N̂ − Ñ‖₂` over pixels with a defined depth
/// gradient, where `N̂` is the rendered normal rescaled to unit length.
pub fn loss_depth_normal(maps: &GeometryMaps) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..maps.height {
        for c in 0..maps.width {
            let Some(pseudo) = maps.pseudo_normal(r, c) else {
                continue;
            };
            let n = maps.normal[maps.idx(r, c)];
            let len = n.norm();
            if !(len > 0.0) {
                continue;
            }
            total += (n / len - pseudo).norm();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Depth uncertainty: mean of `max(D_sq − D², 0)` over covered pixels. The
/// blend weights are used unnormalized, so an opacity deficit also counts.
pub fn loss_depth_uncertainty(maps: &GeometryMaps) -> f64 {
    let (sum, count) = maps
        .depth
        .iter()
        .zip(&maps.depth_sq)
        .zip(&maps.weight)
        .filter(|(_, w)| **w > 0.0)
        .fold((0.0, 0usize), |(s, n), ((d, dsq), _)| {
            (s + (dsq - d * d).max(0.0), n + 1)
        });
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Edge-aware normal smoothness: mean of `|∇N| · exp(−|∇C|)` over pixels
/// with a defined gradient, using central differences on both maps.
pub fn loss_normal_smoothness(maps: &GeometryMaps, reference: &[f64]) -> Result<f64> {
    if reference.len() != maps.height * maps.width {
        return Err(Error::Precondition(format!(
            "reference image has {} pixels, maps have {}",
            reference.len(),
            maps.height * maps.width
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..maps.height {
        for c in 0..maps.width {
            if !maps.has_gradient(r, c) {
                continue;
            }
            let i = |rr: usize, cc: usize| maps.idx(rr, cc);
            let dn_u = (maps.normal[i(r, c + 1)] - maps.normal[i(r, c - 1)]) * 0.5;
            let dn_v = (maps.normal[i(r + 1, c)] - maps.normal[i(r - 1, c)]) * 0.5;
            let grad_n = (dn_u.norm_squared() + dn_v.norm_squared()).sqrt();
            let dc_u = (reference[i(r, c + 1)] - reference[i(r, c - 1)]) * 0.5;
            let dc_v = (reference[i(r + 1, c)] - reference[i(r - 1, c)]) * 0.5;
            let grad_c = (dc_u * dc_u + dc_v * dc_v).sqrt();
            total += grad_n * (-grad_c).exp();
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Weights of the combined geometric objective.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GeometricLossWeights {
    pub l1: f64,
    pub ssim: f64,
    pub depth_normal: f64,
    pub depth_uncertainty: f64,
    pub normal_smoothness: f64,
}

/// Loss terms of the combined geometric objective. The photometric terms are
/// produced elsewhere and passed in as scalars.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GeometricLossParts {
    pub l1: f64,
    pub ssim: f64,
    pub depth_normal: f64,
    pub depth_uncertainty: f64,
    pub normal_smoothness: f64,
}

pub fn loss_geometric_total(weights: &GeometricLossWeights, parts: &GeometricLossParts) -> Result<f64> {
    let w = [
        weights.l1,
        weights.ssim,
        weights.depth_normal,
        weights.depth_uncertainty,
        weights.normal_smoothness,
    ];
    if w.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::Precondition("loss weights must be >= 0".into()));
    }
    let p = [
        parts.l1,
        parts.ssim,
        parts.depth_normal,
        parts.depth_uncertainty,
        parts.normal_smoothness,
    ];
    Ok(w.iter().zip(p).map(|(a, b)| a * b).sum())
}
