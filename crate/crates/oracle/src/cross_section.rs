//! Projected cross-section references: the area of the 1-sigma ellipsoid's
//! shadow on the plane orthogonal to a direction, analytically and by
//! Monte-Carlo sampling of that plane.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfsplat::{Error, Result, RfGaussian, Vec3};

/// Minimum sample count accepted by [`monte_carlo_cross_section`].
pub const MIN_SAMPLES: usize = 100_000;

fn covariance(g: &RfGaussian) -> Matrix3<f64> {
    let r = g.rotation_matrix();
    r * Matrix3::from_diagonal(&g.scale.component_mul(&g.scale)) * r.transpose()
}

/// Orthonormal basis `(u, v)` of the plane orthogonal to unit `n`.
fn plane_basis(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = n.cross(&helper).normalize();
    (u, n.cross(&u))
}

/// Covariance of the shadow in the plane basis, `P Σ Pᵀ`.
fn projected_covariance(g: &RfGaussian, n: &Vec3) -> (Matrix2<f64>, Vec3, Vec3) {
    let sigma = covariance(g);
    let (u, v) = plane_basis(n);
    let m = Matrix2::new(
        u.dot(&(sigma * u)),
        u.dot(&(sigma * v)),
        v.dot(&(sigma * u)),
        v.dot(&(sigma * v)),
    );
    (m, u, v)
}

/// `π √det(P Σ Pᵀ)`.
pub fn analytic_projected_area(g: &RfGaussian, n: &Vec3) -> f64 {
    let n = n.normalize();
    let (m, _, _) = projected_covariance(g, &n);
    PI * m.determinant().max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Hit-or-miss estimate of the shadow area. Points are drawn uniformly in a
/// rectangle aligned with the shadow's principal axes (half-widths 1.05 of
/// the axis lengths); a point is inside when the line through it along `n`
/// meets the 1-sigma ellipsoid.
pub fn monte_carlo_cross_section(g: &RfGaussian, n: &Vec3, samples: usize, seed: u64) -> Result<AreaEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "Monte-Carlo cross-section needs at least {MIN_SAMPLES} samples (got {samples})"
        )));
    }
    let n = n.normalize();
    let (m, u, v) = projected_covariance(g, &n);
    let eig = SymmetricEigen::new(m);
    let axes: Vec<(Vec3, f64)> = (0..2)
        .map(|k| {
            let e = eig.eigenvectors.column(k);
            (u * e[0] + v * e[1], 1.05 * eig.eigenvalues[k].max(0.0).sqrt())
        })
        .collect();
    let inv = covariance(g)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular covariance".into()))?;
    let inv_n = inv * n;
    let nn = n.dot(&inv_n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0usize;
    for _ in 0..samples {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let p = axes[0].0 * (a * axes[0].1) + axes[1].0 * (b * axes[1].1);
        // Minimum of the quadratic form along the line p + t·n.
        let pn = p.dot(&inv_n);
        if p.dot(&(inv * p)) - pn * pn / nn <= 1.0 {
            inside += 1;
        }
    }
    let box_area = 4.0 * axes[0].1 * axes[1].1;
    let frac = inside as f64 / samples as f64;
    Ok(AreaEstimate {
        estimate: box_area * frac,
        stderr: box_area * (frac * (1.0 - frac) / samples as f64).sqrt(),
        samples,
    })
}
