//! Deterministic synthetic scenes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfsplat::scene::validate_scene;
use rfsplat::{Error, Quat, Result, RfAttributes, RfGaussian, Scene, Vec3};
use serde::{Deserialize, Serialize};

/// Scene template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Template {
    /// `nx × ny` Gaussians tiling a `width × height` rectangle in the x = 0
    /// plane, facing +x. Uses one material.
    Plate {
        nx: usize,
        ny: usize,
        width: f64,
        height: f64,
    },
    /// A plate whose y < 0 half uses the first material and y ≥ 0 half the
    /// second.
    TwoMaterialPlate {
        nx: usize,
        ny: usize,
        width: f64,
        height: f64,
    },
    /// `count` randomly shaped and oriented Gaussians with random attributes
    /// inside an origin-centred box of the given size. Ignores materials.
    RandomCloud { count: usize, extent: [f64; 3] },
    /// A room `[0, size.x] × [0, size.y] × [0, size.z]` whose walls (first
    /// material), floor and ceiling (second) and a grid of desk tops (third)
    /// are tiled with about `count` Gaussians facing into the room.
    Classroom { count: usize, size: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSceneSpec {
    pub template: Template,
    /// Ground-truth attributes per region.
    pub materials: Vec<RfAttributes>,
    pub seed: u64,
}

impl SyntheticSceneSpec {
    pub fn new(template: Template, materials: Vec<RfAttributes>, seed: u64) -> Self {
        Self {
            template,
            materials,
            seed,
        }
    }

    /// A 1 m × 1 m plate of `n × n` Gaussians.
    pub fn plate(n: usize, material: RfAttributes) -> Self {
        Self::new(
            Template::Plate {
                nx: n,
                ny: n,
                width: 1.0,
                height: 1.0,
            },
            vec![material],
            0,
        )
    }

    fn materials_needed(&self) -> usize {
        match self.template {
            Template::Plate { .. } => 1,
            Template::TwoMaterialPlate { .. } => 2,
            Template::RandomCloud { .. } => 0,
            Template::Classroom { .. } => 3,
        }
    }
}

/// Plate material used by the defaults: moderately rough, strong reflector.
pub fn metal() -> RfAttributes {
    RfAttributes {
        alpha: 0.9,
        roughness: 8.0,
        gamma_mag: 0.9,
        gamma_phase: PI,
    }
}

/// Thickness of plate-like Gaussians relative to their in-plane sigma.
const FLATNESS: f64 = 0.05;

fn tile(
    out: &mut Vec<RfGaussian>,
    origin: Vec3,
    u: Vec3,
    v: Vec3,
    (nu, nv): (usize, usize),
    normal: Vec3,
    material: RfAttributes,
) {
    let (lu, lv) = (u.norm(), v.norm());
    let (du, dv) = (lu / nu as f64, lv / nv as f64);
    let (eu, ev) = (u / lu, v / lv);
    // The thin axis is eu × ev, parallel to the normal up to sign.
    let r = nalgebra::Matrix3::from_columns(&[eu, ev, eu.cross(&ev)]);
    let rotation = *nalgebra::UnitQuaternion::from_matrix(&r).quaternion();
    let sigma = Vec3::new(0.5 * du, 0.5 * dv, FLATNESS * 0.5 * du.min(dv));
    for a in 0..nu {
        for b in 0..nv {
            let mean = origin + eu * ((a as f64 + 0.5) * du) + ev * ((b as f64 + 0.5) * dv);
            out.push(RfGaussian::new(mean, sigma, normal, material).with_rotation(rotation));
        }
    }
}

fn plate(nx: usize, ny: usize, width: f64, height: f64, material: impl Fn(f64) -> RfAttributes) -> Vec<RfGaussian> {
    let dy = width / nx as f64;
    let dz = height / ny as f64;
    let sigma = Vec3::new(FLATNESS * 0.5 * dy.min(dz), 0.5 * dy, 0.5 * dz);
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let y = -0.5 * width + (i as f64 + 0.5) * dy;
            let z = -0.5 * height + (j as f64 + 0.5) * dz;
            out.push(RfGaussian::new(Vec3::new(0.0, y, z), sigma, Vec3::x(), material(y)));
        }
    }
    out
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_quat(rng: &mut ChaCha8Rng) -> Quat {
    loop {
        let q = Quat::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            return q / n;
        }
    }
}

/// Random attributes in the interior of their ranges.
pub fn random_attributes(rng: &mut ChaCha8Rng) -> RfAttributes {
    RfAttributes {
        alpha: rng.random_range(0.05..0.95),
        roughness: rng.random_range(1.0..20.0),
        gamma_mag: rng.random_range(0.05..0.95),
        gamma_phase: rng.random_range(-PI..PI),
    }
}

fn cloud(count: usize, extent: [f64; 3], rng: &mut ChaCha8Rng) -> Vec<RfGaussian> {
    (0..count)
        .map(|_| {
            let mean = Vec3::new(
                rng.random_range(-0.5..0.5) * extent[0],
                rng.random_range(-0.5..0.5) * extent[1],
                rng.random_range(-0.5..0.5) * extent[2],
            );
            let scale = Vec3::new(
                rng.random_range(0.02..0.15),
                rng.random_range(0.02..0.15),
                rng.random_range(0.02..0.15),
            );
            let normal = random_unit(rng);
            let rotation = random_quat(rng);
            RfGaussian::new(mean, scale, normal, random_attributes(rng)).with_rotation(rotation)
        })
        .collect()
}

/// Desk tops: a 3 × 4 grid of 1.2 m × 0.6 m tops at 0.75 m.
const DESK_ROWS: usize = 3;
const DESK_COLS: usize = 4;

fn classroom(count: usize, size: [f64; 3], materials: &[RfAttributes]) -> Vec<RfGaussian> {
    let [sx, sy, sz] = size;
    let desk_share = 0.2;
    let desks = DESK_ROWS * DESK_COLS;
    let per_desk = (((count as f64 * desk_share) / desks as f64).round() as usize).max(2);
    let surfaces = [
        // (origin, u, v, inward normal, material)
        (
            Vec3::zeros(),
            Vec3::new(0.0, sy, 0.0),
            Vec3::new(0.0, 0.0, sz),
            Vec3::x(),
            0,
        ),
        (
            Vec3::new(sx, 0.0, 0.0),
            Vec3::new(0.0, sy, 0.0),
            Vec3::new(0.0, 0.0, sz),
            -Vec3::x(),
            0,
        ),
        (
            Vec3::zeros(),
            Vec3::new(sx, 0.0, 0.0),
            Vec3::new(0.0, 0.0, sz),
            Vec3::y(),
            0,
        ),
        (
            Vec3::new(0.0, sy, 0.0),
            Vec3::new(sx, 0.0, 0.0),
            Vec3::new(0.0, 0.0, sz),
            -Vec3::y(),
            0,
        ),
        (
            Vec3::zeros(),
            Vec3::new(sx, 0.0, 0.0),
            Vec3::new(0.0, sy, 0.0),
            Vec3::z(),
            1,
        ),
        (
            Vec3::new(0.0, 0.0, sz),
            Vec3::new(sx, 0.0, 0.0),
            Vec3::new(0.0, sy, 0.0),
            -Vec3::z(),
            1,
        ),
    ];
    let total_area: f64 = surfaces.iter().map(|s| s.1.norm() * s.2.norm()).sum();
    let shell = count.saturating_sub(per_desk * desks).max(surfaces.len());
    let density = shell as f64 / total_area;
    let mut out = Vec::with_capacity(count);
    for (origin, u, v, normal, m) in surfaces {
        let (lu, lv) = (u.norm(), v.norm());
        let nu = ((lu * density.sqrt()).round() as usize).max(1);
        let nv = (((lu * lv * density) / nu as f64).round() as usize).max(1);
        tile(&mut out, origin, u, v, (nu, nv), normal, materials[m]);
    }
    let (du, dv) = (1.2, 0.6);
    let nu = ((per_desk as f64 * 2.0).sqrt().round() as usize).max(1);
    let nv = (per_desk / nu).max(1);
    for r in 0..DESK_ROWS {
        for c in 0..DESK_COLS {
            let cx = sx * (c as f64 + 0.5) / DESK_COLS as f64;
            let cy = sy * (r as f64 + 0.5) / DESK_ROWS as f64;
            let origin = Vec3::new(cx - 0.5 * du, cy - 0.5 * dv, 0.75);
            tile(
                &mut out,
                origin,
                Vec3::new(du, 0.0, 0.0),
                Vec3::new(0.0, dv, 0.0),
                (nu, nv),
                Vec3::z(),
                materials[2],
            );
        }
    }
    out
}

/// Transmitter candidates for the classroom template: a 6 × 4 grid at 2.5 m.
pub fn classroom_tx_positions(size: [f64; 3]) -> Vec<Vec3> {
    let (nx, ny) = (6, 4);
    (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                Vec3::new(
                    size[0] * (i as f64 + 0.5) / nx as f64,
                    size[1] * (j as f64 + 0.5) / ny as f64,
                    (size[2] - 0.5).max(0.5 * size[2]),
                )
            })
        })
        .collect()
}

/// Builds the scene described by `spec`; deterministic in the seed. The
/// result has frozen geometry and passes scene validation.
pub fn generate_scene(spec: &SyntheticSceneSpec) -> Result<Scene> {
    if spec.materials.len() < spec.materials_needed() {
        return Err(Error::Validation(format!(
            "template needs {} materials, got {}",
            spec.materials_needed(),
            spec.materials.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gaussians = match spec.template {
        Template::Plate { nx, ny, width, height } => plate(nx, ny, width, height, |_| spec.materials[0]),
        Template::TwoMaterialPlate { nx, ny, width, height } => plate(nx, ny, width, height, |y| {
            if y < 0.0 {
                spec.materials[0]
            } else {
                spec.materials[1]
            }
        }),
        Template::RandomCloud { count, extent } => cloud(count, extent, &mut rng),
        Template::Classroom { count, size } => classroom(count, size, &spec.materials),
    };
    let scene = Scene::from_gaussians(gaussians);
    let issues = validate_scene(&scene);
    if let Some(first) = issues.first() {
        return Err(Error::Validation(format!("generated scene is invalid: {first}")));
    }
    Ok(scene)
}
