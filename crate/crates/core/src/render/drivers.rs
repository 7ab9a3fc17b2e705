//! Sweep and map drivers built on the link evaluator.

use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FovGrid, Illumination, LinkPlan, RenderOptions};
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::power_to_db;
use crate::scene::{Antenna, AntennaPattern, FrequencyGrid, Scene, Vec3};
use crate::visibility::{trace_ray, MIN_PLACEMENT_DISTANCE};

/// Antenna used by both ends of a monostatic radar.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadarPattern {
    /// Horn with its boresight on the scene origin.
    #[default]
    Horn,
    Omni,
}

/// Monostatic sweep: a co-located Tx/Rx at `range` from the origin, moved
/// around the z axis. Angle 0 places the radar on +x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcsConfig {
    pub range: f64,
    pub angles_deg: Vec<f64>,
    #[serde(default)]
    pub pattern: RadarPattern,
    pub power_watts: f64,
    pub gain: f64,
}

impl RcsConfig {
    pub fn new(range: f64, angles_deg: Vec<f64>) -> Self {
        Self {
            range,
            angles_deg,
            pattern: RadarPattern::Horn,
            power_watts: 1.0,
            gain: 1.0,
        }
    }

    /// Radar antenna at one sweep angle.
    pub fn radar(&self, angle_deg: f64) -> Antenna {
        let a = angle_deg.rem_euclid(360.0).to_radians();
        let position = Vec3::new(a.cos(), a.sin(), 0.0) * self.range;
        let pattern = match self.pattern {
            RadarPattern::Horn => AntennaPattern::horn(-position / self.range),
            RadarPattern::Omni => AntennaPattern::Omni,
        };
        Antenna {
            position,
            power_watts: self.power_watts,
            gain: self.gain,
            pattern,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcsPoint {
    pub angle_deg: f64,
    pub frequency_hz: f64,
    pub rssi_db: f64,
}

/// Received power per (angle, frequency), angle-major. The line-of-sight
/// term does not apply to co-located antennas and is ignored.
pub fn render_rcs_sweep(
    scene: &Scene,
    bvh: &Bvh,
    config: &RcsConfig,
    grid: &FrequencyGrid,
    options: &RenderOptions,
) -> Result<Vec<RcsPoint>> {
    if !(config.range > 0.0) || !config.range.is_finite() {
        return Err(Error::Validation(format!("invalid radar range {}", config.range)));
    }
    if config.angles_deg.iter().any(|a| !a.is_finite()) {
        return Err(Error::Validation("sweep angles must be finite".into()));
    }
    let options = RenderOptions { los: None, ..*options };
    let per_angle = config
        .angles_deg
        .par_iter()
        .map(|&angle| -> Result<Vec<RcsPoint>> {
            let radar = config.radar(angle);
            radar.validate()?;
            let illum = Arc::new(Illumination::build(scene, bvh, &radar, options.propagation)?);
            let plan = LinkPlan::build(scene, bvh, illum, &radar, &options)?;
            let attrs = scene.attributes();
            Ok(grid
                .samples()
                .iter()
                .map(|&f| RcsPoint {
                    angle_deg: angle,
                    frequency_hz: f,
                    rssi_db: power_to_db(plan.evaluate(&attrs, f).norm_sqr()),
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_angle.into_iter().flatten().collect())
}

/// Horizontal receiver grid: `height × width` cell centres over
/// `[x_min, x_max] × [y_min, y_max]` at height `z`. Rows run along y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub height: usize,
    pub width: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z: f64,
}

impl MapSpec {
    /// Grid covering the scene's footprint at height `z`.
    pub fn over_bounds(scene: &Scene, height: usize, width: usize, z: f64) -> Self {
        let b = scene.bounds();
        Self {
            height,
            width,
            x_min: b.min.x,
            x_max: b.max.x,
            y_min: b.min.y,
            y_max: b.max.y,
            z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max, self.z]
            .iter()
            .all(|v| v.is_finite());
        if self.height == 0 || self.width == 0 || !finite || self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::Validation(format!("invalid map grid {self:?}")));
        }
        Ok(())
    }

    pub fn position(&self, row: usize, col: usize) -> Vec3 {
        let x = self.x_min + (col as f64 + 0.5) * (self.x_max - self.x_min) / self.width as f64;
        let y = self.y_min + (row as f64 + 0.5) * (self.y_max - self.y_min) / self.height as f64;
        Vec3::new(x, y, self.z)
    }

    pub fn positions(&self) -> Vec<Vec3> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| self.position(r, c)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioMap {
    pub spec: MapSpec,
    /// Row-major received power (dB), floored at -300 dB.
    pub cells_db: Vec<f64>,
}

impl RadioMap {
    pub fn min_db(&self) -> f64 {
        self.cells_db.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_db(&self) -> f64 {
        self.cells_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_db(&self) -> f64 {
        self.cells_db.iter().sum::<f64>() / self.cells_db.len() as f64
    }

    /// Fraction of cells at or above `threshold_db`, in percent.
    pub fn coverage_percent(&self, threshold_db: f64) -> f64 {
        let n = self.cells_db.iter().filter(|v| **v >= threshold_db).count();
        100.0 * n as f64 / self.cells_db.len() as f64
    }
}

/// Received power at every grid cell from one transmitter, with omni
/// receivers. Every cell must lie inside the scene bounds.
pub fn render_radio_map(
    scene: &Scene,
    bvh: &Bvh,
    tx: &Antenna,
    spec: &MapSpec,
    frequency: f64,
    options: &RenderOptions,
) -> Result<RadioMap> {
    spec.validate()?;
    tx.validate()?;
    let positions = spec.positions();
    if let Some(p) = positions.iter().find(|p| !scene.bounds().contains(p)) {
        return Err(Error::Precondition(format!(
            "map cell at {:?} lies outside the scene bounds",
            p.as_slice()
        )));
    }
    if let Some(p) = positions
        .iter()
        .find(|p| (*p - tx.position).norm() < MIN_PLACEMENT_DISTANCE)
    {
        return Err(Error::DegeneratePlacement(format!(
            "map cell at {:?} coincides with the transmitter",
            p.as_slice()
        )));
    }
    let illum = Arc::new(Illumination::build(scene, bvh, tx, options.propagation)?);
    let attrs = scene.attributes();
    let cells_db = positions
        .par_iter()
        .map(|p| -> Result<f64> {
            let rx = Antenna::omni(*p);
            let plan = LinkPlan::build(scene, bvh, illum.clone(), &rx, options)?;
            Ok(power_to_db(plan.evaluate(&attrs, frequency).norm_sqr()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadioMap { spec: *spec, cells_db })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    GammaMag,
    GammaPhase,
    Roughness,
}

impl FromStr for AttributeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma_mag" => Ok(Self::GammaMag),
            "gamma_phase" => Ok(Self::GammaPhase),
            "roughness" => Ok(Self::Roughness),
            other => Err(Error::Validation(format!(
                "unknown attribute kind {other:?} (expected gamma_mag, gamma_phase or roughness)"
            ))),
        }
    }
}

/// Attributes alpha-blended over a receiver's FoV grid. Rows are elevation
/// cells, columns azimuth cells; cells without any weight hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeMaps {
    pub height: usize,
    pub width: usize,
    pub gamma_mag: Vec<f64>,
    pub gamma_phase: Vec<f64>,
    pub roughness: Vec<f64>,
    /// Total blending weight `Σ α_l T_l` per cell.
    pub weight: Vec<f64>,
}

impl AttributeMaps {
    pub fn get(&self, kind: AttributeKind) -> &[f64] {
        match kind {
            AttributeKind::GammaMag => &self.gamma_mag,
            AttributeKind::GammaPhase => &self.gamma_phase,
            AttributeKind::Roughness => &self.roughness,
        }
    }
}

/// Blends every Gaussian hit along each FoV cell-centre ray with weights
/// `α_l T_l`, normalized by the total weight. Phases are blended as unit
/// phasors.
pub fn export_attribute_maps(scene: &Scene, bvh: &Bvh, rx: &Antenna, step_deg: f64) -> Result<AttributeMaps> {
    let grid = FovGrid::with_step(&rx.pattern, step_deg)?;
    let cells: Vec<[f64; 4]> = (0..grid.len())
        .into_par_iter()
        .map(|cell| {
            let dir = grid.direction(cell);
            let chain = trace_ray(bvh, scene, &rx.position, &dir, 0.0, f64::INFINITY);
            let mut t = 1.0;
            let (mut w_sum, mut mag, mut rough) = (0.0, 0.0, 0.0);
            let mut phasor = Complex64::new(0.0, 0.0);
            for h in &chain.hits {
                let a = &scene.gaussians()[h.gaussian].attributes;
                let w = h.alpha * t;
                w_sum += w;
                mag += w * a.gamma_mag;
                rough += w * a.roughness;
                phasor += Complex64::from_polar(w, a.gamma_phase);
                t *= 1.0 - h.alpha;
            }
            if w_sum > 0.0 {
                [mag / w_sum, phasor.arg(), rough / w_sum, w_sum]
            } else {
                [f64::NAN, f64::NAN, f64::NAN, 0.0]
            }
        })
        .collect();
    let column = |k: usize| cells.iter().map(|c| c[k]).collect::<Vec<_>>();
    Ok(AttributeMaps {
        height: grid.n_elevation,
        width: grid.n_azimuth,
        gamma_mag: column(0),
        gamma_phase: column(1),
        roughness: column(2),
        weight: column(3),
    })
}
