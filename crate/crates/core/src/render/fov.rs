//! Spherical receive-direction grids.

use crate::error::{Error, Result};
use crate::scene::{AntennaPattern, Mat3, Vec3};

/// Default angular step of receive grids (degrees).
pub const FOV_STEP_DEG: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FovKind {
    /// Full sphere: 180° of elevation from the +z axis, 360° of azimuth.
    Omni,
    /// Front hemisphere around the boresight: 90° × 360°.
    Directional,
}

/// Elevation/azimuth grid with cell centres at `(i + ½)·step`, `(j + ½)·step`.
///
/// Elevation is the polar angle from the grid's z axis (world +z for omni
/// antennas, the boresight for horns); azimuth is measured from the grid's
/// x axis.
#[derive(Clone, Debug, PartialEq)]
pub struct FovGrid {
    pub kind: FovKind,
    pub step_deg: f64,
    pub n_elevation: usize,
    pub n_azimuth: usize,
    /// Columns are the grid's x, y and z axes in world coordinates.
    pub frame: Mat3,
}

/// The 1° grid preset for an antenna pattern.
pub fn make_fov_grid(pattern: &AntennaPattern) -> FovGrid {
    FovGrid::with_step(pattern, FOV_STEP_DEG).expect("1 degree divides the presets")
}

impl FovGrid {
    pub fn with_step(pattern: &AntennaPattern, step_deg: f64) -> Result<Self> {
        let (kind, span, frame) = match pattern {
            AntennaPattern::Omni => (FovKind::Omni, 180.0, Mat3::identity()),
            AntennaPattern::DirectionalHorn { boresight, .. } => {
                (FovKind::Directional, 90.0, frame_around(&boresight.normalize()))
            }
        };
        let n_el = span / step_deg;
        let n_az = 360.0 / step_deg;
        if !(step_deg > 0.0) || (n_el - n_el.round()).abs() > 1e-9 || (n_az - n_az.round()).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "FoV step {step_deg}° must evenly divide {span}° and 360°"
            )));
        }
        Ok(Self {
            kind,
            step_deg,
            n_elevation: n_el.round() as usize,
            n_azimuth: n_az.round() as usize,
            frame,
        })
    }

    pub fn len(&self) -> usize {
        self.n_elevation * self.n_azimuth
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn step_rad(&self) -> f64 {
        self.step_deg.to_radians()
    }

    fn angles(&self, cell: usize) -> (f64, f64) {
        let step = self.step_rad();
        let i = cell / self.n_azimuth;
        let j = cell % self.n_azimuth;
        ((i as f64 + 0.5) * step, (j as f64 + 0.5) * step)
    }

    /// Unit world direction of a cell centre.
    pub fn direction(&self, cell: usize) -> Vec3 {
        let (theta, phi) = self.angles(cell);
        let local = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        self.frame * local
    }

    /// `Δω = sin θ · Δθ · Δφ` (steradians).
    pub fn solid_angle(&self, cell: usize) -> f64 {
        let (theta, _) = self.angles(cell);
        theta.sin() * self.step_rad() * self.step_rad()
    }

    /// Cell containing a unit world direction, or `None` when the direction
    /// lies outside the grid (behind a directional antenna).
    pub fn cell_of(&self, direction: &Vec3) -> Option<usize> {
        let local = self.frame.transpose() * direction;
        let theta = local.z.clamp(-1.0, 1.0).acos();
        let phi = local.y.atan2(local.x).rem_euclid(2.0 * std::f64::consts::PI);
        let step = self.step_rad();
        let i = (theta / step).floor() as usize;
        let i = match self.kind {
            FovKind::Omni => i.min(self.n_elevation - 1),
            FovKind::Directional if i < self.n_elevation => i,
            FovKind::Directional => return None,
        };
        let j = ((phi / step).floor() as usize).min(self.n_azimuth - 1);
        Some(i * self.n_azimuth + j)
    }

    /// Every cell as `(direction, Δω)`, row-major in elevation.
    pub fn cells(&self) -> Vec<(Vec3, f64)> {
        (0..self.len())
            .map(|c| (self.direction(c), self.solid_angle(c)))
            .collect()
    }
}

/// Right-handed orthonormal frame whose third column is `z`.
fn frame_around(z: &Vec3) -> Mat3 {
    let helper = if z.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    let x = helper.cross(z).normalize();
    let y = z.cross(&x);
    Mat3::from_columns(&[x, y, *z])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn preset_sizes() {
        assert_eq!(make_fov_grid(&AntennaPattern::Omni).len(), 64800);
        assert_eq!(make_fov_grid(&AntennaPattern::horn(Vec3::x())).len(), 32400);
    }

    #[test]
    fn solid_angles_cover_the_sphere() {
        let omni = make_fov_grid(&AntennaPattern::Omni);
        let total: f64 = (0..omni.len()).map(|c| omni.solid_angle(c)).sum();
        assert!((total / (4.0 * PI) - 1.0).abs() < 5e-3, "{total}");
        let horn = make_fov_grid(&AntennaPattern::horn(Vec3::y()));
        let total: f64 = (0..horn.len()).map(|c| horn.solid_angle(c)).sum();
        assert!((total / (2.0 * PI) - 1.0).abs() < 5e-3, "{total}");
    }

    #[test]
    fn cell_round_trip() {
        for pattern in [AntennaPattern::Omni, AntennaPattern::horn(Vec3::new(0.6, 0.0, 0.8))] {
            let grid = make_fov_grid(&pattern);
            for cell in (0..grid.len()).step_by(97) {
                assert_eq!(grid.cell_of(&grid.direction(cell)), Some(cell));
            }
        }
    }

    #[test]
    fn horn_grid_excludes_back_hemisphere() {
        let grid = make_fov_grid(&AntennaPattern::horn(Vec3::x()));
        assert!(grid.cell_of(&-Vec3::x()).is_none());
        let c = grid.cell_of(&Vec3::x()).unwrap();
        assert!(grid.direction(c).dot(&Vec3::x()) > (0.5f64.to_radians() * 1.5).cos());
    }

    #[test]
    fn poles_bin_into_the_first_and_last_rows() {
        let grid = make_fov_grid(&AntennaPattern::Omni);
        assert!(grid.cell_of(&Vec3::z()).unwrap() < grid.n_azimuth);
        assert!(grid.cell_of(&-Vec3::z()).unwrap() >= grid.len() - grid.n_azimuth);
    }

    #[test]
    fn rejects_uneven_step() {
        assert!(FovGrid::with_step(&AntennaPattern::Omni, 0.7).is_err());
        assert_eq!(FovGrid::with_step(&AntennaPattern::Omni, 0.5).unwrap().len(), 259200);
    }
}
