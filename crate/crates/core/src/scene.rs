//! Domain types shared by every stage of the renderer.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Quat = Quaternion<f64>;

/// Tolerance on the norm of quaternions and normals.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Wraps a phase into `(-π, π]`.
pub fn canonical_phase(phase: f64) -> f64 {
    if phase > -PI && phase <= PI {
        return phase;
    }
    let r = phase.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Learnable RF attributes of one Gaussian.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RfAttributes {
    /// Opacity in `[0, 1]`.
    pub alpha: f64,
    /// Effective roughness exponent, `R >= 1`.
    pub roughness: f64,
    /// Reflection-coefficient magnitude in `[0, 1]`.
    pub gamma_mag: f64,
    /// Reflection-coefficient phase (radians).
    pub gamma_phase: f64,
}

impl Default for RfAttributes {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            roughness: 2.0,
            gamma_mag: 0.5,
            gamma_phase: 0.0,
        }
    }
}

impl RfAttributes {
    pub fn gamma(&self) -> Complex64 {
        Complex64::from_polar(self.gamma_mag, self.gamma_phase)
    }
}

/// One scene primitive: an anisotropic 3D Gaussian with a surface normal and
/// RF attributes.
///
/// The covariance is stored factored as per-axis standard deviations plus a
/// rotation, so it is positive-definite whenever the scales are positive.
#[derive(Clone, Debug, PartialEq)]
pub struct RfGaussian {
    pub mean: Vec3,
    pub scale: Vec3,
    pub rotation: Quat,
    pub normal: Vec3,
    pub attributes: RfAttributes,
}

impl RfGaussian {
    /// Axis-aligned Gaussian with identity rotation.
    pub fn new(mean: Vec3, scale: Vec3, normal: Vec3, attributes: RfAttributes) -> Self {
        Self {
            mean,
            scale,
            rotation: Quat::identity(),
            normal,
            attributes,
        }
    }

    pub fn with_rotation(mut self, rotation: Quat) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        UnitQuaternion::from_quaternion(self.rotation)
            .to_rotation_matrix()
            .into_inner()
    }

    pub fn covariance(&self) -> Mat3 {
        let r = self.rotation_matrix();
        let d = Mat3::from_diagonal(&self.scale.component_mul(&self.scale));
        r * d * r.transpose()
    }

    pub fn inverse_covariance(&self) -> Mat3 {
        let r = self.rotation_matrix();
        let inv = self.scale.map(|s| 1.0 / (s * s));
        r * Mat3::from_diagonal(&inv) * r.transpose()
    }

    /// Maps a world-space offset from the mean into the whitened frame where
    /// the Gaussian is isotropic with unit variance.
    pub fn whiten(&self, offset: &Vec3) -> Vec3 {
        let local = self.rotation_matrix().transpose() * offset;
        local.component_div(&self.scale)
    }

    /// Half extents of the axis-aligned box enclosing the `k`-sigma ellipsoid.
    pub fn sigma_half_extent(&self, k: f64) -> Vec3 {
        let cov = self.covariance();
        Vec3::new(cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()) * k
    }

    pub fn sigma_aabb(&self, k: f64) -> Aabb {
        let h = self.sigma_half_extent(k);
        Aabb::new(self.mean - h, self.mean + h)
    }

    pub fn max_scale(&self) -> f64 {
        self.scale.max()
    }
}

/// `Σ = R · diag(scale²) · Rᵀ`.
pub fn covariance_from(scale: &Vec3, rotation: &Quat) -> Result<Mat3> {
    if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::Validation(format!(
            "scale must be strictly positive, got {:?}",
            scale.as_slice()
        )));
    }
    if (rotation.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Validation(format!(
            "rotation quaternion is not unit (norm {})",
            rotation.norm()
        )));
    }
    let r = UnitQuaternion::from_quaternion(*rotation)
        .to_rotation_matrix()
        .into_inner();
    let d = Mat3::from_diagonal(&scale.component_mul(scale));
    let sigma = r * d * r.transpose();
    // Exact symmetry; the triple product can differ by an ulp across the diagonal.
    Ok((sigma + sigma.transpose()) * 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn grow(&self, p: &Vec3) -> Aabb {
        Aabb::new(self.min.inf(p), self.max.sup(p))
    }

    pub fn padded(&self, pad: f64) -> Aabb {
        Aabb::new(self.min.add_scalar(-pad), self.max.add_scalar(pad))
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|i| other.min[i] >= self.min[i] && other.max[i] <= self.max[i])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Slab test. Returns true if the ray `origin + t·dir` meets the box for
    /// some `t` in `[t_min, t_max]`.
    pub fn intersects_ray(&self, origin: &Vec3, inv_dir: &Vec3, t_min: f64, t_max: f64) -> bool {
        let mut lo = t_min;
        let mut hi = t_max;
        for i in 0..3 {
            let t0 = (self.min[i] - origin[i]) * inv_dir[i];
            let t1 = (self.max[i] - origin[i]) * inv_dir[i];
            let (a, b) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            // NaN arises for a zero direction component with the origin on a
            // slab face; the ray then lies in the face and is inside the slab.
            if a > lo {
                lo = a;
            }
            if b < hi {
                hi = b;
            }
            if lo > hi {
                return false;
            }
        }
        true
    }
}

/// An immutable collection of RF Gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    gaussians: Vec<RfGaussian>,
    bounds: Aabb,
    geometry_frozen: bool,
}

impl Scene {
    /// Builds a scene with bounds enclosing every Gaussian's 3-sigma box.
    pub fn from_gaussians(gaussians: Vec<RfGaussian>) -> Self {
        let bounds = gaussians.iter().fold(Aabb::empty(), |b, g| b.union(&g.sigma_aabb(3.0)));
        let bounds = if bounds.is_empty() {
            Aabb::new(Vec3::zeros(), Vec3::zeros())
        } else {
            bounds
        };
        Self {
            gaussians,
            bounds,
            geometry_frozen: true,
        }
    }

    pub fn with_bounds(gaussians: Vec<RfGaussian>, bounds: Aabb) -> Self {
        Self {
            gaussians,
            bounds,
            geometry_frozen: true,
        }
    }

    pub fn empty() -> Self {
        Self::from_gaussians(Vec::new())
    }

    pub fn with_geometry_frozen(mut self, frozen: bool) -> Self {
        self.geometry_frozen = frozen;
        self
    }

    pub fn gaussians(&self) -> &[RfGaussian] {
        &self.gaussians
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn geometry_frozen(&self) -> bool {
        self.geometry_frozen
    }

    pub fn attributes(&self) -> Vec<RfAttributes> {
        self.gaussians.iter().map(|g| g.attributes).collect()
    }

    /// Copy of the scene with every Gaussian's RF attributes replaced.
    pub fn with_attributes(&self, attributes: &[RfAttributes]) -> Result<Scene> {
        if attributes.len() != self.gaussians.len() {
            return Err(Error::Precondition(format!(
                "{} attribute sets for {} gaussians",
                attributes.len(),
                self.gaussians.len()
            )));
        }
        let mut out = self.clone();
        for (g, a) in out.gaussians.iter_mut().zip(attributes) {
            g.attributes = *a;
        }
        Ok(out)
    }

    /// Copy of the scene with one Gaussian replaced. When geometry is frozen,
    /// only the RF attributes may differ from the current Gaussian.
    pub fn replace_gaussian(&self, index: usize, gaussian: RfGaussian) -> Result<Scene> {
        let current = self
            .gaussians
            .get(index)
            .ok_or_else(|| Error::Precondition(format!("no gaussian at index {index}")))?;
        if self.geometry_frozen {
            let changed = if current.mean != gaussian.mean {
                Some("mean")
            } else if current.scale != gaussian.scale {
                Some("scale")
            } else if current.rotation != gaussian.rotation {
                Some("rotation")
            } else if current.normal != gaussian.normal {
                Some("normal")
            } else {
                None
            };
            if let Some(field) = changed {
                return Err(Error::GeometryFrozen { index, field });
            }
        }
        let mut out = self.clone();
        out.gaussians[index] = gaussian;
        Ok(out)
    }
}

/// One violated invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationIssue {
    /// Offending Gaussian, or `None` for scene-level issues.
    pub gaussian: Option<usize>,
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.gaussian {
            Some(i) => write!(f, "gaussian {i}: {}: {}", self.field, self.message),
            None => write!(f, "scene: {}: {}", self.field, self.message),
        }
    }
}

/// Lists every violated invariant; an empty report means the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let mut push = |gaussian: Option<usize>, field: &'static str, message: String| {
        issues.push(ValidationIssue {
            gaussian,
            field,
            message,
        })
    };
    if scene.bounds.is_empty() {
        push(None, "bounds", "bounds are empty (min > max)".into());
    }
    for (i, g) in scene.gaussians.iter().enumerate() {
        let at = Some(i);
        if g.mean.iter().any(|v| !v.is_finite()) {
            push(at, "mean", "non-finite position".into());
        }
        if g.scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            push(at, "scale", format!("scale must be > 0, got {:?}", g.scale.as_slice()));
        }
        if (g.rotation.norm() - 1.0).abs() > UNIT_TOLERANCE {
            push(
                at,
                "rotation",
                format!("quaternion norm {} is not 1", g.rotation.norm()),
            );
        }
        if (g.normal.norm() - 1.0).abs() > UNIT_TOLERANCE {
            push(at, "normal", format!("normal norm {} is not 1", g.normal.norm()));
        }
        let a = &g.attributes;
        if !(0.0..=1.0).contains(&a.alpha) {
            push(at, "alpha", format!("alpha {} outside [0, 1]", a.alpha));
        }
        if !(a.roughness >= 1.0) || !a.roughness.is_finite() {
            push(at, "roughness", format!("roughness {} violates R >= 1", a.roughness));
        }
        if !(0.0..=1.0).contains(&a.gamma_mag) {
            push(at, "gamma_mag", format!("|Γ| {} outside [0, 1]", a.gamma_mag));
        }
        if !a.gamma_phase.is_finite() {
            push(at, "gamma_phase", "non-finite phase".into());
        }
        if g.scale.iter().all(|s| *s > 0.0 && s.is_finite())
            && !scene.bounds.padded(3.0 * g.max_scale()).contains(&g.mean)
        {
            push(at, "mean", "center lies outside the scene bounds".into());
        }
    }
    issues
}

#[derive(Clone, Debug, PartialEq)]
pub enum AntennaPattern {
    Omni,
    /// Cosine-power horn: `C(ω) = max(0, ω·boresight)^exponent`.
    DirectionalHorn {
        boresight: Vec3,
        exponent: f64,
    },
}

impl AntennaPattern {
    pub fn horn(boresight: Vec3) -> Self {
        AntennaPattern::DirectionalHorn {
            boresight,
            exponent: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Antenna {
    pub position: Vec3,
    /// Transmit power `P_T` in watts (ignored for receivers).
    pub power_watts: f64,
    /// Linear gain `G_T`.
    pub gain: f64,
    pub pattern: AntennaPattern,
}

impl Antenna {
    pub fn omni(position: Vec3) -> Self {
        Self {
            position,
            power_watts: 1.0,
            gain: 1.0,
            pattern: AntennaPattern::Omni,
        }
    }

    pub fn horn(position: Vec3, boresight: Vec3) -> Self {
        Self {
            position,
            power_watts: 1.0,
            gain: 1.0,
            pattern: AntennaPattern::horn(boresight),
        }
    }

    /// Receive pattern `C^R(ω, f)` for a unit arrival direction `ω` pointing
    /// from the antenna toward the source.
    pub fn pattern_gain(&self, direction: &Vec3, _frequency: f64) -> Complex64 {
        match &self.pattern {
            AntennaPattern::Omni => Complex64::new(1.0, 0.0),
            AntennaPattern::DirectionalHorn { boresight, exponent } => {
                let c = direction.dot(boresight).max(0.0);
                Complex64::new(c.powf(*exponent), 0.0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("antenna position is not finite".into()));
        }
        if !(self.power_watts > 0.0) || !(self.gain > 0.0) {
            return Err(Error::Validation(format!(
                "antenna power ({}) and gain ({}) must be > 0",
                self.power_watts, self.gain
            )));
        }
        if let AntennaPattern::DirectionalHorn { boresight, exponent } = &self.pattern {
            if (boresight.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::Validation(format!(
                    "horn boresight norm {} is not 1",
                    boresight.norm()
                )));
            }
            if !(*exponent >= 0.0) {
                return Err(Error::Validation("horn exponent must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    samples: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation("frequency grid is empty".into()));
        }
        if samples.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::Validation("frequencies must be finite and > 0".into()));
        }
        if samples.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("frequencies must be strictly ascending".into()));
        }
        Ok(Self { samples })
    }

    pub fn single(frequency: f64) -> Result<Self> {
        Self::new(vec![frequency])
    }

    /// `count` evenly spaced samples over `[start, stop]`.
    pub fn linspace(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 1 {
            return Self::single(start);
        }
        let step = (stop - start) / (count as f64 - 1.0);
        Self::new((0..count).map(|i| start + step * i as f64).collect())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn wavelength(&self, index: usize) -> f64 {
        SPEED_OF_LIGHT / self.samples[index]
    }
}

pub fn wavelength(frequency: f64) -> f64 {
    SPEED_OF_LIGHT / frequency
}

/// Received complex amplitude per frequency sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSignal {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl ComplexSignal {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical("signal contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Received power in dB relative to unit power, floored at -300 dB.
    pub fn rssi_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| crate::power_to_db(v.norm_sqr())).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Measurement {
    /// Received power in dB relative to unit power.
    RssiDb(f64),
    /// Complex sample; only its power enters the loss.
    Complex(Complex64),
}

impl Measurement {
    pub fn power(&self) -> f64 {
        match self {
            Measurement::RssiDb(db) => crate::db_to_power(*db),
            Measurement::Complex(c) => c.norm_sqr(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub tx: Antenna,
    pub rx: Antenna,
    pub frequency_index: usize,
    pub measurement: Measurement,
    pub split: Split,
}

/// Units tag for received power expressed in dB relative to unit power.
pub const UNITS_DB: &str = "dB";

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    pub grid: FrequencyGrid,
    pub records: Vec<Observation>,
    pub scene_id: String,
    pub units: String,
}

impl ObservationSet {
    pub fn new(grid: FrequencyGrid, scene_id: impl Into<String>) -> Self {
        Self {
            grid,
            records: Vec::new(),
            scene_id: scene_id.into(),
            units: UNITS_DB.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.frequency_index >= self.grid.len() {
                return Err(Error::Validation(format!(
                    "record {i}: frequency index {} outside grid of {}",
                    r.frequency_index,
                    self.grid.len()
                )));
            }
            let finite = match r.measurement {
                Measurement::RssiDb(db) => db.is_finite(),
                Measurement::Complex(c) => c.re.is_finite() && c.im.is_finite(),
            };
            if !finite {
                return Err(Error::Validation(format!("record {i}: non-finite measurement")));
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> ObservationSet {
        ObservationSet {
            grid: self.grid.clone(),
            records: self.records.iter().filter(|r| r.split == split).cloned().collect(),
            scene_id: self.scene_id.clone(),
            units: self.units.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_gaussian(mean: Vec3) -> RfGaussian {
        RfGaussian::new(mean, Vec3::repeat(0.1), Vec3::z(), RfAttributes::default())
    }

    #[test]
    fn covariance_identity_and_axis_aligned() {
        let sigma = covariance_from(&Vec3::repeat(1.0), &Quat::identity()).unwrap();
        assert_relative_eq!(sigma, Mat3::identity(), epsilon = 1e-15);
        let sigma = covariance_from(&Vec3::new(2.0, 1.0, 1.0), &Quat::identity()).unwrap();
        assert_relative_eq!(sigma, Mat3::from_diagonal(&Vec3::new(4.0, 1.0, 1.0)), epsilon = 1e-15);
    }

    #[test]
    fn covariance_of_rotated_isotropic_is_identity() {
        let q = *UnitQuaternion::from_axis_angle(&Vector3::z_axis(), PI / 2.0).quaternion();
        let sigma = covariance_from(&Vec3::repeat(1.0), &q).unwrap();
        assert_relative_eq!(sigma, Mat3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn covariance_rejects_bad_scale() {
        assert!(covariance_from(&Vec3::new(1.0, 0.0, 1.0), &Quat::identity()).is_err());
        assert!(covariance_from(&Vec3::new(1.0, -1.0, 1.0), &Quat::identity()).is_err());
    }

    #[test]
    fn covariance_eigenvalues_are_squared_scales() {
        let q = *UnitQuaternion::from_euler_angles(0.3, -1.1, 2.0).quaternion();
        let scale = Vec3::new(0.5, 1.5, 3.0);
        let sigma = covariance_from(&scale, &q).unwrap();
        assert_eq!(sigma, sigma.transpose());
        let mut eig: Vec<f64> = sigma.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (e, s) in eig.iter().zip([0.25, 2.25, 9.0]) {
            assert!((e - s).abs() < 1e-10, "{e} vs {s}");
        }
    }

    #[test]
    fn valid_scene_has_empty_report() {
        let scene = Scene::from_gaussians(vec![
            unit_gaussian(Vec3::zeros()),
            unit_gaussian(Vec3::x()),
            unit_gaussian(Vec3::y()),
        ]);
        assert!(validate_scene(&scene).is_empty());
    }

    #[test]
    fn report_cites_alpha_index() {
        let mut gs = vec![
            unit_gaussian(Vec3::zeros()),
            unit_gaussian(Vec3::x()),
            unit_gaussian(Vec3::y()),
        ];
        gs[2].attributes.alpha = 1.5;
        let report = validate_scene(&Scene::from_gaussians(gs));
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].gaussian, Some(2));
        assert_eq!(report[0].field, "alpha");
    }

    #[test]
    fn report_cites_roughness_constraint() {
        let mut g = unit_gaussian(Vec3::zeros());
        g.attributes.roughness = 0.5;
        let report = validate_scene(&Scene::from_gaussians(vec![g]));
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].field, "roughness");
        assert!(report[0].message.contains("R >= 1"));
    }

    #[test]
    fn report_flags_center_outside_bounds() {
        let g = unit_gaussian(Vec3::new(10.0, 0.0, 0.0));
        let scene = Scene::with_bounds(vec![g], Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0)));
        let report = validate_scene(&scene);
        assert_eq!(report[0].field, "mean");
    }

    #[test]
    fn frozen_geometry_rejects_moves_but_accepts_attributes() {
        let scene = Scene::from_gaussians(vec![unit_gaussian(Vec3::zeros())]);
        let mut moved = scene.gaussians()[0].clone();
        moved.mean.x += 0.1;
        assert!(matches!(
            scene.replace_gaussian(0, moved.clone()),
            Err(Error::GeometryFrozen { field: "mean", .. })
        ));
        let mut recolored = scene.gaussians()[0].clone();
        recolored.attributes.gamma_mag = 0.9;
        let edited = scene.replace_gaussian(0, recolored).unwrap();
        assert_eq!(edited.gaussians()[0].attributes.gamma_mag, 0.9);
        assert_eq!(scene.gaussians()[0].attributes.gamma_mag, 0.5);
        let thawed = scene.with_geometry_frozen(false);
        assert!(thawed.replace_gaussian(0, moved).is_ok());
    }

    #[test]
    fn canonical_phase_range() {
        assert_eq!(canonical_phase(PI), PI);
        assert_relative_eq!(canonical_phase(-PI), PI, epsilon = 1e-15);
        assert_relative_eq!(canonical_phase(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(canonical_phase(0.25), 0.25);
        assert_relative_eq!(canonical_phase(-0.25), -0.25, epsilon = 1e-15);
    }

    #[test]
    fn frequency_grid_rejects_unsorted_and_empty() {
        assert!(FrequencyGrid::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![2.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        let g = FrequencyGrid::single(SPEED_OF_LIGHT).unwrap();
        assert_relative_eq!(g.wavelength(0), 1.0);
    }

    #[test]
    fn omni_pattern_is_constant() {
        let a = Antenna::omni(Vec3::zeros());
        for d in [Vec3::x(), -Vec3::z(), Vec3::new(1.0, 1.0, 1.0).normalize()] {
            assert_eq!(a.pattern_gain(&d, 1e9), Complex64::new(1.0, 0.0));
        }
        let h = Antenna::horn(Vec3::zeros(), Vec3::x());
        assert!(h.validate().is_ok());
        assert_eq!(h.pattern_gain(&-Vec3::x(), 1e9).re, 0.0);
        let bad = Antenna::horn(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0));
        assert!(bad.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn covariance_is_rotation_equivariant(
            s in proptest::array::uniform3(0.05f64..3.0),
            e1 in proptest::array::uniform3(-3.0f64..3.0),
            e2 in proptest::array::uniform3(-3.0f64..3.0),
        ) {
            let scale = Vec3::from(s);
            let q1 = UnitQuaternion::from_euler_angles(e1[0], e1[1], e1[2]);
            let q2 = UnitQuaternion::from_euler_angles(e2[0], e2[1], e2[2]);
            let lhs = covariance_from(&scale, (q2 * q1).quaternion()).unwrap();
            let r2 = q2.to_rotation_matrix().into_inner();
            let rhs = r2 * covariance_from(&scale, q1.quaternion()).unwrap() * r2.transpose();
            proptest::prop_assert!((lhs - rhs).abs().max() < 1e-10);
        }
    }
}
