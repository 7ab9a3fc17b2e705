//! End-to-end forward model: receiver field-of-view discretization,
//! coherent alpha-blending with path loss and phase, receiver pattern
//! integration, and line-of-sight mixing.

mod blend;
mod drivers;
mod fov;
mod plan;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::scene::{Antenna, ComplexSignal, FrequencyGrid, Scene};

pub use blend::{blend_direction, integrate_receiver, DirectionalRender, DirectionalSample};
pub use drivers::{
    export_attribute_maps, render_radio_map, render_rcs_sweep, AttributeKind, AttributeMaps, MapSpec, RadarPattern,
    RadioMap, RcsConfig, RcsPoint,
};
pub use fov::{make_fov_grid, FovGrid, FovKind, FOV_STEP_DEG};
pub use plan::{AttributeGradient, Contributor, Illum, Illumination, LinkPlan, LosPlan, Occluder};

/// Which free-space terms the forward model applies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// Friis spreading and propagation phase on both legs.
    #[default]
    Full,
    /// Spreading and propagation phase removed (ablation).
    ScatteringOnly,
}

/// Where the blending stage applies the Gaussian-to-receiver spreading and
/// phase factor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttenuationIndex {
    /// Once per contributing Gaussian, over its own distance to the receiver.
    #[default]
    PerContributor,
    /// Once per occluder in front of the contributor, over the occluder's
    /// distance (the contributor's own distance is not applied).
    PerOccluder,
}

/// How receive directions are assigned to Gaussians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FovMode {
    /// Nearest-cell binning on the receiver's spherical grid: the receive
    /// pattern and the outgoing scatter direction are taken at the cell
    /// centre.
    Grid { step_deg: f64 },
    /// Every Gaussian is seen along its exact receiver direction.
    Exact,
}

impl Default for FovMode {
    fn default() -> Self {
        FovMode::Grid { step_deg: FOV_STEP_DEG }
    }
}

/// Line-of-sight visibility weight source.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosVisibility {
    /// Transmittance of the Tx→Rx segment through the scene.
    #[default]
    Geometric,
    /// A fixed weight in `[0, 1]`.
    Forced(f64),
}

/// Scene-level line-of-sight configuration.
///
/// Per link, `S_Tx = s_tx · s_tx_strength · √(P_T G_T)` and
/// `c_dis = c_dis_ref · λ / (4π d)` (or `c_dis_ref` with path loss disabled).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LosConfig {
    pub s_tx_strength: f64,
    pub c_dis_ref: f64,
    #[serde(default)]
    pub visibility: LosVisibility,
}

impl LosConfig {
    pub fn new(s_tx_strength: f64, c_dis_ref: f64) -> Self {
        Self {
            s_tx_strength,
            c_dis_ref,
            visibility: LosVisibility::Geometric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let forced_ok = match self.visibility {
            LosVisibility::Geometric => true,
            LosVisibility::Forced(v) => (0.0..=1.0).contains(&v),
        };
        if !(self.s_tx_strength >= 0.0) || !(self.c_dis_ref >= 0.0) || !forced_ok {
            return Err(Error::Validation(format!("invalid LoS parameters {self:?}")));
        }
        Ok(())
    }

    /// LoS parameters for one link.
    pub fn params(
        &self,
        tx: &Antenna,
        v_vis: f64,
        d_los: f64,
        wavelength: f64,
        propagation: Propagation,
    ) -> LosNlosParams {
        let c_dis = match propagation {
            Propagation::Full => self.c_dis_ref * wavelength / (4.0 * PI * d_los),
            Propagation::ScatteringOnly => self.c_dis_ref,
        };
        LosNlosParams {
            v_vis,
            s_tx_strength: self.s_tx_strength * (tx.power_watts * tx.gain).sqrt(),
            c_dis,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LosNlosParams {
    pub v_vis: f64,
    pub s_tx_strength: f64,
    pub c_dis: f64,
}

/// `S_LoS = v_vis · S_Tx · c_dis · e^{j 2π d / λ}`.
pub fn los_term(params: &LosNlosParams, d_los: f64, wavelength: f64) -> Complex64 {
    Complex64::from_polar(
        params.v_vis * params.s_tx_strength * params.c_dis,
        2.0 * PI * d_los / wavelength,
    )
}

/// `S_LoS + S_NLoS`.
pub fn mix_los_nlos(params: &LosNlosParams, d_los: f64, wavelength: f64, s_nlos: Complex64) -> Complex64 {
    los_term(params, d_los, wavelength) + s_nlos
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub propagation: Propagation,
    pub attenuation: AttenuationIndex,
    pub fov: FovMode,
    pub los: Option<LosConfig>,
    /// Complex transmitted waveform sample `s_tx`.
    pub s_tx: Complex64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            propagation: Propagation::Full,
            attenuation: AttenuationIndex::PerContributor,
            fov: FovMode::default(),
            los: None,
            s_tx: Complex64::new(1.0, 0.0),
        }
    }
}

impl RenderOptions {
    pub fn exact() -> Self {
        Self {
            fov: FovMode::Exact,
            ..Self::default()
        }
    }

    pub fn with_los(mut self, los: Option<LosConfig>) -> Self {
        self.los = los;
        self
    }
}

/// Complex signal at the receiver over a frequency grid.
pub fn render_received_signal(
    scene: &Scene,
    bvh: &Bvh,
    tx: &Antenna,
    rx: &Antenna,
    grid: &FrequencyGrid,
    options: &RenderOptions,
) -> Result<ComplexSignal> {
    tx.validate()?;
    rx.validate()?;
    let illumination = Arc::new(Illumination::build(scene, bvh, tx, options.propagation)?);
    let plan = LinkPlan::build(scene, bvh, illumination, rx, options)?;
    let attributes = scene.attributes();
    let values = grid.samples().iter().map(|&f| plan.evaluate(&attributes, f)).collect();
    ComplexSignal::new(grid.clone(), values)
}
