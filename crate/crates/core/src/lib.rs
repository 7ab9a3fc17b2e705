//! Radio-frequency rendering over scenes of RF-attributed 3D Gaussians.
//!
//! The forward path synthesizes the complex signal seen by a receiver:
//! Friis illumination of every Gaussian from the transmitter, visibility
//! through occluding Gaussians (BVH ray tracing), a directive scattering
//! lobe per Gaussian, and coherent alpha-blending over the receiver's
//! field of view. The inverse path recovers per-Gaussian RF attributes
//! (opacity, roughness, complex reflection coefficient) from received
//! power observations with analytic gradients.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bsdf;
pub mod bvh;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod inverse;
pub mod render;
pub mod scene;
pub mod visibility;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scene::{
    Aabb, Antenna, AntennaPattern, ComplexSignal, FrequencyGrid, Measurement, Observation, ObservationSet, Quat,
    RfAttributes, RfGaussian, Scene, Split, Vec3,
};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Received-power floor used wherever a power of zero must be shown in dB.
pub const DB_FLOOR: f64 = -300.0;

/// `10·log10(p)` floored at [`DB_FLOOR`].
pub fn power_to_db(power: f64) -> f64 {
    if power > 0.0 {
        (10.0 * power.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Inverse of [`power_to_db`] (no floor handling).
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
