//! Received-power loss.

use crate::error::{Error, Result};
use crate::scene::{ComplexSignal, Observation, ObservationSet, UNITS_DB};

/// `(|S|² − p)²` for one record, with `p` the measured power in linear units.
pub fn rf_loss(predicted: &ComplexSignal, record: &Observation) -> Result<f64> {
    let s = predicted.values().get(record.frequency_index).ok_or_else(|| {
        Error::Precondition(format!(
            "frequency index {} outside a signal of {} samples",
            record.frequency_index,
            predicted.values().len()
        ))
    })?;
    Ok(power_residual(s.norm_sqr(), record.measurement.power()).powi(2))
}

pub(crate) fn power_residual(predicted_power: f64, measured_power: f64) -> f64 {
    predicted_power - measured_power
}

/// Rejects observation sets whose power values are not tagged as dB.
pub fn check_units(observations: &ObservationSet) -> Result<()> {
    if observations.units != UNITS_DB {
        return Err(Error::UnitMismatch {
            expected: UNITS_DB.into(),
            found: observations.units.clone(),
        });
    }
    Ok(())
}
