//! Attribute recovery from received-power observations.

mod bank;
mod fam;
mod fit;
mod loss;
mod model;
mod optim;

pub use bank::{logit, sigmoid, softplus, softplus_inv, AttributeBank, LearnableMask};
pub use fam::{fam_apply, fit_wideband, fit_wideband_model, FamConfig, FamNetwork, WidebandConfig, WidebandReport};
pub use fit::{fit, fit_model, initial_bank, FitConfig, FitReport, GradientCheckSummary, InitStrategy, OptimizerKind};
pub use loss::{check_units, rf_loss};
pub use model::{gradients, total_loss, AttributeView, LossGradient, ObservationModel};
pub use optim::{Adam, CosineSchedule};
