//! Unconstrained attribute parameterization.

use serde::{Deserialize, Serialize};

use crate::render::AttributeGradient;
use crate::scene::{canonical_phase, RfAttributes};

/// Keeps preimages of `α` and `|Γ|` finite when the constrained value sits
/// on the boundary of `[0, 1]`.
const BOUNDARY_MARGIN: f64 = 1e-12;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(BOUNDARY_MARGIN, 1.0 - BOUNDARY_MARGIN);
    (p / (1.0 - p)).ln()
}

/// `ln(1 + eˣ)`, evaluated without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    let y = y.max(BOUNDARY_MARGIN);
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// Which attributes an optimizer may change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnableMask {
    pub alpha: bool,
    pub roughness: bool,
    pub gamma_mag: bool,
    pub gamma_phase: bool,
}

impl Default for LearnableMask {
    fn default() -> Self {
        Self::all()
    }
}

impl LearnableMask {
    pub fn all() -> Self {
        Self {
            alpha: true,
            roughness: true,
            gamma_mag: true,
            gamma_phase: true,
        }
    }

    pub fn as_array(&self) -> [bool; 4] {
        [self.alpha, self.roughness, self.gamma_mag, self.gamma_phase]
    }
}

/// Per-Gaussian raw parameters `(a, r, g, p)` with
/// `α = σ(a)`, `R = 1 + softplus(r)`, `|Γ| = σ(g)`, `∠Γ = wrap(p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeBank {
    raw: Vec<[f64; 4]>,
}

impl AttributeBank {
    /// The default initialization `α = 0.5`, `R = 2`, `|Γ| = 0.5`, `∠Γ = 0`.
    pub fn initial(n: usize) -> Self {
        Self::from_attributes(&vec![RfAttributes::default(); n])
    }

    pub fn from_attributes(attrs: &[RfAttributes]) -> Self {
        Self {
            raw: attrs
                .iter()
                .map(|a| {
                    [
                        logit(a.alpha),
                        softplus_inv(a.roughness - 1.0),
                        logit(a.gamma_mag),
                        canonical_phase(a.gamma_phase),
                    ]
                })
                .collect(),
        }
    }

    pub fn from_raw(raw: Vec<[f64; 4]>) -> Self {
        Self { raw }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw(&self) -> &[[f64; 4]] {
        &self.raw
    }

    pub fn raw_mut(&mut self) -> &mut [[f64; 4]] {
        &mut self.raw
    }

    pub fn attribute(&self, i: usize) -> RfAttributes {
        constrain(&self.raw[i], [0.0; 3])
    }

    pub fn attributes(&self) -> Vec<RfAttributes> {
        (0..self.raw.len()).map(|i| self.attribute(i)).collect()
    }

    /// Chain rule from constrained-attribute gradients to raw gradients.
    pub fn raw_gradient(&self, grads: &[AttributeGradient]) -> Vec<[f64; 4]> {
        self.raw
            .iter()
            .zip(grads)
            .map(|(raw, g)| {
                let j = jacobian(raw, [0.0; 3]);
                [
                    g.alpha * j[0],
                    g.roughness * j[1],
                    g.gamma_mag * j[2],
                    g.gamma_phase * j[3],
                ]
            })
            .collect()
    }
}

/// Constrained attributes from raw parameters plus optional deltas on
/// `(r, g, p)`.
pub(crate) fn constrain(raw: &[f64; 4], delta: [f64; 3]) -> RfAttributes {
    RfAttributes {
        alpha: sigmoid(raw[0]),
        roughness: 1.0 + softplus(raw[1] + delta[0]),
        gamma_mag: sigmoid(raw[2] + delta[1]),
        gamma_phase: canonical_phase(raw[3] + delta[2]),
    }
}

/// Derivatives of the constrained attributes with respect to their raw
/// arguments (including deltas).
pub(crate) fn jacobian(raw: &[f64; 4], delta: [f64; 3]) -> [f64; 4] {
    let a = sigmoid(raw[0]);
    let g = sigmoid(raw[2] + delta[1]);
    [a * (1.0 - a), sigmoid(raw[1] + delta[0]), g * (1.0 - g), 1.0]
}
