//! First-order optimizer and learning-rate schedule.

use std::f64::consts::PI;

/// Cosine decay from `start` to `end` over `iterations` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineSchedule {
    pub start: f64,
    pub end: f64,
    pub iterations: usize,
}

impl CosineSchedule {
    pub fn rate(&self, step: usize) -> f64 {
        if self.iterations <= 1 {
            return self.start;
        }
        let t = (step as f64 / (self.iterations - 1) as f64).min(1.0);
        self.end + 0.5 * (self.start - self.end) * (1.0 + (PI * t).cos())
    }
}

/// Adaptive-moment optimizer over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Updates the moments with `grad` and returns the bias-corrected step
    /// direction (to be scaled by the learning rate and subtracted).
    pub fn direction(&mut self, grad: &[f64]) -> Vec<f64> {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        grad.iter()
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
            .map(|(&g, (m, v))| {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                (*m / c1) / ((*v / c2).sqrt() + self.epsilon)
            })
            .collect()
    }
}
