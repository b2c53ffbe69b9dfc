//! Penalty weights and problem variants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tracking functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    /// `α/2 ‖z − ẑ‖²` over space and parameters.
    J1,
    /// `α/2 ‖z̄ − ẑ‖²` on the mean only.
    J2,
}

/// Norm of the control penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularization {
    L2,
    H1,
}

/// Where the control acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Source term `u` in the domain.
    Distributive,
    /// Neumann flux `g` on the horizontal sides.
    Boundary,
}

/// Cost weights and variant flags.
///
/// `epsilon = 1` means only the deterministic mean of the control is
/// unknown and any prescribed perturbation is added to it; `epsilon = 0`
/// means the control is a fully unknown random field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: u8,
    pub functional: Functional,
    pub regularization: Regularization,
    pub channel: Channel,
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            gamma: 1e-5,
            delta: 0.0,
            epsilon: 1,
            functional: Functional::J1,
            regularization: Regularization::L2,
            channel: Channel::Distributive,
        }
    }
}

impl ControlSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.epsilon > 1 {
            return Err(Error::InvalidSpec(format!("epsilon must be 0 or 1, got {}", self.epsilon)));
        }
        match self.channel {
            Channel::Distributive if self.gamma == 0.0 => {
                Err(Error::InvalidSpec("gamma must be positive for a distributive control".into()))
            }
            Channel::Boundary if self.delta == 0.0 => {
                Err(Error::InvalidSpec("delta must be positive for a boundary control".into()))
            }
            _ => Ok(()),
        }
    }

    /// Whether only the mean control is unknown.
    pub fn mean_only(&self) -> bool {
        self.epsilon == 1
    }

    /// Penalty of the active control channel (`γ` or `δ`).
    pub fn penalty(&self) -> f64 {
        match self.channel {
            Channel::Distributive => self.gamma,
            Channel::Boundary => self.delta,
        }
    }

    /// Weights `(mean, fluctuation)` of `z` in the adjoint equation: the
    /// state block `q` enters with `−w_0` for the mean and `−w_1` otherwise.
    pub fn adjoint_weights(&self) -> (f64, f64) {
        match self.functional {
            Functional::J1 => (self.alpha, self.alpha + self.beta),
            Functional::J2 => (self.alpha, self.beta),
        }
    }
}

/// Diagonal `T(a, b) = diag(a, a+b, …, a+b)` of size `q`.
pub fn t_matrix(a: f64, b: f64, q: usize) -> Vec<f64> {
    assert!(q >= 1);
    let mut d = vec![a + b; q];
    d[0] = a;
    d
}
