//! Sigmoid and shifted-sigmoid activations.
//!
//! The shifted variant moves the sigmoid along the score axis by an
//! imbalance-dependent factor `g = asig_alpha * ln(IR) + asig_beta`, so a
//! raw score must clear `g` before the predicted default probability
//! crosses one half.

use core::fmt;

use crate::dataset::ImbalanceRatio;

/// Logistic function, sign-split so `exp` never sees a positive overflow.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Shifted sigmoid: `asig(z, g) = sigmoid(z - g)`.
///
/// Shares the `sigmoid` code path so the two agree bit for bit at `g = 0`.
pub fn asig(z: f64, g: f64) -> f64 {
    sigmoid(z - g)
}

/// Slope/intercept pair defining the shift `g(IR) = asig_alpha * ln(IR) + asig_beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsigParams {
    asig_alpha: f64,
    asig_beta: f64,
}

impl AsigParams {
    /// Construct with the monotonicity guard: `asig_alpha >= 0` keeps the
    /// shift non-decreasing in the imbalance ratio.
    pub fn new(asig_alpha: f64, asig_beta: f64) -> Result<Self, ActivationError> {
        if !asig_alpha.is_finite() || !asig_beta.is_finite() {
            return Err(ActivationError::NonFiniteParams);
        }
        if asig_alpha < 0.0 {
            return Err(ActivationError::NegativeSlope { asig_alpha });
        }
        Ok(AsigParams { asig_alpha, asig_beta })
    }

    /// Construct without the slope guard. Regression fits on noisy shift
    /// points may legitimately produce a small negative slope.
    pub fn new_unchecked(asig_alpha: f64, asig_beta: f64) -> Result<Self, ActivationError> {
        if !asig_alpha.is_finite() || !asig_beta.is_finite() {
            return Err(ActivationError::NonFiniteParams);
        }
        Ok(AsigParams { asig_alpha, asig_beta })
    }

    /// A constant shift `k`, independent of the imbalance ratio.
    /// This is the form used while grid-searching candidate shifts.
    pub fn fixed_shift(k: f64) -> Result<Self, ActivationError> {
        Self::new(0.0, k)
    }

    pub fn asig_alpha(&self) -> f64 {
        self.asig_alpha
    }

    pub fn asig_beta(&self) -> f64 {
        self.asig_beta
    }
}

/// Shift for a dataset with the given imbalance ratio.
///
/// Requires `ir >= 1`: the shift direction assumes positives are the
/// minority class.
pub fn g_factor(ir: ImbalanceRatio, params: &AsigParams) -> Result<f64, ActivationError> {
    let v = ir.value();
    if v < 1.0 {
        return Err(ActivationError::RatioBelowOne { ir: v });
    }
    Ok(params.asig_alpha * libm::log(v) + params.asig_beta)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActivationError {
    NonFiniteParams,
    NegativeSlope { asig_alpha: f64 },
    RatioBelowOne { ir: f64 },
}

impl fmt::Display for ActivationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationError::NonFiniteParams => write!(f, "shift parameters must be finite"),
            ActivationError::NegativeSlope { asig_alpha } => {
                write!(f, "asig_alpha must be >= 0, got {asig_alpha}")
            }
            ActivationError::RatioBelowOne { ir } => {
                write!(f, "imbalance ratio must be >= 1 for the shift, got {ir}")
            }
        }
    }
}

impl core::error::Error for ActivationError {}
