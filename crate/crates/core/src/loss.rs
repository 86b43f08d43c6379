//! Per-sample losses with analytic first and second derivatives in the raw
//! score, as required by second-order boosting.
//!
//! Three losses share one probability pipeline: cross-entropy and focal read
//! `p = sigmoid(z)`, the shifted focal variant reads `p = sigmoid(z - g)`
//! with `g` fixed per training run from the training data's imbalance ratio.

use core::fmt;

use crate::activation::{g_factor, sigmoid, ActivationError, AsigParams};
use crate::dataset::ImbalanceRatio;

/// Probabilities are pinched away from {0, 1} by this much before any log.
pub const PROB_CLAMP: f64 = 1e-12;

/// Second derivatives are floored here; the focal Hessian can touch zero or
/// dip slightly negative, which would blow up Newton leaf values.
pub const HESS_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    Focal,
    AsigFocal,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "ce",
            LossKind::Focal => "focal",
            LossKind::AsigFocal => "asig_focal",
        }
    }
}

/// First and second derivative of a per-sample loss in the raw score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradHess {
    pub grad: f64,
    pub hess: f64,
}

/// A fully-specified loss: which kind, its focal hyperparameters, and for
/// the shifted kind the (alpha, beta) pair plus the training imbalance ratio
/// that together fix the shift.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    focal_gamma: f64,
    focal_alpha: f64,
    asig: Option<AsigParams>,
    ir: Option<ImbalanceRatio>,
}

pub const DEFAULT_FOCAL_GAMMA: f64 = 2.0;
pub const DEFAULT_FOCAL_ALPHA: f64 = 0.25;

impl LossSpec {
    pub fn cross_entropy() -> Self {
        LossSpec {
            kind: LossKind::CrossEntropy,
            focal_gamma: 0.0,
            focal_alpha: 0.5,
            asig: None,
            ir: None,
        }
    }

    pub fn focal(focal_gamma: f64, focal_alpha: f64) -> Result<Self, LossError> {
        let spec = LossSpec {
            kind: LossKind::Focal,
            focal_gamma,
            focal_alpha,
            asig: None,
            ir: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn asig_focal(
        focal_gamma: f64,
        focal_alpha: f64,
        asig: AsigParams,
        ir: ImbalanceRatio,
    ) -> Result<Self, LossError> {
        let spec = LossSpec {
            kind: LossKind::AsigFocal,
            focal_gamma,
            focal_alpha,
            asig: Some(asig),
            ir: Some(ir),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn focal_gamma(&self) -> f64 {
        self.focal_gamma
    }

    pub fn focal_alpha(&self) -> f64 {
        self.focal_alpha
    }

    pub fn asig(&self) -> Option<&AsigParams> {
        self.asig.as_ref()
    }

    pub fn ir(&self) -> Option<ImbalanceRatio> {
        self.ir
    }

    /// Same spec with the imbalance ratio replaced (no-op for unshifted
    /// kinds). Evaluation re-pins this from each training fold.
    pub fn with_ir(&self, ir: ImbalanceRatio) -> Self {
        let mut spec = self.clone();
        if spec.kind == LossKind::AsigFocal {
            spec.ir = Some(ir);
        }
        spec
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !self.focal_gamma.is_finite() || self.focal_gamma < 0.0 {
            return Err(LossError::BadGamma { value: self.focal_gamma });
        }
        if !(self.focal_alpha > 0.0 && self.focal_alpha < 1.0) {
            return Err(LossError::BadAlpha { value: self.focal_alpha });
        }
        if self.kind == LossKind::AsigFocal {
            if self.asig.is_none() || self.ir.is_none() {
                return Err(LossError::MissingShift);
            }
            self.shift()?;
        }
        Ok(())
    }

    /// Activation shift: 0 for plain losses, `g(IR)` for the shifted kind.
    pub fn shift(&self) -> Result<f64, LossError> {
        match self.kind {
            LossKind::CrossEntropy | LossKind::Focal => Ok(0.0),
            LossKind::AsigFocal => {
                let asig = self.asig.as_ref().ok_or(LossError::MissingShift)?;
                let ir = self.ir.ok_or(LossError::MissingShift)?;
                g_factor(ir, asig).map_err(LossError::Activation)
            }
        }
    }

    /// Per-sample loss at raw score `z` for label `y` in {0, 1}.
    pub fn loss_value(&self, z: f64, y: u8) -> Result<f64, LossError> {
        let p = self.probability(z)?;
        Ok(match self.kind {
            LossKind::CrossEntropy => {
                if y == 1 {
                    -libm::log(p)
                } else {
                    -libm::log(1.0 - p)
                }
            }
            LossKind::Focal | LossKind::AsigFocal => {
                focal_value(p, y, self.focal_gamma, self.focal_alpha)
            }
        })
    }

    /// Analytic d/dz and d2/dz2 of `loss_value`, Hessian floored.
    pub fn loss_grad_hess(&self, z: f64, y: u8) -> Result<GradHess, LossError> {
        let p = self.probability(z)?;
        let (grad, hess) = match self.kind {
            LossKind::CrossEntropy => {
                let grad = p - f64::from(y);
                (grad, p * (1.0 - p))
            }
            LossKind::Focal | LossKind::AsigFocal => {
                focal_grad_hess(p, y, self.focal_gamma, self.focal_alpha)
            }
        };
        Ok(GradHess {
            grad,
            hess: hess.max(HESS_FLOOR),
        })
    }

    /// Activation applied to a raw score, clamped into
    /// `[PROB_CLAMP, 1 - PROB_CLAMP]`.
    pub fn probability(&self, z: f64) -> Result<f64, LossError> {
        let g = self.shift()?;
        Ok(sigmoid(z - g).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
    }
}

fn focal_value(p: f64, y: u8, gamma: f64, alpha: f64) -> f64 {
    if y == 1 {
        -alpha * libm::pow(1.0 - p, gamma) * libm::log(p)
    } else {
        -(1.0 - alpha) * libm::pow(p, gamma) * libm::log(1.0 - p)
    }
}

// Writing q = 1 - p and using dp/dz = p*q:
//   y = 1:  d/dz = alpha * q^gamma * (gamma * p * ln p - q)
//           d2/dz2 = alpha * p * q^gamma
//                    * (q * (gamma * ln p + gamma + 1) - gamma * (gamma * p * ln p - q))
//   y = 0:  d/dz = (1 - alpha) * p^gamma * (p - gamma * q * ln q)
//           d2/dz2 = (1 - alpha) * p^gamma * q
//                    * (gamma * (p - gamma * q * ln q) + p * (1 + gamma + gamma * ln q))
fn focal_grad_hess(p: f64, y: u8, gamma: f64, alpha: f64) -> (f64, f64) {
    let q = 1.0 - p;
    if y == 1 {
        let ln_p = libm::log(p);
        let qg = libm::pow(q, gamma);
        let inner = gamma * p * ln_p - q;
        let grad = alpha * qg * inner;
        let hess = alpha * p * qg * (q * (gamma * ln_p + gamma + 1.0) - gamma * inner);
        (grad, hess)
    } else {
        let ln_q = libm::log(q);
        let pg = libm::pow(p, gamma);
        let inner = p - gamma * q * ln_q;
        let grad = (1.0 - alpha) * pg * inner;
        let hess = (1.0 - alpha) * pg * q * (gamma * inner + p * (1.0 + gamma + gamma * ln_q));
        (grad, hess)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossError {
    BadGamma { value: f64 },
    BadAlpha { value: f64 },
    MissingShift,
    Activation(ActivationError),
}

impl fmt::Display for LossError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossError::BadGamma { value } => {
                write!(f, "focal_gamma must be finite and >= 0, got {value}")
            }
            LossError::BadAlpha { value } => {
                write!(f, "focal_alpha must lie in (0, 1), got {value}")
            }
            LossError::MissingShift => {
                write!(f, "asig_focal requires shift parameters and an imbalance ratio")
            }
            LossError::Activation(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for LossError {}
