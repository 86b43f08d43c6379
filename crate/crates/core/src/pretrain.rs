//! Shift pretraining: grid-search the activation shift on resampled
//! baseline sub-datasets, keep the AUC-argmax shift per imbalance ratio,
//! and fit `shift = asig_alpha * ln(IR) + asig_beta` by least squares.

use alloc::vec::Vec;
use core::fmt;

use crate::activation::{ActivationError, AsigParams};
use crate::dataset::{resample_to_ir, DataError, Dataset, ImbalanceRatio};
use crate::gbdt::BoostConfig;
use crate::loss::{LossError, LossSpec, DEFAULT_FOCAL_ALPHA, DEFAULT_FOCAL_GAMMA};
use crate::metrics::{evaluate_aucs, EvalProtocol, MetricsError};
use crate::rng::derive_seed;

/// Evenly spaced candidate shifts from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for ShiftGrid {
    fn default() -> Self {
        ShiftGrid { lo: -3.0, hi: 3.0, step: 0.3 }
    }
}

impl ShiftGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        ShiftGrid { lo, hi, step }
    }

    /// Ascending grid values. `hi` must land on the grid to within 1e-9;
    /// `lo == hi` is the singleton grid.
    pub fn values(&self) -> Result<Vec<f64>, PretrainError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(PretrainError::BadGrid("grid bounds and step must be finite"));
        }
        if self.lo > self.hi {
            return Err(PretrainError::BadGrid("grid lo must not exceed hi"));
        }
        if self.lo == self.hi {
            return Ok(alloc::vec![self.lo]);
        }
        if self.step <= 0.0 {
            return Err(PretrainError::BadGrid("grid step must be positive"));
        }
        let n = libm::round((self.hi - self.lo) / self.step);
        let last = self.lo + n * self.step;
        if (last - self.hi).abs() > 1e-9 || n < 1.0 {
            return Err(PretrainError::HiUnreachable { lo: self.lo, hi: self.hi, step: self.step });
        }
        Ok((0..=n as usize).map(|i| self.lo + i as f64 * self.step).collect())
    }
}

/// One pretrained point: a sub-dataset's achieved ratio, the shift that
/// maximised its mean held-out AUC, and that AUC.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainPoint {
    pub ir_achieved: f64,
    pub best_shift: f64,
    pub best_auc: f64,
}

/// Full pretraining output: the per-ratio points, the fitted parameters,
/// the fit quality, and the resampling seed for provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainResult {
    pub points: Vec<PretrainPoint>,
    pub asig: AsigParams,
    pub r_squared: f64,
    pub seed: u64,
}

/// Grid-search the constant shift maximising mean held-out AUC on one
/// dataset. Every grid value trains a focal model (default focal
/// hyperparameters) whose activation is the sigmoid shifted by exactly
/// that value. Ties resolve toward the smallest shift.
pub fn best_shift_for(
    dataset: &Dataset,
    grid: &ShiftGrid,
    config: &BoostConfig,
    protocol: &EvalProtocol,
) -> Result<(f64, f64), PretrainError> {
    let values = grid.values()?;
    let ir = dataset.imbalance_ratio().map_err(PretrainError::Data)?;
    let mut best: Option<(f64, f64)> = None;
    for &k in &values {
        let params = AsigParams::fixed_shift(k).map_err(PretrainError::Activation)?;
        let spec = LossSpec::asig_focal(DEFAULT_FOCAL_GAMMA, DEFAULT_FOCAL_ALPHA, params, ir)
            .map_err(PretrainError::Loss)?;
        let aucs = evaluate_aucs(dataset, config, &spec, protocol).map_err(PretrainError::Metrics)?;
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        if best.map_or(true, |(_, b)| mean > b) {
            best = Some((k, mean));
        }
    }
    Ok(best.expect("grid has at least one value"))
}

/// Ordinary least squares of `shift` on `ln(ir)`.
///
/// Returns the fitted parameters (slope may come out negative on noisy
/// points, hence the unchecked construction) and the coefficient of
/// determination, defined as 1 for a zero-spread exact fit.
pub fn fit_log_regression(points: &[(f64, f64)]) -> Result<(AsigParams, f64), PretrainError> {
    if points.len() < 2 {
        return Err(PretrainError::TooFewPoints { n: points.len() });
    }
    for &(ir, _) in points {
        if !(ir >= 1.0) {
            return Err(PretrainError::IrBelowOne { ir });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(ir, _)| libm::log(ir)).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, s)| s).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx <= 0.0 {
        return Err(PretrainError::TooFewPoints { n: 1 });
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let params = AsigParams::new_unchecked(slope, intercept).map_err(PretrainError::Activation)?;
    Ok((params, r_squared))
}

/// Resample `baseline` to each target ratio, find the AUC-argmax shift per
/// sub-dataset, and fit the log-linear shift curve over the achieved
/// ratios. Sub-dataset resampling seeds derive from `seed` by target index.
pub fn pretrain_asig(
    baseline: &Dataset,
    ir_targets: &[f64],
    grid: &ShiftGrid,
    config: &BoostConfig,
    protocol: &EvalProtocol,
    seed: u64,
) -> Result<PretrainResult, PretrainError> {
    let mut points = Vec::with_capacity(ir_targets.len());
    for (i, &target) in ir_targets.iter().enumerate() {
        let target = ImbalanceRatio::new(target).map_err(PretrainError::Data)?;
        let sub = resample_to_ir(baseline, target, derive_seed(seed, i as u64))
            .map_err(PretrainError::Data)?;
        let ir_achieved = sub.imbalance_ratio().map_err(PretrainError::Data)?.value();
        let (best_shift, best_auc) = best_shift_for(&sub, grid, config, protocol)?;
        points.push(PretrainPoint { ir_achieved, best_shift, best_auc });
    }
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.ir_achieved, p.best_shift)).collect();
    let (asig, r_squared) = fit_log_regression(&pairs)?;
    Ok(PretrainResult { points, asig, r_squared, seed })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PretrainError {
    BadGrid(&'static str),
    HiUnreachable { lo: f64, hi: f64, step: f64 },
    TooFewPoints { n: usize },
    IrBelowOne { ir: f64 },
    Data(DataError),
    Metrics(MetricsError),
    Activation(ActivationError),
    Loss(LossError),
}

impl fmt::Display for PretrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PretrainError::BadGrid(msg) => write!(f, "bad shift grid: {msg}"),
            PretrainError::HiUnreachable { lo, hi, step } => {
                write!(f, "grid hi {hi} is not reachable from {lo} with step {step}")
            }
            PretrainError::TooFewPoints { n } => {
                write!(f, "log regression needs at least 2 points with distinct ratios, got {n}")
            }
            PretrainError::IrBelowOne { ir } => {
                write!(f, "log regression requires ratios >= 1, got {ir}")
            }
            PretrainError::Data(e) => write!(f, "{e}"),
            PretrainError::Metrics(e) => write!(f, "{e}"),
            PretrainError::Activation(e) => write!(f, "{e}"),
            PretrainError::Loss(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PretrainError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_21_values() {
        let values = ShiftGrid::default().values().unwrap();
        assert_eq!(values.len(), 21);
        assert!((values[0] + 3.0).abs() < 1e-12);
        assert!((values[20] - 3.0).abs() < 1e-9);
        for w in values.windows(2) {
            assert!((w[1] - w[0] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn simple_grid_values() {
        let values = ShiftGrid::new(0.0, 1.0, 0.5).values().unwrap();
        assert_eq!(values, alloc::vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn unreachable_hi_rejected() {
        assert!(matches!(
            ShiftGrid::new(0.0, 1.0, 2.0).values(),
            Err(PretrainError::HiUnreachable { .. })
        ));
    }

    #[test]
    fn singleton_grid_allowed() {
        assert_eq!(ShiftGrid::new(0.0, 0.0, 0.3).values().unwrap(), alloc::vec![0.0]);
    }

    #[test]
    fn degenerate_grids_rejected() {
        assert!(ShiftGrid::new(1.0, 0.0, 0.5).values().is_err());
        assert!(ShiftGrid::new(0.0, 1.0, 0.0).values().is_err());
        assert!(ShiftGrid::new(0.0, 1.0, -0.5).values().is_err());
        assert!(ShiftGrid::new(f64::NAN, 1.0, 0.5).values().is_err());
    }

    #[test]
    fn exact_log_linear_points_recovered() {
        let e = core::f64::consts::E;
        let (params, r2) = fit_log_regression(&[(e, 1.0), (e * e, 2.0)]).unwrap();
        assert!((params.asig_alpha() - 1.0).abs() < 1e-12);
        assert!(params.asig_beta().abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_colinear_points_recovered() {
        // ln(ir) abscissas 0, 1, 2 with shifts 0.5, 0.7, 0.9.
        let e = core::f64::consts::E;
        let points = [(1.0, 0.5), (e, 0.7), (e * e, 0.9)];
        let (params, r2) = fit_log_regression(&points).unwrap();
        assert!((params.asig_alpha() - 0.2).abs() < 1e-12);
        assert!((params.asig_beta() - 0.5).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_points_match_independent_normal_equations() {
        use crate::rng::SplitMix64;
        let mut rng = SplitMix64::new(17);
        let mut points = Vec::new();
        for i in 0..50 {
            let ir = 5.0 + i as f64 * 4.0;
            let noise = (rng.next_f64() - 0.5) * 0.2;
            points.push((ir, 0.24 * libm::log(ir) + 0.92 + noise));
        }
        let (params, r2) = fit_log_regression(&points).unwrap();

        // Independent route: solve the raw (uncentered) normal equations
        // [n, Sx; Sx, Sxx] [b; a] = [Sy; Sxy] by Cramer's rule.
        let n = points.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(ir, s) in &points {
            let x = libm::log(ir);
            sx += x;
            sy += s;
            sxx += x * x;
            sxy += x * s;
        }
        let det = n * sxx - sx * sx;
        let slope = (n * sxy - sx * sy) / det;
        let intercept = (sxx * sy - sx * sxy) / det;
        assert!((params.asig_alpha() - slope).abs() < 1e-9);
        assert!((params.asig_beta() - intercept).abs() < 1e-9);
        // Recovery stays near the generating curve.
        assert!((params.asig_alpha() - 0.24).abs() < 0.05);
        assert!((params.asig_beta() - 0.92).abs() < 0.2);
        assert!(r2 > 0.8 && r2 <= 1.0);
    }

    #[test]
    fn residual_orthogonality_holds() {
        use crate::rng::SplitMix64;
        let mut rng = SplitMix64::new(23);
        let points: Vec<(f64, f64)> = (0..30)
            .map(|i| (2.0 + i as f64, rng.next_f64() * 2.0 - 1.0))
            .collect();
        let (params, _) = fit_log_regression(&points).unwrap();
        let mut sum_r = 0.0;
        let mut sum_rx = 0.0;
        for &(ir, y) in &points {
            let x = libm::log(ir);
            let r = y - (params.asig_beta() + params.asig_alpha() * x);
            sum_r += r;
            sum_rx += r * x;
        }
        assert!(sum_r.abs() < 1e-9, "sum residuals = {sum_r}");
        assert!(sum_rx.abs() < 1e-9, "sum residual*x = {sum_rx}");
    }

    #[test]
    fn identical_ratios_rejected() {
        assert!(fit_log_regression(&[(10.0, 1.0), (10.0, 2.0)]).is_err());
        assert!(fit_log_regression(&[(10.0, 1.0)]).is_err());
    }

    #[test]
    fn ratios_below_one_rejected() {
        assert!(matches!(
            fit_log_regression(&[(0.5, 1.0), (10.0, 2.0)]),
            Err(PretrainError::IrBelowOne { .. })
        ));
    }
}
