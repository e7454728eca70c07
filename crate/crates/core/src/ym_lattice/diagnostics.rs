use serde::{Deserialize, Serialize};

use super::{curvature_field, kernel, FlowTrace, GaugeField};
use crate::spectra::{PositivityClass, ZERO_TOL};
use crate::{with_rank, Error, Result};

/// Largest tolerated distance of `Σ_f tr Θ_f / 2π` from an integer.
pub const DEGREE_RESIDUAL_MAX: f64 = 0.01;
/// Largest tolerated distance of a read-off splitting degree from an integer.
pub const INTEGRALITY_MAX: f64 = 0.05;
/// Earliest time at which strict positivity is demanded of a quasi-positive start.
pub const CHECK_TIME: f64 = 0.1;
/// Cross-face standard deviation bound, in units of the mesh spacing.
pub const PARALLEL_STD_FACTOR: f64 = 5.0;

pub(crate) fn degree_from_traces(traces: impl Iterator<Item = f64>) -> Result<i64> {
    let total: f64 = traces.sum::<f64>() / (2.0 * std::f64::consts::PI);
    let d = total.round();
    let residual = (total - d).abs();
    if residual >= DEGREE_RESIDUAL_MAX {
        return Err(Error::DegreeQuantization { residual, total });
    }
    Ok(d as i64)
}

/// `Σ_f tr Θ_f / 2π` rounded, where `Θ_f` is the principal logarithm of the
/// face holonomy. For holonomies close to the identity `tr Θ_f` is the
/// argument of `det Hol_f`.
pub fn total_degree(field: &GaugeField) -> Result<i64> {
    with_rank!(field.rank(), R => {
        let curv = kernel::curvature::<R>(field.mesh(), field.links_flat())?;
        degree_from_traces(curv.iter().map(|c| c.trace_theta()))
    })
}

/// Cross-face statistics of each eigenvalue branch of `H_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl EigenSummary {
    pub fn from_field(field: &GaugeField) -> Result<Self> {
        let curv = curvature_field(field)?;
        let r = curv.rank;
        let n = curv.n_faces() as f64;
        let mut s = EigenSummary {
            mean: vec![0.0; r],
            std: vec![0.0; r],
            min: vec![f64::INFINITY; r],
            max: vec![f64::NEG_INFINITY; r],
        };
        for ev in &curv.eigenvalues {
            for j in 0..r {
                s.mean[j] += ev[j] / n;
                s.min[j] = s.min[j].min(ev[j]);
                s.max[j] = s.max[j].max(ev[j]);
            }
        }
        for ev in &curv.eigenvalues {
            for j in 0..r {
                s.std[j] += (ev[j] - s.mean[j]).powi(2) / n;
            }
        }
        s.std.iter_mut().for_each(|v| *v = v.sqrt());
        Ok(s)
    }
}

/// Readout of a flow endpoint as a constant-curvature direct sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCertificate {
    pub converged: bool,
    pub grad_norm: f64,
    pub eigenvalues: EigenSummary,
    /// `max_j std_j`, to be compared with `5·h`.
    pub max_std: f64,
    pub std_bound: f64,
    /// `2·mean_j` before rounding (unit-sphere Chern-Weil normalization).
    pub raw_splitting: Vec<f64>,
    /// Rounded and sorted ascending.
    pub splitting: Vec<i64>,
    pub integrality_residual: f64,
    pub degree: i64,
    pub parallel: bool,
    pub integral: bool,
    pub degree_matches: bool,
}

impl ConvergenceCertificate {
    pub fn passes(&self) -> bool {
        self.converged && self.parallel && self.integral && self.degree_matches
    }
}

pub fn convergence_certificate(field: &GaugeField, trace: &FlowTrace) -> Result<ConvergenceCertificate> {
    let last = trace.last().ok_or(Error::EmptyInput("flow trace"))?;
    let eigenvalues = EigenSummary::from_field(field)?;
    let raw_splitting: Vec<f64> = eigenvalues.mean.iter().map(|m| 2.0 * m).collect();
    let mut splitting: Vec<i64> = raw_splitting.iter().map(|a| a.round() as i64).collect();
    splitting.sort_unstable();
    let integrality_residual = raw_splitting.iter().map(|a| (a - a.round()).abs()).fold(0.0, f64::max);
    let max_std = eigenvalues.std.iter().copied().fold(0.0, f64::max);
    let std_bound = PARALLEL_STD_FACTOR * field.mesh().spacing();
    let degree = total_degree(field)?;
    Ok(ConvergenceCertificate {
        converged: trace.converged,
        grad_norm: last.grad_norm,
        max_std,
        std_bound,
        integrality_residual,
        degree_matches: splitting.iter().sum::<i64>() == degree,
        parallel: max_std < std_bound,
        integral: integrality_residual < INTEGRALITY_MAX,
        raw_splitting,
        splitting,
        degree,
        eigenvalues,
    })
}

/// Constants of the lattice tolerance `tol_mp = c·h² + c′·τ + floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPrinCalibration {
    pub c: f64,
    pub c_prime: f64,
    /// Relative floating-point floor, multiplied by `max(1, |λ12(0)|)`.
    pub floor: f64,
}

impl Default for MaxPrinCalibration {
    fn default() -> Self {
        Self { c: 0.0, c_prime: 0.0, floor: 1e-11 }
    }
}

impl MaxPrinCalibration {
    pub fn tolerance(&self, h: f64, step_size: f64, initial: f64) -> f64 {
        self.c * h * h + self.c_prime * step_size + self.floor * initial.abs().max(1.0)
    }
}

/// Fits `c` and `c′` from the largest drops of `min λ12` seen on
/// stationary runs, given as `(h, step_size, drop)`. Each constant alone
/// bounds every observed drop.
pub fn calibrate_tolerance(runs: &[(f64, f64, f64)], floor: f64) -> MaxPrinCalibration {
    let mut cal = MaxPrinCalibration { c: 0.0, c_prime: 0.0, floor };
    for &(h, tau, drop) in runs {
        let d = drop.max(0.0);
        cal.c = cal.c.max(d / (h * h));
        cal.c_prime = cal.c_prime.max(d / tau);
    }
    cal
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QuasiPositivityVerdict {
    /// The initial field was not 2-quasi-positive.
    NotApplicable,
    Pass { t_check: f64 },
    Fail { t_check: f64, time: f64, value: f64 },
    /// The trace ends before the check time.
    NoRecordAfterCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPrinVerdict {
    pub initial_min_lambda12: f64,
    /// `min_t (min λ12(t) − min λ12(0))`.
    pub worst_drop: f64,
    pub tol_mp: f64,
    pub calibration: MaxPrinCalibration,
    /// Verdict (1): 2-nonnegativity bounds are preserved up to `tol_mp`.
    pub preserved: bool,
    /// Verdict (2): quasi-positive data become strictly positive.
    pub quasi: QuasiPositivityVerdict,
}

impl MaxPrinVerdict {
    pub fn passes(&self) -> bool {
        self.preserved && !matches!(self.quasi, QuasiPositivityVerdict::Fail { .. } | QuasiPositivityVerdict::NoRecordAfterCheck)
    }
}

pub fn maxprin_monitor(trace: &FlowTrace, calibration: &MaxPrinCalibration) -> Result<MaxPrinVerdict> {
    if trace.rank < 2 {
        return Err(Error::NotApplicable(format!("the 2-positivity monitor needs rank >= 2, got {}", trace.rank)));
    }
    let first = trace.first().ok_or(Error::EmptyInput("flow trace"))?;
    let initial = first.min_lambda12;
    let worst_drop = trace.records.iter().map(|r| r.min_lambda12 - initial).fold(f64::INFINITY, f64::min);
    let tol_mp = calibration.tolerance(trace.mesh_h, trace.step_size, initial);
    let quasi = if trace.initial_class == Some(PositivityClass::TwoQuasiPositive) {
        match trace.records.iter().position(|r| r.time >= CHECK_TIME) {
            None => QuasiPositivityVerdict::NoRecordAfterCheck,
            Some(i) => {
                let t_check = trace.records[i].time;
                match trace.records[i..].iter().find(|r| !(r.min_lambda12 > ZERO_TOL)) {
                    Some(r) => QuasiPositivityVerdict::Fail { t_check, time: r.time, value: r.min_lambda12 },
                    None => QuasiPositivityVerdict::Pass { t_check },
                }
            }
        }
    } else {
        QuasiPositivityVerdict::NotApplicable
    };
    Ok(MaxPrinVerdict {
        initial_min_lambda12: initial,
        worst_drop,
        tol_mp,
        calibration: *calibration,
        preserved: worst_drop >= -tol_mp,
        quasi,
    })
}
