//! Lattice Yang-Mills theory on a triangulated sphere.
//!
//! A [`GaugeField`] assigns a unitary matrix to every edge. The plaquette
//! curvature is the principal logarithm of the face holonomy divided by the
//! face area, the energy is `Σ_f ‖log Hol_f‖² / area_f`, and the flow is
//! explicit gradient descent on that energy with multiplicative link updates.
//!
//! Two facts shape the numerics here. The linearized flow of the contracted
//! curvature is the cotangent-weighted dual-graph heat equation, stable for
//! steps below `1 / max_f D_f` ([`suggested_step_size`]). For rank two the
//! sum of the two curvature eigenvalues is the trace, which evolves by that
//! same scalar equation, so a discrete maximum principle holds at every
//! step of that size.

mod diagnostics;
mod field;
mod harmonics;
mod io;
pub(crate) mod kernel;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use diagnostics::{
    calibrate_tolerance, convergence_certificate, maxprin_monitor, total_degree, ConvergenceCertificate,
    EigenSummary, MaxPrinCalibration, MaxPrinVerdict, QuasiPositivityVerdict, CHECK_TIME, DEGREE_RESIDUAL_MAX,
    INTEGRALITY_MAX,
};
pub use field::{gauge_scramble, monopole_field, perturb, perturb_smooth, quasi_positive_field, GaugeField, UNITARY_TOL};
pub use harmonics::{heat_mode_projection, mode_norms, real_spherical_harmonic, ModeAmplitude};
pub use io::{read_trace_csv, write_trace_csv, FlowReport, TRACE_HEADER};
pub use kernel::{BRANCH_MARGIN, MAX_RANK};

use kernel::{Block, FaceCurvature};
use crate::linalg::to_dynamic;
use crate::sphere_mesh::SphereMesh;
use crate::spectra::{classify_lambda12_values, HermitianMatrix, PositivityClass};
use crate::{with_rank, Error, Result};

/// Maximum number of step halvings before a flow step is abandoned.
pub const MAX_HALVINGS: u32 = 30;

/// Relative slack for the energy comparison in backtracking. Re-unitarizing
/// an unchanged link can move the energy by a few ulps.
pub const ENERGY_SLACK: f64 = 1e-13;

/// Per-face curvature data.
#[derive(Debug, Clone)]
pub struct PlaquetteCurvature {
    pub rank: usize,
    /// `H_f`, curvature per steradian.
    pub hermitian: Vec<HermitianMatrix>,
    pub holonomies: Vec<DMatrix<Complex64>>,
    /// Ascending eigenvalues of each `H_f`.
    pub eigenvalues: Vec<Vec<f64>>,
    pub areas: Vec<f64>,
}

impl PlaquetteCurvature {
    pub fn n_faces(&self) -> usize {
        self.hermitian.len()
    }

    /// `λ_1 + λ_2` of every face; `None` for rank one.
    pub fn lambda12_values(&self) -> Option<Vec<f64>> {
        (self.rank >= 2).then(|| self.eigenvalues.iter().map(|ev| ev[0] + ev[1]).collect())
    }

    /// Principal-branch guard: `max_f ‖H_f‖₂ · area_f`.
    pub fn max_phase(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.areas)
            .map(|(ev, a)| ev.iter().fold(0.0f64, |m, x| m.max(x.abs())) * a)
            .fold(0.0, f64::max)
    }
}

/// Ordered product of the boundary links of `face`, based at its least vertex.
pub fn holonomy(field: &GaugeField, face: usize) -> Result<DMatrix<Complex64>> {
    if face >= field.mesh().n_faces() {
        return Err(Error::Domain(format!("face {face} out of range")));
    }
    Ok(with_rank!(field.rank(), R => {
        let t = kernel::face_transports::<R>(field.mesh(), field.links_flat(), face);
        to_dynamic(&kernel::holonomy(&t))
    }))
}

pub fn curvature_field(field: &GaugeField) -> Result<PlaquetteCurvature> {
    with_rank!(field.rank(), R => {
        let mesh = field.mesh();
        let curv = kernel::curvature::<R>(mesh, field.links_flat())?;
        let holonomies = (0..mesh.n_faces())
            .map(|f| to_dynamic(&kernel::holonomy(&kernel::face_transports::<R>(mesh, field.links_flat(), f))))
            .collect();
        Ok(PlaquetteCurvature {
            rank: R,
            hermitian: curv.iter().map(|c| HermitianMatrix::new(to_dynamic(&c.hermitian()))).collect(),
            holonomies,
            eigenvalues: curv.iter().map(|c| c.eigenvalues().to_vec()).collect(),
            areas: mesh.face_areas().to_vec(),
        })
    })
}

/// `Σ_f area_f ‖H_f‖²_F`.
pub fn ym_energy(field: &GaugeField) -> Result<f64> {
    with_rank!(field.rank(), R => {
        let curv = kernel::curvature::<R>(field.mesh(), field.links_flat())?;
        Ok(kernel::energy(&curv))
    })
}

/// The flow direction `Ξ_e` (anti-Hermitian) on every edge.
///
/// `Ξ` is the lattice `D*F`: the energy changes along
/// `L_e ↦ exp(s·X_e)·L_e` at rate `2 Σ_e w_e Re tr(Ξ_e* X_e)`, where `w_e` is
/// the Hodge weight, so `2Ξ` is the gradient in the weighted link metric.
pub fn ym_gradient(field: &GaugeField) -> Result<Vec<DMatrix<Complex64>>> {
    with_rank!(field.rank(), R => {
        let mesh = field.mesh();
        let curv = kernel::curvature::<R>(mesh, field.links_flat())?;
        let k = kernel::codifferential::<R>(mesh, field.links_flat(), &curv);
        let i = Complex64::new(0.0, 1.0);
        Ok(k.iter().enumerate().map(|(e, ke)| to_dynamic(&(ke * (i / mesh.hodge_weight(e))))).collect())
    })
}

/// `√(Σ_e w_e ‖Ξ_e‖²_F)`.
pub fn gradient_norm(field: &GaugeField, xi: &[DMatrix<Complex64>]) -> f64 {
    xi.iter().enumerate().map(|(e, x)| field.mesh().hodge_weight(e) * x.norm_squared()).sum::<f64>().sqrt()
}

/// Predicted energy derivative along `L_e ↦ exp(s·X_e)·L_e`.
pub fn directional_derivative(field: &GaugeField, xi: &[DMatrix<Complex64>], x: &[DMatrix<Complex64>]) -> f64 {
    2.0 * xi
        .iter()
        .zip(x)
        .enumerate()
        .map(|(e, (g, d))| field.mesh().hodge_weight(e) * (g.adjoint() * d).trace().re)
        .sum::<f64>()
}

/// `0.9 / max_f D_f`, where `D_f = (1/area_f) Σ_{e∈∂f} 1/w_e` is the diagonal
/// of the linearized flow operator. Below `1 / max D_f` the explicit scheme
/// is a convex averaging of neighboring face curvatures.
pub fn suggested_step_size(mesh: &SphereMesh) -> f64 {
    0.9 / mesh.dual_laplacian_diagonal().into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub step_size: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub energy_backtrack: bool,
    pub seed: u64,
    /// Keep every k-th step in the trace; the first and last are always kept.
    pub record_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { step_size: 1e-4, max_steps: 10_000, grad_tol: 1e-6, energy_backtrack: true, seed: 0, record_every: 1 }
    }
}

impl FlowConfig {
    /// Default configuration with the step size suggested for `mesh`.
    pub fn for_mesh(mesh: &SphereMesh) -> Self {
        Self { step_size: suggested_step_size(mesh), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Domain(format!("step_size must be positive, got {}", self.step_size)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Domain(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.record_every == 0 {
            return Err(Error::Domain("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub grad_norm: f64,
    /// `NaN` for rank one.
    pub min_lambda12: f64,
    /// Largest cross-face variance of an eigenvalue branch.
    pub eig_variance: f64,
    pub degree: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrace {
    pub rank: usize,
    pub level: usize,
    pub mesh_h: f64,
    pub step_size: f64,
    pub grad_tol: f64,
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub steps_taken: usize,
    pub final_time: f64,
    pub total_halvings: u32,
    /// Positivity class of the initial curvature; `None` for rank one.
    pub initial_class: Option<PositivityClass>,
}

impl FlowTrace {
    pub fn first(&self) -> Option<&TraceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Whether energy never rises by more than [`ENERGY_SLACK`] between records.
    pub fn energy_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].energy <= w[0].energy + ENERGY_SLACK * w[0].energy.abs() + 1e-24)
    }

    pub fn degree_constant(&self) -> bool {
        self.records.windows(2).all(|w| w[0].degree == w[1].degree)
    }
}

struct State<const R: usize> {
    links: Vec<Complex64>,
    curv: Vec<FaceCurvature<R>>,
    k: Vec<Block<R>>,
    energy: f64,
    grad_norm: f64,
}

impl<const R: usize> State<R> {
    fn new(mesh: &SphereMesh, links: Vec<Complex64>) -> Result<Self> {
        let curv = kernel::curvature::<R>(mesh, &links)?;
        Ok(Self::from_curvature(mesh, links, curv))
    }

    fn from_curvature(mesh: &SphereMesh, links: Vec<Complex64>, curv: Vec<FaceCurvature<R>>) -> Self {
        let energy = kernel::energy(&curv);
        let k = kernel::codifferential::<R>(mesh, &links, &curv);
        let grad_norm = kernel::gradient_norm(mesh, &k);
        Self { links, curv, k, energy, grad_norm }
    }

    fn record(&self, step: usize, time: f64) -> Result<TraceRecord> {
        let (min_lambda12, eig_variance) = face_statistics(&self.curv);
        let degree = diagnostics::degree_from_traces(self.curv.iter().map(|c| c.trace_theta()))?;
        Ok(TraceRecord { step, time, energy: self.energy, grad_norm: self.grad_norm, min_lambda12, eig_variance, degree })
    }

    /// One explicit step with optional backtracking; returns the accepted
    /// step size and the number of halvings.
    fn step(self, mesh: &SphereMesh, tau0: f64, backtrack: bool) -> Result<(Self, f64, u32)> {
        let mut tau = tau0;
        for halvings in 0..=MAX_HALVINGS {
            let links = kernel::descend::<R>(mesh, &self.links, &self.k, tau);
            let curv = match kernel::curvature::<R>(mesh, &links) {
                Ok(c) => c,
                Err(e @ Error::BranchCut { .. }) if !backtrack => return Err(e),
                Err(Error::BranchCut { .. }) => {
                    tau *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let energy = kernel::energy(&curv);
            if !backtrack || energy <= self.energy + ENERGY_SLACK * self.energy + 1e-24 {
                return Ok((Self::from_curvature(mesh, links, curv), tau, halvings));
            }
            tau *= 0.5;
        }
        Err(Error::StepFailure { halvings: MAX_HALVINGS, energy: self.energy })
    }
}

fn face_statistics<const R: usize>(curv: &[FaceCurvature<R>]) -> (f64, f64) {
    let n = curv.len() as f64;
    let min_lambda12 = if R >= 2 {
        curv.iter().map(|c| (c.theta[0] + c.theta[1]) / c.area).fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    let mut worst = 0.0f64;
    for j in 0..R {
        let mut mean = 0.0;
        for c in curv {
            mean += c.theta[j] / c.area;
        }
        mean /= n;
        let mut var = 0.0;
        for c in curv {
            let d = c.theta[j] / c.area - mean;
            var += d * d;
        }
        worst = worst.max(var / n);
    }
    (min_lambda12, worst)
}

fn initial_class<const R: usize>(curv: &[FaceCurvature<R>]) -> Result<Option<PositivityClass>> {
    if R < 2 {
        return Ok(None);
    }
    let values: Vec<f64> = curv.iter().map(|c| (c.theta[0] + c.theta[1]) / c.area).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    classify_lambda12_values(&values, min.max(0.0)).map(Some)
}

/// A single flow step from `field`; the record carries `step = 1` and the
/// accepted step size as its time.
pub fn flow_step(field: &GaugeField, config: &FlowConfig) -> Result<(GaugeField, TraceRecord)> {
    config.validate()?;
    with_rank!(field.rank(), R => {
        let mesh = field.mesh();
        let state = State::<R>::new(mesh, field.links_flat().to_vec())?;
        let (next, tau, _) = state.step(mesh, config.step_size, config.energy_backtrack)?;
        let record = next.record(1, tau)?;
        Ok((GaugeField::from_flat(Arc::clone(field.mesh_arc()), R, next.links), record))
    })
}

/// Runs the flow until `grad_norm < grad_tol` or `max_steps` steps.
/// Not converging is reported in the trace, not as an error.
pub fn run_flow(field: &GaugeField, config: &FlowConfig) -> Result<(GaugeField, FlowTrace)> {
    config.validate()?;
    with_rank!(field.rank(), R => {
        let mesh = field.mesh();
        let mut state = State::<R>::new(mesh, field.links_flat().to_vec())?;
        let mut trace = FlowTrace {
            rank: R,
            level: mesh.level(),
            mesh_h: mesh.spacing(),
            step_size: config.step_size,
            grad_tol: config.grad_tol,
            records: vec![state.record(0, 0.0)?],
            converged: state.grad_norm < config.grad_tol,
            steps_taken: 0,
            final_time: 0.0,
            total_halvings: 0,
            initial_class: initial_class(&state.curv)?,
        };
        let mut time = 0.0;
        let mut step = 0;
        while !trace.converged && step < config.max_steps {
            let (next, tau, halvings) = state.step(mesh, config.step_size, config.energy_backtrack)?;
            state = next;
            step += 1;
            time += tau;
            trace.total_halvings += halvings;
            trace.converged = state.grad_norm < config.grad_tol;
            if step % config.record_every == 0 || trace.converged || step == config.max_steps {
                trace.records.push(state.record(step, time)?);
            }
        }
        trace.steps_taken = step;
        trace.final_time = time;
        Ok((GaugeField::from_flat(Arc::clone(field.mesh_arc()), R, state.links), trace))
    })
}
