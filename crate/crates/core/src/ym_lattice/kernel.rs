//! Rank-generic plaquette kernel.
//!
//! Links live in one flat column-major buffer, `R·R` entries per edge, and
//! every routine here is monomorphized for `R = 1..=8` through
//! [`with_rank!`](crate::with_rank). Per-face work runs on the rayon pool and
//! is collected in face order; every reduction is a sequential loop, so
//! results do not depend on the number of threads.

use nalgebra::SMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::{eigh_static, expi_hermitian, invert_in_place, reunitarize};
use crate::sphere_mesh::SphereMesh;
use crate::{Error, Result};

pub(crate) type Block<const R: usize> = SMatrix<Complex64, R, R>;

/// Holonomy eigenphases must stay this far inside `(−π, π)`.
pub const BRANCH_MARGIN: f64 = 0.1;

/// Dispatches a const-generic body over the supported ranks.
#[macro_export]
#[doc(hidden)]
macro_rules! with_rank {
    ($rank:expr, $R:ident => $body:expr) => {
        match $rank {
            1 => { const $R: usize = 1; $body }
            2 => { const $R: usize = 2; $body }
            3 => { const $R: usize = 3; $body }
            4 => { const $R: usize = 4; $body }
            5 => { const $R: usize = 5; $body }
            6 => { const $R: usize = 6; $body }
            7 => { const $R: usize = 7; $body }
            8 => { const $R: usize = 8; $body }
            r => unreachable!("rank {r} passed validation"),
        }
    };
}

pub const MAX_RANK: usize = 8;

#[inline]
pub(crate) fn load<const R: usize>(links: &[Complex64], e: usize) -> Block<R> {
    Block::<R>::from_column_slice(&links[e * R * R..(e + 1) * R * R])
}

#[inline]
pub(crate) fn store<const R: usize>(links: &mut [Complex64], e: usize, m: &Block<R>) {
    links[e * R * R..(e + 1) * R * R].copy_from_slice(m.as_slice());
}

/// Parallel transports along the three boundary edges, in traversal order.
#[inline]
pub(crate) fn face_transports<const R: usize>(mesh: &SphereMesh, links: &[Complex64], f: usize) -> [Block<R>; 3] {
    let bnd = &mesh.face_boundaries()[f];
    std::array::from_fn(|k| {
        let l = load::<R>(links, bnd[k].edge);
        if bnd[k].forward {
            l
        } else {
            l.adjoint()
        }
    })
}

/// Ordered holonomy `T₂·T₁·T₀` based at the least-index vertex.
#[inline]
pub(crate) fn holonomy<const R: usize>(t: &[Block<R>; 3]) -> Block<R> {
    t[2] * t[1] * t[0]
}

/// Principal logarithm of a holonomy, in eigenform: `log U = i·V·diag(θ)·V*`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FaceCurvature<const R: usize> {
    pub theta: [f64; R],
    pub basis: Block<R>,
    pub area: f64,
}

impl<const R: usize> FaceCurvature<R> {
    /// `H_f = Θ_f / area_f`.
    pub fn hermitian(&self) -> Block<R> {
        let mut scaled = self.basis;
        for j in 0..R {
            let s = self.theta[j] / self.area;
            for i in 0..R {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.basis.adjoint()
    }

    /// Ascending eigenvalues of `H_f`.
    pub fn eigenvalues(&self) -> [f64; R] {
        self.theta.map(|t| t / self.area)
    }

    pub fn theta_norm_sqr(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }

    pub fn trace_theta(&self) -> f64 {
        self.theta.iter().sum()
    }
}

/// Eigenphases via the Cayley transform `i(I − U)(I + U)⁻¹`, which is
/// Hermitian with eigenvalues `tan(θ/2)` and shares eigenvectors with `U`.
pub(crate) fn log_unitary<const R: usize>(u: &Block<R>, face: usize, area: f64) -> Result<FaceCurvature<R>> {
    let id = Block::<R>::identity();
    let mut plus = id + u;
    let scale = plus.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !invert_in_place(plus.as_mut_slice(), R, 1e-12 * scale.max(1.0)) {
        return Err(Error::BranchCut { face, phase: std::f64::consts::PI, margin: BRANCH_MARGIN });
    }
    let i = Complex64::new(0.0, 1.0);
    let c = (id - u) * plus * i;
    let c = (c + c.adjoint()) * Complex64::new(0.5, 0.0);
    let (tans, basis) = eigh_static(&c);
    let theta = tans.map(|t| 2.0 * t.atan());
    if let Some(&phase) = theta.iter().find(|t| t.abs() > std::f64::consts::PI - BRANCH_MARGIN) {
        return Err(Error::BranchCut { face, phase, margin: BRANCH_MARGIN });
    }
    Ok(FaceCurvature { theta, basis, area })
}

pub(crate) fn curvature<const R: usize>(mesh: &SphereMesh, links: &[Complex64]) -> Result<Vec<FaceCurvature<R>>> {
    (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            let t = face_transports::<R>(mesh, links, f);
            log_unitary(&holonomy(&t), f, mesh.face_areas()[f])
        })
        .collect()
}

pub(crate) fn energy<const R: usize>(curv: &[FaceCurvature<R>]) -> f64 {
    let mut e = 0.0;
    for c in curv {
        e += c.theta_norm_sqr() / c.area;
    }
    e
}

/// `K_e = Σ_{f ∋ e} σ_{fe} M* H_f M`, with `M` the transport from the head
/// of `e` back to the base vertex of `f` along the rest of the boundary.
///
/// The covariant codifferential of the curvature is `Ξ_e = i·K_e / w_e` with
/// `w_e` the Hodge weight, and the directional derivative of the energy
/// along `L_e ↦ exp(s·X_e)·L_e` is `2 Σ_e w_e Re tr(Ξ_e* X_e)`.
pub(crate) fn codifferential<const R: usize>(
    mesh: &SphereMesh,
    links: &[Complex64],
    curv: &[FaceCurvature<R>],
) -> Vec<Block<R>> {
    let contrib: Vec<[Block<R>; 3]> = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            let t = face_transports::<R>(mesh, links, f);
            let h = curv[f].hermitian();
            // tail[j] transports the fiber at path vertex j to the base.
            let id = Block::<R>::identity();
            let tail = [t[2] * t[1] * t[0], t[2] * t[1], t[2], id];
            let bnd = &mesh.face_boundaries()[f];
            std::array::from_fn(|k| {
                let (m, sign) = if bnd[k].forward { (&tail[k + 1], 1.0) } else { (&tail[k], -1.0) };
                (m.adjoint() * h * m) * Complex64::new(sign, 0.0)
            })
        })
        .collect();
    let slots: Vec<[usize; 2]> = mesh
        .edge_faces()
        .iter()
        .enumerate()
        .map(|(e, pair)| {
            pair.map(|(f, _)| {
                mesh.face_boundaries()[f].iter().position(|se| se.edge == e).expect("edge lies on its faces")
            })
        })
        .collect();
    (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let [(fa, _), (fb, _)] = mesh.edge_faces()[e];
            let k = contrib[fa][slots[e][0]] + contrib[fb][slots[e][1]];
            (k + k.adjoint()) * Complex64::new(0.5, 0.0)
        })
        .collect()
}

/// `√(Σ_e w_e ‖Ξ_e‖²)` for `Ξ_e = i·K_e / w_e`.
pub(crate) fn gradient_norm<const R: usize>(mesh: &SphereMesh, k: &[Block<R>]) -> f64 {
    let mut acc = 0.0;
    for (e, ke) in k.iter().enumerate() {
        acc += ke.norm_squared() / mesh.hodge_weight(e);
    }
    acc.sqrt()
}

/// `L_e ← exp(−τ·Ξ_e)·L_e`, then Gram-Schmidt.
pub(crate) fn descend<const R: usize>(mesh: &SphereMesh, links: &[Complex64], k: &[Block<R>], tau: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); links.len()];
    out.par_chunks_mut(R * R).enumerate().for_each(|(e, chunk)| {
        let step = expi_hermitian(&k[e], -tau / mesh.hodge_weight(e));
        let mut l = step * load::<R>(links, e);
        reunitarize(&mut l);
        chunk.copy_from_slice(l.as_slice());
    });
    out
}

/// `L_e ← exp(i·s·Z_e)·L_e` for Hermitian `Z_e`, used by tests and perturbations.
pub(crate) fn left_multiply_expi<const R: usize>(links: &[Complex64], z: &[Block<R>], s: f64) -> Vec<Complex64> {
    let mut out = links.to_vec();
    for (e, ze) in z.iter().enumerate() {
        let mut l = expi_hermitian(ze, s) * load::<R>(links, e);
        reunitarize(&mut l);
        store(&mut out, e, &l);
    }
    out
}
