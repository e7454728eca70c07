use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::kernel::{self, Block, MAX_RANK};
use crate::linalg::{random_hermitian, random_unitary, reunitarize, to_static};
use crate::sphere_mesh::{dual_poisson_solve, SphereMesh};
use crate::spectra::HermitianMatrix;
use crate::{with_rank, Error, Result};

/// Unitarity tolerance for links supplied from outside.
pub const UNITARY_TOL: f64 = 1e-10;

/// A lattice connection: one unitary `r×r` link per oriented edge, mapping
/// the fiber at the tail vertex to the fiber at the head vertex.
#[derive(Debug, Clone)]
pub struct GaugeField {
    mesh: Arc<SphereMesh>,
    rank: usize,
    links: Vec<Complex64>,
}

fn check_rank(rank: usize) -> Result<()> {
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Dimension(format!("rank must be in 1..={MAX_RANK}, got {rank}")));
    }
    Ok(())
}

impl GaugeField {
    /// Trivial connection.
    pub fn identity(mesh: Arc<SphereMesh>, rank: usize) -> Result<Self> {
        check_rank(rank)?;
        let mut links = vec![Complex64::new(0.0, 0.0); mesh.n_edges() * rank * rank];
        for chunk in links.chunks_mut(rank * rank) {
            for i in 0..rank {
                chunk[i + i * rank] = Complex64::new(1.0, 0.0);
            }
        }
        Ok(Self { mesh, rank, links })
    }

    /// Validates that every link is unitary within [`UNITARY_TOL`].
    pub fn from_links(mesh: Arc<SphereMesh>, links: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let rank = links.first().map(|l| l.nrows()).ok_or(Error::EmptyInput("no links"))?;
        check_rank(rank)?;
        if links.len() != mesh.n_edges() {
            return Err(Error::Dimension(format!("{} links for {} edges", links.len(), mesh.n_edges())));
        }
        let id = DMatrix::<Complex64>::identity(rank, rank);
        let mut flat = Vec::with_capacity(links.len() * rank * rank);
        for (e, l) in links.iter().enumerate() {
            if l.nrows() != rank || l.ncols() != rank {
                return Err(Error::Dimension(format!("link {e} is {}×{}", l.nrows(), l.ncols())));
            }
            let defect = (l.adjoint() * l - &id).norm();
            if defect > UNITARY_TOL {
                return Err(Error::Domain(format!("link {e} is not unitary (defect {defect:.3e})")));
            }
            flat.extend_from_slice(l.as_slice());
        }
        Ok(Self { mesh, rank, links: flat })
    }

    pub(crate) fn from_flat(mesh: Arc<SphereMesh>, rank: usize, links: Vec<Complex64>) -> Self {
        debug_assert_eq!(links.len(), mesh.n_edges() * rank * rank);
        Self { mesh, rank, links }
    }

    /// Diagonal abelian field `diag(e^{iθ¹_e}, …, e^{iθʳ_e})`.
    pub fn from_diagonal_angles(mesh: Arc<SphereMesh>, angles: &[Vec<f64>]) -> Result<Self> {
        let rank = angles.len();
        check_rank(rank)?;
        if let Some(a) = angles.iter().find(|a| a.len() != mesh.n_edges()) {
            return Err(Error::Dimension(format!("{} angles for {} edges", a.len(), mesh.n_edges())));
        }
        let mut field = Self::identity(mesh, rank)?;
        for (i, theta) in angles.iter().enumerate() {
            for (e, &t) in theta.iter().enumerate() {
                field.links[e * rank * rank + i + i * rank] = Complex64::from_polar(1.0, t);
            }
        }
        Ok(field)
    }

    /// Direct sum of abelian fields, component `i` having plaquette fluxes
    /// `fluxes[i]` (each summing to a multiple of `2π`).
    pub fn line_bundle_sum(mesh: Arc<SphereMesh>, fluxes: &[Vec<f64>]) -> Result<Self> {
        let angles = fluxes.iter().map(|flux| dual_poisson_solve(&mesh, flux)).collect::<Result<Vec<_>>>()?;
        Self::from_diagonal_angles(mesh, &angles)
    }

    pub fn mesh(&self) -> &SphereMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<SphereMesh> {
        &self.mesh
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_edges(&self) -> usize {
        self.mesh.n_edges()
    }

    pub fn link(&self, e: usize) -> DMatrix<Complex64> {
        let r = self.rank;
        DMatrix::from_column_slice(r, r, &self.links[e * r * r..(e + 1) * r * r])
    }

    /// Link for traversal `from → to` along an edge, inverting when the
    /// traversal runs against the stored orientation.
    pub fn transport(&self, from: usize, to: usize) -> Result<DMatrix<Complex64>> {
        let [a, b] = [from.min(to), from.max(to)];
        let e = self
            .mesh
            .edges()
            .iter()
            .position(|&edge| edge == [a, b])
            .ok_or_else(|| Error::Domain(format!("no edge between {from} and {to}")))?;
        let l = self.link(e);
        Ok(if from < to { l } else { l.adjoint() })
    }

    pub(crate) fn links_flat(&self) -> &[Complex64] {
        &self.links
    }

    /// `max_e ‖L_e* L_e − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let id = DMatrix::<Complex64>::identity(self.rank, self.rank);
        (0..self.n_edges()).map(|e| {
            let l = self.link(e);
            (l.adjoint() * &l - &id).norm()
        }).fold(0.0, f64::max)
    }

    /// `L_e ← W_head · L_e · W_tail⁻¹`.
    pub fn gauge_transform(&self, w: &[DMatrix<Complex64>]) -> Result<Self> {
        if w.len() != self.mesh.n_vertices() {
            return Err(Error::Dimension(format!("{} vertex unitaries for {} vertices", w.len(), self.mesh.n_vertices())));
        }
        let r = self.rank;
        let mut links = self.links.clone();
        for (e, &[tail, head]) in self.mesh.edges().iter().enumerate() {
            let l = &w[head] * self.link(e) * w[tail].adjoint();
            links[e * r * r..(e + 1) * r * r].copy_from_slice(l.as_slice());
        }
        Ok(Self { mesh: self.mesh.clone(), rank: r, links })
    }

    /// `L_e ← exp(i·s·Z_e)·L_e` for Hermitian `Z_e`, re-unitarized.
    pub fn left_multiply_expi(&self, z: &[HermitianMatrix], s: f64) -> Result<Self> {
        if z.len() != self.n_edges() || z.iter().any(|m| m.dim() != self.rank) {
            return Err(Error::Dimension("one rank-sized Hermitian matrix per edge required".into()));
        }
        let links = with_rank!(self.rank, R => {
            let blocks: Vec<Block<R>> = z.iter().map(|m| to_static::<R>(m.matrix())).collect();
            kernel::left_multiply_expi::<R>(&self.links, &blocks, s)
        });
        Ok(Self { mesh: self.mesh.clone(), rank: self.rank, links })
    }

    pub(crate) fn reunitarized(mut self) -> Self {
        let r = self.rank;
        with_rank!(r, R => {
            for e in 0..self.n_edges() {
                let mut l = kernel::load::<R>(&self.links, e);
                reunitarize(&mut l);
                kernel::store(&mut self.links, e, &l);
            }
        });
        self
    }
}

/// Direct sum `O(a_1) ⊕ … ⊕ O(a_r)` with its constant-curvature connection:
/// each component carries plaquette flux `area_f · a_i / 2`.
pub fn monopole_field(mesh: Arc<SphereMesh>, degrees: &[i64]) -> Result<GaugeField> {
    if degrees.is_empty() {
        return Err(Error::EmptyInput("monopole degrees"));
    }
    let fluxes: Vec<Vec<f64>> = degrees
        .iter()
        .map(|&d| mesh.face_areas().iter().map(|a| a * d as f64 / 2.0).collect())
        .collect();
    GaugeField::line_bundle_sum(mesh, &fluxes)
}

/// Random gauge transformation by Haar vertex unitaries from `seed`.
pub fn gauge_scramble(field: &GaugeField, seed: u64) -> GaugeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<DMatrix<Complex64>> = (0..field.mesh().n_vertices()).map(|_| random_unitary(field.rank(), &mut rng)).collect();
    field.gauge_transform(&w).expect("one unitary per vertex").reunitarized()
}

/// `L_e ← exp(i·ε·X_e)·L_e` with `X_e` random Hermitian, entries standard
/// normal scaled by `1/√r`.
pub fn perturb(field: &GaugeField, eps: f64, seed: u64) -> Result<GaugeField> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("perturbation size must be nonnegative, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(field.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = field.rank();
    let scale = 1.0 / (r as f64).sqrt();
    let z: Vec<HermitianMatrix> =
        (0..field.n_edges()).map(|_| HermitianMatrix::new(random_hermitian(r, &mut rng) * Complex64::new(scale, 0.0))).collect();
    field.left_multiply_expi(&z, eps)
}

/// Smooth perturbation `L_e ← exp(i·ε·X_e)·L_e`, where `X_e` integrates a
/// random smooth Hermitian-valued 1-form along the edge. The form is a sum of
/// `modes` terms `P_j·(a_j × x + b_j)·dx` with random Hermitian `P_j` and
/// random vectors `a_j, b_j`, so the induced curvature change is smooth at
/// the scale of the sphere instead of the mesh.
pub fn perturb_smooth(field: &GaugeField, eps: f64, modes: usize, seed: u64) -> Result<GaugeField> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("perturbation size must be nonnegative, got {eps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = field.rank();
    let gauss3 = |rng: &mut ChaCha8Rng| -> [f64; 3] { std::array::from_fn(|_| StandardNormal.sample(rng)) };
    let terms: Vec<(DMatrix<Complex64>, [f64; 3], [f64; 3])> = (0..modes)
        .map(|_| {
            let p = random_hermitian(r, &mut rng) * Complex64::new(1.0 / (r as f64).sqrt(), 0.0);
            let a = gauss3(&mut rng);
            let b = gauss3(&mut rng);
            (p, a, b)
        })
        .collect();
    let v = field.mesh().vertices();
    let z: Vec<HermitianMatrix> = field
        .mesh()
        .edges()
        .iter()
        .map(|&[t, h]| {
            let (x0, x1) = (v[t], v[h]);
            let mid = [(x0[0] + x1[0]) / 2.0, (x0[1] + x1[1]) / 2.0, (x0[2] + x1[2]) / 2.0];
            let dx = [x1[0] - x0[0], x1[1] - x0[1], x1[2] - x0[2]];
            let mut acc = DMatrix::<Complex64>::zeros(r, r);
            for (p, a, b) in &terms {
                let rot = [a[1] * mid[2] - a[2] * mid[1], a[2] * mid[0] - a[0] * mid[2], a[0] * mid[1] - a[1] * mid[0]];
                let c = (0..3).map(|k| (rot[k] + b[k]) * dx[k]).sum::<f64>();
                acc += p * Complex64::new(c, 0.0);
            }
            HermitianMatrix::new(acc)
        })
        .collect();
    field.left_multiply_expi(&z, eps)
}

/// Rank-2 field `O(0) ⊕ O(2)` whose second component carries curvature
/// proportional to `max(0, z)`: `λ12 = 0` on the southern hemisphere and
/// positive on the northern one, so the curvature is 2-quasi-positive but
/// not 2-positive.
///
/// The angles come from a spanning tree of the northern cap rather than a
/// least-squares solve, which keeps every southern link exactly trivial and
/// hence every southern `λ12` exactly zero.
pub fn quasi_positive_field(mesh: Arc<SphereMesh>) -> Result<GaugeField> {
    let weight: Vec<f64> = mesh.face_areas().iter().zip(mesh.centroids()).map(|(a, c)| a * c[2].max(0.0)).collect();
    let scale = 4.0 * std::f64::consts::PI / weight.iter().sum::<f64>();
    let flux: Vec<f64> = weight.iter().map(|w| w * scale).collect();
    let north = cap_tree_angles(&mesh, &flux)?;
    GaugeField::from_diagonal_angles(mesh.clone(), &[vec![0.0; mesh.n_edges()], north])
}

/// Edge angles realizing `flux` mod `2π` using only edges interior to the
/// support of `flux`, which must be connected through shared edges.
fn cap_tree_angles(mesh: &SphereMesh, flux: &[f64]) -> Result<Vec<f64>> {
    let in_cap: Vec<bool> = flux.iter().map(|&f| f != 0.0).collect();
    let root = (0..flux.len())
        .filter(|&f| in_cap[f])
        .max_by(|&a, &b| mesh.centroids()[a][2].total_cmp(&mesh.centroids()[b][2]))
        .ok_or(Error::EmptyInput("flux with empty support"))?;
    // breadth-first tree inside the cap; parent[f] = (parent face, shared edge)
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; flux.len()];
    let mut seen = vec![false; flux.len()];
    let mut order = vec![root];
    seen[root] = true;
    let mut head = 0;
    while head < order.len() {
        let f = order[head];
        head += 1;
        for se in &mesh.face_boundaries()[f] {
            let [(a, _), (b, _)] = mesh.edge_faces()[se.edge];
            let g = if a == f { b } else { a };
            if in_cap[g] && !seen[g] {
                seen[g] = true;
                parent[g] = Some((f, se.edge));
                order.push(g);
            }
        }
    }
    if order.len() != in_cap.iter().filter(|&&c| c).count() {
        return Err(Error::Geometry("flux support is not edge-connected".into()));
    }
    let mut theta = vec![0.0; mesh.n_edges()];
    for &f in order.iter().skip(1).rev() {
        let (_, e) = parent[f].expect("non-root faces have parents");
        let mut known = 0.0;
        let mut sign = 0.0;
        for se in &mesh.face_boundaries()[f] {
            if se.edge == e {
                sign = se.sign();
            } else {
                known += se.sign() * theta[se.edge];
            }
        }
        theta[e] = sign * (flux[f] - known);
    }
    Ok(theta)
}
