//! Geodesic triangulations of the unit sphere.
//!
//! Faces are oriented counterclockwise seen from outside and stored starting
//! at their least vertex index. Edges are stored from the smaller to the
//! larger vertex index; a face boundary lists its three edges with the sign
//! of the traversal relative to that storage orientation.
//!
//! Besides the combinatorics the mesh carries the primal/dual metric data of
//! the discrete Hodge star on 1-forms: geodesic edge lengths and the geodesic
//! distance between the spherical circumcenters of the two incident faces.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_LEVEL: usize = 7;

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add3(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    [a[0] + b[0] + c[0], a[1] + b[1] + c[1], a[2] + b[2] + c[2]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn normalized(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

fn angle_between(a: Vec3, b: Vec3) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

/// Signed spherical excess of the triangle `(a, b, c)` on the unit sphere.
/// Positive when the triangle is counterclockwise seen from outside.
pub fn spherical_area(a: Vec3, b: Vec3, c: Vec3) -> Result<f64> {
    for (p, q) in [(a, b), (b, c), (c, a)] {
        if dot(p, q) <= -1.0 + 1e-12 {
            return Err(Error::Geometry("antipodal vertex pair".into()));
        }
    }
    let triple = dot(a, cross(b, c));
    let denom = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    if triple.abs() <= 1e-15 {
        return Err(Error::Geometry(format!("collinear vertices (triple product {triple:.3e})")));
    }
    // tan(E/2) = a·(b×c) / (1 + a·b + b·c + c·a)
    Ok(2.0 * triple.atan2(denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedEdge {
    pub edge: usize,
    /// `true` when the face traverses the edge tail → head.
    pub forward: bool,
}

impl SignedEdge {
    pub fn sign(&self) -> f64 {
        if self.forward {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct SphereMesh {
    level: usize,
    vertices: Vec<Vec3>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    face_areas: Vec<f64>,
    face_boundaries: Vec<[SignedEdge; 3]>,
    edge_faces: Vec<[(usize, bool); 2]>,
    edge_lengths: Vec<f64>,
    dual_lengths: Vec<f64>,
    centroids: Vec<Vec3>,
}

/// On-disk form; edges and metric data are rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDocument {
    pub level: usize,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [Vec3; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (raw.iter().map(|&v| normalized(v)).collect(), faces)
}

fn subdivide(vertices: &mut Vec<Vec3>, faces: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |i: usize, j: usize, verts: &mut Vec<Vec3>| -> usize {
        let key = (i.min(j), i.max(j));
        *midpoint.entry(key).or_insert_with(|| {
            let (a, b) = (verts[i], verts[j]);
            verts.push(normalized([a[0] + b[0], a[1] + b[1], a[2] + b[2]]));
            verts.len() - 1
        })
    };
    let mut out = Vec::with_capacity(faces.len() * 4);
    for &[a, b, c] in faces {
        let ab = mid(a, b, vertices);
        let bc = mid(b, c, vertices);
        let ca = mid(c, a, vertices);
        out.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    out
}

/// Icosahedron refined `level` times by 4-to-1 midpoint subdivision.
pub fn build_icosphere(level: usize) -> Result<SphereMesh> {
    if level > MAX_LEVEL {
        return Err(Error::SizeGuard { level, max: MAX_LEVEL });
    }
    let (mut vertices, mut faces) = icosahedron();
    for _ in 0..level {
        faces = subdivide(&mut vertices, &faces);
    }
    SphereMesh::from_parts(level, vertices, faces)
}

impl SphereMesh {
    /// Builds a mesh from vertices and faces, orienting faces outward and
    /// validating the closed-surface invariants.
    pub fn from_parts(level: usize, vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some((i, v)) = vertices.iter().enumerate().find(|(_, v)| (norm(**v) - 1.0).abs() > 1e-12) {
            return Err(Error::Geometry(format!("vertex {i} has norm {} (expected 1)", norm(*v))));
        }
        let nv = vertices.len();
        let mut oriented = Vec::with_capacity(faces.len());
        let mut face_areas = Vec::with_capacity(faces.len());
        for (fi, &f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) || f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Geometry(format!("face {fi} has invalid vertex indices {f:?}")));
            }
            let area = spherical_area(vertices[f[0]], vertices[f[1]], vertices[f[2]])?;
            let mut f = if area < 0.0 { [f[0], f[2], f[1]] } else { f };
            let k = (0..3).min_by_key(|&k| f[k]).expect("three vertices");
            f.rotate_left(k);
            oriented.push(f);
            face_areas.push(spherical_area(vertices[f[0]], vertices[f[1]], vertices[f[2]])?);
        }

        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut face_boundaries = Vec::with_capacity(oriented.len());
        let mut incidence: Vec<Vec<(usize, bool)>> = Vec::new();
        for (fi, f) in oriented.iter().enumerate() {
            let mut bnd = [SignedEdge { edge: 0, forward: true }; 3];
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    incidence.push(Vec::new());
                    edges.len() - 1
                });
                let forward = u < v;
                incidence[e].push((fi, forward));
                bnd[k] = SignedEdge { edge: e, forward };
            }
            face_boundaries.push(bnd);
        }
        let mut edge_faces = Vec::with_capacity(edges.len());
        for (e, inc) in incidence.iter().enumerate() {
            if inc.len() != 2 || inc[0].1 == inc[1].1 {
                return Err(Error::Geometry(format!(
                    "edge {e} {:?} is not shared by exactly two oppositely oriented faces",
                    edges[e]
                )));
            }
            edge_faces.push([inc[0], inc[1]]);
        }
        let euler = nv as i64 - edges.len() as i64 + oriented.len() as i64;
        if euler != 2 {
            return Err(Error::Geometry(format!("Euler characteristic {euler}, expected 2")));
        }

        let circumcenters: Vec<Vec3> = oriented
            .iter()
            .map(|f| {
                let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
                normalized(cross(sub(b, a), sub(c, a)))
            })
            .collect();
        let centroids = oriented
            .iter()
            .map(|f| normalized(add3(vertices[f[0]], vertices[f[1]], vertices[f[2]])))
            .collect();
        let edge_lengths = edges.iter().map(|&[u, v]| angle_between(vertices[u], vertices[v])).collect();
        let dual_lengths: Vec<f64> = edge_faces
            .iter()
            .map(|[(f, _), (g, _)]| angle_between(circumcenters[*f], circumcenters[*g]))
            .collect();
        if let Some(e) = dual_lengths.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::Geometry(format!("edge {e} has a degenerate dual edge")));
        }

        Ok(Self {
            level,
            vertices,
            edges,
            faces: oriented,
            face_areas,
            face_boundaries,
            edge_faces,
            edge_lengths,
            dual_lengths,
            centroids,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn face_boundaries(&self) -> &[[SignedEdge; 3]] {
        &self.face_boundaries
    }

    /// The two faces incident to each edge with the traversal direction.
    pub fn edge_faces(&self) -> &[[(usize, bool); 2]] {
        &self.edge_faces
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn dual_lengths(&self) -> &[f64] {
        &self.dual_lengths
    }

    /// Normalized vertex mean of each face.
    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    pub fn max_face_area(&self) -> f64 {
        self.face_areas.iter().copied().fold(0.0, f64::max)
    }

    /// Mesh spacing: mean geodesic edge length.
    pub fn spacing(&self) -> f64 {
        self.edge_lengths.iter().sum::<f64>() / self.n_edges() as f64
    }

    /// Discrete Hodge star on 1-forms, `|dual edge| / |primal edge|`.
    pub fn hodge_weight(&self, e: usize) -> f64 {
        self.dual_lengths[e] / self.edge_lengths[e]
    }

    /// `(1/A_f) Σ_{e ∈ ∂f} 1/w_e`, the diagonal of the dual Laplacian.
    pub fn dual_laplacian_diagonal(&self) -> Vec<f64> {
        self.face_boundaries
            .iter()
            .zip(&self.face_areas)
            .map(|(bnd, a)| bnd.iter().map(|se| 1.0 / self.hodge_weight(se.edge)).sum::<f64>() / a)
            .collect()
    }

    /// Oriented boundary sums `(dθ)_f` of an edge cochain.
    pub fn boundary_sums(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.n_edges());
        self.face_boundaries
            .iter()
            .map(|bnd| bnd.iter().map(|se| se.sign() * theta[se.edge]).sum())
            .collect()
    }

    pub fn to_document(&self) -> MeshDocument {
        MeshDocument { level: self.level, vertices: self.vertices.clone(), faces: self.faces.clone() }
    }

    pub fn from_document(doc: MeshDocument) -> Result<Self> {
        Self::from_parts(doc.level, doc.vertices, doc.faces)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(f), &self.to_document())?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let doc: MeshDocument = serde_json::from_reader(std::io::BufReader::new(f))?;
        Self::from_document(doc)
    }
}

/// Integer `d` with `Σ flux = 2πd`, or a quantization error.
pub fn flux_degree(target_flux: &[f64]) -> Result<i64> {
    let total: f64 = target_flux.iter().sum();
    let ratio = total / (2.0 * PI);
    let d = ratio.round();
    if (total - 2.0 * PI * d).abs() > 1e-9 {
        return Err(Error::FluxQuantization { ratio });
    }
    Ok(d as i64)
}

/// Face that carries the `2πd` Dirac-string allocation.
pub const DIRAC_FACE: usize = 0;

/// Edge angles whose oriented boundary sums realize `target_flux` modulo `2π`.
///
/// The integer part `2πd` of the total flux is invisible to holonomies; it is
/// removed from [`DIRAC_FACE`] so that the remaining right-hand side sums to
/// zero, and the minimum-norm solution `θ = dᵀψ` of `dθ = s` is found by
/// conjugate gradients on the dual-graph Laplacian `d dᵀ`. Every face then
/// has holonomy angle `target_flux[f]` exactly, with no edge singularity.
pub fn dual_poisson_solve(mesh: &SphereMesh, target_flux: &[f64]) -> Result<Vec<f64>> {
    if target_flux.len() != mesh.n_faces() {
        return Err(Error::Dimension(format!(
            "flux has {} entries for {} faces",
            target_flux.len(),
            mesh.n_faces()
        )));
    }
    let d = flux_degree(target_flux)?;
    let mut rhs = target_flux.to_vec();
    rhs[DIRAC_FACE] -= 2.0 * PI * d as f64;

    let psi = conjugate_gradient(mesh, &rhs)?;
    let mut theta = vec![0.0; mesh.n_edges()];
    for (e, [(f, ff), (g, fg)]) in mesh.edge_faces().iter().enumerate() {
        let sf = if *ff { 1.0 } else { -1.0 };
        let sg = if *fg { 1.0 } else { -1.0 };
        theta[e] = sf * psi[*f] + sg * psi[*g];
    }

    let sums = mesh.boundary_sums(&theta);
    let worst = sums.iter().zip(&rhs).map(|(s, r)| (s - r).abs()).fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(Error::NoConvergence(format!("dual Poisson residual {worst:.3e}")));
    }
    Ok(theta)
}

/// Dual-graph Laplacian `(d dᵀ ψ)_f = 3ψ_f − Σ_{g ~ f} ψ_g`.
pub fn dual_laplacian_apply(mesh: &SphereMesh, psi: &[f64], out: &mut [f64]) {
    for (f, bnd) in mesh.face_boundaries().iter().enumerate() {
        let mut acc = 3.0 * psi[f];
        for se in bnd {
            let [(a, _), (b, _)] = mesh.edge_faces()[se.edge];
            acc -= psi[if a == f { b } else { a }];
        }
        out[f] = acc;
    }
}

fn conjugate_gradient(mesh: &SphereMesh, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mean = rhs.iter().sum::<f64>() / n as f64;
    let b: Vec<f64> = rhs.iter().map(|x| x - mean).collect();
    let bnorm = norm_slice(&b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    // Iterative refinement: re-solve against the true residual until it
    // stops shrinking.
    let mut ax = vec![0.0; n];
    let mut res = b.clone();
    let mut rnorm = bnorm;
    for _ in 0..4 {
        let dx = cg_pass(mesh, &res);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        dual_laplacian_apply(mesh, &trial, &mut ax);
        let trial_res: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let trial_norm = norm_slice(&trial_res);
        if trial_norm >= rnorm {
            break;
        }
        x = trial;
        res = trial_res;
        rnorm = trial_norm;
    }
    if rnorm > 1e-10 * bnorm.max(1.0) {
        return Err(Error::NoConvergence(format!("conjugate gradients stalled at residual {rnorm:.3e}")));
    }
    Ok(x)
}

fn norm_slice(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn cg_pass(mesh: &SphereMesh, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mean = b.iter().sum::<f64>() / n as f64;
    let mut r: Vec<f64> = b.iter().map(|x| x - mean).collect();
    let bnorm = norm_slice(&r);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return x;
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = bnorm * bnorm;
    for _ in 0..20 * n + 100 {
        dual_laplacian_apply(mesh, &p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|t| t * t).sum();
        if rr_new.sqrt() <= 1e-15 * bnorm {
            break;
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn icosphere_counts() {
        let m0 = build_icosphere(0).unwrap();
        assert_eq!((m0.n_vertices(), m0.n_edges(), m0.n_faces()), (12, 30, 20));
        let m1 = build_icosphere(1).unwrap();
        assert_eq!((m1.n_vertices(), m1.n_edges(), m1.n_faces()), (42, 120, 80));
        assert!(matches!(build_icosphere(8), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn area_sums_to_four_pi() {
        for level in 0..=4 {
            let m = build_icosphere(level).unwrap();
            assert_abs_diff_eq!(m.total_area(), 4.0 * PI, epsilon = 1e-8);
            assert_eq!(m.euler_characteristic(), 2);
        }
    }

    #[test]
    fn octant_area() {
        let a = spherical_area([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(a, PI / 2.0, epsilon = 1e-14);
        let r = spherical_area([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(r, -PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn tiny_triangle_matches_flat_area() {
        let eps = 1e-3;
        let a = normalized([1.0, 0.0, 0.0]);
        let b = normalized([1.0, eps, 0.0]);
        let c = normalized([1.0, 0.0, eps]);
        let sph = spherical_area(a, b, c).unwrap();
        let flat = 0.5 * norm(cross(sub(b, a), sub(c, a)));
        assert!((sph - flat).abs() / flat < 0.01);
    }

    #[test]
    fn degenerate_triangles_are_rejected() {
        let a = [1.0, 0.0, 0.0];
        let b = normalized([1.0, 1.0, 0.0]);
        let c = [0.0, 1.0, 0.0];
        assert!(matches!(spherical_area(a, b, c), Err(Error::Geometry(_))));
        assert!(matches!(spherical_area(a, [-1.0, 0.0, 0.0], c), Err(Error::Geometry(_))));
    }

    #[test]
    fn faces_are_outward_and_start_at_least_index() {
        let m = build_icosphere(2).unwrap();
        for f in m.faces() {
            assert!(f[0] < f[1] && f[0] < f[2]);
            let v = m.vertices();
            assert!(spherical_area(v[f[0]], v[f[1]], v[f[2]]).unwrap() > 0.0);
        }
    }

    #[test]
    fn poisson_zero_target_gives_zero_angles() {
        let m = build_icosphere(2).unwrap();
        let theta = dual_poisson_solve(&m, &vec![0.0; m.n_faces()]).unwrap();
        assert!(theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn poisson_rejects_fractional_flux() {
        let m = build_icosphere(1).unwrap();
        let flux: Vec<f64> = m.face_areas().iter().map(|a| 0.3 * a).collect();
        assert!(matches!(dual_poisson_solve(&m, &flux), Err(Error::FluxQuantization { .. })));
    }

    #[test]
    fn poisson_realizes_uniform_monopole() {
        let m = build_icosphere(3).unwrap();
        let flux: Vec<f64> = m.face_areas().iter().map(|a| a / (4.0 * PI) * 2.0 * PI).collect();
        let theta = dual_poisson_solve(&m, &flux).unwrap();
        let sums = m.boundary_sums(&theta);
        for (f, (s, a)) in sums.iter().zip(m.face_areas()).enumerate() {
            let want = a / 2.0 - if f == DIRAC_FACE { 2.0 * PI } else { 0.0 };
            assert_abs_diff_eq!(*s, want, epsilon = 1e-9);
        }
        let neg: Vec<f64> = flux.iter().map(|x| -2.0 * x).collect();
        let pos: Vec<f64> = flux.iter().map(|x| 2.0 * x).collect();
        let tn = dual_poisson_solve(&m, &neg).unwrap();
        let tp = dual_poisson_solve(&m, &pos).unwrap();
        for (a, b) in tn.iter().zip(&tp) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-10);
        }
    }

    #[test]
    fn json_roundtrip_rebuilds_mesh() {
        let m = build_icosphere(2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mesh.json");
        m.save_json(&p).unwrap();
        let back = SphereMesh::load_json(&p).unwrap();
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.edges(), m.edges());
        assert_eq!(back.face_areas(), m.face_areas());
    }
}
