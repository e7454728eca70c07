//! Curvature algebra of the hyperquadric `Q^n = SO(n+2)/(SO(n)×SO(2))`.
//!
//! The tangent space at the base point is `M_{2×n}(ℝ)`, embedded in
//! `so(n+2)` as `(O, −Xᵀ; X, O)`. With the Killing-form scale `λ = 1/2` the
//! metric is `g(X, Y) = tr XYᵀ` and the curvature is the double bracket
//! `R(X,Y)Z = −[[X̂, Ŷ], Ẑ]`, which reduces to
//! `ZYᵀX + XYᵀZ − ZXᵀY − YXᵀZ`.
//!
//! Holomorphic tangent vectors are `U = (a; −i·a)` for `a ∈ ℂⁿ`. The
//! Hermitian operator [`curvature_operator`] is normalized against the
//! coordinate Hermitian form on `a`, i.e. `b* H(a) b = R(U, Ū, V, V̄)`. The
//! metric norm of `U` is `2|a|²`, so true eigenvalues are half of these;
//! signs and every positivity statement are unaffected.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::spectra::{self, HermitianMatrix};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Central-difference step of the sphere optimizer.
pub const FD_STEP: f64 = 1e-5;
/// `λ_1` below this counts as a zero eigenvalue.
pub const EQUALITY_TOL: f64 = 1e-8;
pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_ITERS: usize = 400;
const MAX_HALVINGS: u32 = 60;
// Sufficient-decrease constant. On a quadratic it caps accepted steps at
// `2(1 − c)/L`, which keeps the doubling heuristic from zig-zagging.
const ARMIJO: f64 = 0.4;

/// A real tangent vector, a `2×n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTangent {
    x: DMatrix<f64>,
}

impl RealTangent {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != 2 || x.ncols() < 2 {
            return Err(Error::Dimension(format!(
                "tangent vectors are 2×n with n >= 2, got {}×{}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(Self { x })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(2, n))
    }

    /// Elementary matrix `E_{row,col}` with 1-based indices.
    pub fn elementary(n: usize, row: usize, col: usize) -> Result<Self> {
        if !(1..=2).contains(&row) || !(1..=n).contains(&col) {
            return Err(Error::Dimension(format!("E_{{{row}{col}}} out of range for n = {n}")));
        }
        let mut x = DMatrix::zeros(2, n);
        x[(row - 1, col - 1)] = 1.0;
        Self::new(x)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::new(DMatrix::from_fn(2, n, |_, _| rng.sample(StandardNormal)))
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }
}

impl std::ops::Add for &RealTangent {
    type Output = RealTangent;
    fn add(self, rhs: &RealTangent) -> RealTangent {
        RealTangent { x: &self.x + &rhs.x }
    }
}

impl std::ops::Neg for &RealTangent {
    type Output = RealTangent;
    fn neg(self) -> RealTangent {
        RealTangent { x: -&self.x }
    }
}

/// Holomorphic tangent vector `(a; −i·a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoloTangent {
    a: Vec<Complex64>,
}

impl HoloTangent {
    pub fn new(a: Vec<Complex64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::Dimension(format!("need n >= 2, got {}", a.len())));
        }
        Ok(Self { a })
    }

    pub fn basis(n: usize, k: usize) -> Result<Self> {
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        *a.get_mut(k)
            .ok_or_else(|| Error::Dimension(format!("basis index {k} out of range for n = {n}")))? =
            Complex64::new(1.0, 0.0);
        Self::new(a)
    }

    /// `(1, i, 0, …, 0)/√2`, the vector at which `R(U,Ū)` acquires a zero eigenvalue.
    pub fn equality_case(n: usize) -> Result<Self> {
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        if n < 2 {
            return Err(Error::Dimension(format!("need n >= 2, got {n}")));
        }
        a[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        a[1] = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        Self::new(a)
    }

    /// Uniform on the unit sphere of `ℂⁿ`.
    pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let a: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Self::new(a.into_iter().map(|z| z / norm).collect())
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.a
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { a: self.a.iter().map(|z| z * s).collect() }
    }

    /// The `2×n` complex matrix with rows `a` and `−i·a`.
    pub fn embed(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(2, n, |r, c| if r == 0 { self.a[c] } else { -I * self.a[c] })
    }

    /// Isotropy action `U ↦ B·U·A` for `A ∈ SO(n)` and `B` the rotation by
    /// `theta` in `SO(2)`. Fails if the result leaves the holomorphic subspace.
    pub fn transport(&self, a: &DMatrix<f64>, theta: f64) -> Result<Self> {
        let n = self.n();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Dimension(format!("SO(n) factor must be {n}×{n}")));
        }
        let (c, s) = (theta.cos(), theta.sin());
        let b = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]).map(|x| Complex64::new(x, 0.0));
        let u = b * self.embed() * a.map(|x| Complex64::new(x, 0.0));
        let row0: Vec<Complex64> = u.row(0).iter().copied().collect();
        let drift = (0..n).map(|k| (u[(1, k)] + I * row0[k]).norm()).fold(0.0, f64::max);
        if drift > 1e-10 * (1.0 + self.norm_sqr().sqrt()) {
            return Err(Error::Domain(format!("transported vector is not holomorphic (drift {drift:.2e})")));
        }
        Self::new(row0)
    }
}

fn check_same_n(ns: &[usize]) -> Result<()> {
    if ns.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Dimension(format!("mismatched tangent dimensions {ns:?}")));
    }
    Ok(())
}

/// `g(X, Y) = tr XYᵀ`.
pub fn metric_g(x: &RealTangent, y: &RealTangent) -> Result<f64> {
    check_same_n(&[x.n(), y.n()])?;
    Ok(x.x.component_mul(&y.x).sum())
}

/// `J(x₁; x₂) = (−x₂; x₁)`.
pub fn complex_structure_j(x: &RealTangent) -> RealTangent {
    let mut out = DMatrix::zeros(2, x.n());
    out.set_row(0, &(-x.x.row(1)));
    out.set_row(1, &x.x.row(0));
    RealTangent { x: out }
}

fn curvature_formula<T: ComplexField + Copy>(
    x: &DMatrix<T>,
    y: &DMatrix<T>,
    z: &DMatrix<T>,
) -> DMatrix<T> {
    let yt = y.transpose();
    let xt = x.transpose();
    z * &yt * x + x * &yt * z - z * &xt * y - y * &xt * z
}

/// `(O, −Xᵀ; X, O)` in `so(n+2)`.
fn so_embed<T: ComplexField + Copy>(x: &DMatrix<T>) -> DMatrix<T> {
    let n = x.ncols();
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m.view_mut((n, 0), (2, n)).copy_from(x);
    m.view_mut((0, n), (n, 2)).copy_from(&(-x.transpose()));
    m
}

fn bracket<T: ComplexField + Copy>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a * b - b * a
}

fn double_bracket<T: ComplexField + Copy>(x: &DMatrix<T>, y: &DMatrix<T>, z: &DMatrix<T>) -> DMatrix<T> {
    -bracket(&bracket(&so_embed(x), &so_embed(y)), &so_embed(z))
}

/// `R(X, Y)Z` by the closed formula.
pub fn curvature_endo(x: &RealTangent, y: &RealTangent, z: &RealTangent) -> Result<RealTangent> {
    check_same_n(&[x.n(), y.n(), z.n()])?;
    Ok(RealTangent { x: curvature_formula(&x.x, &y.x, &z.x) })
}

/// Antisymmetric `(n+2)×(n+2)` block matrix in `so(n+2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoBlockMatrix {
    m: DMatrix<f64>,
    n: usize,
}

impl SoBlockMatrix {
    pub fn embed(x: &RealTangent) -> Self {
        Self { m: so_embed(&x.x), n: x.n() }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Max entry of `M + Mᵀ`.
    pub fn antisymmetry_defect(&self) -> f64 {
        (&self.m + self.m.transpose()).amax()
    }

    /// Max entry over the `n×n` and `2×2` diagonal blocks.
    pub fn diagonal_block_max(&self) -> f64 {
        let n = self.n;
        self.m.view((0, 0), (n, n)).amax().max(self.m.view((n, n), (2, 2)).amax())
    }

    pub fn lower_left(&self) -> RealTangent {
        RealTangent { x: self.m.view((self.n, 0), (2, self.n)).into_owned() }
    }
}

/// `−[[X̂, Ŷ], Ẑ]` as a full `so(n+2)` matrix.
pub fn double_bracket_matrix(x: &RealTangent, y: &RealTangent, z: &RealTangent) -> Result<SoBlockMatrix> {
    check_same_n(&[x.n(), y.n(), z.n()])?;
    Ok(SoBlockMatrix { m: double_bracket(&x.x, &y.x, &z.x), n: x.n() })
}

/// `R(X, Y)Z` from the Lie-algebra double bracket; independent of [`curvature_endo`].
pub fn curvature_bracket_oracle(x: &RealTangent, y: &RealTangent, z: &RealTangent) -> Result<RealTangent> {
    Ok(double_bracket_matrix(x, y, z)?.lower_left())
}

/// `R(U,Ū,V,V̄) = 4|a|²|b|² − 16 Σ_{i<j} Im(āᵢaⱼ) Im(bᵢb̄ⱼ)`.
pub fn bisectional_closed(u: &HoloTangent, v: &HoloTangent) -> Result<f64> {
    check_same_n(&[u.n(), v.n()])?;
    let (a, b) = (&u.a, &v.a);
    let mut cross = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            cross += (a[i].conj() * a[j]).im * (b[i] * b[j].conj()).im;
        }
    }
    Ok(4.0 * u.norm_sqr() * v.norm_sqr() - 16.0 * cross)
}

/// `tr(VŪᵀUV̄ᵀ + UŪᵀVV̄ᵀ − VUᵀŪV̄ᵀ − ŪUᵀVV̄ᵀ)`; returns the full complex value.
pub fn bisectional_trace_complex(u: &HoloTangent, v: &HoloTangent) -> Result<Complex64> {
    check_same_n(&[u.n(), v.n()])?;
    let (uu, vv) = (u.embed(), v.embed());
    let (ub, vb) = (uu.conjugate(), vv.conjugate());
    let (ut, ubt, vbt) = (uu.transpose(), ub.transpose(), vb.transpose());
    let m = &vv * &ubt * &uu * &vbt + &uu * &ubt * &vv * &vbt - &vv * &ut * &ub * &vbt - &ub * &ut * &vv * &vbt;
    Ok(m.trace())
}

pub fn bisectional_trace(u: &HoloTangent, v: &HoloTangent) -> Result<f64> {
    Ok(bisectional_trace_complex(u, v)?.re)
}

/// `g(−[[Û, Ū̂], V̂], V̄)` with the complex-bilinear extension of the metric.
pub fn bisectional_bracket_complex(u: &HoloTangent, v: &HoloTangent) -> Result<Complex64> {
    check_same_n(&[u.n(), v.n()])?;
    let (uu, vv) = (u.embed(), v.embed());
    let n = u.n();
    let full = double_bracket(&uu, &uu.conjugate(), &vv);
    let r = full.view((n, 0), (2, n)).into_owned();
    Ok(r.component_mul(&vv.conjugate()).sum())
}

pub fn bisectional_bracket(u: &HoloTangent, v: &HoloTangent) -> Result<f64> {
    Ok(bisectional_bracket_complex(u, v)?.re)
}

/// `H(a) = 4|a|²·I − 8i·C`, `C_jk = Im(āⱼaₖ)`, the polarization of
/// [`bisectional_closed`] in its second argument.
pub fn curvature_operator(u: &HoloTangent) -> HermitianMatrix {
    let a = &u.a;
    let n = a.len();
    let s = 4.0 * u.norm_sqr();
    let m = DMatrix::from_fn(n, n, |j, k| {
        let c = (a[j].conj() * a[k]).im;
        let diag = if j == k { s } else { 0.0 };
        Complex64::new(diag, -8.0 * c)
    });
    HermitianMatrix::new(m)
}

/// `Ric(X, X̄) − H(X)` in the coordinate normalization of [`curvature_operator`].
pub fn orthogonal_ricci(u: &HoloTangent) -> Result<f64> {
    let ns = u.norm_sqr();
    if (ns - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("orthogonal Ricci expects |a|² = 1, got {ns}")));
    }
    Ok(curvature_operator(u).trace() - bisectional_closed(u, u)?)
}

/// `λ_1 + λ_2` of [`curvature_operator`].
pub fn operator_lambda12(u: &HoloTangent) -> f64 {
    // curvature_operator is n×n with n >= 2, so this cannot fail
    spectra::lambda12(&curvature_operator(u)).expect("n >= 2")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStatus {
    Converged,
    /// Line search found no decrease within the halving budget.
    LineSearchFailed,
    MaxIterations,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentOutcome {
    pub seed: u64,
    pub value: f64,
    pub iterations: usize,
    pub status: DescentStatus,
}

/// Projected gradient descent on a product of unit spheres in `ℝ^{dim}`.
/// `blocks` lists the real dimension of each sphere factor.
fn sphere_descent(
    f: &dyn Fn(&[f64]) -> f64,
    blocks: &[usize],
    mut x: Vec<f64>,
    iters: usize,
) -> (Vec<f64>, f64, usize, DescentStatus) {
    let normalize = |v: &mut [f64]| {
        let mut off = 0;
        for &len in blocks {
            let seg = &mut v[off..off + len];
            let nrm = seg.iter().map(|t| t * t).sum::<f64>().sqrt();
            seg.iter_mut().for_each(|t| *t /= nrm);
            off += len;
        }
    };
    normalize(&mut x);
    let mut fx = f(&x);
    let mut step = 0.25;
    let dim = x.len();
    let mut probe = x.clone();
    for it in 0..iters {
        let mut g = vec![0.0; dim];
        for k in 0..dim {
            probe.copy_from_slice(&x);
            probe[k] = x[k] + FD_STEP;
            let fp = f(&probe);
            probe[k] = x[k] - FD_STEP;
            let fm = f(&probe);
            g[k] = (fp - fm) / (2.0 * FD_STEP);
        }
        let mut off = 0;
        for &len in blocks {
            let dot: f64 = (off..off + len).map(|k| g[k] * x[k]).sum();
            for k in off..off + len {
                g[k] -= dot * x[k];
            }
            off += len;
        }
        let gnorm2: f64 = g.iter().map(|t| t * t).sum();
        if gnorm2.sqrt() < 1e-9 {
            return (x, fx, it, DescentStatus::Converged);
        }
        let mut accepted = false;
        let mut trial = x.clone();
        for _ in 0..MAX_HALVINGS {
            for k in 0..dim {
                trial[k] = x[k] - step * g[k];
            }
            normalize(&mut trial);
            let ft = f(&trial);
            if ft <= fx - ARMIJO * step * gnorm2 {
                let gain = fx - ft;
                x.copy_from_slice(&trial);
                fx = ft;
                step *= 2.0;
                accepted = true;
                if gain < 1e-15 * (1.0 + fx.abs()) {
                    return (x, fx, it + 1, DescentStatus::Converged);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Stationary to the resolution of the difference quotient.
            let status = if gnorm2.sqrt() < 1e-6 {
                DescentStatus::Converged
            } else {
                DescentStatus::LineSearchFailed
            };
            return (x, fx, it, status);
        }
    }
    (x, fx, iters, DescentStatus::MaxIterations)
}

fn coords_to_holo(p: &[f64]) -> Vec<Complex64> {
    let n = p.len() / 2;
    (0..n).map(|k| Complex64::new(p[k], p[n + k])).collect()
}

fn random_sphere_point<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoPositivityCertificate {
    pub n: usize,
    pub min_lambda12: f64,
    pub argmin: HoloTangent,
    /// Ascending spectrum of `H(argmin)`.
    pub spectrum: Vec<f64>,
    pub restarts: Vec<DescentOutcome>,
}

impl TwoPositivityCertificate {
    pub fn certified(&self) -> bool {
        self.min_lambda12 > 0.0
    }

    pub fn failed_restarts(&self) -> usize {
        self.restarts.iter().filter(|r| r.status == DescentStatus::LineSearchFailed).count()
    }
}

/// Minimizes `λ_1 + λ_2` of `H(a)` over `|a| = 1` by multi-restart projected
/// descent. Restart `i` draws its start from seed `seed + i`.
pub fn certify_two_positivity(n: usize, restarts: usize, iters: usize, seed: u64) -> Result<TwoPositivityCertificate> {
    if n < 2 {
        return Err(Error::Dimension(format!("need n >= 2, got {n}")));
    }
    if restarts == 0 {
        return Err(Error::Domain("at least one restart is required".into()));
    }
    let f = |p: &[f64]| -> f64 {
        let h = HoloTangent { a: coords_to_holo(p) };
        operator_lambda12(&h)
    };
    let mut outcomes = Vec::with_capacity(restarts);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for i in 0..restarts {
        let s = seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x0 = random_sphere_point(2 * n, &mut rng);
        let (x, fx, it, status) = sphere_descent(&f, &[2 * n], x0, iters);
        outcomes.push(DescentOutcome { seed: s, value: fx, iterations: it, status });
        if best.as_ref().is_none_or(|(b, _)| fx < *b) {
            best = Some((fx, x));
        }
    }
    let (min_lambda12, x) = best.expect("restarts >= 1");
    let argmin = HoloTangent::new(coords_to_holo(&x))?;
    let spectrum = spectra::eigenvalues_ascending(&curvature_operator(&argmin))?.eigenvalues;
    Ok(TwoPositivityCertificate { n, min_lambda12, argmin, spectrum, restarts: outcomes })
}

/// Minimum of [`bisectional_closed`] over `samples` random unit pairs.
pub fn bisectional_sweep_min(n: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min = f64::INFINITY;
    for _ in 0..samples {
        let u = HoloTangent::random_unit(n, &mut rng)?;
        let v = HoloTangent::random_unit(n, &mut rng)?;
        min = min.min(bisectional_closed(&u, &v)?);
    }
    Ok(min)
}

/// Minimum of [`bisectional_closed`] over unit pairs by projected descent on
/// `S^{2n-1} × S^{2n-1}`, `restarts` starts with seeds `seed + i`.
pub fn bisectional_descent_min(n: usize, restarts: usize, iters: usize, seed: u64) -> Result<(f64, Vec<DescentOutcome>)> {
    if n < 2 {
        return Err(Error::Dimension(format!("need n >= 2, got {n}")));
    }
    let f = |p: &[f64]| -> f64 {
        let u = HoloTangent { a: coords_to_holo(&p[..2 * n]) };
        let v = HoloTangent { a: coords_to_holo(&p[2 * n..]) };
        bisectional_closed(&u, &v).expect("same n")
    };
    let mut min = f64::INFINITY;
    let mut outcomes = Vec::with_capacity(restarts);
    for i in 0..restarts {
        let s = seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x0 = random_sphere_point(4 * n, &mut rng);
        let (_, fx, it, status) = sphere_descent(&f, &[2 * n, 2 * n], x0, iters);
        outcomes.push(DescentOutcome { seed: s, value: fx, iterations: it, status });
        min = min.min(fx);
    }
    Ok((min, outcomes))
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct OracleResiduals {
    pub pairs: usize,
    pub closed_vs_trace: f64,
    pub closed_vs_bracket: f64,
    pub trace_vs_bracket: f64,
    /// Largest imaginary part of the trace and bracket evaluations.
    pub imaginary: f64,
}

impl OracleResiduals {
    pub fn max(&self) -> f64 {
        self.closed_vs_trace
            .max(self.closed_vs_bracket)
            .max(self.trace_vs_bracket)
            .max(self.imaginary)
    }
}

/// Pairwise agreement of the three evaluations of `R(U,Ū,V,V̄)` on random unit pairs.
pub fn oracle_residuals(n: usize, pairs: usize, seed: u64) -> Result<OracleResiduals> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = OracleResiduals { pairs, ..Default::default() };
    for _ in 0..pairs {
        let u = HoloTangent::random_unit(n, &mut rng)?;
        let v = HoloTangent::random_unit(n, &mut rng)?;
        let c = bisectional_closed(&u, &v)?;
        let t = bisectional_trace_complex(&u, &v)?;
        let b = bisectional_bracket_complex(&u, &v)?;
        out.closed_vs_trace = out.closed_vs_trace.max((c - t.re).abs());
        out.closed_vs_bracket = out.closed_vs_bracket.max((c - b.re).abs());
        out.trace_vs_bracket = out.trace_vs_bracket.max((t.re - b.re).abs());
        out.imaginary = out.imaginary.max(t.im.abs()).max(b.im.abs());
    }
    Ok(out)
}

/// Uniformly random element of `SO(n)`.
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Holomorphic vector from interleaved-free real coordinates `(Re a, Im a)`.
pub fn holo_from_real(p: &DVector<f64>) -> Result<HoloTangent> {
    HoloTangent::new(coords_to_holo(p.as_slice()))
}
