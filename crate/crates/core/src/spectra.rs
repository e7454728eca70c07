//! Hermitian spectra and the 2-positivity classes.
//!
//! `lambda12` is the sum of the two smallest eigenvalues. As an infimum of
//! traces over orthonormal 2-frames it is concave and unitarily invariant,
//! so the sets `{A : lambda12(A) >= ε}` are closed, convex and invariant under
//! conjugation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Values with magnitude below this are treated as zero when classifying.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Builds `(m + m*)/2`. Panics if `m` is not square.
    pub fn new(m: DMatrix<Complex64>) -> Self {
        assert!(m.is_square(), "Hermitian matrix must be square");
        Self { m: linalg::hermitian_part(&m) }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let v = DVector::from_iterator(d.len(), d.iter().map(|&x| Complex64::new(x, 0.0)));
        Self { m: DMatrix::from_diagonal(&v) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    /// `W A W*`.
    pub fn conjugate_by(&self, w: &DMatrix<Complex64>) -> Self {
        Self::new(w * &self.m * w.adjoint())
    }

    /// Real part of `<A v, v>`.
    pub fn quadratic_form(&self, v: &DVector<Complex64>) -> f64 {
        v.dotc(&(&self.m * v)).re
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }
}

impl std::ops::Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::new(&self.m + &rhs.m)
    }
}

impl std::ops::Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, s: f64) -> HermitianMatrix {
        HermitianMatrix { m: self.m.scale(s) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvalues[0] + eigenvalues[1]`; absent for 1×1 input.
    pub lambda12: Option<f64>,
}

/// Eigenvalues together with the unitary that diagonalizes `m`.
pub fn eigh(m: &HermitianMatrix) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::EmptyInput("Hermitian matrix of dimension 0"));
    }
    let mut a = m.m.clone();
    let mut v = DMatrix::zeros(n, n);
    let mut w = vec![0.0; n];
    linalg::jacobi_eigh(a.as_mut_slice(), n, &mut w, v.as_mut_slice());
    Ok((w, v))
}

pub fn eigenvalues_ascending(m: &HermitianMatrix) -> Result<SpectralSummary> {
    let (eigenvalues, _) = eigh(m)?;
    let lambda12 = (eigenvalues.len() >= 2).then(|| eigenvalues[0] + eigenvalues[1]);
    Ok(SpectralSummary { eigenvalues, lambda12 })
}

pub fn lambda12(m: &HermitianMatrix) -> Result<f64> {
    sum_smallest(m, 2)
}

/// `λ_1 + … + λ_k`.
pub fn sum_smallest(m: &HermitianMatrix, k: usize) -> Result<f64> {
    if k == 0 || m.dim() < k {
        return Err(Error::Dimension(format!(
            "sum of the {k} smallest eigenvalues needs dimension >= {k}, got {}",
            m.dim()
        )));
    }
    let s = eigenvalues_ascending(m)?;
    Ok(s.eigenvalues[..k].iter().sum())
}

/// Upper estimate of `lambda12` as the minimum of `<m v1,v1> + <m v2,v2>` over
/// orthonormal pairs: every coordinate pair `(e_i, e_j)` plus `samples`
/// random pairs drawn from a seeded generator.
pub fn lambda12_variational(m: &HermitianMatrix, samples: usize, seed: u64) -> Result<f64> {
    let n = m.dim();
    if n < 2 {
        return Err(Error::Dimension(format!("variational lambda12 needs dimension >= 2, got {n}")));
    }
    let a = &m.m;
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(a[(i, i)].re + a[(j, j)].re);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let (v1, v2) = random_orthonormal_pair(n, &mut rng);
        best = best.min(m.quadratic_form(&v1) + m.quadratic_form(&v2));
    }
    Ok(best)
}

fn random_orthonormal_pair<R: Rng>(n: usize, rng: &mut R) -> (DVector<Complex64>, DVector<Complex64>) {
    let mut gauss = || {
        DVector::from_fn(n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    };
    let v1 = gauss().normalize();
    let w = gauss();
    let v2 = (&w - &v1 * v1.dotc(&w)).normalize();
    (v1, v2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", content = "epsilon", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PositivityClass {
    EpsilonTwoPositive(f64),
    TwoPositive,
    TwoQuasiPositive,
    TwoNonnegative,
    None,
}

impl PositivityClass {
    /// Whether this class implies 2-nonnegativity.
    pub fn is_two_nonnegative(&self) -> bool {
        !matches!(self, PositivityClass::None)
    }

    /// Whether this class implies strict 2-positivity.
    pub fn is_two_positive(&self) -> bool {
        matches!(self, PositivityClass::TwoPositive | PositivityClass::EpsilonTwoPositive(_))
    }
}

impl std::fmt::Display for PositivityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PositivityClass::EpsilonTwoPositive(e) => write!(f, "EPSILON_TWO_POSITIVE({e})"),
            PositivityClass::TwoPositive => f.write_str("TWO_POSITIVE"),
            PositivityClass::TwoQuasiPositive => f.write_str("TWO_QUASI_POSITIVE"),
            PositivityClass::TwoNonnegative => f.write_str("TWO_NONNEGATIVE"),
            PositivityClass::None => f.write_str("NONE"),
        }
    }
}

/// Strongest class satisfied by a field of matrices.
pub fn classify_field(field: &[HermitianMatrix], epsilon: f64) -> Result<PositivityClass> {
    let first = field.first().ok_or(Error::EmptyInput("field has no matrices"))?;
    let r = first.dim();
    if r < 2 {
        return Err(Error::Dimension(format!("2-positivity needs rank >= 2, got {r}")));
    }
    let mut values = Vec::with_capacity(field.len());
    for m in field {
        if m.dim() != r {
            return Err(Error::Dimension(format!(
                "field mixes dimensions {r} and {}",
                m.dim()
            )));
        }
        values.push(lambda12(m)?);
    }
    classify_lambda12_values(&values, epsilon)
}

/// Classification from precomputed pointwise `lambda12` values.
pub fn classify_lambda12_values(values: &[f64], epsilon: f64) -> Result<PositivityClass> {
    if values.is_empty() {
        return Err(Error::EmptyInput("field has no matrices"));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let snap = |x: f64| if x.abs() < ZERO_TOL { 0.0 } else { x };
    let min = values.iter().copied().map(snap).fold(f64::INFINITY, f64::min);
    let any_positive = values.iter().copied().map(snap).any(|x| x > 0.0);
    Ok(if epsilon > 0.0 && min >= epsilon {
        PositivityClass::EpsilonTwoPositive(epsilon)
    } else if min > 0.0 {
        PositivityClass::TwoPositive
    } else if min >= 0.0 && any_positive {
        PositivityClass::TwoQuasiPositive
    } else if min >= 0.0 {
        PositivityClass::TwoNonnegative
    } else {
        PositivityClass::None
    })
}
