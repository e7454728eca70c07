//! Dense complex helpers shared by the spectral core and the flow kernel.
//!
//! All routines work on column-major slices so they run unchanged on heap
//! `DMatrix` storage and on stack `SMatrix<_, R, R>` blocks.

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Cyclic Jacobi eigensolver for a Hermitian matrix stored column-major.
///
/// On return `a` is destroyed, `w` holds the eigenvalues in ascending order
/// and the columns of `v` the matching orthonormal eigenvectors.
pub fn jacobi_eigh(a: &mut [Complex64], n: usize, w: &mut [f64], v: &mut [Complex64]) {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(v.len(), n * n);
    debug_assert_eq!(w.len(), n);

    for j in 0..n {
        for i in 0..n {
            v[i + j * n] = if i == j { ONE } else { ZERO };
        }
    }
    for i in 0..n {
        a[i + i * n].im = 0.0;
    }

    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale > 0.0 {
        for _sweep in 0..64 {
            let mut off = 0.0;
            for q in 1..n {
                for p in 0..q {
                    off += a[p + q * n].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for q in 1..n {
                for p in 0..q {
                    rotate(a, v, n, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i + i * n].re.total_cmp(&a[j + j * n].re));
    let vs = v.to_vec();
    for (dst, &src) in order.iter().enumerate() {
        w[dst] = a[src + src * n].re;
        v[dst * n..(dst + 1) * n].copy_from_slice(&vs[src * n..(src + 1) * n]);
    }
}

fn rotate(a: &mut [Complex64], v: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = a[p + q * n];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let alpha = a[p + p * n].re;
    let beta = a[q + q * n].re;
    let phase = apq / r;
    let tau = (beta - alpha) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J = diag(1, conj(phase)) · [[c, s], [-s, c]] acting on the (p, q) plane.
    let j_pp = Complex64::new(c, 0.0);
    let j_pq = Complex64::new(s, 0.0);
    let j_qp = -phase.conj() * s;
    let j_qq = phase.conj() * c;

    for k in 0..n {
        let akp = a[k + p * n];
        let akq = a[k + q * n];
        a[k + p * n] = akp * j_pp + akq * j_qp;
        a[k + q * n] = akp * j_pq + akq * j_qq;
    }
    for k in 0..n {
        let apk = a[p + k * n];
        let aqk = a[q + k * n];
        a[p + k * n] = j_pp.conj() * apk + j_qp.conj() * aqk;
        a[q + k * n] = j_pq.conj() * apk + j_qq.conj() * aqk;
    }
    a[p + q * n] = ZERO;
    a[q + p * n] = ZERO;
    a[p + p * n] = Complex64::new(alpha - t * r, 0.0);
    a[q + q * n] = Complex64::new(beta + t * r, 0.0);

    for k in 0..n {
        let vkp = v[k + p * n];
        let vkq = v[k + q * n];
        v[k + p * n] = vkp * j_pp + vkq * j_qp;
        v[k + q * n] = vkp * j_pq + vkq * j_qq;
    }
}

/// In-place Gauss-Jordan inverse with partial pivoting. Returns `false` when
/// a pivot underflows `tol` relative to the largest entry.
pub fn invert_in_place(a: &mut [Complex64], n: usize, tol: f64) -> bool {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return false;
    }
    let mut inv = vec![ZERO; n * n];
    for i in 0..n {
        inv[i + i * n] = ONE;
    }
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col + col * n].norm();
        for r in col + 1..n {
            let m = a[r + col * n].norm();
            if m > best {
                best = m;
                piv = r;
            }
        }
        if best <= tol * scale {
            return false;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col + k * n, piv + k * n);
                inv.swap(col + k * n, piv + k * n);
            }
        }
        let d = ONE / a[col + col * n];
        for k in 0..n {
            a[col + k * n] *= d;
            inv[col + k * n] *= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r + col * n];
            if f == ZERO {
                continue;
            }
            for k in 0..n {
                let ack = a[col + k * n];
                let ick = inv[col + k * n];
                a[r + k * n] -= f * ack;
                inv[r + k * n] -= f * ick;
            }
        }
    }
    a.copy_from_slice(&inv);
    true
}

/// Eigendecomposition of a stack Hermitian block: `(ascending eigenvalues, eigenvectors)`.
pub fn eigh_static<const R: usize>(
    m: &SMatrix<Complex64, R, R>,
) -> ([f64; R], SMatrix<Complex64, R, R>) {
    let mut a = *m;
    let mut v = SMatrix::<Complex64, R, R>::zeros();
    let mut w = [0.0; R];
    jacobi_eigh(a.as_mut_slice(), R, &mut w, v.as_mut_slice());
    (w, v)
}

/// `V · diag(f(w)) · V*` for real eigenvalues mapped to complex scalars.
pub fn spectral_map<const R: usize>(
    w: &[f64; R],
    v: &SMatrix<Complex64, R, R>,
    f: impl Fn(f64) -> Complex64,
) -> SMatrix<Complex64, R, R> {
    let mut scaled = *v;
    for (j, &lam) in w.iter().enumerate() {
        let s = f(lam);
        for i in 0..R {
            scaled[(i, j)] *= s;
        }
    }
    scaled * v.adjoint()
}

/// `exp(i·s·K)` for Hermitian `K`.
pub fn expi_hermitian<const R: usize>(k: &SMatrix<Complex64, R, R>, s: f64) -> SMatrix<Complex64, R, R> {
    let (w, v) = eigh_static(k);
    spectral_map(&w, &v, |lam| Complex64::from_polar(1.0, s * lam))
}

/// Modified Gram-Schmidt on the columns. Preserves the phase of the
/// determinant, since the discarded triangular factor has a positive diagonal.
pub fn reunitarize<const R: usize>(m: &mut SMatrix<Complex64, R, R>) {
    for j in 0..R {
        for k in 0..j {
            let mut dot = ZERO;
            for i in 0..R {
                dot += m[(i, k)].conj() * m[(i, j)];
            }
            for i in 0..R {
                let mik = m[(i, k)];
                m[(i, j)] -= dot * mik;
            }
        }
        let norm = (0..R).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..R {
            m[(i, j)] /= norm;
        }
    }
}

pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Hermitian matrix with standard normal diagonal and standard complex normal
/// off-diagonal entries (GUE scaling).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(n, n, ZERO);
    for i in 0..n {
        m[(i, i)] = Complex64::new(rng.sample(StandardNormal), 0.0);
        for j in i + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, im) / std::f64::consts::SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

pub fn to_static<const R: usize>(m: &DMatrix<Complex64>) -> SMatrix<Complex64, R, R> {
    SMatrix::<Complex64, R, R>::from_column_slice(m.as_slice())
}

pub fn to_dynamic<const R: usize>(m: &SMatrix<Complex64, R, R>) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(R, R, m.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=9 {
            let m = random_hermitian(n, &mut rng);
            let mut a = m.clone();
            let mut v = DMatrix::from_element(n, n, ZERO);
            let mut w = vec![0.0; n];
            jacobi_eigh(a.as_mut_slice(), n, &mut w, v.as_mut_slice());
            assert!(w.windows(2).all(|p| p[0] <= p[1]));
            let d = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(w[i], 0.0) } else { ZERO });
            let back = &v * d * v.adjoint();
            assert!((back - &m).norm() < 1e-12 * (1.0 + m.norm()));
            let gram = v.adjoint() * &v;
            assert!((gram - DMatrix::identity(n, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobi_handles_degenerate_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(4, &mut rng);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        let m = &u * d * u.adjoint();
        let mut a = m.clone();
        let mut v = DMatrix::from_element(4, 4, ZERO);
        let mut w = vec![0.0; 4];
        jacobi_eigh(a.as_mut_slice(), 4, &mut w, v.as_mut_slice());
        let expect = [-2.0, 1.0, 1.0, 1.0];
        for (x, y) in w.iter().zip(expect) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn inverse_matches_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_hermitian(5, &mut rng) + random_unitary(5, &mut rng);
        let mut inv = m.clone();
        assert!(invert_in_place(inv.as_mut_slice(), 5, 1e-14));
        assert!((&m * &inv - DMatrix::identity(5, 5)).norm() < 1e-12);
        let mut z = DMatrix::from_element(3, 3, ZERO);
        assert!(!invert_in_place(z.as_mut_slice(), 3, 1e-14));
    }

    #[test]
    fn reunitarize_keeps_determinant_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(3, &mut rng);
        let mut m: SMatrix<Complex64, 3, 3> = to_static(&u);
        m[(0, 1)] += Complex64::new(1e-6, -2e-6);
        let before = m.determinant();
        reunitarize(&mut m);
        let after = m.determinant();
        assert!((m.adjoint() * m - SMatrix::<Complex64, 3, 3>::identity()).norm() < 1e-14);
        assert!((before.arg() - after.arg()).abs() < 1e-12);
    }

    #[test]
    fn expi_is_unitary_and_matches_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k: SMatrix<Complex64, 2, 2> = to_static(&random_hermitian(2, &mut rng));
        let e = expi_hermitian(&k, 0.3);
        assert!((e.adjoint() * e - SMatrix::<Complex64, 2, 2>::identity()).norm() < 1e-14);
        // Taylor series oracle
        let x = k * Complex64::new(0.0, 0.3);
        let mut term = SMatrix::<Complex64, 2, 2>::identity();
        let mut sum = term;
        for j in 1..40 {
            term = term * x / Complex64::new(j as f64, 0.0);
            sum += term;
        }
        assert!((sum - e).norm() < 1e-13);
    }
}
