//! Dense complex linear-algebra helpers shared by the solvers.
//!
//! Matrices are `nalgebra` column-major `DMatrix<Complex<f64>>`. The hot
//! products in the SDP solver go through `matrixmultiply`'s complex GEMM,
//! which is several times faster than the generic nalgebra kernel.

#[allow(unused_imports)] // idle when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub use nalgebra::Complex;

/// Complex scalar.
pub type C64 = Complex<f64>;
/// Dense complex matrix (column-major).
pub type CMat = DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = DVector<C64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Unit-modulus complex number `e^{jθ}`.
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

/// `conj(a) · b`, summed over the vectors.
#[inline]
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

/// How an operand enters [`gemm_into`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    /// Use the matrix as stored.
    N,
    /// Use the conjugate transpose.
    H,
}

/// `c ← alpha · op(a) · op(b) + beta · c`.
///
/// Panics on dimension mismatch.
pub fn gemm_into(alpha: C64, a: &CMat, opa: Op, b: &CMat, opb: Op, beta: C64, c: &mut CMat) {
    // The complex kernel has no conjugation flag, so adjoint operands are
    // materialised; that copy is O(n²) against the O(n³) product.
    let a_h;
    let a = match opa {
        Op::N => a,
        Op::H => {
            a_h = a.adjoint();
            &a_h
        }
    };
    let b_h;
    let b = match opb {
        Op::N => b,
        Op::H => {
            b_h = b.adjoint();
            &b_h
        }
    };
    let (m, k) = a.shape();
    let (kb, n) = b.shape();
    assert_eq!(k, kb, "gemm inner dimension mismatch");
    assert_eq!((c.nrows(), c.ncols()), (m, n), "gemm output shape mismatch");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        *c *= beta;
        return;
    }
    // SAFETY: the strides describe the column-major storage of each matrix,
    // the shapes were checked above, and `c` does not alias `a` or `b`
    // because it is borrowed mutably while they are borrowed shared.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [beta.re, beta.im],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

/// `op(a) · op(b)` as a fresh matrix.
pub fn gemm(a: &CMat, opa: Op, b: &CMat, opb: Op) -> CMat {
    let m = if opa == Op::N { a.nrows() } else { a.ncols() };
    let n = if opb == Op::N { b.ncols() } else { b.nrows() };
    let mut c = CMat::zeros(m, n);
    gemm_into(ONE, a, opa, b, opb, ZERO, &mut c);
    c
}

/// Replace `a` by its Hermitian part `(a + aᴴ)/2`.
pub fn hermitize(a: &mut CMat) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    for j in 0..n {
        a[(j, j)].im = 0.0;
        for i in (j + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

/// Real trace inner product `Re Tr(a b)` for square matrices of equal size.
pub fn trace_prod_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            let x = a[(i, j)];
            let y = b[(j, i)];
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Cholesky factorization of a Hermitian positive-definite matrix.
pub fn cholesky(a: &CMat) -> Option<Cholesky<C64, Dyn>> {
    Cholesky::new(a.clone())
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky, or `None`.
pub fn hpd_inverse(a: &CMat) -> Option<CMat> {
    let mut w = cholesky(a)?.inverse();
    hermitize(&mut w);
    Some(w)
}

/// Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = a.clone().symmetric_eigen();
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Smallest eigenvalue of `L⁻¹ D L⁻ᴴ` for lower-triangular `L` and
/// Hermitian `D`, estimated by Lanczos with full reorthogonalisation.
///
/// Exact (up to rounding) when the Krylov space reaches full dimension,
/// which happens for `n ≤ max_iter`. For larger `n` the estimate is an
/// upper bound on the true minimum; callers must verify the step they take.
pub fn min_eig_congruence(l: &CMat, d: &CMat, max_iter: usize) -> f64 {
    let n = l.nrows();
    if n == 0 {
        return 0.0;
    }
    let apply = |v: &CVec| -> CVec {
        // L⁻ᴴ v, then D ·, then L⁻¹ ·
        let mut t = v.clone();
        l.ad_solve_lower_triangular_mut(&mut t);
        let mut u = d * t;
        l.solve_lower_triangular_mut(&mut u);
        u
    };
    let steps = max_iter.min(n).max(1);
    let mut basis: Vec<CVec> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut q = CVec::from_fn(n, |i, _| C64::new(1.0 + 0.013 * i as f64, 0.007 * (i % 7) as f64));
    let qn = q.norm();
    q /= C64::new(qn, 0.0);
    for j in 0..steps {
        let mut w = apply(&q);
        let a = dotc(q.as_slice(), w.as_slice()).re;
        alpha.push(a);
        basis.push(q.clone());
        // full reorthogonalisation (twice is enough)
        for _ in 0..2 {
            for b in &basis {
                let c = dotc(b.as_slice(), w.as_slice());
                w.axpy(-c, b, ONE);
            }
        }
        let bnorm = w.norm();
        if j + 1 == steps || bnorm <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        beta.push(bnorm);
        q = w / C64::new(bnorm, 0.0);
    }
    let k = alpha.len();
    let mut t = RMat::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest step `α ≤ 1` with `x + α·dx ≻ 0`, scaled by `tau`, for a
/// Hermitian PD `x` with Cholesky factor `l`.
pub fn psd_step(l: &CMat, dx: &CMat, tau: f64) -> f64 {
    let lam = min_eig_congruence(l, dx, 24);
    if lam >= 0.0 {
        1.0
    } else {
        (tau * (-1.0 / lam)).min(1.0)
    }
}

/// Largest step `α ≤ 1` keeping a positive vector positive, scaled by `tau`.
pub fn lp_step(x: &[f64], dx: &[f64], tau: f64) -> f64 {
    let mut a = f64::INFINITY;
    for (&xi, &di) in x.iter().zip(dx) {
        if di < 0.0 {
            a = a.min(-xi / di);
        }
    }
    (tau * a).min(1.0)
}

/// Solve the real linear system `a x = b` by LU, `None` if singular.
pub fn solve_real(a: RMat, b: &[f64]) -> Option<Vec<f64>> {
    let lu = a.lu();
    let x = lu.solve(&DVector::from_column_slice(b))?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

/// Solve a real symmetric positive-definite system, falling back to LU.
pub fn solve_spd(a: RMat, b: &[f64]) -> Option<Vec<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        let x = ch.solve(&DVector::from_column_slice(b));
        if x.iter().all(|v| v.is_finite()) {
            return Some(x.iter().copied().collect());
        }
    }
    solve_real(a, b)
}

/// Singular values of a complex matrix, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Column `j` of `a` as an owned vector.
pub(crate) fn col(a: &CMat, j: usize) -> CVec {
    a.column(j).into_owned()
}

/// Stack equal-length vectors as matrix columns.
pub fn columns_to_matrix(cols: &[CVec], rows: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        debug_assert_eq!(c.len(), rows);
        m.set_column(j, c);
    }
    m
}

/// Standard complex Gaussian `CN(0, 1)` draw.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    use rand_distr::{Distribution, StandardNormal};
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn random(n: usize, m: usize, seed: u64) -> CMat {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, m, |_, _| complex_normal(&mut rng))
    }

    #[test]
    fn gemm_matches_nalgebra_for_all_ops() {
        let a = random(5, 3, 1);
        let b = random(3, 4, 2);
        let c = gemm(&a, Op::N, &b, Op::N);
        assert!((c - &a * &b).norm() < 1e-12);
        let at = a.adjoint();
        let c = gemm(&at, Op::H, &b, Op::N);
        assert!((c - &a * &b).norm() < 1e-12);
        let bt = b.adjoint();
        let c = gemm(&a, Op::N, &bt, Op::H);
        assert!((c - &a * &b).norm() < 1e-12);
    }

    #[test]
    fn gemm_accumulates_with_beta() {
        let a = random(4, 4, 3);
        let b = random(4, 4, 4);
        let mut c = random(4, 4, 5);
        let expect = &a * &b * C64::new(2.0, 0.0) + &c * C64::new(0.0, 1.0);
        gemm_into(C64::new(2.0, 0.0), &a, Op::N, &b, Op::N, C64::new(0.0, 1.0), &mut c);
        assert!((c - expect).norm() < 1e-12);
    }

    #[test]
    fn lanczos_min_eig_is_exact_for_small_n() {
        let r = random(6, 6, 7);
        let x = &r * r.adjoint() + CMat::identity(6, 6);
        let mut d = random(6, 6, 8);
        hermitize(&mut d);
        let l = cholesky(&x).unwrap().l();
        let linv = l.clone().try_inverse().unwrap();
        let m = &linv * &d * linv.adjoint();
        let exact = hermitian_eigenvalues(&m)[0];
        let est = min_eig_congruence(&l, &d, 48);
        assert!((exact - est).abs() < 1e-9 * (1.0 + exact.abs()), "{exact} vs {est}");
    }

    #[test]
    fn psd_step_stays_inside_the_cone() {
        let x = CMat::identity(3, 3);
        let dx = CMat::from_diagonal(&CVec::from_vec(std::vec![
            C64::new(-4.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        let l = cholesky(&x).unwrap().l();
        let a = psd_step(&l, &dx, 1.0);
        assert!((a - 0.25).abs() < 1e-12);
        assert_eq!(psd_step(&l, &(-dx.clone() * C64::new(0.0, 0.0)), 0.9), 1.0);
    }

    #[test]
    fn eigen_is_ascending_and_reconstructs() {
        let r = random(5, 5, 9);
        let h = &r + r.adjoint();
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(5, vals.iter().map(|&v| C64::new(v, 0.0))));
        assert!((&vecs * d * vecs.adjoint() - h).norm() < 1e-10);
    }

    #[test]
    fn complex_normal_has_unit_power() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 20000;
        let p: f64 = (0..n).map(|_| complex_normal(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((p - 1.0).abs() < 0.03);
    }
}
