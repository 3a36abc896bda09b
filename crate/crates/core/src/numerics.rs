//! Dense complex-Hermitian linear algebra kernels shared by all other modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impairments::Covariance;

/// Dense complex matrix in column-major storage.
pub type CMat = DMatrix<Complex64>;

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Maximum entrywise deviation |A - A^H|.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// (A + A^H) / 2, absorbing round-off asymmetry before factorizations.
pub fn symmetrize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

fn check_square_hermitian(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "expected a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.norm().max(1.0);
    let dev = hermitian_deviation(a);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: HERMITIAN_TOL * scale,
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in descending
/// order and the matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl EigenDecomposition {
    /// Keep only the `m` largest eigenpairs (compact decomposition).
    pub fn truncate(mut self, m: usize) -> Self {
        assert!(m >= 1 && m <= self.eigenvalues.len());
        self.eigenvalues.truncate(m);
        self.eigenvectors = self.eigenvectors.columns(0, m).into_owned();
        self
    }

    /// U diag(lambda) U^H.
    pub fn reconstruct(&self) -> CMat {
        let n = self.eigenvectors.nrows();
        let m = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            for i in 0..n {
                scaled[(i, k)] *= Complex64::new(lam, 0.0);
            }
        }
        let _ = m;
        &scaled * self.eigenvectors.adjoint()
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before factorization; equal eigenvalues keep the
/// solver-native order, with the descending sort stabilized by original index.
pub fn herm_eig(a: &CMat) -> Result<EigenDecomposition> {
    check_square_hermitian(a)?;
    let n = a.nrows();
    let sym = symmetrize(a);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 100 * n * n)
        .ok_or(Error::EigenNonConvergence { dim: n })?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNonConvergence { dim: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        eigenvectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// log2 det(A) of a Hermitian positive-definite matrix via Cholesky.
///
/// The determinant is never formed explicitly; the result is twice the sum of
/// log2 of the Cholesky diagonal.
pub fn logdet_hpd(a: &CMat) -> Result<f64> {
    check_square_hermitian(a)?;
    let n = a.nrows();
    let mut l = symmetrize(a);
    let mut logdet = 0.0;
    for j in 0..n {
        let mut d = l[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let root = d.sqrt();
        logdet += 2.0 * root.log2();
        l[(j, j)] = Complex64::new(root, 0.0);
        for i in (j + 1)..n {
            let mut s = l[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(logdet)
}

/// Largest eigenvalue of H^H H (squared spectral norm).
pub fn spectral_norm_sq(h: &CMat) -> f64 {
    let gram = if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    };
    let eig = herm_eig(&gram).expect("Gram matrix is Hermitian by construction");
    eig.eigenvalues[0].max(0.0)
}

/// Euclidean projection of a real vector onto the probability simplex
/// { d : d_i >= 0, sum d_i = budget }.
pub fn project_simplex(v: &[f64], budget: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - budget) / (k + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Frobenius-nearest Hermitian PSD matrix with unit trace.
///
/// Eigenvalue clipping combined with the simplex projection of the eigenvalue
/// vector; the eigenvectors are untouched.
pub fn project_psd_unit_trace(a: &CMat) -> Result<Covariance> {
    let eig = herm_eig(a)?;
    let d = project_simplex(&eig.eigenvalues, 1.0);
    let projected = EigenDecomposition {
        eigenvalues: d,
        eigenvectors: eig.eigenvectors,
    };
    Ok(Covariance::new_unchecked(symmetrize(&projected.reconstruct())))
}

/// Fixed-order pairwise summation; bit-identical regardless of how the inputs
/// were produced, as long as the slice order is fixed.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Convenience constructor from row-major real/imaginary pairs.
pub fn cmat_from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> CMat {
    assert_eq!(entries.len(), rows * cols);
    CMat::from_row_slice(rows, cols, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn max_abs(a: &CMat) -> f64 {
        a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
        let raw = CMat::from_fn(n, n, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        symmetrize(&raw)
    }

    #[test]
    fn herm_eig_identity() {
        let eig = herm_eig(&CMat::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn herm_eig_diagonal() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0)]));
        let eig = herm_eig(&a).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-13);
        // diag(3,1) is already descending, so the eigenvector matrix is the
        // identity up to per-column phase.
        assert_abs_diff_eq!(eig.eigenvectors[(0, 0)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvectors[(1, 1)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn herm_eig_reconstruction_random() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for n in [2usize, 4, 8, 16] {
            let a = random_hermitian(n, &mut rng);
            let eig = herm_eig(&a).unwrap();
            let resid = (&a - eig.reconstruct()).norm();
            assert!(resid <= 1e-9 * a.norm(), "n={n} residual {resid}");
            let gram = eig.eigenvectors.adjoint() * &eig.eigenvectors;
            let dev = max_abs(&(&gram - CMat::identity(n, n)));
            assert!(dev < 1e-10, "orthonormality deviation {dev}");
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let a = cmat_from_rows(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(herm_eig(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn logdet_identity_is_zero() {
        for n in [1usize, 3, 6] {
            assert_abs_diff_eq!(logdet_hpd(&CMat::identity(n, n)).unwrap(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn logdet_diag_two_two() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(2.0, 0.0)]));
        assert_abs_diff_eq!(logdet_hpd(&a).unwrap(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn logdet_complex_two_by_two() {
        // det [[2, i], [-i, 2]] = 4 - 1 = 3
        let a = cmat_from_rows(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        assert_abs_diff_eq!(logdet_hpd(&a).unwrap(), 3.0_f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn logdet_reports_failing_pivot() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-2.0, 0.0)]));
        match logdet_hpd(&a) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected pivot error, got {other:?}"),
        }
    }

    #[test]
    fn logdet_inverse_cancels() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let b = random_hermitian(5, &mut rng);
            // b^H b + I is Hermitian positive definite and well conditioned.
            let a = &b * &b + CMat::identity(5, 5);
            let inv = a.clone().try_inverse().unwrap();
            let total = logdet_hpd(&a).unwrap() + logdet_hpd(&inv).unwrap();
            assert_abs_diff_eq!(total, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn sylvester_determinant_identity() {
        // det(I + AB) = det(I + BA) for A (m x n), B (n x m).
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..20 {
            let a = CMat::from_fn(3, 5, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let b = a.adjoint().scale(0.7);
            let lhs = logdet_hpd(&(CMat::identity(3, 3) + &a * &b)).unwrap();
            let rhs = logdet_hpd(&(CMat::identity(5, 5) + &b * &a)).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-8);
        }
    }

    #[test]
    fn spectral_norm_examples() {
        assert_abs_diff_eq!(spectral_norm_sq(&CMat::identity(4, 4)), 1.0, epsilon = 1e-12);
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(1.0, 0.0)]));
        assert_abs_diff_eq!(spectral_norm_sq(&a), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_norm_matches_gram_eig() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let h = CMat::from_fn(4, 4, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let gram = h.adjoint() * &h;
        let eig = herm_eig(&gram).unwrap();
        assert_abs_diff_eq!(spectral_norm_sq(&h), eig.eigenvalues[0], epsilon = 1e-10);
    }

    #[test]
    fn projection_examples() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]));
        let q = project_psd_unit_trace(&a).unwrap();
        assert_abs_diff_eq!(q.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.matrix()[(1, 1)].re, 0.0, epsilon = 1e-12);

        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0, 0.0), c(-1.0, 0.0)]));
        let q = project_psd_unit_trace(&a).unwrap();
        assert_abs_diff_eq!(q.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q.matrix()[(1, 1)].re, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn projection_fixed_point_and_idempotent() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..20 {
            let a = random_hermitian(4, &mut rng);
            let q1 = project_psd_unit_trace(&a).unwrap();
            let trace: f64 = (0..4).map(|i| q1.matrix()[(i, i)].re).sum();
            assert_abs_diff_eq!(trace, 1.0, epsilon = 1e-12);
            let eig = herm_eig(q1.matrix()).unwrap();
            assert!(*eig.eigenvalues.last().unwrap() >= -1e-12);
            let q2 = project_psd_unit_trace(q1.matrix()).unwrap();
            assert!(max_abs(&(q1.matrix() - q2.matrix())) < 1e-12);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..101).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert_abs_diff_eq!(pairwise_sum(&v), naive, epsilon = 1e-12);
    }
}
