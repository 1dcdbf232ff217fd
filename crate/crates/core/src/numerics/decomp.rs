//! Small dense decompositions: one-sided Jacobi SVD (complex), cyclic
//! Jacobi eigen-decomposition (real symmetric), and a checked symmetric
//! inverse.

use num_complex::Complex;
use num_traits::Zero;

use super::matrix::{ComplexMatrix, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Symmetry tolerance (relative to the largest entry) accepted by [`sym_inverse`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default relative singular-value cutoff for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Singular values of a complex matrix, sorted in descending order.
///
/// One-sided (Hestenes) Jacobi: columns are rotated pairwise until mutually
/// orthogonal; the singular values are then the column norms.
pub fn singular_values_complex<T: Real>(m: &ComplexMatrix<T>) -> Vec<T> {
    // Work on the orientation with fewer columns.
    let a = if m.cols() > m.rows() {
        Matrix::from_fn(m.cols(), m.rows(), |i, j| m[(j, i)].conj())
    } else {
        m.clone()
    };
    let (rows, cols) = (a.rows(), a.cols());
    let mut colv: Vec<Vec<Complex<T>>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)]).collect())
        .collect();

    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: T = colv[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = colv[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex<T> = colv[p]
                    .iter()
                    .zip(&colv[q])
                    .map(|(x, y)| x.conj() * y)
                    .fold(Complex::zero(), |acc, v| acc + v);
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate the phase of column q so that the inner product is real.
                let phase = gamma.unscale(g).conj();
                let zeta = (beta - alpha) / (g + g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = colv.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let yq = *y * phase;
                    let xp = *x;
                    *x = xp.scale(c) - yq.scale(s);
                    *y = xp.scale(s) + yq.scale(c);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = colv
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Singular values of a real matrix, descending.
pub fn singular_values<T: Real>(m: &Matrix<T>) -> Vec<T> {
    singular_values_complex(&m.to_complex())
}

fn rank_from_singular_values<T: Real>(sv: &[T], rel_tol: T) -> usize {
    let largest = sv.first().copied().unwrap_or_else(T::zero);
    if largest <= T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank<T: Real>(m: &Matrix<T>, rel_tol: T) -> usize {
    rank_from_singular_values(&singular_values(m), rel_tol)
}

pub fn numerical_rank_complex<T: Real>(m: &ComplexMatrix<T>, rel_tol: T) -> usize {
    rank_from_singular_values(&singular_values_complex(m), rel_tol)
}

/// 2-norm condition number; infinite when the matrix is exactly singular.
pub fn condition_number<T: Real>(m: &Matrix<T>) -> T {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::infinity(),
    }
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Matrix<T>,
}

/// Cyclic Jacobi eigen-decomposition. The input is symmetrized first.
pub fn symmetric_eigen<T: Real>(m: &Matrix<T>) -> SymmetricEigen<T> {
    assert!(m.is_square(), "eigen-decomposition needs a square matrix");
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = Matrix::<T>::identity(n);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    SymmetricEigen {
        values: order.iter().map(|&k| a[(k, k)]).collect(),
        vectors: Matrix::from_fn(n, n, |i, k| v[(i, order[k])]),
    }
}

/// Inverse of a real symmetric matrix.
///
/// Elimination runs in double-word arithmetic, so the result is accurate to
/// working precision up to condition numbers near the rank cutoff. It is
/// not re-symmetrized.
///
/// Fails with [`Error::Asymmetric`] when the relative asymmetry exceeds
/// [`SYMMETRY_TOL`], and with [`Error::Singular`] when the numerical rank
/// (relative cutoff `rel_tol`) is below full.
pub fn sym_inverse<T: Real>(m: &Matrix<T>, rel_tol: T) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "inverse of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix passed to sym_inverse".into()));
    }
    let asym = m.asymmetry();
    if asym > T::lit(SYMMETRY_TOL) {
        return Err(Error::Asymmetric {
            deviation: asym.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = m.rows();
    let rank = numerical_rank(m, rel_tol);
    if rank < n {
        return Err(Error::Singular { rank, dim: n });
    }
    let sym = m.symmetrized();
    super::dd::inverse(&sym)
        .map(|inv| super::dd::round(&inv))
        .ok_or(Error::Singular { rank, dim: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix<f64> {
        Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn inf_norm(m: &Matrix<f64>) -> f64 {
        (0..m.rows())
            .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    #[test]
    fn inverse_of_identity_and_diagonal() {
        let i3 = Matrix::<f64>::identity(3);
        assert_eq!(sym_inverse(&i3, 1e-10).unwrap(), i3);
        let d = Matrix::<f64>::diagonal(&[1.0, 2.0, 4.0]);
        let inv = sym_inverse(&d, 1e-10).unwrap();
        for (k, want) in [1.0, 0.5, 0.25].into_iter().enumerate() {
            assert!((inv[(k, k)] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_residual_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let b = random_matrix(&mut rng, 5, 5);
            let a = &(&b.transpose() * &b) + &Matrix::identity(5);
            let inv = sym_inverse(&a, 1e-10).unwrap();
            let r = &(&a * &inv) - &Matrix::identity(5);
            assert!(inf_norm(&r) < 1e-10, "residual {}", inf_norm(&r));
        }
    }

    #[test]
    fn inverse_residual_at_condition_1e8() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = symmetric_eigen(&{
            let b = random_matrix(&mut rng, 5, 5);
            &b + &b.transpose()
        })
        .vectors;
        let d = Matrix::diagonal(&[1e8, 3e5, 1e2, 7.0, 1.0]);
        let a = (&(&q * &d) * &q.transpose()).symmetrized();
        let inv = sym_inverse(&a, 1e-10).unwrap();
        let r = &(&a * &inv) - &Matrix::identity(5);
        assert!(inf_norm(&r) < 1e-8, "residual {}", inf_norm(&r));
    }

    #[test]
    fn inverse_rejects_asymmetric_and_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]).unwrap();
        assert!(matches!(sym_inverse(&a, 1e-10), Err(Error::Asymmetric { .. })));
        let s = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(sym_inverse(&s, 1e-10), Err(Error::Singular { rank: 1, dim: 2 }));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&Matrix::<f64>::zeros(3, 4), 1e-10), 0);
        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 1.0, 4.0, -1.0];
        let outer = Matrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        assert_eq!(numerical_rank(&outer, 1e-10), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(numerical_rank(&random_matrix(&mut rng, 4, 6), 1e-10), 4);
    }

    #[test]
    fn complex_rank_one_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u: Vec<Complex<f64>> = (0..4).map(|_| Complex::from_polar(1.0, rng.gen::<f64>() * 6.0)).collect();
        let v: Vec<Complex<f64>> = (0..7).map(|_| Complex::from_polar(1.0, rng.gen::<f64>() * 6.0)).collect();
        let m = Matrix::from_fn(4, 7, |i, j| u[i] * v[j]);
        let sv = singular_values_complex(&m);
        assert!((sv[0] - (4.0f64 * 7.0).sqrt()).abs() < 1e-12);
        assert!(sv[1] < 1e-10 * sv[0]);
    }

    #[test]
    fn singular_values_match_known_diagonal() {
        let d = Matrix::<f64>::diagonal(&[-3.0, 0.5, 2.0]);
        let sv = singular_values(&d);
        assert_eq!(sv.len(), 3);
        for (got, want) in sv.iter().zip([3.0, 2.0, 0.5]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b = random_matrix(&mut rng, 5, 5);
        let a = &b + &b.transpose();
        let e = symmetric_eigen(&a);
        let recon = &(&e.vectors * &Matrix::diagonal(&e.values)) * &e.vectors.transpose();
        assert!((&recon - &a).max_abs() < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}
