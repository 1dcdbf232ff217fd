//! Bounds derived from a Fisher matrix: EFI, EFIM of the intermediate
//! parameters, and the position error bound.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::dd::{self, Dd};
use crate::numerics::{numerical_rank, sym_inverse, Matrix, RANK_TOL};
use crate::scalar::Real;

/// A bound value, or the rank of the singular matrix it would come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound<T> {
    Value(T),
    Singular { rank: usize, dim: usize },
}

impl<T: Real> Bound<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            Self::Value(v) => Some(v),
            Self::Singular { .. } => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Self::Singular { .. })
    }

    /// Unwraps the value, panicking with the rank on a singular bound.
    #[track_caller]
    pub fn expect_value(&self, what: &str) -> T {
        match *self {
            Self::Value(v) => v,
            Self::Singular { rank, dim } => panic!("{what}: singular (rank {rank} of {dim})"),
        }
    }

    /// Total order for ranking: finite values ascending, singular last.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self.value(), other.value()) {
            (Some(a), Some(b)) => a.partial_cmp(&b).unwrap_or(Equal),
            (Some(_), None) => Less,
            (None, Some(_)) => Greater,
            (None, None) => Equal,
        }
    }
}

/// Intermediate parameter whose EFI is requested; indices into `Θ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntermediateParam {
    Distance,
    Azimuth,
    Elevation,
}

impl IntermediateParam {
    pub const ALL: [Self; 3] = [Self::Distance, Self::Azimuth, Self::Elevation];

    /// Position in `[α, cξ, d_RU, φ_RU, θ_RU]`.
    pub fn index(self) -> usize {
        match self {
            Self::Distance => 2,
            Self::Azimuth => 3,
            Self::Elevation => 4,
        }
    }
}

fn singular_or<T: Real>(block: &Matrix<T>, err: Error) -> Error {
    match err {
        Error::Singular { .. } => Error::Singular {
            rank: numerical_rank(block, T::lit(RANK_TOL)),
            dim: block.rows(),
        },
        other => other,
    }
}

/// Schur complement of the index set `keep` in the square matrix `m`:
/// `A - B C⁻¹ Bᵀ`, evaluated in double-word arithmetic because the
/// subtraction cancels almost completely for weakly identifiable parameters.
pub fn schur_complement<T: Real>(m: &Matrix<T>, keep: &[usize]) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("Schur complement of a non-square matrix".into()));
    }
    if keep.iter().any(|&k| k >= m.rows()) {
        return Err(Error::InvalidArgument("Schur complement index out of range".into()));
    }
    let rest: Vec<usize> = (0..m.rows()).filter(|i| !keep.contains(i)).collect();
    let a = m.select(keep, keep);
    if rest.is_empty() {
        return Ok(a);
    }
    let c = m.select(&rest, &rest);
    // Same admission rules as a plain inverse (symmetry, rank).
    sym_inverse(&c, T::lit(RANK_TOL)).map_err(|e| singular_or(&c, e))?;
    let c_inv = dd::inverse(&c.symmetrized()).ok_or_else(|| singular_or(&c, Error::Singular { rank: 0, dim: 0 }))?;
    let b = m.select(keep, &rest).map(Dd::new);
    let x = &b * &c_inv;
    let out = Matrix::from_fn(keep.len(), keep.len(), |i, j| {
        let mut acc = Dd::new(a[(i, j)]);
        for k in 0..rest.len() {
            acc = acc - x[(i, k)] * b[(j, k)];
        }
        acc.to_scalar()
    });
    Ok(out.symmetrized())
}

/// Equivalent Fisher information of one intermediate parameter of a 5x5
/// `J̄`, clamped at zero. Singular when the remaining 4x4 block is.
pub fn efi<T: Real>(fim_bar: &Matrix<T>, k: IntermediateParam) -> Result<Bound<T>> {
    check_dim(fim_bar, 5)?;
    match schur_complement(fim_bar, &[k.index()]) {
        Ok(s) => Ok(Bound::Value(s[(0, 0)].max(T::zero()))),
        Err(Error::Singular { rank, dim }) => Ok(Bound::Singular { rank, dim }),
        Err(e) => Err(e),
    }
}

/// [`efi`] evaluated on the unit-diagonal scaling `DJ̄D`, `D = diag(J̄)^{-1/2}`,
/// and mapped back. The value is the same Schur complement; only the rank
/// test on the remaining block no longer depends on the parameter units.
/// Falls back to [`efi`] when a diagonal entry is not positive.
pub fn efi_equilibrated<T: Real>(fim_bar: &Matrix<T>, k: IntermediateParam) -> Result<Bound<T>> {
    check_dim(fim_bar, 5)?;
    if (0..5).any(|i| !(fim_bar[(i, i)] > T::zero())) {
        return efi(fim_bar, k);
    }
    let d: Vec<T> = (0..5).map(|i| fim_bar[(i, i)].sqrt().recip()).collect();
    let scaled = Matrix::from_fn(5, 5, |i, j| fim_bar[(i, j)] * d[i] * d[j]);
    let kk = fim_bar[(k.index(), k.index())];
    Ok(match efi(&scaled, k)? {
        Bound::Value(v) => Bound::Value(v * kk),
        other => other,
    })
}

/// 3x3 EFIM of `[d_RU, φ_RU, θ_RU]` after eliminating `[α, cξ]`.
/// Fails with [`Error::Singular`] when the nuisance block is singular.
pub fn efim_eta<T: Real>(fim_bar: &Matrix<T>) -> Result<Matrix<T>> {
    check_dim(fim_bar, 5)?;
    schur_complement(fim_bar, &[2, 3, 4])
}

/// `sqrt(tr([J⁻¹]_pos))` over `position_block`, or the numerical rank when
/// `fim` is singular.
pub fn peb<T: Real>(fim: &Matrix<T>, position_block: Range<usize>) -> Result<Bound<T>> {
    if !fim.is_square() || position_block.end > fim.rows() || position_block.is_empty() {
        return Err(Error::InvalidArgument("position block does not fit the matrix".into()));
    }
    let dim = fim.rows();
    let rank = numerical_rank(fim, T::lit(RANK_TOL));
    if rank < dim {
        return Ok(Bound::Singular { rank, dim });
    }
    match sym_inverse(fim, T::lit(RANK_TOL)) {
        Ok(inv) => {
            let tr: T = position_block.map(|i| inv[(i, i)]).sum();
            Ok(Bound::Value(tr.max(T::zero()).sqrt()))
        }
        Err(Error::Singular { rank, dim }) => Ok(Bound::Singular { rank, dim }),
        Err(e) => Err(e),
    }
}

fn check_dim<T: Real>(m: &Matrix<T>, n: usize) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::InvalidArgument(format!(
            "expected a {n}x{n} matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(seed: u64, n: usize) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &(&b.transpose() * &b) + &Matrix::identity(n)
    }

    #[test]
    fn diagonal_efi_is_diagonal_entry() {
        let j = Matrix::<f64>::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        for k in IntermediateParam::ALL {
            assert_eq!(efi(&j, k).unwrap(), Bound::Value(j[(k.index(), k.index())]));
        }
    }

    #[test]
    fn efi_matches_inverse_diagonal() {
        for seed in 0..10 {
            let j = random_spd(seed, 5);
            let inv = sym_inverse(&j, 1e-10).unwrap();
            for k in IntermediateParam::ALL {
                let e = efi(&j, k).unwrap().expect_value("efi");
                assert!((e * inv[(k.index(), k.index())] - 1.0).abs() < 1e-10);
                assert!(e <= j[(k.index(), k.index())] + 1e-12);
            }
        }
    }

    #[test]
    fn equilibrated_efi_is_unit_free() {
        for seed in 0..10 {
            let j = random_spd(seed, 5);
            let s = [1e-6, 1.0, 1e5, 3.0, 1e-3];
            let scaled = Matrix::from_fn(5, 5, |a, b| j[(a, b)] * s[a] * s[b]);
            for k in IntermediateParam::ALL {
                let i = k.index();
                let e = efi(&j, k).unwrap().expect_value("efi");
                let es = efi_equilibrated(&scaled, k).unwrap().expect_value("efi");
                assert!((es / (s[i] * s[i] * e) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn efim_of_block_diagonal_is_block() {
        let mut j = Matrix::<f64>::zeros(5, 5);
        let top = random_spd(1, 2);
        let low = random_spd(2, 3);
        for i in 0..2 {
            for k in 0..2 {
                j[(i, k)] = top[(i, k)];
            }
        }
        for i in 0..3 {
            for k in 0..3 {
                j[(i + 2, k + 2)] = low[(i, k)];
            }
        }
        let e = efim_eta(&j).unwrap();
        assert!((&e - &low).max_abs() < 1e-14);
    }

    #[test]
    fn singular_complement_is_reported() {
        let j = Matrix::<f64>::diagonal(&[0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(efi(&j, IntermediateParam::Distance).unwrap(), Bound::Singular { rank: 3, dim: 4 });
        assert!(matches!(efim_eta(&j), Err(Error::Singular { rank: 1, dim: 2 })));
    }

    #[test]
    fn peb_of_scaled_identity() {
        for k in [0.5, 2.0, 1e4] {
            let j = Matrix::<f64>::identity(5).scale(k);
            let p = peb(&j, 2..5).unwrap().expect_value("peb");
            assert!((p - (3.0 / k).sqrt()).abs() < 1e-14);
        }
        let rank2 = Matrix::<f64>::diagonal(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(peb(&rank2, 2..5).unwrap(), Bound::Singular { rank: 2, dim: 5 });
        assert!(peb(&rank2, 2..6).is_err());
    }

    #[test]
    fn singular_ranks_last() {
        let mut v = [Bound::Singular { rank: 1, dim: 2 }, Bound::Value(3.0), Bound::Value(1.0)];
        v.sort_by(Bound::total_cmp);
        assert_eq!(v[0], Bound::Value(1.0));
        assert!(v[2].is_singular());
    }
}
