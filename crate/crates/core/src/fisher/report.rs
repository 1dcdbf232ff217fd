use serde::{Deserialize, Serialize};

use super::bounds::{efi_equilibrated, efim_eta, peb, Bound, IntermediateParam};
use super::mask::SampleMask;
use super::model::{FisherModel, Parameterization};
use crate::error::Result;
use crate::numerics::{condition_number, numerical_rank, symmetric_eigen, Matrix, RANK_TOL};
use crate::scalar::Real;

/// EFI of each intermediate parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfiValues<T> {
    pub distance: Bound<T>,
    pub azimuth: Bound<T>,
    pub elevation: Bound<T>,
}

/// Numerical health of a Fisher matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixDiagnostics {
    pub rank: usize,
    /// `None` when the matrix is exactly singular.
    pub condition: Option<f64>,
    /// Largest `|a_ij - a_ji|` over the largest entry.
    pub asymmetry: f64,
    /// Smallest eigenvalue over the largest; negative values beyond
    /// rounding indicate a broken matrix.
    pub min_eigen_ratio: f64,
}

impl MatrixDiagnostics {
    pub fn of<T: Real>(m: &Matrix<T>) -> Self {
        let eig = symmetric_eigen(m);
        let hi = eig.values.first().copied().unwrap_or_else(T::zero);
        let lo = eig.values.last().copied().unwrap_or_else(T::zero);
        let cond = condition_number(m).to_f64().filter(|c| c.is_finite());
        Self {
            rank: numerical_rank(m, T::lit(RANK_TOL)),
            condition: cond,
            asymmetry: m.asymmetry().to_f64().unwrap_or(f64::NAN),
            min_eigen_ratio: if hi > T::zero() {
                (lo / hi).to_f64().unwrap_or(f64::NAN)
            } else {
                0.0
            },
        }
    }

    /// Symmetric to `1e-10` and PSD to `-1e-8` relative.
    pub fn is_valid_fim(&self) -> bool {
        self.asymmetry <= 1e-10 && self.min_eigen_ratio >= -1e-8
    }
}

/// Bounds and diagnostics for one scenario and sample mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct FisherReport<T> {
    /// `J` over `[α, cξ, x_U, y_U, z_U]`.
    pub fim_position: Matrix<T>,
    /// `J̄` over `[α, cξ, d_RU, φ_RU, θ_RU]`.
    pub fim_intermediate: Matrix<T>,
    pub peb: Bound<T>,
    /// PEB with the clock offset known.
    pub peb_sync: Bound<T>,
    pub efi: EfiValues<T>,
    /// `None` when `[α, cξ]` carries a singular block.
    pub efim_eta: Option<Matrix<T>>,
    pub position_diagnostics: MatrixDiagnostics,
    pub intermediate_diagnostics: MatrixDiagnostics,
}

impl<T: Real> FisherReport<T> {
    /// EFIs are taken from the distance-shifted matrix, which yields the same
    /// values as `J̄` without losing the curvature term to rounding.
    pub fn compute(model: &FisherModel<T>, mask: &SampleMask) -> Result<Self> {
        let j = model.fim(Parameterization::Position, mask)?;
        let jbar = model.fim(Parameterization::Intermediate, mask)?;
        let shifted = model.fim(Parameterization::DistanceShifted, mask)?;
        let sync = model.fim_sync(mask)?;
        let efi_of = |k| efi_equilibrated(&shifted, k);
        Ok(Self {
            peb: model.peb(mask)?,
            peb_sync: peb(&sync, 1..4)?,
            efi: EfiValues {
                distance: efi_of(IntermediateParam::Distance)?,
                azimuth: efi_of(IntermediateParam::Azimuth)?,
                elevation: efi_of(IntermediateParam::Elevation)?,
            },
            efim_eta: efim_eta(&jbar).ok(),
            position_diagnostics: MatrixDiagnostics::of(&j),
            intermediate_diagnostics: MatrixDiagnostics::of(&jbar),
            fim_position: j,
            fim_intermediate: jbar,
        })
    }
}
