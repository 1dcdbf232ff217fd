//! Analytic derivatives of the received samples and Fisher-matrix assembly.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mask::{SampleIndex, SampleMask};
use crate::channel::{CascadedChannel, ChannelModelFlags, SignalConfig};
use crate::error::{check_index, Error, Result};
use crate::geometry::{distance_ru, gamma, ScenarioGeometry, SphericalDirection, Vec3, WavefrontModel};
use super::bounds::{peb, Bound};
use crate::numerics::{numerical_rank, sym_inverse, Matrix, RANK_TOL};
use crate::ris::RisProfile;
use crate::scalar::{cis, Cplx, Real};

/// Parameter vector a Fisher matrix is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// `[α, cξ, x_U, y_U, z_U]`
    Position,
    /// `[α, cξ, d_RU, φ_RU, θ_RU]`
    Intermediate,
    /// `[α, x_U, y_U, z_U]`, clock offset known.
    Synchronous,
    /// `[α, cξ + d_RU, φ_RU, θ_RU]`; planar RIS-UE model only.
    ReducedFarField,
    /// `[α, cξ + d_RU, d_RU, φ_RU, θ_RU]`.
    ///
    /// Same EFIs as [`Parameterization::Intermediate`], but the distance
    /// column only carries the wavefront-curvature term, which avoids
    /// cancellation at large `d_RU`.
    DistanceShifted,
}

impl Parameterization {
    pub fn dim(self) -> usize {
        match self {
            Self::Synchronous | Self::ReducedFarField => 4,
            _ => 5,
        }
    }

    /// Range of the UE-position coordinates, where present.
    pub fn position_block(self) -> Option<std::ops::Range<usize>> {
        match self {
            Self::Position => Some(2..5),
            Self::Synchronous => Some(1..4),
            _ => None,
        }
    }
}

/// Per-element derivatives of `d_{rU}`, independent of frequency.
#[derive(Debug, Clone, Copy)]
struct ElementTerms<T> {
    /// `∂d_{rU}/∂p_U`
    grad_pos: Vec3<T>,
    /// `∂d_{rU}/∂[d_RU, φ_RU, θ_RU]`
    grad_bar: [T; 3],
    /// `∂d_{rU}/∂d_RU - 1`, evaluated without cancellation.
    curvature: T,
}

/// Sums over the RIS for one sample, before the common prefactor.
#[derive(Debug, Clone, Copy)]
struct SampleSums<T: Real> {
    /// `x_{n,t} e^{-j k_n cξ}`
    pilot_sync: Cplx<T>,
    k: T,
    s: Cplx<T>,
    pos: [Cplx<T>; 3],
    bar: [Cplx<T>; 3],
    curv: Cplx<T>,
}

/// Everything needed to evaluate derivatives and Fisher matrices for one
/// scenario, profile and set of wavefront models.
#[derive(Debug, Clone)]
pub struct FisherModel<T: Real> {
    geometry: ScenarioGeometry<T>,
    cfg: SignalConfig<T>,
    flags: ChannelModelFlags,
    profile: RisProfile<T>,
    channel: CascadedChannel<T>,
    direction: SphericalDirection<T>,
    elements: Vec<ElementTerms<T>>,
}

impl<T: Real> FisherModel<T> {
    pub fn new(
        geometry: &ScenarioGeometry<T>,
        cfg: &SignalConfig<T>,
        flags: ChannelModelFlags,
        profile: &RisProfile<T>,
    ) -> Result<Self> {
        geometry.validate()?;
        cfg.validate()?;
        if profile.n_elements() != geometry.n_ris() {
            return Err(Error::InvalidArgument(format!(
                "profile has {} elements, RIS has {}",
                profile.n_elements(),
                geometry.n_ris()
            )));
        }
        if profile.n_slots() != cfg.n_slots {
            return Err(Error::InvalidArgument(format!(
                "profile has {} slots, configuration has {}",
                profile.n_slots(),
                cfg.n_slots
            )));
        }
        let direction = geometry.ue_direction();
        let elements = (0..geometry.n_ris())
            .map(|r| element_terms(geometry, r, &direction, flags.ris_ue))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channel: CascadedChannel::new(geometry, cfg, flags)?,
            geometry: geometry.clone(),
            cfg: cfg.clone(),
            flags,
            profile: profile.clone(),
            direction,
            elements,
        })
    }

    pub fn geometry(&self) -> &ScenarioGeometry<T> {
        &self.geometry
    }

    pub fn config(&self) -> &SignalConfig<T> {
        &self.cfg
    }

    pub fn flags(&self) -> ChannelModelFlags {
        self.flags
    }

    pub fn profile(&self) -> &RisProfile<T> {
        &self.profile
    }

    pub fn channel(&self) -> &CascadedChannel<T> {
        &self.channel
    }

    /// UE seen from the RIS reference.
    pub fn direction(&self) -> SphericalDirection<T> {
        self.direction
    }

    fn check_sample(&self, (b, n, t): SampleIndex) -> Result<()> {
        check_index("BS antenna", b, self.geometry.n_bs())?;
        check_index("sub-carrier", n, self.cfg.n_subcarriers)?;
        check_index("slot", t, self.cfg.n_slots)
    }

    fn sums(&self, (b, n, t): SampleIndex) -> SampleSums<T> {
        let k = crate::channel::wavenumber(self.channel.freq(n));
        let phi = self.profile.slot(t);
        let h = self.channel.cascaded(b, n);
        let zero = Cplx::zero();
        let mut acc = SampleSums {
            pilot_sync: self.cfg.pilot(n, t) * cis(-k * self.cfg.c_xi()),
            k,
            s: zero,
            pos: [zero; 3],
            bar: [zero; 3],
            curv: zero,
        };
        for ((p, h), e) in phi.iter().zip(h).zip(&self.elements) {
            let w = p * h;
            acc.s += w;
            for (i, g) in e.grad_pos.to_array().into_iter().enumerate() {
                acc.pos[i] += w.scale(g);
            }
            for i in 0..3 {
                acc.bar[i] += w.scale(e.grad_bar[i]);
            }
            acc.curv += w.scale(e.curvature);
        }
        acc
    }

    /// `μ_{b,n,t}`
    pub fn mu(&self, b: usize, n: usize, t: usize) -> Result<Cplx<T>> {
        self.check_sample((b, n, t))?;
        let s = self.sums((b, n, t));
        Ok(s.pilot_sync * s.s.scale(self.cfg.alpha))
    }

    /// Derivative of `μ_{b,n,t}` with respect to the given parameter vector.
    pub fn gradient(&self, param: Parameterization, b: usize, n: usize, t: usize) -> Result<Vec<Cplx<T>>> {
        self.check_sample((b, n, t))?;
        self.require(param)?;
        Ok(self.gradient_unchecked(param, (b, n, t)))
    }

    fn require(&self, param: Parameterization) -> Result<()> {
        if param == Parameterization::ReducedFarField && self.flags.ris_ue != WavefrontModel::Far {
            return Err(Error::InvalidArgument(
                "the reduced far-field parameterization needs the planar RIS-UE model".into(),
            ));
        }
        Ok(())
    }

    fn gradient_unchecked(&self, param: Parameterization, idx: SampleIndex) -> Vec<Cplx<T>> {
        let s = self.sums(idx);
        let alpha = self.cfg.alpha;
        // -j k α x e^{-jkcξ}
        let lead = Cplx::new(T::zero(), -s.k) * s.pilot_sync.scale(alpha);
        let d_alpha = s.pilot_sync * s.s;
        let d_cxi = lead * s.s;
        let pos = s.pos.map(|v| lead * v);
        let bar = s.bar.map(|v| lead * v);
        match param {
            Parameterization::Position => vec![d_alpha, d_cxi, pos[0], pos[1], pos[2]],
            Parameterization::Intermediate => vec![d_alpha, d_cxi, bar[0], bar[1], bar[2]],
            Parameterization::Synchronous => vec![d_alpha, pos[0], pos[1], pos[2]],
            Parameterization::ReducedFarField => vec![d_alpha, d_cxi, bar[1], bar[2]],
            Parameterization::DistanceShifted => vec![d_alpha, d_cxi, lead * s.curv, bar[1], bar[2]],
        }
    }

    /// `∂μ/∂[α, cξ, x_U, y_U, z_U]`
    pub fn dmu_dtheta(&self, b: usize, n: usize, t: usize) -> Result<Vec<Cplx<T>>> {
        self.gradient(Parameterization::Position, b, n, t)
    }

    /// `∂μ/∂[α, cξ, d_RU, φ_RU, θ_RU]`
    pub fn dmu_dthetabar(&self, b: usize, n: usize, t: usize) -> Result<Vec<Cplx<T>>> {
        self.gradient(Parameterization::Intermediate, b, n, t)
    }

    /// Fisher matrix of one sample, `(2/σ²) Re{∂μ* ∂μᵀ}`.
    pub fn sample_fim(&self, param: Parameterization, b: usize, n: usize, t: usize) -> Result<Matrix<T>> {
        let g = self.gradient(param, b, n, t)?;
        Ok(outer_information(&g, self.cfg.noise_var))
    }

    /// Fisher matrix summed over the masked samples.
    ///
    /// Per-sample gradients are evaluated in parallel; the sum runs in mask
    /// order, so the result does not depend on the thread count.
    pub fn fim(&self, param: Parameterization, mask: &SampleMask) -> Result<Matrix<T>> {
        let samples = self.resolve(param, mask)?;
        let grads: Vec<Vec<Cplx<T>>> = samples
            .par_iter()
            .map(|&idx| self.gradient_unchecked(param, idx))
            .collect();
        Ok(self.accumulate(param, &grads))
    }

    /// Single-threaded reference for [`FisherModel::fim`].
    pub fn fim_sequential(&self, param: Parameterization, mask: &SampleMask) -> Result<Matrix<T>> {
        let samples = self.resolve(param, mask)?;
        let grads: Vec<Vec<Cplx<T>>> = samples.iter().map(|&idx| self.gradient_unchecked(param, idx)).collect();
        Ok(self.accumulate(param, &grads))
    }

    fn resolve(&self, param: Parameterization, mask: &SampleMask) -> Result<Vec<SampleIndex>> {
        self.require(param)?;
        mask.resolve(self.geometry.n_bs(), self.cfg.n_subcarriers, self.cfg.n_slots)
    }

    fn accumulate(&self, param: Parameterization, grads: &[Vec<Cplx<T>>]) -> Matrix<T> {
        let mut total = Matrix::zeros(param.dim(), param.dim());
        for g in grads {
            add_outer(&mut total, g);
        }
        total.scale(T::lit(2.0) / self.cfg.noise_var)
    }

    /// `[α, x_U, y_U, z_U]` Fisher matrix with the clock offset known.
    pub fn fim_sync(&self, mask: &SampleMask) -> Result<Matrix<T>> {
        self.fim(Parameterization::Synchronous, mask)
    }

    /// `[α, cξ + d_RU, φ_RU, θ_RU]` Fisher matrix; planar RIS-UE model only.
    pub fn fim_reduced_farfield(&self, mask: &SampleMask) -> Result<Matrix<T>> {
        self.fim(Parameterization::ReducedFarField, mask)
    }

    /// Fisher matrix of every sample received on antenna `b`.
    pub fn per_antenna_fim(&self, param: Parameterization, b: usize) -> Result<Matrix<T>> {
        self.fim(param, &SampleMask::Antenna(b))
    }

    /// Position error bound for the masked samples.
    ///
    /// Singularity is decided on `J` (position parameterization) with the
    /// usual rank rule. The value itself is evaluated through the
    /// distance-shifted matrix, whose inverse is well conditioned, and mapped
    /// to Cartesian coordinates with `∂p_U/∂[d, φ, θ]`; this equals
    /// `sqrt(tr([J⁻¹]_pos))` without inheriting the conditioning of `J`.
    pub fn peb(&self, mask: &SampleMask) -> Result<Bound<T>> {
        let j = self.fim(Parameterization::Position, mask)?;
        let rank = numerical_rank(&j, T::lit(RANK_TOL));
        if rank < 5 {
            return Ok(Bound::Singular { rank, dim: 5 });
        }
        let shifted = self.fim(Parameterization::DistanceShifted, mask)?;
        let cov = match equilibrated_inverse(&shifted) {
            Some(inv) => inv.select(&[2, 3, 4], &[2, 3, 4]),
            None => return peb(&j, 2..5),
        };
        let p = cartesian_from_spherical_jacobian(&self.direction);
        let mut tr = T::zero();
        for row in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    tr += p[(row, a)] * cov[(a, b)] * p[(row, b)];
                }
            }
        }
        Ok(Bound::Value(tr.max(T::zero()).sqrt()))
    }

    /// `∂Θ̄/∂Θᵀ` at the true UE position.
    pub fn intermediate_jacobian(&self) -> Result<Matrix<T>> {
        intermediate_jacobian(&self.direction)
    }
}

/// `(2/σ²) Re{g* gᵀ}`, exactly symmetric.
fn outer_information<T: Real>(g: &[Cplx<T>], noise_var: T) -> Matrix<T> {
    let mut m = Matrix::zeros(g.len(), g.len());
    add_outer(&mut m, g);
    m.scale(T::lit(2.0) / noise_var)
}

fn add_outer<T: Real>(m: &mut Matrix<T>, g: &[Cplx<T>]) {
    let n = g.len();
    for i in 0..n {
        for j in i..n {
            let v = g[i].re * g[j].re + g[i].im * g[j].im;
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
    }
}

/// Partials of `Γ = -⟨o, u(φ, θ)⟩` with respect to azimuth and elevation.
fn gamma_partials<T: Real>(o: Vec3<T>, dir: &SphericalDirection<T>) -> (T, T) {
    let (st, ct) = dir.elevation.sin_cos();
    let (sp, cp) = dir.azimuth.sin_cos();
    let d_phi = o.x * st * sp - o.y * st * cp;
    let d_theta = -o.x * ct * cp - o.y * ct * sp + o.z * st;
    (d_phi, d_theta)
}

fn element_terms<T: Real>(
    geometry: &ScenarioGeometry<T>,
    r: usize,
    dir: &SphericalDirection<T>,
    model: WavefrontModel,
) -> Result<ElementTerms<T>> {
    let o = geometry.ris_offsets[r];
    let d = dir.distance;
    let g = gamma(o, dir);
    let (g_phi, g_theta) = gamma_partials(o, dir);
    let u = dir.unit();
    match model {
        WavefrontModel::Near => {
            let d_ru = distance_ru(geometry, r, dir, model)?;
            let rel = geometry.ue_position - geometry.ris_element(r);
            let scale = d / d_ru;
            // (d + Γ)/d_rU - 1 = (Γ² - ρ²) / (d_rU (d + Γ + d_rU))
            let curvature = (g * g - o.norm_sqr()) / (d_ru * (d + g + d_ru));
            Ok(ElementTerms {
                grad_pos: rel * (T::one() / d_ru),
                grad_bar: [(d + g) / d_ru, scale * g_phi, scale * g_theta],
                curvature,
            })
        }
        WavefrontModel::Far => {
            // ∇(d + Γ) = u - (o - ⟨o, u⟩u)/d
            let transverse = o - u * o.dot(u);
            Ok(ElementTerms {
                grad_pos: u - transverse * (T::one() / d),
                grad_bar: [T::one(), g_phi, g_theta],
                curvature: T::zero(),
            })
        }
    }
}

/// Inverse of `D⁻¹ (D m D)⁻¹ D⁻¹` with `D = diag(m)^{-1/2}`; `None` when the
/// scaled matrix fails the rank rule.
fn equilibrated_inverse<T: Real>(m: &Matrix<T>) -> Option<Matrix<T>> {
    let n = m.rows();
    if (0..n).any(|i| !(m[(i, i)] > T::zero())) {
        return None;
    }
    let d: Vec<T> = (0..n).map(|i| T::one() / m[(i, i)].sqrt()).collect();
    let scaled = Matrix::from_fn(n, n, |i, j| m[(i, j)] * d[i] * d[j]);
    let inv = sym_inverse(&scaled, T::lit(RANK_TOL)).ok()?;
    Some(Matrix::from_fn(n, n, |i, j| inv[(i, j)] * d[i] * d[j]))
}

/// `∂p_U/∂[d, φ, θ]`, columns `u`, `d sinθ e_φ`, `d e_θ`.
fn cartesian_from_spherical_jacobian<T: Real>(dir: &SphericalDirection<T>) -> Matrix<T> {
    let d = dir.distance;
    let (st, ct) = dir.elevation.sin_cos();
    let (sp, cp) = dir.azimuth.sin_cos();
    Matrix::from_rows(&[
        vec![st * cp, -d * st * sp, d * ct * cp],
        vec![st * sp, d * st * cp, d * ct * sp],
        vec![ct, T::zero(), -d * st],
    ])
    .expect("3x3 literal")
}

/// `∂[α, cξ, d, φ, θ]/∂[α, cξ, x, y, z]` for the UE at `dir` from the RIS.
pub fn intermediate_jacobian<T: Real>(dir: &SphericalDirection<T>) -> Result<Matrix<T>> {
    let d = dir.distance;
    let (st, ct) = dir.elevation.sin_cos();
    let (sp, cp) = dir.azimuth.sin_cos();
    if !(d > T::zero()) || st.abs() <= T::epsilon() {
        return Err(Error::DegenerateGeometry(
            "azimuth is undefined for a UE on the polar axis of the RIS".into(),
        ));
    }
    let mut m = Matrix::zeros(5, 5);
    m[(0, 0)] = T::one();
    m[(1, 1)] = T::one();
    let rows = [
        [st * cp, st * sp, ct],
        [-sp / (d * st), cp / (d * st), T::zero()],
        [ct * cp / d, ct * sp / d, -st / d],
    ];
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i + 2, j + 2)] = v;
        }
    }
    Ok(m)
}
