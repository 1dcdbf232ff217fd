//! Cascaded BS-RIS-UE channel and the noise-free received sample
//! `μ_{b,n,t} = α x_{n,t} e^{-j2πf_nξ} φ_tᵀ (h_{bR,n} ⊙ h_{RU,n})`.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::geometry::{distance_ru, gamma, ScenarioGeometry, SphericalDirection, WavefrontModel};
use crate::numerics::ComplexMatrix;
use crate::ris::RisProfile;
use crate::scalar::{cis, Cplx, Real};

/// OFDM pilot configuration and the nuisance parameters of the RIS link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SignalConfig<T> {
    pub carrier_hz: T,
    pub n_subcarriers: usize,
    pub bandwidth_hz: T,
    pub n_slots: usize,
    /// `N x T` pilot symbols; `None` means `x_{n,t} = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilots: Option<ComplexMatrix<T>>,
    /// Noise variance per complex sample.
    pub noise_var: T,
    /// Overall RIS-link amplitude.
    pub alpha: T,
    /// Clock offset in seconds.
    pub xi_seconds: T,
}

impl<T: Real> SignalConfig<T> {
    /// Unit pilots, zero clock offset, unit amplitude and noise.
    pub fn new(carrier_hz: T, n_subcarriers: usize, bandwidth_hz: T, n_slots: usize) -> Result<Self> {
        let cfg = Self {
            carrier_hz,
            n_subcarriers,
            bandwidth_hz,
            n_slots,
            pilots: None,
            noise_var: T::one(),
            alpha: T::one(),
            xi_seconds: T::zero(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.n_slots == 0 {
            return Err(Error::InvalidArgument("need at least one sub-carrier and one slot".into()));
        }
        if !(self.carrier_hz > T::zero()) || !self.carrier_hz.is_finite() {
            return Err(Error::InvalidArgument("carrier frequency must be positive".into()));
        }
        if !(self.bandwidth_hz >= T::zero()) || !self.bandwidth_hz.is_finite() {
            return Err(Error::InvalidArgument("bandwidth must be non-negative".into()));
        }
        if !(self.noise_var > T::zero()) || !self.noise_var.is_finite() {
            return Err(Error::InvalidArgument("noise variance must be positive".into()));
        }
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        if !self.xi_seconds.is_finite() {
            return Err(Error::NonFinite("clock offset".into()));
        }
        if let Some(p) = &self.pilots {
            if (p.rows(), p.cols()) != (self.n_subcarriers, self.n_slots) {
                return Err(Error::InvalidArgument(format!(
                    "pilot matrix is {}x{}, expected {}x{}",
                    p.rows(),
                    p.cols(),
                    self.n_subcarriers,
                    self.n_slots
                )));
            }
            let tol = T::lit(1e-12).max(T::epsilon() * T::lit(100.0));
            if p.as_slice().iter().any(|x| (x.norm() - T::one()).abs() > tol) {
                return Err(Error::InvalidArgument("pilot symbols must have unit modulus".into()));
            }
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: T) -> Self {
        Self { alpha, ..self.clone() }
    }

    /// `x_{n,t}`
    pub fn pilot(&self, n: usize, t: usize) -> Cplx<T> {
        match &self.pilots {
            Some(p) => p[(n, t)],
            None => Complex::new(T::one(), T::zero()),
        }
    }

    /// Clock offset expressed as a distance, `cξ` in metres.
    pub fn c_xi(&self) -> T {
        T::c() * self.xi_seconds
    }

    pub fn wavelength(&self) -> T {
        T::c() / self.carrier_hz
    }
}

/// Wavefront model of each hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelModelFlags {
    pub ris_ue: WavefrontModel,
    pub bs_ris: WavefrontModel,
}

impl ChannelModelFlags {
    pub const NEAR_NEAR: Self = Self::new(WavefrontModel::Near, WavefrontModel::Near);

    pub const fn new(ris_ue: WavefrontModel, bs_ris: WavefrontModel) -> Self {
        Self { ris_ue, bs_ris }
    }

    /// All four combinations, near/near first.
    pub fn all() -> [Self; 4] {
        use WavefrontModel::*;
        [
            Self::new(Near, Near),
            Self::new(Near, Far),
            Self::new(Far, Near),
            Self::new(Far, Far),
        ]
    }
}

impl Default for ChannelModelFlags {
    fn default() -> Self {
        Self::NEAR_NEAR
    }
}

/// Frequency of sub-carrier `n` (0-based) on a grid centred on the carrier:
/// `f_c + (n - (N-1)/2) B/N`.
pub fn subcarrier_freq<T: Real>(n: usize, cfg: &SignalConfig<T>) -> Result<T> {
    check_index("sub-carrier", n, cfg.n_subcarriers)?;
    let count = T::count(cfg.n_subcarriers);
    let offset = T::count(n) - (count - T::one()) * T::lit(0.5);
    Ok(cfg.carrier_hz + offset * cfg.bandwidth_hz / count)
}

/// `2π f / c`
#[inline]
pub fn wavenumber<T: Real>(freq: T) -> T {
    T::two_pi() * freq / T::c()
}

/// RIS-UE phase response at frequency `freq`, one entry per RIS element.
pub fn h_ru_at<T: Real>(
    freq: T,
    geometry: &ScenarioGeometry<T>,
    dir: &SphericalDirection<T>,
    model: WavefrontModel,
) -> Result<Vec<Cplx<T>>> {
    let k = wavenumber(freq);
    (0..geometry.n_ris())
        .map(|r| distance_ru(geometry, r, dir, model).map(|d| cis(-k * d)))
        .collect()
}

/// `h_{RU,n}` for sub-carrier `n`.
pub fn h_ru<T: Real>(
    n: usize,
    cfg: &SignalConfig<T>,
    geometry: &ScenarioGeometry<T>,
    dir: &SphericalDirection<T>,
    model: WavefrontModel,
) -> Result<Vec<Cplx<T>>> {
    h_ru_at(subcarrier_freq(n, cfg)?, geometry, dir, model)
}

/// Exact spherical-wavefront BS-RIS response at `freq`.
pub fn h_br_near_at<T: Real>(freq: T, geometry: &ScenarioGeometry<T>) -> Result<ComplexMatrix<T>> {
    let k = wavenumber(freq);
    let mut out = ComplexMatrix::zeros(geometry.n_bs(), geometry.n_ris());
    for b in 0..geometry.n_bs() {
        let pb = geometry.bs_antenna(b);
        for r in 0..geometry.n_ris() {
            let d = (pb - geometry.ris_element(r)).norm();
            if !(d > T::zero()) {
                return Err(Error::DegenerateGeometry(format!(
                    "BS antenna {b} coincides with RIS element {r}"
                )));
            }
            out[(b, r)] = cis(-k * d);
        }
    }
    Ok(out)
}

/// Planar-wavefront BS-RIS response at `freq`:
/// `e^{-jk d_BR} [a_B]_b [a_RB]_r` with steering phases `-k Γ`.
pub fn h_br_far_at<T: Real>(freq: T, geometry: &ScenarioGeometry<T>) -> Result<ComplexMatrix<T>> {
    let k = wavenumber(freq);
    let at_bs = geometry.ris_direction_from_bs();
    let at_ris = geometry.bs_direction_from_ris();
    let common = cis(-k * geometry.d_br());
    let a_b: Vec<Cplx<T>> = geometry
        .bs_offsets
        .iter()
        .map(|&o| cis(-k * gamma(o, &at_bs)))
        .collect();
    let a_rb: Vec<Cplx<T>> = geometry
        .ris_offsets
        .iter()
        .map(|&o| cis(-k * gamma(o, &at_ris)))
        .collect();
    Ok(ComplexMatrix::from_fn(geometry.n_bs(), geometry.n_ris(), |b, r| {
        common * a_b[b] * a_rb[r]
    }))
}

pub fn h_br_near<T: Real>(n: usize, cfg: &SignalConfig<T>, geometry: &ScenarioGeometry<T>) -> Result<ComplexMatrix<T>> {
    h_br_near_at(subcarrier_freq(n, cfg)?, geometry)
}

pub fn h_br_far<T: Real>(n: usize, cfg: &SignalConfig<T>, geometry: &ScenarioGeometry<T>) -> Result<ComplexMatrix<T>> {
    h_br_far_at(subcarrier_freq(n, cfg)?, geometry)
}

/// BS-RIS response under the selected model.
pub fn h_br_at<T: Real>(freq: T, geometry: &ScenarioGeometry<T>, model: WavefrontModel) -> Result<ComplexMatrix<T>> {
    match model {
        WavefrontModel::Near => h_br_near_at(freq, geometry),
        WavefrontModel::Far => h_br_far_at(freq, geometry),
    }
}

/// Noise-free received sample `μ_{b,n,t}`.
///
/// Straightforward evaluation; the Fisher engine uses [`CascadedChannel`]
/// instead to avoid rebuilding the channel for every sample.
pub fn mu<T: Real>(
    b: usize,
    n: usize,
    t: usize,
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    flags: ChannelModelFlags,
    profile: &RisProfile<T>,
) -> Result<Cplx<T>> {
    check_index("BS antenna", b, geometry.n_bs())?;
    check_index("slot", t, cfg.n_slots)?;
    check_index("profile slot", t, profile.n_slots())?;
    if profile.n_elements() != geometry.n_ris() {
        return Err(Error::InvalidArgument("profile size differs from the RIS size".into()));
    }
    let f = subcarrier_freq(n, cfg)?;
    let dir = geometry.ue_direction();
    let hru = h_ru_at(f, geometry, &dir, flags.ris_ue)?;
    let hbr = h_br_at(f, geometry, flags.bs_ris)?;
    let phi = profile.slot(t);
    let sum = (0..geometry.n_ris()).fold(Cplx::zero(), |acc, r| acc + phi[r] * hbr[(b, r)] * hru[r]);
    let sync = cis(-T::two_pi() * f * cfg.xi_seconds);
    Ok(cfg.pilot(n, t) * sync * sum.scale(cfg.alpha))
}

/// Channel tables for one scenario, precomputed for every sub-carrier.
#[derive(Debug, Clone)]
pub struct CascadedChannel<T> {
    freqs: Vec<T>,
    /// Per sub-carrier, `N_B x N_R` table of `h̃_{b,n} = h_{bR,n} ⊙ h_{RU,n}`.
    cascaded: Vec<ComplexMatrix<T>>,
    n_bs: usize,
    n_ris: usize,
}

impl<T: Real> CascadedChannel<T> {
    pub fn new(geometry: &ScenarioGeometry<T>, cfg: &SignalConfig<T>, flags: ChannelModelFlags) -> Result<Self> {
        geometry.validate()?;
        cfg.validate()?;
        let dir = geometry.ue_direction();
        let mut freqs = Vec::with_capacity(cfg.n_subcarriers);
        let mut cascaded = Vec::with_capacity(cfg.n_subcarriers);
        for n in 0..cfg.n_subcarriers {
            let f = subcarrier_freq(n, cfg)?;
            let hru = h_ru_at(f, geometry, &dir, flags.ris_ue)?;
            let mut hbr = h_br_at(f, geometry, flags.bs_ris)?;
            for b in 0..geometry.n_bs() {
                for (x, &h) in hbr.row_mut(b).iter_mut().zip(&hru) {
                    *x = *x * h;
                }
            }
            freqs.push(f);
            cascaded.push(hbr);
        }
        Ok(Self {
            freqs,
            cascaded,
            n_bs: geometry.n_bs(),
            n_ris: geometry.n_ris(),
        })
    }

    pub fn freq(&self, n: usize) -> T {
        self.freqs[n]
    }

    pub fn n_subcarriers(&self) -> usize {
        self.freqs.len()
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn n_ris(&self) -> usize {
        self.n_ris
    }

    /// `h̃_{b,n}`
    pub fn cascaded(&self, b: usize, n: usize) -> &[Cplx<T>] {
        self.cascaded[n].row(b)
    }

    /// `φᵀ h̃_{b,n}`
    pub fn combine(&self, b: usize, n: usize, phi: &[Cplx<T>]) -> Cplx<T> {
        phi.iter()
            .zip(self.cascaded(b, n))
            .fold(Cplx::zero(), |acc, (&p, &h)| acc + p * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ura, Plane, Vec3};
    use crate::numerics::{numerical_rank_complex, singular_values_complex};
    use crate::scalar::SPEED_OF_LIGHT;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn lambda() -> f64 {
        SPEED_OF_LIGHT / 28e9
    }

    fn desk_geometry(ue: Vec3<f64>, nb: usize, nr: usize) -> ScenarioGeometry<f64> {
        ScenarioGeometry::new(
            v(8.0, -12.0, 2.0),
            Vec3::zero(),
            ue,
            build_ura(nb, nb, lambda() / 2.0, Plane::Yz).unwrap(),
            build_ura(nr, nr, lambda() / 2.0, Plane::Yz).unwrap(),
        )
        .unwrap()
    }

    fn random_geometry(seed: u64, nb: usize, nr: usize) -> ScenarioGeometry<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = |a: f64, b: f64| rng.gen_range(a..b);
        let bs = (0..nb).map(|_| v(0.0, u(-0.03, 0.03), u(-0.03, 0.03))).collect();
        let ris = (0..nr).map(|_| v(0.0, u(-0.05, 0.05), u(-0.05, 0.05))).collect();
        let ue = v(u(1.0, 5.0), u(-3.0, 3.0), u(-2.0, 0.0));
        ScenarioGeometry::new(v(3.0, -4.0, 1.0), Vec3::zero(), ue, bs, ris).unwrap()
    }

    #[test]
    fn subcarrier_grid() {
        let one = SignalConfig::new(28e9, 1, 400e6, 1).unwrap();
        assert_eq!(subcarrier_freq(0, &one).unwrap(), 28e9);
        let two = SignalConfig::<f64>::new(28e9, 2, 400e6, 1).unwrap();
        assert!((subcarrier_freq(0, &two).unwrap() - 27.9e9).abs() < 1e-3);
        assert!((subcarrier_freq(1, &two).unwrap() - 28.1e9).abs() < 1e-3);
        assert!(matches!(subcarrier_freq(2, &two), Err(Error::IndexOutOfRange { .. })));
        for n in [3, 8, 15] {
            let cfg = SignalConfig::new(28e9, n, 1e9, 1).unwrap();
            let mean = (0..n).map(|i| subcarrier_freq(i, &cfg).unwrap()).sum::<f64>() / n as f64;
            assert!((mean - 28e9).abs() < 1e-3);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SignalConfig::new(28e9, 0, 1e8, 1).is_err());
        assert!(SignalConfig::new(28e9, 1, 1e8, 0).is_err());
        let mut cfg = SignalConfig::new(28e9, 2, 1e8, 1).unwrap();
        cfg.noise_var = 0.0;
        assert!(cfg.validate().is_err());
        cfg.noise_var = 1.0;
        cfg.alpha = 0.0;
        assert!(cfg.validate().is_err());
        cfg.alpha = 1.0;
        cfg.pilots = Some(ComplexMatrix::from_fn(2, 1, |_, _| Complex::new(0.5, 0.0)));
        assert!(cfg.validate().is_err());
        cfg.pilots = Some(ComplexMatrix::from_fn(2, 1, |n, _| cis(n as f64)));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn h_ru_full_wavelength_wrap() {
        let f = 28e9;
        let ue = v(SPEED_OF_LIGHT / f, 0.0, 0.0);
        let g = ScenarioGeometry::new(v(8.0, -12.0, 2.0), Vec3::zero(), ue, vec![Vec3::zero()], vec![Vec3::zero()]).unwrap();
        let h = h_ru_at(f, &g, &g.ue_direction(), WavefrontModel::Near).unwrap();
        assert!((h[0] - Complex::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn h_ru_matches_euclidean_oracle() {
        let cfg = SignalConfig::new(28e9, 4, 400e6, 1).unwrap();
        for seed in 0..5 {
            let g = random_geometry(seed, 2, 9);
            let dir = g.ue_direction();
            for n in 0..4 {
                let f = subcarrier_freq(n, &cfg).unwrap();
                let got = h_ru(n, &cfg, &g, &dir, WavefrontModel::Near).unwrap();
                for (r, h) in got.iter().enumerate() {
                    let d = (g.ue_position - g.ris_element(r)).norm();
                    let phase = -2.0 * std::f64::consts::PI * f * d / SPEED_OF_LIGHT;
                    let want = Complex::new(phase.cos(), phase.sin());
                    assert!((h - want).norm() < 1e-12);
                    assert!((h.norm() - 1.0).abs() < 1e-12);
                }
                let far = h_ru(n, &cfg, &g, &dir, WavefrontModel::Far).unwrap();
                assert!(far.iter().all(|h| (h.norm() - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn h_br_near_half_wavelength() {
        let f = 28e9;
        let bs = v(SPEED_OF_LIGHT / (2.0 * f), 0.0, 0.0);
        let g = ScenarioGeometry::new(bs, Vec3::zero(), v(1.0, 1.0, 0.0), vec![Vec3::zero()], vec![Vec3::zero()]).unwrap();
        let h = h_br_near_at(f, &g).unwrap();
        assert!((h[(0, 0)] - Complex::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn h_br_near_matches_pairwise_distances() {
        let g = random_geometry(7, 2, 2);
        let f = 27.5e9;
        let h = h_br_near_at(f, &g).unwrap();
        for b in 0..2 {
            for r in 0..2 {
                let d = (g.bs_antenna(b) - g.ris_element(r)).norm();
                let want = cis(-2.0 * std::f64::consts::PI * f * d / SPEED_OF_LIGHT);
                assert!((h[(b, r)] - want).norm() < 1e-12);
                assert!((h[(b, r)].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn h_br_far_is_rank_one() {
        for seed in 0..5 {
            let g = random_geometry(seed, 4, 9);
            let h = h_br_far_at(28e9, &g).unwrap();
            let sv = singular_values_complex(&h);
            assert!(sv[1] < 1e-10 * sv[0]);
            assert!(h.as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
        let single = ScenarioGeometry::new(v(2.0, 1.0, 0.5), Vec3::zero(), v(1.0, 0.0, 0.0), vec![Vec3::zero()], vec![Vec3::zero()]).unwrap();
        let h = h_br_far_at(28e9, &single).unwrap();
        let want = cis(-wavenumber(28e9) * single.d_br());
        assert!((h[(0, 0)] - want).norm() < 1e-12);
    }

    #[test]
    fn h_br_near_full_rank_on_desk_arrays() {
        let g = desk_geometry(v(4.0, 2.1, -1.0), 2, 4);
        let g = ScenarioGeometry {
            bs_reference: v(1.5, -2.0, 0.5),
            ..g
        };
        let h = h_br_near_at(28e9, &g).unwrap();
        assert_eq!(numerical_rank_complex(&h, 1e-6), g.n_bs());
    }

    #[test]
    fn far_bs_ris_approaches_near_with_distance() {
        let base = desk_geometry(v(4.0, 2.1, -1.0), 2, 3);
        let dir = SphericalDirection::new(1.0, 1.2, -0.9);
        let mut prev = f64::INFINITY;
        for d in [2.0, 20.0, 200.0] {
            let g = ScenarioGeometry {
                bs_reference: dir.unit() * d,
                ..base.clone()
            };
            let near = h_br_near_at(28e9, &g).unwrap();
            let far = h_br_far_at(28e9, &g).unwrap();
            let rel = (&near - &far).frobenius_norm() / far.frobenius_norm();
            assert!(rel < prev, "relative gap {rel} at d_BR={d}");
            prev = rel;
        }
    }

    fn naive_mu(
        b: usize,
        n: usize,
        t: usize,
        g: &ScenarioGeometry<f64>,
        cfg: &SignalConfig<f64>,
        profile: &RisProfile<f64>,
    ) -> Complex<f64> {
        let f = subcarrier_freq(n, cfg).unwrap();
        let k = 2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT;
        let mut acc = Complex::new(0.0, 0.0);
        for r in 0..g.n_ris() {
            let d1 = (g.bs_antenna(b) - g.ris_element(r)).norm();
            let d2 = (g.ue_position - g.ris_element(r)).norm();
            acc += profile.slot(t)[r] * cis(-k * (d1 + d2));
        }
        acc * cfg.alpha * cfg.pilot(n, t) * cis(-2.0 * std::f64::consts::PI * f * cfg.xi_seconds)
    }

    #[test]
    fn mu_matches_naive_sum() {
        let mut cfg = SignalConfig::new(28e9, 3, 200e6, 2).unwrap();
        cfg.alpha = 0.37;
        cfg.xi_seconds = 3.3e-9;
        cfg.pilots = Some(ComplexMatrix::from_fn(3, 2, |n, t| cis(0.4 * n as f64 - 1.1 * t as f64)));
        let g = random_geometry(3, 2, 2);
        let profile = RisProfile::random(2, 2, 99).unwrap();
        let chan = CascadedChannel::new(&g, &cfg, ChannelModelFlags::NEAR_NEAR).unwrap();
        for b in 0..2 {
            for n in 0..3 {
                for t in 0..2 {
                    let want = naive_mu(b, n, t, &g, &cfg, &profile);
                    let got = mu(b, n, t, &g, &cfg, ChannelModelFlags::NEAR_NEAR, &profile).unwrap();
                    assert!((got - want).norm() < 1e-12 * want.norm());
                    let via_table = chan.combine(b, n, profile.slot(t))
                        * cfg.alpha
                        * cfg.pilot(n, t)
                        * cis(-2.0 * std::f64::consts::PI * chan.freq(n) * cfg.xi_seconds);
                    assert!((via_table - want).norm() < 1e-12 * want.norm());
                    assert!(got.norm() <= cfg.alpha * g.n_ris() as f64 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn mu_is_linear_in_alpha_and_pilot_and_shifts_with_xi() {
        let cfg = SignalConfig::new(28e9, 2, 100e6, 1).unwrap();
        let g = random_geometry(5, 2, 6);
        let profile = RisProfile::random(6, 1, 1).unwrap();
        let flags = ChannelModelFlags::NEAR_NEAR;
        let base = mu(1, 1, 0, &g, &cfg, flags, &profile).unwrap();
        let scaled = mu(1, 1, 0, &g, &cfg.with_alpha(2.5), flags, &profile).unwrap();
        assert!((scaled - base * 2.5).norm() < 1e-12 * scaled.norm());

        let mut rot = cfg.clone();
        rot.pilots = Some(ComplexMatrix::from_fn(2, 1, |_, _| cis(0.7)));
        let rotated = mu(1, 1, 0, &g, &rot, flags, &profile).unwrap();
        assert!((rotated - base * cis(0.7)).norm() < 1e-12 * base.norm());

        let delta = 1.7e-9;
        let mut shifted = cfg.clone();
        shifted.xi_seconds += delta;
        let f = subcarrier_freq(1, &cfg).unwrap();
        let got = mu(1, 1, 0, &g, &shifted, flags, &profile).unwrap();
        let want = base * cis(-2.0 * std::f64::consts::PI * f * delta);
        assert!((got - want).norm() < 1e-10 * base.norm());
    }

    #[test]
    fn phase_aligned_profile_reaches_coherent_gain() {
        let cfg = SignalConfig::new(28e9, 1, 0.0, 1).unwrap().with_alpha(0.8);
        let g = random_geometry(11, 3, 16);
        let chan = CascadedChannel::new(&g, &cfg, ChannelModelFlags::NEAR_NEAR).unwrap();
        let phases: Vec<Vec<f64>> = vec![chan.cascaded(2, 0).iter().map(|h| -h.arg()).collect()];
        let profile = RisProfile::from_phases(&phases).unwrap();
        let m = mu(2, 0, 0, &g, &cfg, ChannelModelFlags::NEAR_NEAR, &profile).unwrap();
        assert!((m.norm() - 0.8 * 16.0).abs() < 1e-10 * 0.8 * 16.0);
    }
}
