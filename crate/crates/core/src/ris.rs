//! RIS reflection profiles: random, focusing, the two per-slot focusing
//! schedules, and the time-domain profile that stands in for extra antennas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{h_br_at, h_ru_at, subcarrier_freq, wavenumber, ChannelModelFlags, SignalConfig};
use crate::error::{check_index, Error, Result};
use crate::geometry::{cartesian_to_spherical, ScenarioGeometry, Vec3};
use crate::numerics::ComplexMatrix;
use crate::scalar::{cis, Cplx, Real};

/// Unit-modulus reflection coefficients, one row per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RisProfile<T> {
    coefficients: ComplexMatrix<T>,
}

fn unit_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(100.0))
}

impl<T: Real> RisProfile<T> {
    pub fn from_coefficients(coefficients: ComplexMatrix<T>) -> Result<Self> {
        let tol = unit_tol::<T>();
        if let Some(bad) = coefficients.as_slice().iter().position(|z| !((z.norm() - T::one()).abs() <= tol)) {
            return Err(Error::InvalidArgument(format!(
                "coefficient {bad} does not have unit modulus"
            )));
        }
        Ok(Self { coefficients })
    }

    /// Builds a profile from per-slot phase lists in radians.
    pub fn from_phases(phases: &[Vec<T>]) -> Result<Self> {
        let rows = ComplexMatrix::from_rows(
            &phases.iter().map(|slot| slot.iter().map(|&p| cis(p)).collect()).collect::<Vec<_>>(),
        )?;
        if phases.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("profile phase".into()));
        }
        Ok(Self { coefficients: rows })
    }

    /// Stacks single-slot coefficient vectors into one profile.
    pub fn from_slots(slots: &[Vec<Cplx<T>>]) -> Result<Self> {
        Self::from_coefficients(ComplexMatrix::from_rows(slots)?)
    }

    /// I.i.d. phases, uniform on `[0, 2π)`.
    pub fn random(n_r: usize, t: usize, seed: u64) -> Result<Self> {
        if n_r == 0 || t == 0 {
            return Err(Error::InvalidArgument("profile needs at least one element and one slot".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<Vec<T>> = (0..t)
            .map(|_| {
                (0..n_r)
                    .map(|_| T::lit(rng.gen_range(0.0..std::f64::consts::TAU)))
                    .collect()
            })
            .collect();
        Self::from_phases(&phases)
    }

    pub fn n_slots(&self) -> usize {
        self.coefficients.rows()
    }

    pub fn n_elements(&self) -> usize {
        self.coefficients.cols()
    }

    /// `φ_t`
    pub fn slot(&self, t: usize) -> &[Cplx<T>] {
        self.coefficients.row(t)
    }

    pub fn coefficients(&self) -> &ComplexMatrix<T> {
        &self.coefficients
    }

    /// Per-slot phases in `(-π, π]`.
    pub fn phases(&self) -> Vec<Vec<T>> {
        (0..self.n_slots())
            .map(|t| self.slot(t).iter().map(|z| z.arg()).collect())
            .collect()
    }

    /// Keeps only the listed slots, in order.
    pub fn select_slots(&self, slots: &[usize]) -> Result<Self> {
        for &t in slots {
            check_index("profile slot", t, self.n_slots())?;
        }
        let cols: Vec<usize> = (0..self.n_elements()).collect();
        Ok(Self {
            coefficients: self.coefficients.select(slots, &cols),
        })
    }

    pub fn cast<U: Real>(&self) -> RisProfile<U> {
        let c = |x: T| U::lit(x.to_f64().unwrap_or(f64::NAN));
        RisProfile {
            coefficients: self.coefficients.map(|z| Cplx::new(c(z.re), c(z.im))),
        }
    }
}

impl<T: Real + Serialize> Serialize for RisProfile<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.phases().serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for RisProfile<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let phases = Vec::<Vec<T>>::deserialize(d)?;
        Self::from_phases(&phases).map_err(serde::de::Error::custom)
    }
}

/// `random_profile` under its usual name.
pub fn random_profile<T: Real>(n_r: usize, t: usize, seed: u64) -> Result<RisProfile<T>> {
    RisProfile::random(n_r, t, seed)
}

/// Phase-conjugate coefficients that make the path `source → RIS → focus`
/// add coherently at `freq`: `exp(+jk(‖source − p_r‖ + ‖focus − p_r‖))`.
pub fn focusing_phases<T: Real>(
    freq: T,
    source: Vec3<T>,
    focus: Vec3<T>,
    geometry: &ScenarioGeometry<T>,
) -> Result<Vec<Cplx<T>>> {
    let k = wavenumber(freq);
    (0..geometry.n_ris())
        .map(|r| {
            let p = geometry.ris_element(r);
            let (d1, d2) = ((source - p).norm(), (focus - p).norm());
            if !(d1 > T::zero() && d2 > T::zero()) {
                return Err(Error::DegenerateGeometry(format!(
                    "focus or source point coincides with RIS element {r}"
                )));
            }
            Ok(cis(k * (d1 + d2)))
        })
        .collect()
}

/// Conjugate of the cascaded channel `h̃_{b,n}` evaluated with the UE at
/// `focus`, under the given wavefront models.
fn conjugate_cascade<T: Real>(
    geometry: &ScenarioGeometry<T>,
    focus: Vec3<T>,
    antenna: usize,
    freq: T,
    flags: ChannelModelFlags,
) -> Result<Vec<Cplx<T>>> {
    check_index("BS antenna", antenna, geometry.n_bs())?;
    if !focus.is_finite() {
        return Err(Error::NonFinite("focus point".into()));
    }
    for r in 0..geometry.n_ris() {
        if !((focus - geometry.ris_element(r)).norm() > T::zero()) {
            return Err(Error::DegenerateGeometry(format!("focus point coincides with RIS element {r}")));
        }
    }
    let at_focus = geometry.with_ue(focus)?;
    let dir = cartesian_to_spherical(geometry.ris_reference, focus)?;
    let hru = h_ru_at(freq, &at_focus, &dir, flags.ris_ue)?;
    let hbr = h_br_at(freq, &at_focus, flags.bs_ris)?;
    Ok(hbr.row(antenna).iter().zip(&hru).map(|(a, b)| (a * b).conj()).collect())
}

/// Single-slot profile focusing antenna `ref_antenna`, sub-carrier `n0`
/// onto `focus`, so that `φᵀh̃_{b0,n0} = N_R` with the UE at the focus.
pub fn focusing_profile<T: Real>(
    geometry: &ScenarioGeometry<T>,
    focus: Vec3<T>,
    ref_antenna: usize,
    n0: usize,
    cfg: &SignalConfig<T>,
    flags: ChannelModelFlags,
) -> Result<RisProfile<T>> {
    let f = subcarrier_freq(n0, cfg)?;
    RisProfile::from_slots(&[conjugate_cascade(geometry, focus, ref_antenna, f, flags)?])
}

/// `N_B` slots; slot `t` focuses antenna `t` at sub-carrier `n0` onto the UE.
pub fn case1_profiles<T: Real>(
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    n0: usize,
    flags: ChannelModelFlags,
) -> Result<RisProfile<T>> {
    let f = subcarrier_freq(n0, cfg)?;
    let slots = (0..geometry.n_bs())
        .map(|b| conjugate_cascade(geometry, geometry.ue_position, b, f, flags))
        .collect::<Result<Vec<_>>>()?;
    RisProfile::from_slots(&slots)
}

/// `N` slots; slot `t` focuses antenna `b0` at sub-carrier `t` onto the UE.
pub fn case2_profiles<T: Real>(
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    b0: usize,
    flags: ChannelModelFlags,
) -> Result<RisProfile<T>> {
    let slots = (0..cfg.n_subcarriers)
        .map(|n| {
            let f = subcarrier_freq(n, cfg)?;
            conjugate_cascade(geometry, geometry.ue_position, b0, f, flags)
        })
        .collect::<Result<Vec<_>>>()?;
    RisProfile::from_slots(&slots)
}

/// Coefficients that let antenna `ref_antenna` observe, at sub-carrier `n`,
/// what antenna `target_offset` would have observed under `base`:
/// `φ̃_r = φ_r [h_{bR,n}]_r / [h_{b0R,n}]_r` with `b = target_offset`.
///
/// With the spherical BS-RIS model this is the phase correction
/// `-2πf_n (d_{b,r} - d_{b0,r}) / c`.
pub fn equivalent_time_profile<T: Real>(
    base: &[Cplx<T>],
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    n: usize,
    ref_antenna: usize,
    target_offset: usize,
    flags: ChannelModelFlags,
) -> Result<Vec<Cplx<T>>> {
    check_index("BS antenna", ref_antenna, geometry.n_bs())?;
    check_index("target antenna", target_offset, geometry.n_bs())?;
    if base.len() != geometry.n_ris() {
        return Err(Error::InvalidArgument(format!(
            "base profile has {} entries for {} RIS elements",
            base.len(),
            geometry.n_ris()
        )));
    }
    if target_offset == ref_antenna {
        return Ok(base.to_vec());
    }
    let hbr = h_br_at(subcarrier_freq(n, cfg)?, geometry, flags.bs_ris)?;
    Ok(base
        .iter()
        .enumerate()
        .map(|(r, &p)| p * hbr[(target_offset, r)] / hbr[(ref_antenna, r)])
        .collect())
}
