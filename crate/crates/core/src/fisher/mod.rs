//! Fisher information for the RIS-UE localization problem: per-sample and
//! total FIMs in several parameterizations, EFI/EFIM and the PEB.

mod bounds;
mod mask;
mod model;
mod report;

pub use bounds::{efi, efi_equilibrated, efim_eta, peb, schur_complement, Bound, IntermediateParam};
pub use mask::{SampleIndex, SampleMask};
pub use model::{intermediate_jacobian, FisherModel, Parameterization};
pub use report::{EfiValues, FisherReport, MatrixDiagnostics};

use crate::channel::{ChannelModelFlags, SignalConfig};
use crate::error::Result;
use crate::geometry::ScenarioGeometry;
use crate::numerics::Matrix;
use crate::ris::RisProfile;
use crate::scalar::{Cplx, Real};

pub fn dmu_dtheta<T: Real>(
    b: usize,
    n: usize,
    t: usize,
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    flags: ChannelModelFlags,
    profile: &RisProfile<T>,
) -> Result<Vec<Cplx<T>>> {
    FisherModel::new(geometry, cfg, flags, profile)?.dmu_dtheta(b, n, t)
}

pub fn dmu_dthetabar<T: Real>(
    b: usize,
    n: usize,
    t: usize,
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    flags: ChannelModelFlags,
    profile: &RisProfile<T>,
) -> Result<Vec<Cplx<T>>> {
    FisherModel::new(geometry, cfg, flags, profile)?.dmu_dthetabar(b, n, t)
}

pub fn fim<T: Real>(
    param: Parameterization,
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    flags: ChannelModelFlags,
    profile: &RisProfile<T>,
    mask: &SampleMask,
) -> Result<Matrix<T>> {
    FisherModel::new(geometry, cfg, flags, profile)?.fim(param, mask)
}

pub fn fim_sync<T: Real>(
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    flags: ChannelModelFlags,
    profile: &RisProfile<T>,
    mask: &SampleMask,
) -> Result<Matrix<T>> {
    FisherModel::new(geometry, cfg, flags, profile)?.fim_sync(mask)
}

pub fn fim_reduced_farfield<T: Real>(
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    flags: ChannelModelFlags,
    profile: &RisProfile<T>,
    mask: &SampleMask,
) -> Result<Matrix<T>> {
    FisherModel::new(geometry, cfg, flags, profile)?.fim_reduced_farfield(mask)
}

pub fn per_antenna_fim<T: Real>(
    b: usize,
    param: Parameterization,
    geometry: &ScenarioGeometry<T>,
    cfg: &SignalConfig<T>,
    flags: ChannelModelFlags,
    profile: &RisProfile<T>,
) -> Result<Matrix<T>> {
    FisherModel::new(geometry, cfg, flags, profile)?.per_antenna_fim(param, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geometry::{build_ura, Plane, Vec3, WavefrontModel};
    use crate::numerics::{numerical_rank, RANK_TOL};
    use crate::scalar::SPEED_OF_LIGHT;
    use num_complex::Complex;

    fn scenario(nb: usize, nr: usize) -> ScenarioGeometry<f64> {
        let lambda = SPEED_OF_LIGHT / 28e9;
        ScenarioGeometry::new(
            Vec3::new(2.0, -3.0, 0.5),
            Vec3::zero(),
            Vec3::new(1.5, 0.7, -1.0),
            build_ura(nb, nb, lambda / 2.0, Plane::Yz).unwrap(),
            build_ura(nr, nr, lambda / 2.0, Plane::Yz).unwrap(),
        )
        .unwrap()
    }

    fn model(flags: ChannelModelFlags, n: usize, t: usize) -> FisherModel<f64> {
        let g = scenario(2, 8).with_ue(Vec3::new(0.9, 0.4, -0.5)).unwrap();
        let mut cfg = SignalConfig::new(28e9, n, 400e6, t).unwrap();
        cfg.alpha = 0.05;
        cfg.xi_seconds = 2e-9;
        let profile = RisProfile::random(64, t, 3).unwrap();
        FisherModel::new(&g, &cfg, flags, &profile).unwrap()
    }

    #[test]
    fn alpha_and_clock_partials() {
        let m = model(ChannelModelFlags::NEAR_NEAR, 3, 2);
        for (b, n, t) in [(0, 0, 0), (3, 2, 1)] {
            let mu = m.mu(b, n, t).unwrap();
            let g = m.dmu_dtheta(b, n, t).unwrap();
            assert!((g[0] * 0.05 - mu).norm() < 1e-14 * mu.norm());
            let k = 2.0 * std::f64::consts::PI * m.channel().freq(n) / SPEED_OF_LIGHT;
            assert!((g[1] - Complex::new(0.0, -k) * mu).norm() < 1e-12 * g[1].norm());
            let direct = crate::channel::mu(b, n, t, m.geometry(), m.config(), m.flags(), m.profile()).unwrap();
            assert!((direct - mu).norm() < 1e-12 * mu.norm());
        }
    }

    #[test]
    fn reference_element_has_unit_distance_partial() {
        let mut g = scenario(1, 1);
        g.ris_offsets = vec![Vec3::zero()];
        let cfg = SignalConfig::new(28e9, 1, 0.0, 1).unwrap();
        let profile = RisProfile::random(1, 1, 0).unwrap();
        for flags in ChannelModelFlags::all() {
            let m = FisherModel::new(&g, &cfg, flags, &profile).unwrap();
            let gb = m.dmu_dthetabar(0, 0, 0).unwrap();
            // ∂μ/∂d equals ∂μ/∂cξ, and the angles carry nothing.
            assert!((gb[2] - gb[1]).norm() < 1e-12 * gb[1].norm());
            assert!(gb[3].norm() < 1e-12 * gb[1].norm());
            assert!(gb[4].norm() < 1e-12 * gb[1].norm());
        }
    }

    #[test]
    fn single_sample_rank_at_most_two() {
        let m = model(ChannelModelFlags::NEAR_NEAR, 2, 1);
        for param in [Parameterization::Position, Parameterization::Intermediate] {
            let j = m.sample_fim(param, 1, 1, 0).unwrap();
            assert_eq!(numerical_rank(&j, RANK_TOL), 2);
        }
    }

    #[test]
    fn alpha_clock_entry_vanishes() {
        let m = model(ChannelModelFlags::NEAR_NEAR, 3, 2);
        let j = m.fim(Parameterization::Intermediate, &SampleMask::All).unwrap();
        assert!(j[(0, 1)].abs() < 1e-12 * (j[(0, 0)] * j[(1, 1)]).sqrt());
        assert_eq!(j[(0, 1)], j[(1, 0)]);
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let m = model(ChannelModelFlags::NEAR_NEAR, 4, 3);
        for param in [Parameterization::Position, Parameterization::Synchronous] {
            assert_eq!(
                m.fim(param, &SampleMask::All).unwrap(),
                m.fim_sequential(param, &SampleMask::All).unwrap()
            );
        }
    }

    #[test]
    fn sync_is_submatrix_of_async() {
        let m = model(ChannelModelFlags::NEAR_NEAR, 2, 2);
        let j = m.fim(Parameterization::Position, &SampleMask::All).unwrap();
        let js = m.fim_sync(&SampleMask::All).unwrap();
        let sub = j.select(&[0, 2, 3, 4], &[0, 2, 3, 4]);
        assert!((&js - &sub).max_abs() <= 1e-14 * j.max_abs());
    }

    #[test]
    fn reduced_farfield_requires_planar_model() {
        let near = model(ChannelModelFlags::NEAR_NEAR, 1, 1);
        assert!(matches!(near.fim_reduced_farfield(&SampleMask::All), Err(Error::InvalidArgument(_))));
        let far = model(ChannelModelFlags::new(WavefrontModel::Far, WavefrontModel::Near), 1, 1);
        assert_eq!(far.fim_reduced_farfield(&SampleMask::All).unwrap().rows(), 4);
    }

    #[test]
    fn profile_shape_is_checked() {
        let g = scenario(1, 2);
        let cfg = SignalConfig::new(28e9, 1, 0.0, 2).unwrap();
        let short = RisProfile::random(4, 1, 0).unwrap();
        assert!(FisherModel::new(&g, &cfg, ChannelModelFlags::NEAR_NEAR, &short).is_err());
        let narrow = RisProfile::random(3, 2, 0).unwrap();
        assert!(FisherModel::new(&g, &cfg, ChannelModelFlags::NEAR_NEAR, &narrow).is_err());
    }

    #[test]
    fn report_is_consistent() {
        let m = model(ChannelModelFlags::NEAR_NEAR, 4, 3);
        let r = FisherReport::compute(&m, &SampleMask::All).unwrap();
        assert!(r.position_diagnostics.is_valid_fim());
        assert!(r.intermediate_diagnostics.is_valid_fim());
        let p = r.peb.expect_value("peb");
        let ps = r.peb_sync.expect_value("sync peb");
        assert!(ps <= p);
        // J̄ itself only holds the curvature information to a few digits, so
        // the two routes agree loosely.
        for k in IntermediateParam::ALL {
            let direct = efi(&r.fim_intermediate, k).unwrap().expect_value("efi");
            let shifted = match k {
                IntermediateParam::Distance => r.efi.distance,
                IntermediateParam::Azimuth => r.efi.azimuth,
                IntermediateParam::Elevation => r.efi.elevation,
            }
            .expect_value("efi");
            assert!((direct - shifted).abs() < 1e-5 * direct, "{k:?}: {direct} vs {shifted}");
        }
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"peb\":{\"value\""));
    }

    #[test]
    fn f32_smoke() {
        let g = scenario(1, 3).cast::<f32>();
        let mut cfg = SignalConfig::<f32>::new(28e9, 2, 200e6, 2).unwrap();
        cfg.alpha = 0.1;
        let profile = RisProfile::<f32>::random(9, 2, 1).unwrap();
        let m = FisherModel::new(&g, &cfg, ChannelModelFlags::NEAR_NEAR, &profile).unwrap();
        let j = m.fim(Parameterization::Position, &SampleMask::All).unwrap();
        assert!(j.is_finite());
        let j64 = FisherModel::new(&scenario(1, 3), &SignalConfig { alpha: 0.1, ..SignalConfig::new(28e9, 2, 200e6, 2).unwrap() }, ChannelModelFlags::NEAR_NEAR, &RisProfile::random(9, 2, 1).unwrap())
            .unwrap()
            .fim(Parameterization::Position, &SampleMask::All)
            .unwrap();
        let rel = (&j.to_f64() - &j64).max_abs() / j64.max_abs();
        assert!(rel < 1e-2, "f32 deviates by {rel}");
    }
}
