//! Battery of structural checks on randomized desk-scale scenarios. Every
//! check reports its measured residuals next to the limits they are held to.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risloc::channel::mu;
use risloc::fisher::{efi, efim_eta, intermediate_jacobian, Parameterization};
use risloc::geometry::{build_ura, spherical_to_cartesian, Plane, WavefrontModel::*};
use risloc::numerics::{central_diff, default_steps, numerical_rank, sym_inverse, Matrix, RANK_TOL};
use risloc::ris::{case1_profiles, case2_profiles, equivalent_time_profile};
use risloc::{Bound, ChannelModelFlags, Cplx, IntermediateParam, Profile, SampleMask, Scenario, Signal, SphericalDirection, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, SnrPolicy, SweepSpec, CARRIER_HZ};
use crate::error::{HarnessError, Result};
use crate::output::OutputSet;
use crate::scenarios::{random_case, wavelength, Case};
use crate::seeds::derive_seed;
use crate::snr::build_model;

/// A measured quantity that must not exceed `limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub limit: f64,
}

impl Metric {
    fn new(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
        }
    }

    pub fn ok(&self) -> bool {
        self.value <= self.limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Scenarios (or pairs) that entered the metrics.
    pub samples: usize,
    pub metrics: Vec<Metric>,
    pub detail: String,
}

impl Check {
    fn from_metrics(name: &str, samples: usize, metrics: Vec<Metric>, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: samples > 0 && metrics.iter().all(Metric::ok),
            samples,
            metrics,
            detail,
        }
    }

    fn failed(name: &str, e: HarnessError) -> Self {
        Self {
            name: name.into(),
            passed: false,
            samples: 0,
            metrics: vec![],
            detail: format!("error: {e}"),
        }
    }

    pub fn line(&self) -> String {
        let metrics: Vec<String> = self
            .metrics
            .iter()
            .map(|m| format!("{}={:.3e}(<={:.1e})", m.name, m.value, m.limit))
            .collect();
        format!(
            "{} {} n={} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            metrics.join(" ")
        )
    }
}

fn guard(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, e))
}

fn case(master: u64, i: u64, flags: ChannelModelFlags) -> Result<Case> {
    random_case(derive_seed(master, i), flags)
}

fn max_rel_diff(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    (a - b).max_abs() / b.max_abs()
}

fn all_samples(c: &Case) -> Result<Vec<(usize, usize, usize)>> {
    Ok(SampleMask::All.resolve(c.geometry.n_bs(), c.cfg.n_subcarriers, c.cfg.n_slots)?)
}

/// Largest `|analytic - numeric| / max(|analytic|, 1e-9 max|analytic|)`
/// over the partials of one sample.
fn partial_error(analytic: &[Cplx<f64>], numeric: &[Cplx<f64>]) -> f64 {
    let largest = analytic.iter().map(|z| z.norm()).fold(0.0, f64::max);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let scale = a.norm().max(1e-9 * largest);
            (a.re - n.re).abs().max((a.im - n.im).abs()) / scale
        })
        .fold(0.0, f64::max)
}

fn with_clock(cfg: &Signal, alpha: f64, c_xi: f64) -> Signal {
    let mut c = cfg.with_alpha(alpha);
    c.xi_seconds = c_xi / risloc::SPEED_OF_LIGHT;
    c
}

/// Analytic `∂μ/∂Θ` and `∂μ/∂Θ̄` against central differences.
pub fn check_derivatives(master: u64, count: usize) -> Check {
    let name = "derivatives_match_finite_differences";
    guard(name, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for flags in ChannelModelFlags::all() {
            for i in 0..count as u64 {
                let c = case(master, i, flags)?;
                let model = c.model()?;
                let samples = all_samples(&c)?;
                let mu_all = |g: &Scenario, cfg: &Signal| -> risloc::Result<Vec<Cplx<f64>>> {
                    samples.iter().map(|&(b, n, t)| mu(b, n, t, g, cfg, flags, &c.profile)).collect()
                };
                let p = c.geometry.ue_position;
                let dir = c.geometry.ue_direction();
                for intermediate in [false, true] {
                    let x0 = if intermediate {
                        [c.cfg.alpha, c.cfg.c_xi(), dir.distance, dir.azimuth, dir.elevation]
                    } else {
                        [c.cfg.alpha, c.cfg.c_xi(), p.x, p.y, p.z]
                    };
                    let mut steps = default_steps(&x0);
                    steps[0] = 1e-6 * c.cfg.alpha;
                    let jac = central_diff(
                        |x: &[f64]| {
                            let ue = if intermediate {
                                spherical_to_cartesian(c.geometry.ris_reference, &SphericalDirection::new(x[2], x[4], x[3]))
                            } else {
                                Vec3::new(x[2], x[3], x[4])
                            };
                            mu_all(&c.geometry.with_ue(ue)?, &with_clock(&c.cfg, x[0], x[1]))
                        },
                        &x0,
                        &steps,
                    )?;
                    for (k, &(b, nn, t)) in samples.iter().enumerate() {
                        let g = if intermediate {
                            model.dmu_dthetabar(b, nn, t)?
                        } else {
                            model.dmu_dtheta(b, nn, t)?
                        };
                        worst = worst.max(partial_error(&g, &jac[k]));
                    }
                }
                n += 1;
            }
        }
        Ok(Check::from_metrics(
            name,
            n,
            vec![Metric::new("max_relative_error", worst, 1e-5)],
            "partials below 1e-9 of the largest partial of their sample are compared against that floor".into(),
        ))
    })
}

/// A single sample gives a rank-2 Fisher matrix.
pub fn check_single_sample_rank(master: u64, count: usize) -> Check {
    let name = "single_sample_fim_rank_two";
    guard(name, || {
        let (mut above, mut below, mut n) = (0usize, 0usize, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        for i in 0..count as u64 {
            let flags = ChannelModelFlags::all()[i as usize % 4];
            let c = case(master, 1000 + i, flags)?;
            let model = c.model()?;
            let b = rng.gen_range(0..c.geometry.n_bs());
            let nn = rng.gen_range(0..c.cfg.n_subcarriers);
            let t = rng.gen_range(0..c.cfg.n_slots);
            for param in [Parameterization::Position, Parameterization::Intermediate] {
                let r = numerical_rank(&model.sample_fim(param, b, nn, t)?, RANK_TOL);
                above += usize::from(r > 2);
                below += usize::from(r < 2);
            }
            n += 1;
        }
        Ok(Check::from_metrics(
            name,
            n,
            vec![
                Metric::new("rank_above_two", above as f64, 0.0),
                Metric::new("rank_below_two", below as f64, 0.0),
            ],
            String::new(),
        ))
    })
}

/// `J = Dᵀ J̄ D` with `D = ∂Θ̄/∂Θᵀ`.
pub fn check_reparameterization(master: u64, count: usize) -> Check {
    let name = "position_fim_is_reparameterized_intermediate_fim";
    guard(name, || {
        let mut worst: f64 = 0.0;
        for i in 0..count as u64 {
            let flags = ChannelModelFlags::all()[i as usize % 4];
            let model = case(master, 2000 + i, flags)?.model()?;
            let j = model.fim(Parameterization::Position, &SampleMask::All)?;
            let jbar = model.fim(Parameterization::Intermediate, &SampleMask::All)?;
            let d = intermediate_jacobian(&model.direction())?;
            let back = &(&d.transpose() * &jbar) * &d;
            worst = worst.max(max_rel_diff(&back, &j));
        }
        Ok(Check::from_metrics(
            name,
            count,
            vec![Metric::new("max_relative_difference", worst, 1e-8)],
            String::new(),
        ))
    })
}

/// `efi(k) [J̄⁻¹]_kk = 1` whenever `J̄` is invertible.
pub fn check_efi_identity(master: u64, count: usize) -> Check {
    let name = "efi_is_reciprocal_of_inverse_diagonal";
    guard(name, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for i in 0..count as u64 {
            let model = case(master, 3000 + i, ChannelModelFlags::NEAR_NEAR)?.model()?;
            let jbar = model.fim(Parameterization::Intermediate, &SampleMask::All)?;
            let Ok(inv) = sym_inverse(&jbar, RANK_TOL) else { continue };
            for k in IntermediateParam::ALL {
                let Bound::Value(e) = efi(&jbar, k)? else {
                    return Err(HarnessError::Config("EFI singular with an invertible FIM".into()));
                };
                worst = worst.max((e * inv[(k.index(), k.index())] - 1.0).abs());
            }
            n += 1;
        }
        Ok(Check::from_metrics(
            name,
            n,
            vec![Metric::new("max_identity_error", worst, 1e-8)],
            format!("{n} of {count} draws invertible"),
        ))
    })
}

/// Planar RIS-UE wavefront: the distance column duplicates the clock column
/// and the distance EFI vanishes. `flags.ris_ue` is taken as given, so a
/// spherical model fed here must fail.
pub fn check_planar_ris_ue(master: u64, count: usize, ris_ue: risloc::WavefrontModel) -> Check {
    let name = match ris_ue {
        Far => "planar_ris_ue_loses_distance",
        Near => "planar_ris_ue_negative_control",
    };
    guard(name, || {
        let (mut row_diff, mut rank_excess, mut efi_ratio): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut n = 0;
        for bs_ris in [Near, Far] {
            for i in 0..count as u64 {
                let model = case(master, 4000 + i, ChannelModelFlags::new(ris_ue, bs_ris))?.model()?;
                let jbar = model.fim(Parameterization::Intermediate, &SampleMask::All)?;
                let j = model.fim(Parameterization::Position, &SampleMask::All)?;
                let (r1, r2) = (jbar.row(1), jbar.row(2));
                let norm = r1.iter().map(|x| x * x).sum::<f64>().sqrt();
                let diff = r1.iter().zip(r2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                row_diff = row_diff.max(diff / norm);
                let worst_rank = numerical_rank(&jbar, RANK_TOL).max(numerical_rank(&j, RANK_TOL));
                rank_excess = rank_excess.max(worst_rank as f64 - 4.0);
                if let Bound::Value(v) = efi(&jbar, IntermediateParam::Distance)? {
                    efi_ratio = efi_ratio.max(v / jbar[(2, 2)]);
                }
                n += 1;
            }
        }
        Ok(Check::from_metrics(
            name,
            n,
            vec![
                Metric::new("row_difference", row_diff, 1e-10),
                Metric::new("rank_above_four", rank_excess.max(0.0), 0.0),
                Metric::new("distance_efi_over_jbar_dd", efi_ratio, 1e-8),
            ],
            format!("RIS-UE model {ris_ue:?}, both BS-RIS models"),
        ))
    })
}

/// Planar BS-RIS wavefront: every antenna sees the same Fisher matrix.
pub fn check_identical_antennas(master: u64, count: usize) -> Check {
    let name = "planar_bs_ris_gives_power_gain_only";
    guard(name, || {
        let mut rng = ChaCha8Rng::seed_from_u64(master ^ 0xa11);
        let (mut pair, mut total, mut ratio): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut compared = 0;
        for i in 0..count as u64 {
            let mut c = case(master, 5000 + i, ChannelModelFlags::new(Near, Far))?;
            c.geometry.bs_offsets = build_ura(2, 2, wavelength() * rng.gen_range(0.5..2.0), Plane::Xz)?;
            let model = c.model()?;
            let n_bs = c.geometry.n_bs();
            let j = model.fim(Parameterization::Position, &SampleMask::All)?;
            let j0 = model.per_antenna_fim(Parameterization::Position, 0)?;
            for b in 1..n_bs {
                pair = pair.max(max_rel_diff(&model.per_antenna_fim(Parameterization::Position, b)?, &j0));
            }
            total = total.max(max_rel_diff(&j, &j0.scale(n_bs as f64)));
            if let (Bound::Value(p), Bound::Value(p0)) = (model.peb(&SampleMask::All)?, model.peb(&SampleMask::Antenna(0))?) {
                let want = p0 / (n_bs as f64).sqrt();
                ratio = ratio.max((p - want).abs() / want);
                compared += 1;
            }
        }
        Ok(Check::from_metrics(
            name,
            count,
            vec![
                Metric::new("per_antenna_difference", pair, 1e-10),
                Metric::new("total_vs_scaled_single", total, 1e-10),
                Metric::new("peb_ratio_error", ratio, 1e-8),
            ],
            format!("{compared} of {count} draws with an invertible per-antenna matrix"),
        ))
    })
}

/// One sub-carrier, one slot: rank 2 under the planar BS-RIS model,
/// invertible with 16 antennas under the spherical one. The BS sits well
/// inside the Fraunhofer distance of the desk-scale apertures (about 1.5 m),
/// where the spherical BS-RIS model actually differs from the planar one.
pub fn check_single_carrier(master: u64, count: usize) -> Check {
    let name = "single_carrier_single_slot_rank";
    guard(name, || {
        let (mut far_bad, mut near_singular) = (0usize, 0usize);
        let lambda = wavelength();
        for i in 0..count as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, 6000 + i));
            let mut dir = |lo: f64, hi: f64| {
                SphericalDirection::new(rng.gen_range(lo..hi), rng.gen_range(0.8..2.3), rng.gen_range(-1.1..1.1))
            };
            let ue = spherical_to_cartesian(Vec3::zero(), &dir(0.2, 0.5));
            let bs = spherical_to_cartesian(Vec3::zero(), &dir(0.3, 0.6));
            let geometry = Scenario::new(
                bs,
                Vec3::zero(),
                ue,
                build_ura(4, 4, lambda / 2.0, Plane::Yz)?,
                build_ura(12, 12, lambda / 2.0, Plane::Yz)?,
            )?;
            let cfg = Signal::new(CARRIER_HZ, 1, 0.0, 1)?;
            let profile = Profile::random(144, 1, derive_seed(master, 6500 + i))?;
            let bound = |bs_ris| -> Result<Bound<f64>> {
                let flags = ChannelModelFlags::new(Near, bs_ris);
                let policy = SnrPolicy::FixedReceivedSnr { target_db: 20.0 };
                Ok(build_model(&geometry, &cfg, flags, &profile, policy)?.peb(&SampleMask::All)?)
            };
            far_bad += usize::from(bound(Far)? != Bound::Singular { rank: 2, dim: 5 });
            near_singular += usize::from(bound(Near)?.is_singular());
        }
        Ok(Check::from_metrics(
            name,
            count,
            vec![
                Metric::new("planar_not_rank_two", far_bad as f64, 0.0),
                Metric::new("spherical_singular", near_singular as f64, 0.0),
            ],
            "12x12 RIS, 4x4 BS at 0.3-0.6 m, UE at 0.2-0.5 m, 20 dB average SNR".into(),
        ))
    })
}

/// Slots with equivalent profiles at one antenna reproduce the Fisher
/// matrix of all antennas in one slot.
pub fn check_time_space(master: u64, count: usize) -> Check {
    let name = "time_slots_stand_in_for_antennas";
    guard(name, || {
        let mut worst: f64 = 0.0;
        for i in 0..count as u64 {
            let flags = if i % 2 == 0 { ChannelModelFlags::NEAR_NEAR } else { ChannelModelFlags::new(Near, Far) };
            let c = case(master, 7000 + i, flags)?;
            let n_bs = c.geometry.n_bs();
            let b0 = i as usize % n_bs;
            let mut spatial_cfg = c.cfg.clone();
            spatial_cfg.n_slots = 1;
            let base = Profile::random(c.geometry.n_ris(), 1, derive_seed(master, 7500 + i))?;
            let spatial = risloc::Model::new(&c.geometry, &spatial_cfg, flags, &base)?
                .fim(Parameterization::Position, &SampleMask::All)?;
            let mut temporal_cfg = c.cfg.clone();
            temporal_cfg.n_slots = n_bs;
            let mut temporal = Matrix::zeros(5, 5);
            for n in 0..c.cfg.n_subcarriers {
                let slots = (0..n_bs)
                    .map(|b| equivalent_time_profile(base.slot(0), &c.geometry, &temporal_cfg, n, b0, b, flags))
                    .collect::<risloc::Result<Vec<_>>>()?;
                let profile = Profile::from_slots(&slots)?;
                let mask = SampleMask::from_samples((0..n_bs).map(|t| (b0, n, t)).collect())?;
                temporal.add_assign(
                    &risloc::Model::new(&c.geometry, &temporal_cfg, flags, &profile)?.fim(Parameterization::Position, &mask)?,
                );
            }
            worst = worst.max(max_rel_diff(&temporal, &spatial));
        }
        Ok(Check::from_metrics(
            name,
            count,
            vec![Metric::new("max_relative_difference", worst, 1e-10)],
            "per sub-carrier, slot t replaces antenna t".into(),
        ))
    })
}

/// Case-1 and Case-2 focusing profiles null the EFIM of the intermediate
/// parameters.
pub fn check_focusing_cases(master: u64, count: usize) -> Check {
    let name = "focusing_cases_null_intermediate_efim";
    guard(name, || {
        let (mut null1, mut null2, mut gain): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let null_ratio = |jbar: &Matrix<f64>| -> Result<f64> {
            let eta = efim_eta(jbar)?;
            Ok(eta.frobenius_norm() / jbar.select(&[2, 3, 4], &[2, 3, 4]).frobenius_norm())
        };
        for i in 0..count as u64 {
            let c = case(master, 8000 + i, ChannelModelFlags::NEAR_NEAR)?;
            let g = &c.geometry;
            let mut cfg = c.cfg.clone();
            cfg.n_slots = g.n_bs();
            let n0 = cfg.n_subcarriers - 1;
            let m1 = risloc::Model::new(g, &cfg, c.flags, &case1_profiles(g, &cfg, n0, c.flags)?)?;
            let jbar = m1.fim(Parameterization::Intermediate, &SampleMask::case1(g.n_bs(), n0))?;
            null1 = null1.max(null_ratio(&jbar)?);
            let nr = g.n_ris() as f64;
            let want = 2.0 * g.n_bs() as f64 * nr * nr / cfg.noise_var;
            gain = gain.max((jbar[(0, 0)] - want).abs() / want);

            cfg.n_slots = cfg.n_subcarriers;
            let m2 = risloc::Model::new(g, &cfg, c.flags, &case2_profiles(g, &cfg, 0, c.flags)?)?;
            let jbar = m2.fim(Parameterization::Intermediate, &SampleMask::case2(cfg.n_subcarriers, 0))?;
            null2 = null2.max(null_ratio(&jbar)?);
        }
        Ok(Check::from_metrics(
            name,
            count,
            vec![
                Metric::new("case1_efim_ratio", null1, 1e-8),
                Metric::new("case2_efim_ratio", null2, 1e-8),
                Metric::new("case1_alpha_information_error", gain, 1e-10),
            ],
            String::new(),
        ))
    })
}

/// Adding a sample never increases the PEB.
pub fn check_monotonicity(master: u64, pairs: usize) -> Check {
    let name = "adding_samples_never_increases_peb";
    guard(name, || {
        let mut worst = f64::NEG_INFINITY;
        let mut compared = 0;
        let mut i = 0u64;
        while compared < pairs && i < 20 * pairs as u64 {
            let c = case(master, 9000 + i, ChannelModelFlags::NEAR_NEAR)?;
            let model = c.model()?;
            let mut all = all_samples(&c)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, 9500 + i));
            all.shuffle(&mut rng);
            i += 1;
            if all.len() < 2 {
                continue;
            }
            let k = rng.gen_range(1..all.len());
            let small = model.peb(&SampleMask::from_samples(all[..k].to_vec())?)?;
            let large = model.peb(&SampleMask::from_samples(all[..=k].to_vec())?)?;
            if let (Bound::Value(a), Bound::Value(b)) = (small, large) {
                worst = worst.max((b - a) / a);
                compared += 1;
            }
        }
        Ok(Check::from_metrics(
            name,
            compared,
            vec![
                Metric::new("max_relative_increase", worst, 1e-10),
                Metric::new("missing_pairs", (pairs - compared) as f64, 0.0),
            ],
            format!("{compared} nested pairs with both matrices invertible"),
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    /// The negative control is expected to fail; `true` when it did.
    pub negative_control_detected: bool,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.negative_control_detected && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn write(&self, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let mut out = OutputSet::new(cfg)?;
        out.json("report", &serde_json::to_value(self)?)?;
        out.finish(
            cfg,
            json!({
                "all_passed": self.all_passed(),
                "verdicts": self.checks.iter().map(|c| json!({"name": c.name, "passed": c.passed})).collect::<Vec<_>>(),
                "negative_control_detected": self.negative_control_detected,
            }),
            &[],
        )
    }
}

/// Runs every check on `scenarios` random scenarios (50 for the rank check).
pub fn run_proposition_suite(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let SweepSpec::Suite(spec) = &cfg.sweep else {
        return Err(HarnessError::Config("prop-suite needs a suite sweep".into()));
    };
    let (m, n) = (cfg.seed, spec.scenarios);
    let jobs: Vec<Box<dyn Fn() -> Check + Sync>> = vec![
        Box::new(move || check_derivatives(m, n)),
        Box::new(move || check_single_sample_rank(m, n.max(50))),
        Box::new(move || check_reparameterization(m, n)),
        Box::new(move || check_efi_identity(m, n)),
        Box::new(move || check_planar_ris_ue(m, n, Far)),
        Box::new(move || check_identical_antennas(m, n)),
        Box::new(move || check_single_carrier(m, n)),
        Box::new(move || check_time_space(m, n)),
        Box::new(move || check_focusing_cases(m, n)),
        Box::new(move || check_monotonicity(m, n)),
        Box::new(move || check_planar_ris_ue(m, n, Near)),
    ];
    use rayon::prelude::*;
    let mut checks: Vec<Check> = jobs.par_iter().map(|f| f()).collect();
    let control = checks.pop().expect("negative control");
    Ok(SuiteReport {
        checks,
        negative_control_detected: !control.passed,
    })
}
