//! EFI of `d_RU`, `φ_RU`, `θ_RU` as the UE moves away along a ray, under the
//! spherical and planar RIS-UE models.

use std::path::PathBuf;

use rayon::prelude::*;
use risloc::fisher::{efi, efi_equilibrated, schur_complement, Parameterization};
use risloc::geometry::spherical_to_cartesian;
use risloc::{Bound, IntermediateParam, SphericalDirection, WavefrontModel};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{build_profile, sample_mask};
use crate::config::{with_ris_ue, ExperimentConfig, SweepSpec};
use crate::error::{HarnessError, Result};
use crate::output::{num, Outcome, OutputSet};
use crate::snr::build_model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfiTriple {
    pub distance: Outcome,
    pub azimuth: Outcome,
    pub elevation: Outcome,
}

impl EfiTriple {
    fn failed(msg: &str) -> Self {
        let f = Outcome::Failed(msg.to_string());
        Self {
            distance: f.clone(),
            azimuth: f.clone(),
            elevation: f,
        }
    }
}

/// Angle EFIs over `[α, cξ+d, φ, θ]`, i.e. with the distance held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub azimuth: Outcome,
    pub elevation: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfiPoint {
    pub d_ru_m: f64,
    pub near: EfiTriple,
    /// Spherical-model counterpart of the planar reduced angle EFIs.
    pub near_fixed_distance: AnglePair,
    pub far: EfiTriple,
    /// `[J̄]_{d,d}` of the planar model, the scale for its vanishing distance EFI.
    pub far_jbar_dd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfiSweep {
    pub points: Vec<EfiPoint>,
}

fn outcome(b: Result<Bound<f64>>) -> Outcome {
    Outcome::from_result(b)
}

impl EfiSweep {
    pub fn write(&self, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let mut out = OutputSet::new(cfg)?;
        out.csv(
            "",
            &[
                "d_ru_m",
                "efi_distance_near_per_m2",
                "efi_azimuth_near_per_rad2",
                "efi_elevation_near_per_rad2",
                "efi_distance_far_per_m2",
                "efi_azimuth_far_per_rad2",
                "efi_elevation_far_per_rad2",
                "jbar_distance_far_per_m2",
                "efi_azimuth_near_fixed_distance_per_rad2",
                "efi_elevation_near_fixed_distance_per_rad2",
            ],
            self.points.iter().map(|p| {
                vec![
                    num(p.d_ru_m),
                    p.near.distance.cell(),
                    p.near.azimuth.cell(),
                    p.near.elevation.cell(),
                    p.far.distance.cell(),
                    p.far.azimuth.cell(),
                    p.far.elevation.cell(),
                    crate::output::opt_num(p.far_jbar_dd),
                    p.near_fixed_distance.azimuth.cell(),
                    p.near_fixed_distance.elevation.cell(),
                ]
            }),
        )?;
        let first = self.points.first().and_then(|p| p.near.distance.value());
        let last = self.points.last().and_then(|p| p.near.distance.value());
        out.finish(
            cfg,
            json!({
                "points": self.points.len(),
                "near_distance_efi_first": first,
                "near_distance_efi_last": last,
            }),
            &[
                "near-model EFIs are Schur complements of the Fisher matrix over [alpha, c*xi + d, d, phi, theta], which equal those of [alpha, c*xi, d, phi, theta]",
                "far-model angle EFIs come from the reduced matrix over [alpha, c*xi + d, phi, theta]",
                "near fixed-distance angle EFIs use the same reduced parameter set in the spherical model, so they are directly comparable with the far-model ones",
            ],
        )
    }
}

/// Schur complement of entry `i` of a 4x4 matrix over `[α, cξ+d, φ, θ]`.
fn reduced_angle(j: &risloc::numerics::Matrix<f64>, i: usize) -> Outcome {
    outcome(match schur_complement(j, &[i]) {
        Ok(s) => Ok(Bound::Value(s[(0, 0)].max(0.0))),
        Err(risloc::Error::Singular { rank, dim }) => Ok(Bound::Singular { rank, dim }),
        Err(e) => Err(e.into()),
    })
}

/// EFIs at each distance of the sweep; the SNR policy is applied to each
/// model at each point.
pub fn run_efi_vs_distance(cfg: &ExperimentConfig) -> Result<EfiSweep> {
    let SweepSpec::Distance(sweep) = &cfg.sweep else {
        return Err(HarnessError::Config("efi-sweep needs a distance sweep".into()));
    };
    let base = cfg.scenario.geometry()?;
    let signal = cfg.scenario.signal()?;
    let near_flags = with_ris_ue(cfg.scenario.flags, WavefrontModel::Near);
    let far_flags = with_ris_ue(cfg.scenario.flags, WavefrontModel::Far);
    let profile = build_profile(&cfg.profile, cfg.seed, 0, &base, &signal, near_flags)?;
    let mask = sample_mask(&cfg.profile, &base, &signal);
    let points = sweep
        .distance_m
        .values()
        .into_par_iter()
        .map(|d| {
            let dir = SphericalDirection::new(d, sweep.elevation_rad, sweep.azimuth_rad);
            let geometry = base.with_ue(spherical_to_cartesian(base.ris_reference, &dir));
            let near = || -> Result<(EfiTriple, AnglePair)> {
                let m = build_model(geometry.as_ref().map_err(Clone::clone)?, &signal, near_flags, &profile, cfg.snr)?;
                let j = m.fim(Parameterization::DistanceShifted, &mask)?;
                let e = |k| outcome(efi_equilibrated(&j, k).map_err(Into::into));
                let reduced = j.select(&[0, 1, 3, 4], &[0, 1, 3, 4]);
                Ok((
                    EfiTriple {
                        distance: e(IntermediateParam::Distance),
                        azimuth: e(IntermediateParam::Azimuth),
                        elevation: e(IntermediateParam::Elevation),
                    },
                    AnglePair {
                        azimuth: reduced_angle(&reduced, 2),
                        elevation: reduced_angle(&reduced, 3),
                    },
                ))
            };
            let far = || -> Result<(EfiTriple, f64)> {
                let m = build_model(geometry.as_ref().map_err(Clone::clone)?, &signal, far_flags, &profile, cfg.snr)?;
                let jbar = m.fim(Parameterization::Intermediate, &mask)?;
                let reduced = m.fim(Parameterization::ReducedFarField, &mask)?;
                Ok((
                    EfiTriple {
                        distance: outcome(efi(&jbar, IntermediateParam::Distance).map_err(Into::into)),
                        azimuth: reduced_angle(&reduced, 2),
                        elevation: reduced_angle(&reduced, 3),
                    },
                    jbar[(2, 2)],
                ))
            };
            let (near, near_fixed_distance) = near().unwrap_or_else(|e| {
                let f = Outcome::Failed(e.to_string());
                (
                    EfiTriple::failed(&e.to_string()),
                    AnglePair {
                        azimuth: f.clone(),
                        elevation: f,
                    },
                )
            });
            let (far, far_jbar_dd) = match far() {
                Ok((t, dd)) => (t, Some(dd)),
                Err(e) => (EfiTriple::failed(&e.to_string()), None),
            };
            EfiPoint {
                d_ru_m: d,
                near,
                near_fixed_distance,
                far,
                far_jbar_dd,
            }
        })
        .collect();
    Ok(EfiSweep { points })
}
