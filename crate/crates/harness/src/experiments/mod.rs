//! Runners for each CLI subcommand.

pub mod efi;
pub mod focus;
pub mod gain;
pub mod heatmap;
pub mod suite;

use std::path::PathBuf;

use risloc::fisher::SampleMask;
use risloc::ris::{case1_profiles, case2_profiles, focusing_phases, focusing_profile};
use risloc::{ChannelModelFlags, Profile, Scenario, Signal, Vec3};

use crate::config::{Experiment, ExperimentConfig, ProfileSpec};
use crate::error::{HarnessError, Result};
use crate::seeds::derive_seed;

/// RIS profile for `trial` of the configured kind, with `cfg.n_slots` slots.
pub fn build_profile(
    spec: &ProfileSpec,
    master_seed: u64,
    trial: usize,
    geometry: &Scenario,
    cfg: &Signal,
    flags: ChannelModelFlags,
) -> Result<Profile> {
    let p = match spec {
        ProfileSpec::Random { .. } => Profile::random(geometry.n_ris(), cfg.n_slots, derive_seed(master_seed, trial as u64))?,
        ProfileSpec::Focusing { focus, ref_antenna, n0 } => {
            let focus = Vec3::from_array(*focus);
            let slot = match ref_antenna {
                Some(b) => focusing_profile(geometry, focus, *b, n0.unwrap_or(0), cfg, flags)?.slot(0).to_vec(),
                None => {
                    let f = match n0 {
                        Some(n) => risloc::channel::subcarrier_freq(*n, cfg)?,
                        None => cfg.carrier_hz,
                    };
                    focusing_phases(f, geometry.bs_reference, focus, geometry)?
                }
            };
            Profile::from_slots(&vec![slot; cfg.n_slots])?
        }
        ProfileSpec::Case1 { n0 } => case1_profiles(geometry, cfg, *n0, flags)?,
        ProfileSpec::Case2 { b0 } => case2_profiles(geometry, cfg, *b0, flags)?,
    };
    if p.n_slots() != cfg.n_slots {
        return Err(HarnessError::Config(format!(
            "profile has {} slots but the signal has {}",
            p.n_slots(),
            cfg.n_slots
        )));
    }
    Ok(p)
}

/// Samples the Fisher matrices are built from.
pub fn sample_mask(spec: &ProfileSpec, geometry: &Scenario, cfg: &Signal) -> SampleMask {
    match spec {
        ProfileSpec::Case1 { n0 } => SampleMask::case1(geometry.n_bs(), *n0),
        ProfileSpec::Case2 { b0 } => SampleMask::case2(cfg.n_subcarriers, *b0),
        _ => SampleMask::All,
    }
}

/// Runs the experiment and writes its files; returns the paths written.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    match cfg.experiment {
        Experiment::PebMap => heatmap::run_peb_heatmap(cfg)?.write(cfg),
        Experiment::EfiSweep => efi::run_efi_vs_distance(cfg)?.write(cfg),
        Experiment::GainCompare => gain::run_gain_comparison(cfg)?.write(cfg),
        Experiment::FocusEval => focus::run_focusing_eval(cfg)?.write(cfg),
        Experiment::PropSuite => suite::run_proposition_suite(cfg)?.write(cfg),
    }
}
