//! Spatial gain (spherical BS-RIS model) against power gain (planar BS-RIS
//! model) over random RIS profiles.

use std::path::PathBuf;

use rayon::prelude::*;
use risloc::{Vec3, WavefrontModel};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{build_profile, sample_mask};
use crate::config::{ArraySpec, ExperimentConfig, GainSweep, ResourceConfig, ScenarioSpec, SweepSpec};
use crate::error::{HarnessError, Result};
use crate::output::{mean_of_values, num, opt_num, Outcome, OutputSet};
use crate::snr::build_model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainAxis {
    DBr,
    DeltaB,
}

impl GainAxis {
    fn name(self) -> &'static str {
        match self {
            Self::DBr => "d_br_m",
            Self::DeltaB => "delta_b_m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTrial {
    pub config: String,
    pub axis: GainAxis,
    pub x: f64,
    pub trial: usize,
    pub spatial: Outcome,
    pub power: Outcome,
}

impl GainTrial {
    /// Power gain strictly better; a singular spatial bound loses to any
    /// finite power bound.
    pub fn power_wins(&self) -> bool {
        self.power.total_cmp(&self.spatial).is_lt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainAggregate {
    pub config: String,
    pub axis: GainAxis,
    pub x: f64,
    pub trials: usize,
    pub mean_spatial_m: Option<f64>,
    pub mean_power_m: Option<f64>,
    pub singular_spatial: usize,
    pub singular_power: usize,
    pub power_win_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainComparison {
    pub trials: Vec<GainTrial>,
    pub aggregates: Vec<GainAggregate>,
}

impl GainComparison {
    pub fn aggregate(&self, config: &str, axis: GainAxis, x: f64) -> Option<&GainAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.config == config && a.axis == axis && a.x == x)
    }

    pub fn series(&self, config: &str, axis: GainAxis) -> Vec<&GainAggregate> {
        self.aggregates
            .iter()
            .filter(|a| a.config == config && a.axis == axis)
            .collect()
    }

    pub fn write(&self, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let mut out = OutputSet::new(cfg)?;
        out.csv(
            "trials",
            &["config", "axis", "x_m", "trial", "peb_spatial_m", "peb_power_m"],
            self.trials.iter().map(|t| {
                vec![
                    t.config.clone(),
                    t.axis.name().into(),
                    num(t.x),
                    t.trial.to_string(),
                    t.spatial.cell(),
                    t.power.cell(),
                ]
            }),
        )?;
        out.csv(
            "summary",
            &[
                "config",
                "axis",
                "x_m",
                "trials",
                "mean_peb_spatial_m",
                "mean_peb_power_m",
                "singular_spatial",
                "singular_power",
                "power_win_ratio",
            ],
            self.aggregates.iter().map(|a| {
                vec![
                    a.config.clone(),
                    a.axis.name().into(),
                    num(a.x),
                    a.trials.to_string(),
                    opt_num(a.mean_spatial_m),
                    opt_num(a.mean_power_m),
                    a.singular_spatial.to_string(),
                    a.singular_power.to_string(),
                    num(a.power_win_ratio),
                ]
            }),
        )?;
        out.finish(
            cfg,
            json!({ "aggregates": self.aggregates }),
            &[
                "means exclude singular trials; their counts are reported separately",
                "power_win_ratio counts a singular spatial bound as a loss against a finite power bound",
                "every resource configuration and sweep point reuses the same per-trial profile seeds",
            ],
        )
    }
}

struct Job<'a> {
    config: &'a ResourceConfig,
    axis: GainAxis,
    x: f64,
    trial: usize,
}

fn scenario_for(spec: &ScenarioSpec, sweep: &GainSweep, job: &Job) -> Result<ScenarioSpec> {
    let mut s = spec.clone();
    let ris = Vec3::from_array(s.ris_position);
    let dir = Vec3::from_array(s.bs_position) - ris;
    let n = dir.norm();
    if !(n > 0.0) {
        return Err(HarnessError::Config("BS and RIS coincide".into()));
    }
    let d_br = match job.axis {
        GainAxis::DBr => job.x,
        GainAxis::DeltaB => sweep.delta_b_at_d_br_m,
    };
    s.bs_position = (ris + dir.scale(d_br / n)).to_array();
    if job.axis == GainAxis::DeltaB {
        s.bs = ArraySpec {
            spacing_m: job.x,
            ..s.bs.clone()
        };
    }
    s.signal.bandwidth_hz = job.config.bandwidth_hz;
    s.signal.n_slots = job.config.n_slots;
    Ok(s)
}

fn run_job(cfg: &ExperimentConfig, sweep: &GainSweep, job: &Job) -> GainTrial {
    let eval = |bs_ris: WavefrontModel| -> Outcome {
        let r = (|| -> Result<_> {
            let spec = scenario_for(&cfg.scenario, sweep, job)?;
            let g = spec.geometry()?;
            let signal = spec.signal()?;
            let flags = risloc::ChannelModelFlags::new(spec.flags.ris_ue, bs_ris);
            let profile = build_profile(&cfg.profile, cfg.seed, job.trial, &g, &signal, flags)?;
            let model = build_model(&g, &signal, flags, &profile, cfg.snr)?;
            Ok(model.peb(&sample_mask(&cfg.profile, &g, &signal))?)
        })();
        Outcome::from_result(r)
    };
    GainTrial {
        config: job.config.name.clone(),
        axis: job.axis,
        x: job.x,
        trial: job.trial,
        spatial: eval(WavefrontModel::Near),
        power: eval(WavefrontModel::Far),
    }
}

/// Monte Carlo over the configured trials for every resource configuration,
/// along the `d_BR` sweep and the BS-spacing sweep.
pub fn run_gain_comparison(cfg: &ExperimentConfig) -> Result<GainComparison> {
    let SweepSpec::Gain(sweep) = &cfg.sweep else {
        return Err(HarnessError::Config("gain-compare needs a gain sweep".into()));
    };
    let n_trials = cfg.trials();
    let mut jobs = Vec::new();
    for config in &sweep.configs {
        let axes = sweep
            .d_br_m
            .values()
            .into_iter()
            .map(|x| (GainAxis::DBr, x))
            .chain(sweep.delta_b_m.iter().map(|&x| (GainAxis::DeltaB, x)));
        for (axis, x) in axes {
            for trial in 0..n_trials {
                jobs.push(Job { config, axis, x, trial });
            }
        }
    }
    let trials: Vec<GainTrial> = jobs.par_iter().map(|j| run_job(cfg, sweep, j)).collect();
    let aggregates = trials
        .chunks(n_trials)
        .map(|chunk| {
            let head = &chunk[0];
            let (mean_spatial_m, _) = mean_of_values(chunk.iter().map(|t| &t.spatial));
            let (mean_power_m, _) = mean_of_values(chunk.iter().map(|t| &t.power));
            GainAggregate {
                config: head.config.clone(),
                axis: head.axis,
                x: head.x,
                trials: chunk.len(),
                mean_spatial_m,
                mean_power_m,
                singular_spatial: chunk.iter().filter(|t| t.spatial.is_singular()).count(),
                singular_power: chunk.iter().filter(|t| t.power.is_singular()).count(),
                power_win_ratio: chunk.iter().filter(|t| t.power_wins()).count() as f64 / chunk.len() as f64,
            }
        })
        .collect();
    Ok(GainComparison { trials, aggregates })
}
