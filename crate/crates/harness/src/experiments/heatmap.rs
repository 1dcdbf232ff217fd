//! PEB over a plane of UE positions.

use std::path::PathBuf;

use rayon::prelude::*;
use risloc::Vec3;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{build_profile, sample_mask};
use crate::config::{ExperimentConfig, SweepSpec};
use crate::error::{HarnessError, Result};
use crate::output::{median, num, Outcome, OutputSet};
use crate::snr::build_model;

/// Points closer than this to the RIS form the near region.
pub const NEAR_REGION_M: f64 = 3.0;
/// Points farther than this form the far region.
pub const FAR_REGION_M: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapPoint {
    pub position: [f64; 3],
    pub d_ru_m: f64,
    pub alpha: Option<f64>,
    pub peb: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub points: Vec<HeatmapPoint>,
}

impl Heatmap {
    fn region(&self, keep: impl Fn(f64) -> bool) -> Vec<&Outcome> {
        self.points.iter().filter(|p| keep(p.d_ru_m)).map(|p| &p.peb).collect()
    }

    /// Median PEB over points with `d_RU < NEAR_REGION_M`.
    pub fn near_median(&self) -> Option<Outcome> {
        median(self.region(|d| d < NEAR_REGION_M))
    }

    /// Median PEB over points with `d_RU > FAR_REGION_M`.
    pub fn far_median(&self) -> Option<Outcome> {
        median(self.region(|d| d > FAR_REGION_M))
    }

    pub fn summary(&self) -> serde_json::Value {
        let count = |f: &dyn Fn(&Outcome) -> bool| self.points.iter().filter(|p| f(&p.peb)).count();
        json!({
            "points": self.points.len(),
            "singular": count(&|o| o.is_singular()),
            "failed": count(&|o| matches!(o, Outcome::Failed(_))),
            "near_region_max_d_ru_m": NEAR_REGION_M,
            "far_region_min_d_ru_m": FAR_REGION_M,
            "near_points": self.region(|d| d < NEAR_REGION_M).len(),
            "far_points": self.region(|d| d > FAR_REGION_M).len(),
            "near_median_peb_m": self.near_median(),
            "far_median_peb_m": self.far_median(),
        })
    }

    pub fn write(&self, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let mut out = OutputSet::new(cfg)?;
        out.csv(
            "",
            &["x_m", "y_m", "z_m", "d_ru_m", "alpha", "peb_m"],
            self.points.iter().map(|p| {
                vec![
                    num(p.position[0]),
                    num(p.position[1]),
                    num(p.position[2]),
                    num(p.d_ru_m),
                    crate::output::opt_num(p.alpha),
                    p.peb.cell(),
                ]
            }),
        )?;
        let failures: Vec<_> = self
            .points
            .iter()
            .filter_map(|p| match &p.peb {
                Outcome::Failed(e) => Some(json!({"position": p.position, "error": e})),
                _ => None,
            })
            .collect();
        let mut summary = self.summary();
        summary["failures"] = json!(failures);
        out.finish(
            cfg,
            summary,
            &["medians order singular points after every finite PEB"],
        )
    }
}

/// PEB at every grid point, with the SNR policy applied per point and one
/// random profile shared by the whole grid.
pub fn run_peb_heatmap(cfg: &ExperimentConfig) -> Result<Heatmap> {
    let SweepSpec::Grid(grid) = &cfg.sweep else {
        return Err(HarnessError::Config("peb-map needs a grid sweep".into()));
    };
    let base = cfg.scenario.geometry()?;
    let signal = cfg.scenario.signal()?;
    let flags = cfg.scenario.flags;
    let profile = build_profile(&cfg.profile, cfg.seed, 0, &base, &signal, flags)?;
    let mask = sample_mask(&cfg.profile, &base, &signal);
    let points = grid
        .points()
        .into_par_iter()
        .map(|position| {
            let p = Vec3::from_array(position);
            let d_ru_m = (p - base.ris_reference).norm();
            let eval = || -> Result<(f64, Outcome)> {
                let g = base.with_ue(p)?;
                let model = build_model(&g, &signal, flags, &profile, cfg.snr)?;
                Ok((model.config().alpha, Outcome::from_bound(model.peb(&mask)?)))
            };
            let (alpha, peb) = match eval() {
                Ok((a, o)) => (Some(a), o),
                Err(e) => (None, Outcome::Failed(e.to_string())),
            };
            HeatmapPoint {
                position,
                d_ru_m,
                alpha,
                peb,
            }
        })
        .collect();
    Ok(Heatmap { points })
}
