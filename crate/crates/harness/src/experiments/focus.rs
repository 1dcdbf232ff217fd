//! PEB and SNR around a focusing RIS profile, with and without clock
//! synchronization.

use std::path::PathBuf;

use rayon::prelude::*;
use risloc::fisher::{efi_equilibrated, peb, Parameterization};
use risloc::{IntermediateParam, Model, Scenario, Signal, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{build_profile, sample_mask};
use crate::config::{ArraySpec, ExperimentConfig, ProfileSpec, ScenarioSpec, SweepSpec};
use crate::error::{HarnessError, Result};
use crate::output::{num, opt_num, Outcome, OutputSet};
use crate::snr::{average_snr, build_model, linear_to_db};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusPoint {
    pub position: [f64; 3],
    pub peb_async: Outcome,
    pub peb_sync: Outcome,
    pub snr_db: Option<f64>,
}

/// Square-root CRLBs of `d_RU`, `φ_RU`, `θ_RU` at the focus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbRow {
    pub bandwidth_hz: f64,
    pub n_bs: usize,
    pub distance_m: Outcome,
    pub azimuth_rad: Outcome,
    pub elevation_rad: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRow {
    pub bs_rows: usize,
    pub bs_cols: usize,
    pub bandwidth_hz: f64,
    pub focus: FocusPoint,
    pub reference: FocusPoint,
}

impl PeakRow {
    fn ratio(a: &Outcome, b: &Outcome) -> Option<f64> {
        Some(a.value()? / b.value()?)
    }

    /// Async PEB at the focus over async PEB at the reference point.
    pub fn async_ratio(&self) -> Option<f64> {
        Self::ratio(&self.focus.peb_async, &self.reference.peb_async)
    }

    pub fn sync_ratio(&self) -> Option<f64> {
        Self::ratio(&self.focus.peb_sync, &self.reference.peb_sync)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusEval {
    pub focus: [f64; 3],
    pub reference: [f64; 3],
    pub grid: Vec<FocusPoint>,
    pub cut: Vec<FocusPoint>,
    pub crlb_vs_bandwidth: Vec<CrlbRow>,
    pub crlb_vs_bs: Vec<CrlbRow>,
    pub peaks: Vec<PeakRow>,
}

impl FocusEval {
    pub fn write(&self, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let mut out = OutputSet::new(cfg)?;
        let header = ["x_m", "y_m", "z_m", "peb_async_m", "peb_sync_m", "snr_db"];
        let row = |p: &FocusPoint| {
            vec![
                num(p.position[0]),
                num(p.position[1]),
                num(p.position[2]),
                p.peb_async.cell(),
                p.peb_sync.cell(),
                opt_num(p.snr_db),
            ]
        };
        out.csv("grid", &header, self.grid.iter().map(row))?;
        out.csv("cut", &header, self.cut.iter().map(row))?;
        let crlb_header = ["bandwidth_hz", "n_bs", "crlb_distance_m", "crlb_azimuth_rad", "crlb_elevation_rad"];
        let crlb_row = |r: &CrlbRow| {
            vec![
                num(r.bandwidth_hz),
                r.n_bs.to_string(),
                r.distance_m.cell(),
                r.azimuth_rad.cell(),
                r.elevation_rad.cell(),
            ]
        };
        out.csv("crlb_bandwidth", &crlb_header, self.crlb_vs_bandwidth.iter().map(crlb_row))?;
        out.csv("crlb_bs", &crlb_header, self.crlb_vs_bs.iter().map(crlb_row))?;
        out.csv(
            "peaks",
            &[
                "bs_rows",
                "bs_cols",
                "bandwidth_hz",
                "peb_async_focus_m",
                "peb_async_reference_m",
                "peb_sync_focus_m",
                "peb_sync_reference_m",
                "snr_focus_db",
                "snr_reference_db",
                "async_peak_ratio",
            ],
            self.peaks.iter().map(|p| {
                vec![
                    p.bs_rows.to_string(),
                    p.bs_cols.to_string(),
                    num(p.bandwidth_hz),
                    p.focus.peb_async.cell(),
                    p.reference.peb_async.cell(),
                    p.focus.peb_sync.cell(),
                    p.reference.peb_sync.cell(),
                    opt_num(p.focus.snr_db),
                    opt_num(p.reference.snr_db),
                    opt_num(p.async_ratio()),
                ]
            }),
        )?;
        let peaks: Vec<_> = self
            .peaks
            .iter()
            .map(|p| json!({"bs_rows": p.bs_rows, "bs_cols": p.bs_cols, "bandwidth_hz": p.bandwidth_hz, "async_ratio": p.async_ratio(), "sync_ratio": p.sync_ratio()}))
            .collect();
        out.finish(
            cfg,
            json!({"focus": self.focus, "reference": self.reference, "peaks": peaks}),
            &[
                "the configured SNR policy is applied to the grid, the cut and both CRLB tables",
                "peak ratio = async PEB at the focus / async PEB at the reference point on the cut",
            ],
        )
    }
}

fn evaluate(geometry: &Scenario, signal: &Signal, profile: &risloc::Profile, cfg: &ExperimentConfig, p: [f64; 3]) -> FocusPoint {
    let r = (|| -> Result<_> {
        let g = geometry.with_ue(Vec3::from_array(p))?;
        let m = build_model(&g, signal, cfg.scenario.flags, profile, cfg.snr)?;
        let mask = sample_mask(&cfg.profile, &g, signal);
        let sync = m.fim_sync(&mask)?;
        Ok((
            Outcome::from_bound(m.peb(&mask)?),
            Outcome::from_bound(peb(&sync, 1..4)?),
            linear_to_db(average_snr(&m)?),
        ))
    })();
    match r {
        Ok((a, s, snr)) => FocusPoint {
            position: p,
            peb_async: a,
            peb_sync: s,
            snr_db: Some(snr),
        },
        Err(e) => FocusPoint {
            position: p,
            peb_async: Outcome::Failed(e.to_string()),
            peb_sync: Outcome::Failed(e.to_string()),
            snr_db: None,
        },
    }
}

struct Setup {
    geometry: Scenario,
    signal: Signal,
    profile: risloc::Profile,
}

fn setup(cfg: &ExperimentConfig, spec: &ScenarioSpec) -> Result<Setup> {
    let geometry = spec.geometry()?;
    let signal = spec.signal()?;
    let profile = build_profile(&cfg.profile, cfg.seed, 0, &geometry, &signal, spec.flags)?;
    Ok(Setup {
        geometry,
        signal,
        profile,
    })
}

fn crlb_row(cfg: &ExperimentConfig, spec: &ScenarioSpec, focus: [f64; 3]) -> CrlbRow {
    let r = (|| -> Result<_> {
        let s = setup(cfg, spec)?;
        let g = s.geometry.with_ue(Vec3::from_array(focus))?;
        let m: Model = build_model(&g, &s.signal, spec.flags, &s.profile, cfg.snr)?;
        let j = m.fim(Parameterization::DistanceShifted, &sample_mask(&cfg.profile, &g, &s.signal))?;
        // [J̄⁻¹]_kk = 1 / EFI_k
        let crlb = |k| match efi_equilibrated(&j, k) {
            Ok(risloc::Bound::Value(v)) if v > 0.0 => Outcome::Value(v.recip().sqrt()),
            Ok(risloc::Bound::Value(_)) => Outcome::Singular { rank: 4 },
            Ok(b) => Outcome::from_bound(b),
            Err(e) => Outcome::Failed(e.to_string()),
        };
        Ok([
            crlb(IntermediateParam::Distance),
            crlb(IntermediateParam::Azimuth),
            crlb(IntermediateParam::Elevation),
        ])
    })();
    let [distance_m, azimuth_rad, elevation_rad] = r.unwrap_or_else(|e| {
        let f = Outcome::Failed(e.to_string());
        [f.clone(), f.clone(), f]
    });
    CrlbRow {
        bandwidth_hz: spec.signal.bandwidth_hz,
        n_bs: spec.bs.len(),
        distance_m,
        azimuth_rad,
        elevation_rad,
    }
}

/// Grid, line cut, CRLB tables and peak-height comparison for the
/// configured focusing profile.
pub fn run_focusing_eval(cfg: &ExperimentConfig) -> Result<FocusEval> {
    let SweepSpec::Focus(sweep) = &cfg.sweep else {
        return Err(HarnessError::Config("focus-eval needs a focus sweep".into()));
    };
    let ProfileSpec::Focusing { focus, .. } = cfg.profile else {
        return Err(HarnessError::Config("focus-eval needs a focusing profile".into()));
    };
    let base = setup(cfg, &cfg.scenario)?;
    let reference = [sweep.reference_x_m, focus[1], focus[2]];
    let at = |s: &Setup, p| evaluate(&s.geometry, &s.signal, &s.profile, cfg, p);

    let grid = sweep.grid.points().into_par_iter().map(|p| at(&base, p)).collect();
    let cut = sweep
        .cut_x_m
        .values()
        .into_par_iter()
        .map(|x| at(&base, [x, focus[1], focus[2]]))
        .collect();

    let crlb_vs_bandwidth = sweep
        .bandwidths_hz
        .par_iter()
        .map(|&bw| {
            let mut spec = cfg.scenario.clone();
            spec.signal.bandwidth_hz = bw;
            crlb_row(cfg, &spec, focus)
        })
        .collect();
    let crlb_vs_bs = sweep
        .bs_sides
        .par_iter()
        .map(|&side| {
            let mut spec = cfg.scenario.clone();
            spec.bs = ArraySpec {
                rows: side,
                cols: side,
                ..spec.bs.clone()
            };
            crlb_row(cfg, &spec, focus)
        })
        .collect();

    let peaks = sweep
        .peak_configs
        .par_iter()
        .map(|pc| -> Result<PeakRow> {
            let mut spec = cfg.scenario.clone();
            spec.bs = ArraySpec {
                rows: pc.bs_rows,
                cols: pc.bs_cols,
                ..spec.bs.clone()
            };
            spec.signal.bandwidth_hz = pc.bandwidth_hz;
            let s = setup(cfg, &spec)?;
            Ok(PeakRow {
                bs_rows: pc.bs_rows,
                bs_cols: pc.bs_cols,
                bandwidth_hz: pc.bandwidth_hz,
                focus: at(&s, focus),
                reference: at(&s, reference),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FocusEval {
        focus,
        reference,
        grid,
        cut,
        crlb_vs_bandwidth,
        crlb_vs_bs,
        peaks,
    })
}
