//! Experiment configuration: scenario, RIS profile, sweep, SNR policy and
//! outputs, with desk- and full-scale presets.

use std::path::PathBuf;

use risloc::geometry::{build_ura, Plane};
use risloc::{ChannelModelFlags, Scenario, Signal, Vec3, WavefrontModel, SPEED_OF_LIGHT};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

pub const CARRIER_HZ: f64 = 28e9;

fn half_wavelength() -> f64 {
    SPEED_OF_LIGHT / CARRIER_HZ / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// 12x12 RIS, 4x4 BS; every run finishes in about a minute.
    Desk,
    /// 60x60 RIS, 8x8 BS. Slow.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PebMap,
    EfiSweep,
    GainCompare,
    FocusEval,
    PropSuite,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::PebMap => "peb-map",
            Self::EfiSweep => "efi-sweep",
            Self::GainCompare => "gain-compare",
            Self::FocusEval => "focus-eval",
            Self::PropSuite => "prop-suite",
        }
    }
}

/// Planar array layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub plane: Plane,
}

impl ArraySpec {
    pub fn square(side: usize) -> Self {
        Self {
            rows: side,
            cols: side,
            spacing_m: half_wavelength(),
            plane: Plane::Yz,
        }
    }

    pub fn offsets(&self) -> Result<Vec<Vec3<f64>>> {
        Ok(build_ura(self.rows, self.cols, self.spacing_m, self.plane)?)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub carrier_hz: f64,
    pub n_subcarriers: usize,
    pub bandwidth_hz: f64,
    pub n_slots: usize,
    pub noise_var: f64,
    /// Clock offset in seconds; it never changes a bound, only `μ`.
    #[serde(default)]
    pub xi_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub bs_position: [f64; 3],
    pub ris_position: [f64; 3],
    pub ue_position: [f64; 3],
    pub ris: ArraySpec,
    pub bs: ArraySpec,
    pub signal: SignalSpec,
    pub flags: ChannelModelFlags,
}

impl ScenarioSpec {
    pub fn geometry(&self) -> Result<Scenario> {
        Ok(Scenario::new(
            Vec3::from_array(self.bs_position),
            Vec3::from_array(self.ris_position),
            Vec3::from_array(self.ue_position),
            self.bs.offsets()?,
            self.ris.offsets()?,
        )?)
    }

    /// Signal configuration with `α = 1`; the SNR policy sets the real value.
    pub fn signal(&self) -> Result<Signal> {
        let s = &self.signal;
        let mut cfg = Signal::new(s.carrier_hz, s.n_subcarriers, s.bandwidth_hz, s.n_slots)?;
        cfg.noise_var = s.noise_var;
        cfg.xi_seconds = s.xi_seconds;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// Uniform random phases; trial `i` uses the seed derived from
    /// `(master seed, i)`.
    Random { trials: usize },
    /// Single slot focusing `focus` onto a BS antenna at sub-carrier `n0`,
    /// or onto the BS reference point at the carrier when `ref_antenna` is
    /// absent.
    Focusing {
        focus: [f64; 3],
        #[serde(default)]
        ref_antenna: Option<usize>,
        #[serde(default)]
        n0: Option<usize>,
    },
    Case1 { n0: usize },
    Case2 { b0: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SnrPolicy {
    /// Average per-sample SNR fixed at every evaluated point.
    FixedReceivedSnr { target_db: f64 },
    FixedAlpha { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    Linear,
    Log,
}

/// `points` values from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default = "linear")]
    pub scale: AxisScale,
}

fn linear() -> AxisScale {
    AxisScale::Linear
}

impl AxisSpec {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
            scale: AxisScale::Linear,
        }
    }

    pub fn log(start: f64, stop: f64, points: usize) -> Self {
        Self {
            scale: AxisScale::Log,
            ..Self::linear(start, stop, points)
        }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if self.points == 0 {
            return Err(HarnessError::Config(format!("{what}: empty axis")));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(HarnessError::Config(format!("{what}: non-finite bounds")));
        }
        if self.scale == AxisScale::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(HarnessError::Config(format!("{what}: log axis needs positive bounds")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let u = i as f64 / last;
                match self.scale {
                    AxisScale::Linear => self.start + u * (self.stop - self.start),
                    AxisScale::Log => (self.start.ln() + u * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Plane `z = z_m` sampled on an `x` by `y` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub z_m: f64,
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        self.x.validate("grid x")?;
        self.y.validate("grid y")
    }

    /// Points in row-major order, `y` outer and `x` inner.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let xs = self.x.values();
        self.y
            .values()
            .into_iter()
            .flat_map(|y| xs.iter().map(move |&x| [x, y, self.z_m]))
            .collect()
    }
}

/// UE moved along a ray from the RIS reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSweep {
    pub distance_m: AxisSpec,
    pub elevation_rad: f64,
    pub azimuth_rad: f64,
}

/// Bandwidth and slot budget per BS antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceConfig {
    pub name: String,
    pub bandwidth_hz: f64,
    pub n_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSweep {
    /// BS reference moved along its default direction from the RIS.
    pub d_br_m: AxisSpec,
    /// BS element spacings for the second sweep.
    pub delta_b_m: Vec<f64>,
    /// BS distance held during the spacing sweep.
    pub delta_b_at_d_br_m: f64,
    pub configs: Vec<ResourceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakConfig {
    pub bs_rows: usize,
    pub bs_cols: usize,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusSweep {
    pub grid: GridSpec,
    /// `x` values of the line cut through the focus (`y`, `z` of the focus).
    pub cut_x_m: AxisSpec,
    /// Off-focus point on the cut used for the peak-height ratio.
    pub reference_x_m: f64,
    /// Bandwidths for the CRLB table at the focus.
    pub bandwidths_hz: Vec<f64>,
    /// Square BS sizes for the CRLB table at the focus.
    pub bs_sides: Vec<usize>,
    /// Settings whose peak-height ratios are compared.
    pub peak_configs: Vec<PeakConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    /// Random scenarios per check.
    pub scenarios: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepSpec {
    Grid(GridSpec),
    Distance(DistanceSweep),
    Gain(GainSweep),
    Focus(FocusSweep),
    Suite(SuiteSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// File-name stem; defaults to the experiment name.
    #[serde(default)]
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub scale: Scale,
    pub seed: u64,
    pub scenario: ScenarioSpec,
    pub profile: ProfileSpec,
    pub sweep: SweepSpec,
    pub snr: SnrPolicy,
    pub outputs: OutputSpec,
}

impl ExperimentConfig {
    pub fn preset(experiment: Experiment, scale: Scale) -> Self {
        let full = scale == Scale::Full;
        // Desk positions are the full-scale ones scaled by the aperture ratio.
        let k = if full { 1.0 } else { 0.2 };
        let scenario = ScenarioSpec {
            bs_position: [8.0, -12.0, 2.0],
            ris_position: [0.0; 3],
            ue_position: [4.0 * k, 2.1 * k, -1.0 * k],
            ris: ArraySpec::square(if full { 60 } else { 12 }),
            bs: ArraySpec::square(if full { 8 } else { 4 }),
            signal: SignalSpec {
                carrier_hz: CARRIER_HZ,
                n_subcarriers: 16,
                bandwidth_hz: 400e6,
                n_slots: 1,
                noise_var: 1.0,
                xi_seconds: 0.0,
            },
            flags: ChannelModelFlags::NEAR_NEAR,
        };
        let grid_points = if full { 40 } else { 30 };
        // Resource bandwidths scale inversely with the aperture so the
        // frequency diversity across the RIS, Δk·D, is preserved.
        let bw = 1.0 / k;
        let random = ProfileSpec::Random { trials: 1 };
        let snr20 = SnrPolicy::FixedReceivedSnr { target_db: 20.0 };
        let (scenario, profile, sweep, snr) = match experiment {
            Experiment::PebMap => (
                {
                    // One slot at desk aperture leaves nearly every point
                    // rank-deficient; eight random slots restore the near field.
                    let mut scenario = scenario;
                    scenario.signal.n_slots = if full { 1 } else { 8 };
                    scenario
                },
                random,
                SweepSpec::Grid(GridSpec {
                    x: AxisSpec::linear(0.25, 10.0, grid_points),
                    y: AxisSpec::linear(-5.0, 5.0, grid_points),
                    z_m: -1.0,
                }),
                snr20,
            ),
            Experiment::EfiSweep => (
                scenario,
                random,
                SweepSpec::Distance(DistanceSweep {
                    distance_m: AxisSpec::log(1.0, 100.0, 25),
                    elevation_rad: 1.9,
                    azimuth_rad: 0.45,
                }),
                snr20,
            ),
            Experiment::GainCompare => (
                {
                    // Closer UE keeps the single-slot configurations inside the
                    // desk aperture's near field, as the full-scale ones are in theirs.
                    let mut scenario = scenario;
                    if !full {
                        scenario.ue_position = [0.32, 0.168, -0.08];
                    }
                    scenario
                },
                ProfileSpec::Random { trials: 100 },
                SweepSpec::Gain(GainSweep {
                    d_br_m: AxisSpec::log(2.0, 50.0, 6),
                    delta_b_m: [0.05, 0.25, 0.5, 1.0, 2.0, 4.0]
                        .iter()
                        .map(|w| w * 2.0 * half_wavelength())
                        .collect(),
                    delta_b_at_d_br_m: 5.0,
                    configs: vec![
                        ResourceConfig {
                            name: "config1".into(),
                            bandwidth_hz: 300e6 * bw,
                            n_slots: 1,
                        },
                        ResourceConfig {
                            name: "config2".into(),
                            bandwidth_hz: 2500e6 * bw,
                            n_slots: 1,
                        },
                        ResourceConfig {
                            name: "config3".into(),
                            bandwidth_hz: 2500e6 * bw,
                            n_slots: 3,
                        },
                    ],
                }),
                snr20,
            ),
            Experiment::FocusEval => {
                // The focal spot is a Fresnel-zone effect: desk positions shrink
                // with the square of the aperture ratio (and a further half),
                // otherwise a 12x12 focus is rank-deficient for every antenna
                // and bandwidth setting.
                let k = if full { 1.0 } else { 0.02 };
                let focus = [4.0 * k, 2.5 * k, -1.0 * k];
                let mut scenario = scenario;
                scenario.ue_position = focus;
                scenario.bs_position = scenario.bs_position.map(|v| v * k);
                scenario.signal.bandwidth_hz = 40e6 * bw;
                (
                    scenario,
                    ProfileSpec::Focusing {
                        focus,
                        ref_antenna: None,
                        n0: None,
                    },
                    SweepSpec::Focus(FocusSweep {
                        grid: GridSpec {
                            x: AxisSpec::linear(focus[0] - 3.5 * k, focus[0] + 3.5 * k, grid_points),
                            y: AxisSpec::linear(focus[1] - 3.5 * k, focus[1] + 3.5 * k, grid_points),
                            z_m: focus[2],
                        },
                        cut_x_m: AxisSpec::linear(focus[0] - 3.5 * k, focus[0] + 3.5 * k, 57),
                        reference_x_m: focus[0] - 2.0 * k,
                        bandwidths_hz: [10e6, 40e6, 160e6, 640e6].map(|b| b * bw).to_vec(),
                        bs_sides: vec![1, 2, 4, 8],
                        peak_configs: vec![
                            PeakConfig {
                                bs_rows: 2,
                                bs_cols: 2,
                                bandwidth_hz: 40e6 * bw,
                            },
                            PeakConfig {
                                bs_rows: 4,
                                bs_cols: 4,
                                bandwidth_hz: 40e6 * bw,
                            },
                            PeakConfig {
                                bs_rows: 2,
                                bs_cols: 2,
                                bandwidth_hz: 160e6 * bw,
                            },
                        ],
                    }),
                    SnrPolicy::FixedAlpha { alpha: 1.0 },
                )
            }
            Experiment::PropSuite => (
                scenario,
                random,
                SweepSpec::Suite(SuiteSpec { scenarios: 20 }),
                snr20,
            ),
        };
        Self {
            experiment,
            scale,
            seed: 0,
            scenario,
            profile,
            sweep,
            snr,
            outputs: OutputSpec {
                dir: PathBuf::from("out"),
                prefix: None,
            },
        }
    }

    /// Preset for `experiment` and `scale` with `overrides` merged in
    /// recursively (objects merge key by key, anything else replaces).
    pub fn resolve(experiment: Experiment, scale: Scale, overrides: Option<Value>) -> Result<Self> {
        let mut base = serde_json::to_value(Self::preset(experiment, scale))?;
        if let Some(o) = overrides {
            merge(&mut base, o);
        }
        let cfg: Self = serde_json::from_value(base)?;
        if cfg.experiment != experiment {
            return Err(HarnessError::Config(format!(
                "configuration is for {}, not {}",
                cfg.experiment.name(),
                experiment.name()
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.geometry()?;
        self.scenario.signal()?;
        match &self.profile {
            ProfileSpec::Random { trials: 0 } => return Err(HarnessError::Config("trials must be at least 1".into())),
            ProfileSpec::Focusing { focus, .. } if !focus.iter().all(|v| v.is_finite()) => {
                return Err(HarnessError::Config("focus point must be finite".into()))
            }
            _ => {}
        }
        match self.snr {
            SnrPolicy::FixedReceivedSnr { target_db } if !target_db.is_finite() => {
                return Err(HarnessError::Config("target SNR must be finite".into()))
            }
            SnrPolicy::FixedAlpha { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                return Err(HarnessError::Config("alpha must be positive".into()))
            }
            _ => {}
        }
        let expected = match (&self.sweep, self.experiment) {
            (SweepSpec::Grid(g), Experiment::PebMap) => return g.validate(),
            (SweepSpec::Distance(d), Experiment::EfiSweep) => return d.distance_m.validate("distance"),
            (SweepSpec::Gain(g), Experiment::GainCompare) => {
                g.d_br_m.validate("d_br")?;
                if g.configs.is_empty() {
                    return Err(HarnessError::Config("no resource configurations".into()));
                }
                if g.delta_b_m.iter().any(|d| !(*d > 0.0)) {
                    return Err(HarnessError::Config("BS spacings must be positive".into()));
                }
                return Ok(());
            }
            (SweepSpec::Focus(f), Experiment::FocusEval) => {
                f.grid.validate()?;
                f.cut_x_m.validate("cut")?;
                if !matches!(self.profile, ProfileSpec::Focusing { .. }) {
                    return Err(HarnessError::Config("focus-eval needs a focusing profile".into()));
                }
                return Ok(());
            }
            (SweepSpec::Suite(s), Experiment::PropSuite) => {
                if s.scenarios == 0 {
                    return Err(HarnessError::Config("suite needs at least one scenario".into()));
                }
                return Ok(());
            }
            (_, e) => e,
        };
        Err(HarnessError::Config(format!("sweep kind does not match {}", expected.name())))
    }

    /// Number of random-profile trials (1 for deterministic profiles).
    pub fn trials(&self) -> usize {
        match self.profile {
            ProfileSpec::Random { trials } => trials,
            _ => 1,
        }
    }

    pub fn file_stem(&self) -> String {
        self.outputs
            .prefix
            .clone()
            .unwrap_or_else(|| self.experiment.name().to_string())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Far-field flag for the RIS-UE link, keeping the BS-RIS model.
pub fn with_ris_ue(flags: ChannelModelFlags, ris_ue: WavefrontModel) -> ChannelModelFlags {
    ChannelModelFlags::new(ris_ue, flags.bs_ris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    const ALL: [Experiment; 5] = [
        Experiment::PebMap,
        Experiment::EfiSweep,
        Experiment::GainCompare,
        Experiment::FocusEval,
        Experiment::PropSuite,
    ];

    #[test]
    fn presets_validate_and_round_trip() {
        for e in ALL {
            for s in [Scale::Desk, Scale::Full] {
                let cfg = ExperimentConfig::preset(e, s);
                cfg.validate().unwrap();
                let text = serde_json::to_string(&cfg).unwrap();
                let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
                assert_eq!(back, cfg);
            }
        }
    }

    #[test]
    fn overrides_merge_recursively() {
        let cfg = ExperimentConfig::resolve(
            Experiment::PebMap,
            Scale::Desk,
            Some(json!({"seed": 9, "scenario": {"signal": {"bandwidth_hz": 1e8}}, "sweep": {"x": {"points": 3}}})),
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.scenario.signal.bandwidth_hz, 1e8);
        assert_eq!(cfg.scenario.signal.n_subcarriers, 16);
        let SweepSpec::Grid(g) = &cfg.sweep else { panic!() };
        assert_eq!(g.x.points, 3);
        assert_eq!(g.y.points, 30);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            json!({"profile": {"kind": "random", "trials": 0}}),
            json!({"sweep": {"x": {"points": 0}}}),
            json!({"sweep": {"kind": "suite", "scenarios": 3}}),
            json!({"experiment": "efi-sweep"}),
            json!({"scenario": {"signal": {"noise_var": -1.0}}}),
        ];
        for o in bad {
            assert!(ExperimentConfig::resolve(Experiment::PebMap, Scale::Desk, Some(o.clone())).is_err(), "{o}");
        }
    }

    #[test]
    fn axes() {
        assert_eq!(AxisSpec::linear(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        let v = AxisSpec::log(1.0, 100.0, 3).values();
        assert!((v[1] - 10.0).abs() < 1e-12 && (v[2] - 100.0).abs() < 1e-12);
        assert_eq!(AxisSpec::linear(2.0, 5.0, 1).values(), vec![2.0]);
        let g = GridSpec {
            x: AxisSpec::linear(0.0, 1.0, 2),
            y: AxisSpec::linear(5.0, 6.0, 2),
            z_m: -1.0,
        };
        assert_eq!(g.points()[1], [1.0, 5.0, -1.0]);
    }
}
