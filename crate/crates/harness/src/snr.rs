//! Fixed received power, realized as a fixed average per-sample SNR.

use risloc::{ChannelModelFlags, Error, Model, Profile, Scenario, Signal};

use crate::config::SnrPolicy;
use crate::error::Result;

/// `Σ_{b,n,t} |μ|² / (N_B N T σ²)` over every sample the model can produce.
pub fn average_snr(model: &Model) -> Result<f64> {
    let g = model.geometry();
    let cfg = model.config();
    let mut energy = 0.0;
    for b in 0..g.n_bs() {
        for n in 0..cfg.n_subcarriers {
            for t in 0..cfg.n_slots {
                energy += model.mu(b, n, t)?.norm_sqr();
            }
        }
    }
    Ok(energy / ((g.n_bs() * cfg.n_subcarriers * cfg.n_slots) as f64 * cfg.noise_var))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `α` that makes the average per-sample SNR equal `target_db`.
pub fn normalize_snr(
    geometry: &Scenario,
    cfg: &Signal,
    flags: ChannelModelFlags,
    profile: &Profile,
    target_db: f64,
) -> Result<f64> {
    let unit = Model::new(geometry, &cfg.with_alpha(1.0), flags, profile)?;
    let snr = average_snr(&unit)?;
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::CannotNormalize.into());
    }
    Ok((db_to_linear(target_db) / snr).sqrt())
}

/// Model with `α` chosen by `policy`.
pub fn build_model(
    geometry: &Scenario,
    cfg: &Signal,
    flags: ChannelModelFlags,
    profile: &Profile,
    policy: SnrPolicy,
) -> Result<Model> {
    let alpha = match policy {
        SnrPolicy::FixedReceivedSnr { target_db } => normalize_snr(geometry, cfg, flags, profile, target_db)?,
        SnrPolicy::FixedAlpha { alpha } => alpha,
    };
    Ok(Model::new(geometry, &cfg.with_alpha(alpha), flags, profile)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Experiment, ExperimentConfig, Scale};
    use risloc::Vec3;

    fn setup() -> (Scenario, Signal, Profile) {
        let mut spec = ExperimentConfig::preset(Experiment::PebMap, Scale::Desk).scenario;
        spec.signal.n_subcarriers = 4;
        let g = spec.geometry().unwrap();
        let p = Profile::random(g.n_ris(), spec.signal.n_slots, 3).unwrap();
        (g, spec.signal().unwrap(), p)
    }

    #[test]
    fn hits_the_target() {
        let (g, cfg, p) = setup();
        let flags = ChannelModelFlags::NEAR_NEAR;
        let m = build_model(&g, &cfg, flags, &p, SnrPolicy::FixedReceivedSnr { target_db: 17.0 }).unwrap();
        let snr = average_snr(&m).unwrap();
        assert!((snr / db_to_linear(17.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn doubling_noise_halves_snr() {
        let (g, cfg, p) = setup();
        let flags = ChannelModelFlags::NEAR_NEAR;
        let alpha = normalize_snr(&g, &cfg, flags, &p, 10.0).unwrap();
        let mut noisy = cfg.with_alpha(alpha);
        noisy.noise_var *= 2.0;
        let snr = average_snr(&Model::new(&g, &noisy, flags, &p).unwrap()).unwrap();
        assert!((snr / db_to_linear(10.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn different_distances_give_equal_power() {
        let (g, cfg, p) = setup();
        let flags = ChannelModelFlags::NEAR_NEAR;
        let energy = |ue: Vec3<f64>| {
            let g = g.with_ue(ue).unwrap();
            let m = build_model(&g, &cfg, flags, &p, SnrPolicy::FixedReceivedSnr { target_db: 5.0 }).unwrap();
            average_snr(&m).unwrap()
        };
        let (a, b) = (energy(Vec3::new(0.5, 0.1, -0.2)), energy(Vec3::new(6.0, -2.0, -1.0)));
        assert!((a / b - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fixed_alpha_is_passed_through() {
        let (g, cfg, p) = setup();
        let m = build_model(&g, &cfg, ChannelModelFlags::NEAR_NEAR, &p, SnrPolicy::FixedAlpha { alpha: 0.3 }).unwrap();
        assert_eq!(m.config().alpha, 0.3);
    }
}
