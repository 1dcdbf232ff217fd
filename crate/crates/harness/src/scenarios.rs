//! Randomized desk-scale scenarios for the invariant checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risloc::geometry::{build_ura, spherical_to_cartesian, Plane};
use risloc::{ChannelModelFlags, Model, Profile, Scenario, Signal, SphericalDirection, Vec3};

use crate::config::CARRIER_HZ;
use crate::error::Result;

pub fn wavelength() -> f64 {
    risloc::SPEED_OF_LIGHT / CARRIER_HZ
}

/// One randomized problem instance.
#[derive(Debug, Clone)]
pub struct Case {
    pub geometry: Scenario,
    pub cfg: Signal,
    pub flags: ChannelModelFlags,
    pub profile: Profile,
}

impl Case {
    pub fn model(&self) -> Result<Model> {
        Ok(Model::new(&self.geometry, &self.cfg, self.flags, &self.profile)?)
    }

    pub fn with_flags(&self, flags: ChannelModelFlags) -> Self {
        Self { flags, ..self.clone() }
    }
}

/// RIS of 7x7 to 10x10 elements in the y-z plane, UE 0.3-0.9 m in front of
/// it, BS 2-8 m away with 1 or 2x2 antennas, 2-4 sub-carriers, 2-3 slots.
pub fn random_case(seed: u64, flags: ChannelModelFlags) -> Result<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nr = rng.gen_range(7..=10);
    let nb = rng.gen_range(1..=2);
    let n = rng.gen_range(2..=4);
    let t = rng.gen_range(2..=3);
    let mut dir = |lo: f64, hi: f64| {
        SphericalDirection::new(rng.gen_range(lo..hi), rng.gen_range(0.7..2.4), rng.gen_range(-1.2..1.2))
    };
    let ue = spherical_to_cartesian(Vec3::zero(), &dir(0.3, 0.9));
    let bs = spherical_to_cartesian(Vec3::zero(), &dir(2.0, 8.0));
    let lambda = wavelength();
    let geometry = Scenario::new(
        bs,
        Vec3::zero(),
        ue,
        build_ura(nb, nb, lambda / 2.0, Plane::Yz)?,
        build_ura(nr, nr, lambda / 2.0, Plane::Yz)?,
    )?;
    let mut cfg = Signal::new(CARRIER_HZ, n, rng.gen_range(100e6..400e6), t)?;
    cfg.alpha = rng.gen_range(0.01..0.1);
    cfg.xi_seconds = rng.gen_range(-5e-9..5e-9);
    cfg.noise_var = rng.gen_range(0.5..2.0);
    let profile = Profile::random(nr * nr, t, seed ^ 0x5eed)?;
    Ok(Case {
        geometry,
        cfg,
        flags,
        profile,
    })
}
