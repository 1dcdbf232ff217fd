#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risloc::geometry::{build_ura, spherical_to_cartesian, Plane};
use risloc::*;

pub const FC: f64 = 28e9;

pub fn lambda() -> f64 {
    SPEED_OF_LIGHT / FC
}

pub struct Case {
    pub geometry: Scenario,
    pub cfg: Signal,
    pub flags: ChannelModelFlags,
    pub profile: Profile,
}

impl Case {
    pub fn model(&self) -> Model {
        FisherModel::new(&self.geometry, &self.cfg, self.flags, &self.profile).unwrap()
    }
}

/// Small random scenario: RIS in the y-z plane facing +x, UE within a few
/// metres in front of it, BS further away.
pub fn random_case(seed: u64, flags: ChannelModelFlags) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nr = rng.gen_range(7..=10);
    let nb = rng.gen_range(1..=2);
    let n = rng.gen_range(2..=4);
    let t = rng.gen_range(2..=3);
    let ue = spherical_to_cartesian(
        Vec3::zero(),
        &SphericalDirection::new(
            rng.gen_range(0.3..0.9),
            rng.gen_range(0.7..2.4),
            rng.gen_range(-1.2..1.2),
        ),
    );
    let bs = spherical_to_cartesian(
        Vec3::zero(),
        &SphericalDirection::new(
            rng.gen_range(2.0..8.0),
            rng.gen_range(0.7..2.4),
            rng.gen_range(-1.2..1.2),
        ),
    );
    let geometry = Scenario::new(
        bs,
        Vec3::zero(),
        ue,
        build_ura(nb, nb, lambda() / 2.0, Plane::Yz).unwrap(),
        build_ura(nr, nr, lambda() / 2.0, Plane::Yz).unwrap(),
    )
    .unwrap();
    let mut cfg = Signal::new(FC, n, rng.gen_range(100e6..400e6), t).unwrap();
    cfg.alpha = rng.gen_range(0.01..0.1);
    cfg.xi_seconds = rng.gen_range(-5e-9..5e-9);
    cfg.noise_var = rng.gen_range(0.5..2.0);
    let profile = Profile::random(nr * nr, t, seed ^ 0x5eed).unwrap();
    Case {
        geometry,
        cfg,
        flags,
        profile,
    }
}

/// `|a - b| <= tol * scale`, entrywise, with `scale` the largest entry of `b`.
pub fn max_rel_diff(a: &numerics::Matrix<f64>, b: &numerics::Matrix<f64>) -> f64 {
    (a - b).max_abs() / b.max_abs()
}
