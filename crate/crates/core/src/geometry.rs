//! Scenario geometry: array layouts, spherical/Cartesian conversion and the
//! element-wise distances consumed by the channel models.
//!
//! Angles follow the usual physics convention: elevation `θ` is measured
//! from the +z axis and azimuth `φ` from +x towards +y, so a point at
//! distance `d` from a reference sits at
//! `ref + d (sinθ cosφ, sinθ sinφ, cosθ)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::scalar::Real;

/// Cartesian 3-vector in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array([x, y, z]: [T; 3]) -> Self {
        Self::new(x, y, z)
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_sqr(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        // hypot-style scaling is unnecessary at the metre scales used here.
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        let f = |v: T| U::lit(v.to_f64().expect("finite coordinate"));
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

/// Distance, elevation and azimuth of a point seen from a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalDirection<T> {
    /// metres
    pub distance: T,
    /// radians from +z
    pub elevation: T,
    /// radians in [-π, π)
    pub azimuth: T,
}

impl<T: Real> SphericalDirection<T> {
    pub fn new(distance: T, elevation: T, azimuth: T) -> Self {
        Self {
            distance,
            elevation,
            azimuth,
        }
    }

    /// Unit vector pointing from the reference towards the point.
    pub fn unit(&self) -> Vec3<T> {
        let (st, ct) = self.elevation.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        Vec3::new(st * cp, st * sp, ct)
    }
}

/// Plane of a planar array, named by its two in-plane axes in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Xy,
    Yz,
    Xz,
}

/// Near-field (exact spherical) or far-field (first-order planar) wavefront.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavefrontModel {
    Near,
    Far,
}

/// Element offsets of a `rows x cols` uniform rectangular array centred on
/// the origin.
///
/// Elements are ordered row-major with rows advancing along the first axis
/// of `plane`: element `i * cols + j` sits at
/// `((i - (rows-1)/2) Δ, (j - (cols-1)/2) Δ)` in plane coordinates.
pub fn build_ura<T: Real>(rows: usize, cols: usize, spacing: T, plane: Plane) -> Result<Vec<Vec3<T>>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!("URA needs at least one row and column, got {rows}x{cols}")));
    }
    if !(spacing > T::zero()) || !spacing.is_finite() {
        return Err(Error::InvalidArgument("URA spacing must be positive".into()));
    }
    let half = T::lit(0.5);
    let row_mid = T::count(rows - 1) * half;
    let col_mid = T::count(cols - 1) * half;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let u = (T::count(i) - row_mid) * spacing;
        for j in 0..cols {
            let v = (T::count(j) - col_mid) * spacing;
            let z = T::zero();
            out.push(match plane {
                Plane::Xy => Vec3::new(u, v, z),
                Plane::Yz => Vec3::new(z, u, v),
                Plane::Xz => Vec3::new(u, z, v),
            });
        }
    }
    Ok(out)
}

/// Point at `dir` from `reference`.
pub fn spherical_to_cartesian<T: Real>(reference: Vec3<T>, dir: &SphericalDirection<T>) -> Vec3<T> {
    reference + dir.unit() * dir.distance
}

/// Direction of `point` seen from `reference`; azimuth in `[-π, π)`, and
/// azimuth 0 on the polar axis.
pub fn cartesian_to_spherical<T: Real>(reference: Vec3<T>, point: Vec3<T>) -> Result<SphericalDirection<T>> {
    let d = point - reference;
    let distance = d.norm();
    if !(distance > T::zero()) {
        return Err(Error::DegenerateGeometry("point coincides with the reference".into()));
    }
    let rho = d.x.hypot(d.y);
    let elevation = rho.atan2(d.z);
    let azimuth = if rho == T::zero() {
        T::zero()
    } else {
        let a = d.y.atan2(d.x);
        if a >= T::PI() {
            -T::PI()
        } else {
            a
        }
    };
    Ok(SphericalDirection {
        distance,
        elevation,
        azimuth,
    })
}

/// Path-length offset `Γ` of an element at `offset` for a wave travelling
/// along `dir`: `-⟨offset, unit(dir)⟩`.
pub fn gamma<T: Real>(offset: Vec3<T>, dir: &SphericalDirection<T>) -> T {
    -offset.dot(dir.unit())
}

/// Positions and layouts of the BS, RIS and UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry<T> {
    pub bs_reference: Vec3<T>,
    pub ris_reference: Vec3<T>,
    pub ue_position: Vec3<T>,
    /// Antenna offsets relative to `bs_reference`.
    pub bs_offsets: Vec<Vec3<T>>,
    /// Element offsets relative to `ris_reference`.
    pub ris_offsets: Vec<Vec3<T>>,
}

impl<T: Real> ScenarioGeometry<T> {
    pub fn new(
        bs_reference: Vec3<T>,
        ris_reference: Vec3<T>,
        ue_position: Vec3<T>,
        bs_offsets: Vec<Vec3<T>>,
        ris_offsets: Vec<Vec3<T>>,
    ) -> Result<Self> {
        let g = Self {
            bs_reference,
            ris_reference,
            ue_position,
            bs_offsets,
            ris_offsets,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bs_offsets.is_empty() || self.ris_offsets.is_empty() {
            return Err(Error::InvalidArgument("BS and RIS need at least one element each".into()));
        }
        let all_finite = [self.bs_reference, self.ris_reference, self.ue_position]
            .iter()
            .chain(&self.bs_offsets)
            .chain(&self.ris_offsets)
            .all(|p| p.is_finite());
        if !all_finite {
            return Err(Error::NonFinite("scenario coordinate".into()));
        }
        if !((self.ue_position - self.ris_reference).norm() > T::zero()) {
            return Err(Error::DegenerateGeometry("UE coincides with the RIS reference".into()));
        }
        if !((self.bs_reference - self.ris_reference).norm() > T::zero()) {
            return Err(Error::DegenerateGeometry("BS coincides with the RIS reference".into()));
        }
        Ok(())
    }

    /// Copy of the scenario with the UE moved.
    pub fn with_ue(&self, ue_position: Vec3<T>) -> Result<Self> {
        let mut g = self.clone();
        g.ue_position = ue_position;
        g.validate()?;
        Ok(g)
    }

    pub fn n_bs(&self) -> usize {
        self.bs_offsets.len()
    }

    pub fn n_ris(&self) -> usize {
        self.ris_offsets.len()
    }

    pub fn ris_element(&self, r: usize) -> Vec3<T> {
        self.ris_reference + self.ris_offsets[r]
    }

    pub fn bs_antenna(&self, b: usize) -> Vec3<T> {
        self.bs_reference + self.bs_offsets[b]
    }

    /// `d_RU`
    pub fn d_ru(&self) -> T {
        (self.ue_position - self.ris_reference).norm()
    }

    /// `d_BR`
    pub fn d_br(&self) -> T {
        (self.bs_reference - self.ris_reference).norm()
    }

    /// UE direction seen from the RIS reference: `(d_RU, θ_RU, φ_RU)`.
    pub fn ue_direction(&self) -> SphericalDirection<T> {
        cartesian_to_spherical(self.ris_reference, self.ue_position)
            .expect("validated scenario keeps the UE off the RIS reference")
    }

    /// BS reference seen from the RIS reference (departure angles `θ_RB`, `φ_RB`).
    pub fn bs_direction_from_ris(&self) -> SphericalDirection<T> {
        cartesian_to_spherical(self.ris_reference, self.bs_reference)
            .expect("validated scenario keeps the BS off the RIS reference")
    }

    /// RIS reference seen from the BS reference (arrival angles `θ_B`, `φ_B`).
    pub fn ris_direction_from_bs(&self) -> SphericalDirection<T> {
        cartesian_to_spherical(self.bs_reference, self.ris_reference)
            .expect("validated scenario keeps the BS off the RIS reference")
    }

    pub fn cast<U: Real>(&self) -> ScenarioGeometry<U> {
        ScenarioGeometry {
            bs_reference: self.bs_reference.cast(),
            ris_reference: self.ris_reference.cast(),
            ue_position: self.ue_position.cast(),
            bs_offsets: self.bs_offsets.iter().map(|p| p.cast()).collect(),
            ris_offsets: self.ris_offsets.iter().map(|p| p.cast()).collect(),
        }
    }
}

/// Distance between the UE and RIS element `r` under the given model.
///
/// Near: `sqrt(ρ² + d² + 2 d Γ)`, which equals `‖p_U - p_r‖`.
/// Far: `d + Γ`.
pub fn distance_ru<T: Real>(
    geometry: &ScenarioGeometry<T>,
    r: usize,
    dir: &SphericalDirection<T>,
    model: WavefrontModel,
) -> Result<T> {
    check_index("RIS element", r, geometry.n_ris())?;
    let offset = geometry.ris_offsets[r];
    let g = gamma(offset, dir);
    let d = dir.distance;
    match model {
        WavefrontModel::Far => Ok(d + g),
        WavefrontModel::Near => {
            let radicand = offset.norm_sqr() + d * d + (d + d) * g;
            if radicand > T::zero() {
                Ok(radicand.sqrt())
            } else {
                Err(Error::DegenerateGeometry(format!("UE coincides with RIS element {r}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::scalar::SPEED_OF_LIGHT;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn centroid(offsets: &[Vec3<f64>]) -> Vec3<f64> {
        offsets.iter().fold(Vec3::zero(), |a, &b| a + b) * (1.0 / offsets.len() as f64)
    }

    #[test]
    fn ura_single_element_at_origin() {
        assert_eq!(build_ura(1, 1, 0.005, Plane::Yz).unwrap(), vec![Vec3::zero()]);
    }

    #[test]
    fn ura_two_by_two() {
        let d = 0.01;
        let got = build_ura(2, 2, d, Plane::Yz).unwrap();
        let h = d / 2.0;
        assert_eq!(got, vec![v(0.0, -h, -h), v(0.0, -h, h), v(0.0, h, -h), v(0.0, h, h)]);
    }

    #[test]
    fn ura_sixty_by_sixty_half_wavelength() {
        let lambda = SPEED_OF_LIGHT / 28e9;
        let ura = build_ura(60, 60, lambda / 2.0, Plane::Yz).unwrap();
        assert_eq!(ura.len(), 3600);
        let span = |f: fn(&Vec3<f64>) -> f64| {
            let lo = ura.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = ura.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        assert!((span(|p| p.y) - 59.0 * lambda / 2.0).abs() < 1e-12);
        assert!((span(|p| p.z) - 59.0 * lambda / 2.0).abs() < 1e-12);
        assert!(ura.iter().all(|p| p.x == 0.0));
        assert!(centroid(&ura).norm() < 1e-12);
    }

    #[test]
    fn ura_row_major_along_first_axis() {
        let ura = build_ura(3, 2, 1.0, Plane::Xz).unwrap();
        assert_eq!(ura[0], v(-1.0, 0.0, -0.5));
        assert_eq!(ura[1], v(-1.0, 0.0, 0.5));
        assert_eq!(ura[2], v(0.0, 0.0, -0.5));
    }

    #[test]
    fn ura_rejects_bad_arguments() {
        assert!(build_ura(0, 3, 0.1, Plane::Yz).is_err());
        assert!(build_ura(3, 0, 0.1, Plane::Yz).is_err());
        assert!(build_ura(2, 2, 0.0, Plane::Yz).is_err());
        assert!(build_ura(2, 2, -1.0, Plane::Yz).is_err());
    }

    #[test]
    fn spherical_examples() {
        let o = Vec3::zero();
        let p = spherical_to_cartesian(o, &SphericalDirection::new(1.0, 0.0, 1.234));
        assert!((p - v(0.0, 0.0, 1.0)).norm() < 1e-15);
        let p = spherical_to_cartesian(o, &SphericalDirection::new(2.0, FRAC_PI_2, 0.0));
        assert!((p - v(2.0, 0.0, 0.0)).norm() < 1e-15);

        let dir = SphericalDirection::new(5.0, FRAC_PI_3, FRAC_PI_4);
        let p = spherical_to_cartesian(o, &dir);
        let want = v(
            5.0 * FRAC_PI_3.sin() * FRAC_PI_4.cos(),
            5.0 * FRAC_PI_3.sin() * FRAC_PI_4.sin(),
            5.0 * FRAC_PI_3.cos(),
        );
        assert!((p - want).norm() < 1e-14);
        let back = cartesian_to_spherical(o, p).unwrap();
        assert!((back.distance - 5.0).abs() < 1e-9);
        assert!((back.elevation - FRAC_PI_3).abs() < 1e-9);
        assert!((back.azimuth - FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn cartesian_examples() {
        let o = Vec3::zero();
        let s = cartesian_to_spherical(o, v(0.0, 0.0, 3.0)).unwrap();
        assert_eq!((s.distance, s.elevation, s.azimuth), (3.0, 0.0, 0.0));
        let s = cartesian_to_spherical(o, v(-0.0, 0.0, -2.0)).unwrap();
        assert_eq!((s.elevation, s.azimuth), (PI, 0.0));
        let s = cartesian_to_spherical(o, v(1.0, 1.0, 0.0)).unwrap();
        assert!((s.distance - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.elevation - FRAC_PI_2).abs() < 1e-15);
        assert!((s.azimuth - FRAC_PI_4).abs() < 1e-15);
        // azimuth normalized into [-π, π)
        let s = cartesian_to_spherical(o, v(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(s.azimuth, -PI);
        assert!(matches!(
            cartesian_to_spherical(o, o),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn gamma_examples() {
        let dir = SphericalDirection::new(1.0, 0.3, 0.2);
        assert_eq!(gamma(Vec3::zero(), &dir), 0.0);
        assert_eq!(gamma(v(0.0, 0.0, 1.0), &SphericalDirection::new(1.0, 0.0, 0.0)), -1.0);

        let offset = v(0.0025, -0.0025, 0.005);
        let dir = SphericalDirection::new(3.0, FRAC_PI_4, FRAC_PI_6);
        let p_u = spherical_to_cartesian(Vec3::zero(), &dir);
        let want = -offset.dot(p_u) / p_u.norm();
        assert!((gamma(offset, &dir) - want).abs() < 1e-12 * want.abs());
    }

    fn random_scenario(seed: u64, n_ris: usize) -> ScenarioGeometry<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = |a: f64, b: f64| rng.gen_range(a..b);
        let ris = (0..n_ris).map(|_| v(u(-0.05, 0.05), u(-0.05, 0.05), u(-0.05, 0.05))).collect();
        let ue = v(u(0.5, 5.0), u(-3.0, 3.0), u(-3.0, 3.0));
        ScenarioGeometry::new(v(8.0, -12.0, 2.0), Vec3::zero(), ue, vec![Vec3::zero()], ris).unwrap()
    }

    #[test]
    fn near_distance_matches_euclidean() {
        for seed in 0..10 {
            let g = random_scenario(seed, 8);
            let dir = g.ue_direction();
            for r in 0..g.n_ris() {
                let near = distance_ru(&g, r, &dir, WavefrontModel::Near).unwrap();
                let exact = (g.ue_position - g.ris_element(r)).norm();
                assert!((near - exact).abs() < 1e-12 * exact);
                let far = distance_ru(&g, r, &dir, WavefrontModel::Far).unwrap();
                assert_eq!(far, dir.distance + gamma(g.ris_offsets[r], &dir));
            }
            let reference = ScenarioGeometry {
                ris_offsets: vec![Vec3::zero()],
                ..g.clone()
            };
            assert_eq!(
                distance_ru(&reference, 0, &dir, WavefrontModel::Near).unwrap(),
                dir.distance
            );
        }
    }

    #[test]
    fn near_far_gap_shrinks_with_distance() {
        let g0 = random_scenario(4, 6);
        let mut dir = g0.ue_direction();
        for r in 0..g0.n_ris() {
            let mut prev = f64::INFINITY;
            for d in [1.0, 10.0, 100.0, 1000.0] {
                dir.distance = d;
                let near = distance_ru(&g0, r, &dir, WavefrontModel::Near).unwrap();
                let far = distance_ru(&g0, r, &dir, WavefrontModel::Far).unwrap();
                let gap = (near - far).abs();
                assert!(gap <= prev, "gap grew at d={d}");
                prev = gap;
            }
        }
    }

    #[test]
    fn near_model_rejects_coincident_ue() {
        let g = ScenarioGeometry::new(
            v(8.0, -12.0, 2.0),
            Vec3::zero(),
            v(0.0, 0.01, 0.0),
            vec![Vec3::zero()],
            vec![v(0.0, 0.01, 0.0)],
        )
        .unwrap();
        let dir = g.ue_direction();
        assert!(matches!(
            distance_ru(&g, 0, &dir, WavefrontModel::Near),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(distance_ru(&g, 1, &dir, WavefrontModel::Near).is_err());
    }

    #[test]
    fn scenario_validation() {
        let ok = random_scenario(1, 2);
        assert!(ok.with_ue(Vec3::zero()).is_err());
        let mut bad = ok.clone();
        bad.bs_offsets.clear();
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn round_trip(d in 1e-3f64..1e3, el in 0.01f64..3.13, az in -3.14f64..3.14,
                      rx in -10.0f64..10.0, ry in -10.0f64..10.0, rz in -10.0f64..10.0) {
            let reference = v(rx, ry, rz);
            let p = spherical_to_cartesian(reference, &SphericalDirection::new(d, el, az));
            let back = cartesian_to_spherical(reference, p).unwrap();
            let p2 = spherical_to_cartesian(reference, &back);
            prop_assert!((p2 - p).norm() < 1e-9);
            prop_assert!(back.azimuth >= -PI && back.azimuth < PI);
        }

        #[test]
        fn gamma_is_negative_projection(ox in -0.1f64..0.1, oy in -0.1f64..0.1, oz in -0.1f64..0.1,
                                        ux in 0.2f64..9.0, uy in -5.0f64..5.0, uz in -5.0f64..5.0) {
            let offset = v(ox, oy, oz);
            let p_u = v(ux, uy, uz);
            let dir = cartesian_to_spherical(Vec3::zero(), p_u).unwrap();
            let want = -offset.dot(p_u) / dir.distance;
            prop_assert!((gamma(offset, &dir) - want).abs() <= 1e-12 * offset.norm().max(1e-3));
        }

        #[test]
        fn ura_centroid_is_origin(rows in 1usize..12, cols in 1usize..12, spacing in 1e-3f64..0.1) {
            for plane in [Plane::Xy, Plane::Yz, Plane::Xz] {
                let ura = build_ura(rows, cols, spacing, plane).unwrap();
                prop_assert_eq!(ura.len(), rows * cols);
                prop_assert!(centroid(&ura).norm() < 1e-12);
            }
        }
    }
}
