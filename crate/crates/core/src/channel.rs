//! Near-field steering vectors and multipath channel synthesis.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::rng;

/// A point in spherical coordinates: elevation `theta` in `[0, π]`, azimuth
/// `phi` in `[-π, π]` and range `r > 0` in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub theta: f64,
    pub phi: f64,
    pub r: f64,
}

impl SphericalPoint {
    pub fn new(theta: f64, phi: f64, r: f64) -> Result<Self> {
        let p = Self { theta, phi, r };
        p.validate()?;
        Ok(p)
    }

    /// Build from the spatial variables `v = cos θ` and `s = sin φ`.
    pub fn from_vs(v: f64, s: f64, r: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&v) || !(-1.0..=1.0).contains(&s) {
            return Err(Error::domain(format!("(v, s) = ({v}, {s}) outside [-1, 1]")));
        }
        Self::new(v.acos(), s.asin(), r)
    }

    /// Build from the DFT spatial variables `u = sin θ sin φ`, `v = cos θ`.
    /// Requires `u^2 + v^2 <= 1`; the point is placed in the front half-space.
    pub fn from_uv(u: f64, v: f64, r: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("v = {v} outside [-1, 1]")));
        }
        let sin_theta = (1.0 - v * v).sqrt();
        if u.abs() > sin_theta + 1e-12 {
            return Err(Error::domain(format!("(u, v) = ({u}, {v}) is not a direction")));
        }
        let s = if sin_theta > 0.0 { (u / sin_theta).clamp(-1.0, 1.0) } else { 0.0 };
        Self::from_vs(v, s, r)
    }

    fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::domain(format!("range must be positive, got {}", self.r)));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::domain(format!("elevation {} outside [0, π]", self.theta)));
        }
        if !(-PI..=PI).contains(&self.phi) {
            return Err(Error::domain(format!("azimuth {} outside [-π, π]", self.phi)));
        }
        Ok(())
    }

    /// `u = sin θ sin φ`.
    pub fn u(&self) -> f64 {
        self.theta.sin() * self.phi.sin()
    }

    /// `v = cos θ`.
    pub fn v(&self) -> f64 {
        self.theta.cos()
    }

    pub fn position(&self) -> [f64; 3] {
        let q = direction_vector(self);
        [self.r * q[0], self.r * q[1], self.r * q[2]]
    }
}

/// Unit direction `(sin θ cos φ, sin θ sin φ, cos θ)`.
pub fn direction_vector(point: &SphericalPoint) -> [f64; 3] {
    let (st, ct) = point.theta.sin_cos();
    let (sp, cp) = point.phi.sin_cos();
    [st * cp, st * sp, ct]
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// One propagation path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    /// User location for the LoS path, scatterer location otherwise.
    pub point: SphericalPoint,
    pub is_los: bool,
    /// Random reflection coefficient; exactly 1 for the LoS path.
    pub reflection: Complex64,
    /// Real path-loss factor: `λ/(4π r_0)` (LoS) or `λ/(4π r_{ℓ,0} r_{ℓ,1})`.
    pub gain: f64,
    /// Total propagation distance that sets the common path phase.
    pub phase_distance: f64,
}

impl PathParams {
    pub fn complex_gain(&self) -> Complex64 {
        self.reflection * self.gain
    }
}

/// A single-user multipath scene: one LoS path plus `L-1` single-bounce
/// scatterers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub seed: u64,
    pub user: SphericalPoint,
    pub scatterers: Vec<SphericalPoint>,
    pub paths: Vec<PathParams>,
}

impl Scene {
    /// Assemble a scene from explicit locations and reflection coefficients.
    pub fn from_points(
        geom: &ArrayGeometry,
        user: SphericalPoint,
        scatterers: &[(SphericalPoint, Complex64)],
        seed: u64,
    ) -> Result<Self> {
        user.validate()?;
        let lambda = geom.wavelength_m();
        let user_pos = user.position();
        let mut paths = Vec::with_capacity(scatterers.len() + 1);
        paths.push(PathParams {
            point: user,
            is_los: true,
            reflection: Complex64::new(1.0, 0.0),
            gain: lambda / (4.0 * PI * user.r),
            phase_distance: user.r,
        });
        for (point, reflection) in scatterers {
            point.validate()?;
            let r1 = distance(user_pos, point.position());
            if !(r1 > 0.0) {
                return Err(Error::domain("scatterer coincides with the user"));
            }
            paths.push(PathParams {
                point: *point,
                is_los: false,
                reflection: *reflection,
                gain: lambda / (4.0 * PI * point.r * r1),
                phase_distance: point.r + r1,
            });
        }
        Ok(Self { seed, user, scatterers: scatterers.iter().map(|(p, _)| *p).collect(), paths })
    }

    pub fn l_paths(&self) -> usize {
        self.paths.len()
    }

    /// Scatterer-to-user distance `r_{ℓ,1}` recomputed from stored points.
    pub fn scatter_user_distance(&self, scatterer: usize) -> f64 {
        distance(self.user.position(), self.scatterers[scatterer].position())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A complex array-domain vector over the `N_y x N_z` grid, column-stacked.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelVector {
    entries: Vec<Complex64>,
}

impl ChannelVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.entries)
    }

    /// `self^H other`.
    pub fn inner(&self, other: &ChannelVector) -> Complex64 {
        inner(&self.entries, &other.entries)
    }

    pub fn scaled(&self, c: Complex64) -> ChannelVector {
        ChannelVector::new(self.entries.iter().map(|x| x * c).collect())
    }

    /// Unit-norm copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<ChannelVector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scaled(Complex64::new(1.0 / n, 0.0)))
        } else {
            None
        }
    }
}

pub(crate) fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Exact near-field steering vector, unit norm.
///
/// Entry `(i, j)` is `exp(-j k (r^{(i,j)} - r)) / sqrt(N)` with `r^{(i,j)}`
/// the straight-line distance from the point to element `(i, j)`.
pub fn steering_vector(geom: &ArrayGeometry, point: &SphericalPoint) -> Result<ChannelVector> {
    point.validate()?;
    let q = direction_vector(point);
    let r = point.r;
    let d = geom.spacing_m();
    let k = geom.wavenumber();
    let scale = 1.0 / (geom.n_total() as f64).sqrt();
    let dy = geom.y_offsets();
    let dz = geom.z_offsets();
    let mut out = Vec::with_capacity(geom.n_total());
    for &oz in &dz {
        for &oy in &dy {
            let ey = oy * d;
            let ez = oz * d;
            // r_ij - r = (|e|^2 - 2 r q.e) / (r_ij + r), avoids cancellation at large r
            let e2 = ey * ey + ez * ez;
            let qe = q[1] * ey + q[2] * ez;
            let r_ij = (r * r - 2.0 * r * qe + e2).max(0.0).sqrt();
            let delta = (e2 - 2.0 * r * qe) / (r_ij + r);
            out.push(Complex64::from_polar(scale, -k * delta));
        }
    }
    Ok(ChannelVector::new(out))
}

/// Contribution of a single path: `sqrt(N) g e^{-j k r_phase} b(point)`.
pub fn path_channel(geom: &ArrayGeometry, path: &PathParams) -> Result<ChannelVector> {
    let b = steering_vector(geom, &path.point)?;
    let k = geom.wavenumber();
    let coef = path.complex_gain() * Complex64::from_polar((geom.n_total() as f64).sqrt(), -k * path.phase_distance);
    Ok(b.scaled(coef))
}

/// Sum of the LoS and all NLoS path contributions.
pub fn synthesize_channel(geom: &ArrayGeometry, scene: &Scene) -> Result<ChannelVector> {
    let mut h = vec![Complex64::new(0.0, 0.0); geom.n_total()];
    for path in &scene.paths {
        if !(path.point.r > 0.0) || !(path.phase_distance > 0.0) {
            return Err(Error::domain("path range must be positive"));
        }
        let hp = path_channel(geom, path)?;
        for (acc, v) in h.iter_mut().zip(hp.entries()) {
            *acc += v;
        }
    }
    Ok(ChannelVector::new(h))
}

/// Range bounds of the scene distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RangeSpec {
    /// `[fresnel_multiple * r_F, rayleigh_fraction * r_R]`.
    Relative { fresnel_multiple: f64, rayleigh_fraction: f64 },
    /// Absolute bounds in meters.
    Meters { min: f64, max: f64 },
}

/// Distribution of user and scatterer locations: `v = cos θ` and
/// `s = sin φ` uniform on their intervals, range uniform on the resolved
/// bounds. Scatterers follow the same distribution as the user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDistribution {
    pub v_range: (f64, f64),
    pub s_range: (f64, f64),
    pub range: RangeSpec,
}

impl SceneDistribution {
    /// `v, s ~ U[-1/2, 1/2]`, `r ~ U[r_F, r_R / 20]`.
    pub fn standard() -> Self {
        Self {
            v_range: (-0.5, 0.5),
            s_range: (-0.5, 0.5),
            range: RangeSpec::Relative { fresnel_multiple: 1.0, rayleigh_fraction: 0.05 },
        }
    }

    /// Degenerate distribution concentrated at one `(v, s, r)`.
    pub fn point_mass(v: f64, s: f64, r: f64) -> Self {
        Self { v_range: (v, v), s_range: (s, s), range: RangeSpec::Meters { min: r, max: r } }
    }

    /// Resolve the range interval in meters for a geometry.
    pub fn range_bounds(&self, geom: &ArrayGeometry) -> Result<(f64, f64)> {
        let (lo, hi) = match self.range {
            RangeSpec::Relative { fresnel_multiple, rayleigh_fraction } => {
                (fresnel_multiple * geom.fresnel_distance(), rayleigh_fraction * geom.rayleigh_distance())
            }
            RangeSpec::Meters { min, max } => (min, max),
        };
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::domain(format!(
                "empty or invalid range interval [{lo}, {hi}] m for a {}x{} array",
                geom.n_y(),
                geom.n_z()
            )));
        }
        Ok((lo, hi))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("v", self.v_range), ("s", self.s_range)] {
            if !(-1.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::domain(format!("{name} range [{lo}, {hi}] invalid")));
            }
        }
        Ok(())
    }

    /// Mean `(v, s, r)` of the distribution.
    pub fn mean_point(&self, geom: &ArrayGeometry) -> Result<(f64, f64, f64)> {
        let (lo, hi) = self.range_bounds(geom)?;
        Ok((0.5 * (self.v_range.0 + self.v_range.1), 0.5 * (self.s_range.0 + self.s_range.1), 0.5 * (lo + hi)))
    }
}

/// Draws `(v, s, r)` and returns the point together with `u = sqrt(1-v^2) s`.
pub(crate) fn draw_location<R: rand::Rng + ?Sized>(
    rng: &mut R,
    dist: &SceneDistribution,
    r_bounds: (f64, f64),
) -> (f64, f64, f64) {
    let v = rng::uniform(rng, dist.v_range.0, dist.v_range.1);
    let s = rng::uniform(rng, dist.s_range.0, dist.s_range.1);
    let r = rng::uniform(rng, r_bounds.0, r_bounds.1);
    (v, s, r)
}

/// Sample a random scene, deterministic in `rng_seed`.
pub fn sample_scene(geom: &ArrayGeometry, l_paths: usize, rng_seed: u64, dist: &SceneDistribution) -> Result<Scene> {
    if l_paths < 1 {
        return Err(Error::domain("a scene needs at least one path"));
    }
    dist.validate()?;
    let bounds = dist.range_bounds(geom)?;
    let mut rng = rng::stream(rng_seed);
    let (v, s, r) = draw_location(&mut rng, dist, bounds);
    let user = SphericalPoint::from_vs(v, s, r)?;
    let mut locations = Vec::with_capacity(l_paths - 1);
    for _ in 1..l_paths {
        let (v, s, r) = draw_location(&mut rng, dist, bounds);
        locations.push(SphericalPoint::from_vs(v, s, r)?);
    }
    let scatterers: Vec<_> = locations.into_iter().map(|p| (p, rng::complex_gaussian(&mut rng, 1.0))).collect();
    Scene::from_points(geom, user, &scatterers, rng_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom(n_y: usize, n_z: usize) -> ArrayGeometry {
        ArrayGeometry::new(n_y, n_z, 28e9).unwrap()
    }

    #[test]
    fn direction_axis_and_pole() {
        let q = direction_vector(&SphericalPoint::new(PI / 2.0, 0.0, 1.0).unwrap());
        assert!((q[0] - 1.0).abs() < 1e-15 && q[1].abs() < 1e-15 && q[2].abs() < 1e-15);
        for phi in [-2.0, 0.3, 3.0] {
            let q = direction_vector(&SphericalPoint::new(0.0, phi, 1.0).unwrap());
            assert!(q[0].abs() < 1e-15 && q[1].abs() < 1e-15 && (q[2] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn direction_oblique() {
        let q = direction_vector(&SphericalPoint::new(PI / 3.0, PI / 4.0, 2.0).unwrap());
        let s60 = 3f64.sqrt() / 2.0;
        let c45 = 2f64.sqrt() / 2.0;
        assert!((q[0] - s60 * c45).abs() < 1e-15);
        assert!((q[1] - s60 * c45).abs() < 1e-15);
        assert!((q[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_element_steering_is_one() {
        let g = geom(1, 1);
        let b = steering_vector(&g, &SphericalPoint::new(1.0, 0.4, 3.0).unwrap()).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b.entries()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_matches_per_element_distance() {
        let g = geom(8, 4);
        let p = SphericalPoint::new(1.2, 0.5, 5.0).unwrap();
        let b = steering_vector(&g, &p).unwrap();
        let k = 2.0 * PI / g.wavelength_m();
        let pos = [5.0 * 1.2f64.sin() * 0.5f64.cos(), 5.0 * 1.2f64.sin() * 0.5f64.sin(), 5.0 * 1.2f64.cos()];
        for j in 0..4 {
            for i in 0..8 {
                let e = g.element_position(i, j).unwrap();
                let dist = ((pos[0] - e[0]).powi(2) + (pos[1] - e[1]).powi(2) + (pos[2] - e[2]).powi(2)).sqrt();
                let want = Complex64::from_polar(1.0 / 32f64.sqrt(), -k * (dist - 5.0));
                let got = b.entries()[i + 8 * j];
                assert!((got - want).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn broadside_far_field_is_flat() {
        let g = geom(16, 8);
        let r = 1e6 * g.rayleigh_distance();
        let b = steering_vector(&g, &SphericalPoint::new(PI / 2.0, 0.0, r).unwrap()).unwrap();
        for x in b.entries() {
            assert!(x.arg().abs() < 1e-3);
        }
    }

    #[test]
    fn los_only_channel_norm() {
        let g = geom(8, 4);
        let user = SphericalPoint::new(1.3, -0.2, 2.0).unwrap();
        let scene = Scene::from_points(&g, user, &[], 0).unwrap();
        let h = synthesize_channel(&g, &scene).unwrap();
        let g0 = g.wavelength_m() / (4.0 * PI * 2.0);
        assert!((h.norm() - 32f64.sqrt() * g0).abs() < 1e-12 * g0);
        assert_eq!(scene.paths[0].reflection, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn zero_reflection_scatterer_contributes_nothing() {
        let g = geom(8, 4);
        let user = SphericalPoint::new(1.3, -0.2, 2.0).unwrap();
        let sc = SphericalPoint::new(1.0, 0.3, 1.5).unwrap();
        let los = synthesize_channel(&g, &Scene::from_points(&g, user, &[], 0).unwrap()).unwrap();
        let two = Scene::from_points(&g, user, &[(sc, Complex64::new(0.0, 0.0))], 0).unwrap();
        let h = synthesize_channel(&g, &two).unwrap();
        assert_eq!(h, los);
    }

    #[test]
    fn three_path_channel_matches_double_loop() {
        let g = geom(8, 4);
        let dist =
            SceneDistribution { range: RangeSpec::Meters { min: 0.5, max: 3.0 }, ..SceneDistribution::standard() };
        let scene = sample_scene(&g, 3, 99, &dist).unwrap();
        let h = synthesize_channel(&g, &scene).unwrap();

        let lambda = g.wavelength_m();
        let k = 2.0 * PI / lambda;
        let n = 32.0f64;
        let upos = scene.user.position();
        for j in 0..4 {
            for i in 0..8 {
                let e = g.element_position(i, j).unwrap();
                let mut acc = Complex64::new(0.0, 0.0);
                // LoS
                let r0 = scene.user.r;
                let d0 = distance(upos, e);
                acc += n.sqrt()
                    * (lambda / (4.0 * PI * r0))
                    * Complex64::from_polar(1.0, -k * r0)
                    * Complex64::from_polar(1.0 / n.sqrt(), -k * (d0 - r0));
                for (l, sc) in scene.scatterers.iter().enumerate() {
                    let p = scene.paths[l + 1].reflection;
                    let spos = sc.position();
                    let rl0 = (spos[0].powi(2) + spos[1].powi(2) + spos[2].powi(2)).sqrt();
                    let rl1 = distance(upos, spos);
                    let dl = distance(spos, e);
                    acc += n.sqrt()
                        * (lambda / (4.0 * PI * rl0 * rl1))
                        * p
                        * Complex64::from_polar(1.0, -k * (rl0 + rl1))
                        * Complex64::from_polar(1.0 / n.sqrt(), -k * (dl - rl0));
                }
                let got = h.entries()[i + 8 * j];
                assert!((got - acc).norm() < 1e-9 * acc.norm().max(1e-30), "({i},{j})");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = geom(128, 16);
        let d = SceneDistribution::standard();
        let a = sample_scene(&g, 5, 42, &d).unwrap();
        let b = sample_scene(&g, 5, 42, &d).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.paths.len(), 5);
        assert_eq!(a.scatterers.len(), 4);
        assert_ne!(a, sample_scene(&g, 5, 43, &d).unwrap());
    }

    #[test]
    fn los_only_scene() {
        let g = geom(128, 16);
        let s = sample_scene(&g, 1, 1, &SceneDistribution::standard()).unwrap();
        assert!(s.scatterers.is_empty());
        assert_eq!(s.paths.len(), 1);
        assert!(sample_scene(&g, 0, 1, &SceneDistribution::standard()).is_err());
    }

    #[test]
    fn sampled_v_is_centered() {
        let g = geom(128, 16);
        let d = SceneDistribution::standard();
        let bounds = d.range_bounds(&g).unwrap();
        let mut rng = rng::stream(11);
        let n = 100_000;
        let mean = (0..n).map(|_| draw_location(&mut rng, &d, bounds).0).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.005, "{mean}");
    }

    #[test]
    fn sampled_ranges_respect_bounds() {
        let g = geom(128, 16);
        let d = SceneDistribution::standard();
        let (lo, hi) = (g.fresnel_distance(), g.rayleigh_distance() / 20.0);
        for seed in 0..200 {
            let s = sample_scene(&g, 5, seed, &d).unwrap();
            for p in std::iter::once(&s.user).chain(&s.scatterers) {
                assert!(p.r >= lo && p.r <= hi);
                assert!(p.phi.abs() <= PI / 2.0);
                assert!(p.v().abs() <= 0.5 + 1e-12);
            }
        }
    }

    #[test]
    fn empty_range_interval_is_rejected() {
        // 32x8 at 28 GHz: r_R/20 < r_F
        let g = geom(32, 8);
        assert!(sample_scene(&g, 3, 0, &SceneDistribution::standard()).is_err());
    }

    #[test]
    fn stored_distance_is_recomputable() {
        let g = geom(32, 8);
        let d = SceneDistribution { range: RangeSpec::Meters { min: 0.4, max: 1.0 }, ..SceneDistribution::standard() };
        let s = sample_scene(&g, 4, 5, &d).unwrap();
        for l in 0..3 {
            let r1 = s.scatter_user_distance(l);
            let p = &s.paths[l + 1];
            assert!((p.phase_distance - (p.point.r + r1)).abs() < 1e-12);
            let want = g.wavelength_m() / (4.0 * PI * p.point.r * r1);
            assert!((p.gain - want).abs() < 1e-15 * want.max(1.0));
        }
    }

    #[test]
    fn scene_json_round_trip() {
        let g = geom(16, 4);
        let d = SceneDistribution { range: RangeSpec::Meters { min: 0.4, max: 1.0 }, ..SceneDistribution::standard() };
        let s = sample_scene(&g, 3, 8, &d).unwrap();
        let js = s.to_json().unwrap();
        assert!(js.contains("\"reflection\""));
        assert_eq!(Scene::from_json(&js).unwrap(), s);
    }

    #[test]
    fn doubling_reflection_doubles_contribution() {
        let g = geom(8, 4);
        let user = SphericalPoint::new(1.3, -0.2, 2.0).unwrap();
        let sc = SphericalPoint::new(1.0, 0.3, 1.5).unwrap();
        let p = Complex64::new(0.3, -0.7);
        let los = synthesize_channel(&g, &Scene::from_points(&g, user, &[], 0).unwrap()).unwrap();
        let h1 = synthesize_channel(&g, &Scene::from_points(&g, user, &[(sc, p)], 0).unwrap()).unwrap();
        let h2 = synthesize_channel(&g, &Scene::from_points(&g, user, &[(sc, p * 2.0)], 0).unwrap()).unwrap();
        for k in 0..32 {
            let c1 = h1.entries()[k] - los.entries()[k];
            let c2 = h2.entries()[k] - los.entries()[k];
            assert!((c2 - c1 * 2.0).norm() < 1e-12 * c1.norm().max(1e-20));
        }
    }

    proptest! {
        #[test]
        fn steering_has_unit_norm(theta in 0.0..PI, phi in -PI..PI, r in 0.05f64..1e4,
                                   ny in 1usize..40, nz in 1usize..12) {
            let g = geom(ny, nz);
            let b = steering_vector(&g, &SphericalPoint::new(theta, phi, r).unwrap()).unwrap();
            prop_assert!((b.norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn direction_has_unit_norm(theta in 0.0..PI, phi in -PI..PI) {
            let q = direction_vector(&SphericalPoint::new(theta, phi, 1.0).unwrap());
            let n = (q[0]*q[0] + q[1]*q[1] + q[2]*q[2]).sqrt();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_range_rejected() {
        assert!(SphericalPoint::new(1.0, 0.0, 0.0).is_err());
        assert!(SphericalPoint::new(1.0, 0.0, -1.0).is_err());
        assert!(SphericalPoint::new(4.0, 0.0, 1.0).is_err());
    }
}
