//! Per-path channel quantities.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::geometry::Vec3;
use crate::scene::Permittivity;

use super::{fresnel_gamma, Facet, SPEED_OF_LIGHT};

/// One specular path from transmitter to receiver.
///
/// Angles: zenith from +z in `[0, π]`, azimuth from +x in the xy-plane in
/// `(−π, π]`. Departure angles describe the direction leaving the
/// transmitter, arrival angles the direction from the receiver back along
/// the incoming ray.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationPath {
    /// Transmitter, interaction points, receiver.
    pub vertices: Vec<Vec3>,
    /// Facet id of each interaction point.
    pub facets: Vec<usize>,
    pub theta: Complex64,
    /// `arg(theta)` in `[0, 2π)`.
    pub phase: f64,
    /// Seconds.
    pub delay: f64,
    pub zen_aod: f64,
    pub azi_aod: f64,
    pub zen_aoa: f64,
    pub azi_aoa: f64,
    pub n_reflections: usize,
}

impl PropagationPath {
    /// Geometry-only path; channel fields stay zero until
    /// [`path_coefficient`] fills them.
    pub fn from_geometry(vertices: Vec<Vec3>, facets: Vec<usize>) -> Self {
        let n = facets.len();
        debug_assert_eq!(vertices.len(), n + 2);
        let (zen_aod, azi_aod) = direction_angles(vertices[1] - vertices[0]);
        let last = vertices.len() - 1;
        let (zen_aoa, azi_aoa) = direction_angles(vertices[last - 1] - vertices[last]);
        PropagationPath {
            vertices,
            facets,
            theta: Complex64::new(0.0, 0.0),
            phase: 0.0,
            delay: 0.0,
            zen_aod,
            azi_aod,
            zen_aoa,
            azi_aoa,
            n_reflections: n,
        }
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    pub fn transmitter(&self) -> Vec3 {
        self.vertices[0]
    }

    pub fn receiver(&self) -> Vec3 {
        *self.vertices.last().expect("paths have two endpoints")
    }
}

/// Zenith from +z and azimuth from +x of a direction vector.
pub fn direction_angles(d: Vec3) -> (f64, f64) {
    let u = d.normalized();
    let zenith = u.z.clamp(-1.0, 1.0).acos();
    let mut azimuth = u.y.atan2(u.x);
    if azimuth <= -PI {
        azimuth = PI;
    }
    (zenith, azimuth)
}

/// Angle of incidence at a reflection vertex, radians from the normal.
pub fn incidence_angle(incoming: Vec3, normal: Vec3) -> f64 {
    incoming.normalized().dot(normal).abs().clamp(0.0, 1.0).acos()
}

/// Fills `theta`, `phase` and `delay`:
/// `Θ = λ/(4π·d) · Π Γᵢ · exp(−j·2π·d/λ)`.
///
/// `permittivity[f]` is the permittivity of facet `f` at `frequency_hz`.
pub fn path_coefficient(
    mut path: PropagationPath,
    frequency_hz: f64,
    facets: &[Facet],
    permittivity: &[Permittivity],
) -> PropagationPath {
    let wavelength = SPEED_OF_LIGHT / frequency_hz;
    let d = path.length();
    let mut gain = Complex64::new(wavelength / (4.0 * PI * d), 0.0);
    for (k, &f) in path.facets.iter().enumerate() {
        let incoming = path.vertices[k + 1] - path.vertices[k];
        let facet = &facets[f];
        let angle = incidence_angle(incoming, facet.normal);
        gain *= fresnel_gamma(permittivity[f], angle, facet.polarization());
    }
    // reduce the carrier phase before exponentiating to keep precision for
    // long paths
    let cycles = d / wavelength;
    let carrier = Complex64::from_polar(1.0, -TAU * (cycles - cycles.floor()));
    path.theta = gain * carrier;
    path.phase = wrap_phase(path.theta.arg());
    path.delay = d / SPEED_OF_LIGHT;
    path
}

/// Maps an angle into `[0, 2π)`.
pub fn wrap_phase(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_conventions() {
        let (z, a) = direction_angles(Vec3::new(3.0, 4.0, 0.0));
        assert!((z - PI / 2.0).abs() < 1e-15);
        assert!((a - 4f64.atan2(3.0)).abs() < 1e-15);
        let (z, _) = direction_angles(Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(z, 0.0);
        let (z, _) = direction_angles(Vec3::new(0.0, 0.0, -2.0));
        assert_eq!(z, PI);
        // −π is folded onto +π
        let (_, a) = direction_angles(Vec3::new(-1.0, -0.0, 0.0));
        assert_eq!(a, PI);
    }

    #[test]
    fn phase_wraps_into_range() {
        assert_eq!(wrap_phase(0.0), 0.0);
        assert!((wrap_phase(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
        assert!(wrap_phase(-1e-300) < TAU);
        assert!((wrap_phase(TAU + 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn friis_los_five_meters() {
        let p = PropagationPath::from_geometry(
            vec![Vec3::new(0.0, 0.0, 5.0), Vec3::new(3.0, 4.0, 5.0)],
            vec![],
        );
        let p = path_coefficient(p, 2.4e9, &[], &[]);
        // λ/(4π·5) and 5/c, from mpmath at 30 digits
        assert!((p.theta.norm() / 1.988_060_483_015_392_6e-3 - 1.0).abs() < 1e-12);
        assert!((p.delay / 1.667_820_475_990_760_2e-8 - 1.0).abs() < 1e-12);
        assert!((p.azi_aod - 0.927_295_218_001_612_2).abs() < 1e-12);
        assert!((p.zen_aod - PI / 2.0).abs() < 1e-12);
        assert!((p.azi_aoa + 2.214_297_435_588_181).abs() < 1e-12);
        assert!((p.zen_aoa - PI / 2.0).abs() < 1e-12);
        assert!((p.phase - wrap_phase(p.theta.arg())).abs() < 1e-15);
        assert_eq!(p.n_reflections, 0);
    }
}
