//! Fresnel reflection coefficients at a half-space of complex permittivity.

use num_complex::Complex64;

use crate::scene::Permittivity;

/// Field polarization relative to the plane of incidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    /// E-field normal to the plane of incidence (TE, "s").
    Perpendicular,
    /// E-field in the plane of incidence (TM, "p").
    Parallel,
}

/// Reflection coefficient for a wave arriving from vacuum at `incidence`
/// radians from the surface normal.
///
/// With `η = √(ε − sin²θ)`:
/// `Γ⊥ = (cosθ − η) / (cosθ + η)` and `Γ∥ = (ε·cosθ − η) / (ε·cosθ + η)`.
/// A perfect conductor gives −1 and +1, the `|ε| → ∞` limits of the same
/// expressions.
pub fn fresnel_gamma(eps: Permittivity, incidence: f64, pol: Polarization) -> Complex64 {
    let eps = match eps {
        Permittivity::PerfectConductor => {
            return match pol {
                Polarization::Perpendicular => Complex64::new(-1.0, 0.0),
                Polarization::Parallel => Complex64::new(1.0, 0.0),
            }
        }
        Permittivity::Dielectric(e) => e,
    };
    let (sin, cos) = incidence.sin_cos();
    let eta = (eps - sin * sin).sqrt();
    match pol {
        Polarization::Perpendicular => (cos - eta) / (cos + eta),
        Polarization::Parallel => (eps * cos - eta) / (eps * cos + eta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{material_properties, Material};

    const ANGLES: [f64; 6] = [0.0, 0.2, 0.6, 1.0, 1.3, 1.55];

    #[test]
    fn perfect_conductor_conventions() {
        for a in ANGLES {
            let perp = fresnel_gamma(Permittivity::PerfectConductor, a, Polarization::Perpendicular);
            let par = fresnel_gamma(Permittivity::PerfectConductor, a, Polarization::Parallel);
            assert_eq!(perp, Complex64::new(-1.0, 0.0));
            assert_eq!(par, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn vacuum_has_no_reflection() {
        let vac = Permittivity::Dielectric(Complex64::new(1.0, 0.0));
        for a in ANGLES {
            for pol in [Polarization::Perpendicular, Polarization::Parallel] {
                assert!(fresnel_gamma(vac, a, pol).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn concrete_normal_incidence() {
        let eps = material_properties(Material::Concrete, 2.4e9).unwrap();
        let g = fresnel_gamma(eps, 0.0, Polarization::Perpendicular);
        // (1 − √ε)/(1 + √ε) with ε = 5.31 − 0.49597…j, evaluated with mpmath
        assert!((g.re + 0.395_833_277_394_421_86).abs() < 1e-12, "{g}");
        assert!((g.im - 0.019_640_464_593_608_135).abs() < 1e-12, "{g}");
        assert!((g.norm() - 0.396_320_238_370_767_7).abs() < 1e-12);
        // at normal incidence the two polarizations differ only in sign
        let p = fresnel_gamma(eps, 0.0, Polarization::Parallel);
        assert!((p + g).norm() < 1e-15);
    }

    #[test]
    fn lossy_dielectrics_never_amplify() {
        for m in Material::ALL {
            let eps = material_properties(m, 2.4e9).unwrap();
            for k in 0..157 {
                let a = k as f64 * 0.01;
                for pol in [Polarization::Perpendicular, Polarization::Parallel] {
                    assert!(fresnel_gamma(eps, a, pol).norm() <= 1.0 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn grazing_incidence_tends_to_total_reflection() {
        let eps = material_properties(Material::Brick, 2.4e9).unwrap();
        let g = fresnel_gamma(eps, std::f64::consts::FRAC_PI_2 - 1e-6, Polarization::Perpendicular);
        assert!((g + 1.0).norm() < 1e-5);
    }
}
