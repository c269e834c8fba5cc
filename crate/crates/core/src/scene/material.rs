//! Radio materials and their complex relative permittivity.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::SceneError;

/// Vacuum permittivity in F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Lower edge of the frequency window in which the conductivity fits hold.
pub const MIN_FREQUENCY_HZ: f64 = 1.0e9;
/// Upper edge of the frequency window in which the conductivity fits hold.
pub const MAX_FREQUENCY_HZ: f64 = 10.0e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Material {
    Metal,
    Concrete,
    Brick,
    Wood,
    Glass,
    Marble,
}

impl Material {
    pub const ALL: [Material; 6] = [
        Material::Metal,
        Material::Concrete,
        Material::Brick,
        Material::Wood,
        Material::Glass,
        Material::Marble,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Material::Metal => "metal",
            Material::Concrete => "concrete",
            Material::Brick => "brick",
            Material::Wood => "wood",
            Material::Glass => "glass",
            Material::Marble => "marble",
        }
    }

    /// `(relative permittivity, c, d)` with conductivity `σ = c · f_GHz^d`
    /// in S/m. `None` for metal, which is treated as a perfect conductor.
    pub fn itu_parameters(self) -> Option<(f64, f64, f64)> {
        match self {
            Material::Metal => None,
            Material::Concrete => Some((5.31, 0.0326, 0.8095)),
            Material::Brick => Some((3.75, 0.038, 0.0)),
            Material::Wood => Some((1.99, 0.0047, 1.0718)),
            Material::Glass => Some((6.27, 0.0043, 1.1925)),
            Material::Marble => Some((7.074, 0.0055, 0.9262)),
        }
    }

    /// Conductivity in S/m, `None` for metal.
    pub fn conductivity(self, frequency_hz: f64) -> Option<f64> {
        self.itu_parameters()
            .map(|(_, c, d)| c * (frequency_hz / 1.0e9).powf(d))
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Material {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Material::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| SceneError::UnknownMaterial(s.to_string()))
    }
}

/// Complex relative permittivity of a reflecting surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Permittivity {
    Dielectric(Complex64),
    PerfectConductor,
}

/// `ε = εr − j·σ/(2π·f·ε0)` for dielectrics; metal yields
/// [`Permittivity::PerfectConductor`].
pub fn material_properties(material: Material, frequency_hz: f64) -> Result<Permittivity, SceneError> {
    if !(MIN_FREQUENCY_HZ..=MAX_FREQUENCY_HZ).contains(&frequency_hz) {
        return Err(SceneError::FrequencyOutOfRange(frequency_hz));
    }
    Ok(match material.itu_parameters() {
        None => Permittivity::PerfectConductor,
        Some((eps_r, _, _)) => {
            let sigma = material.conductivity(frequency_hz).unwrap_or(0.0);
            Permittivity::Dielectric(Complex64::new(
                eps_r,
                -sigma / (2.0 * PI * frequency_hz * EPSILON_0),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metal_is_perfect_conductor() {
        assert_eq!(
            material_properties(Material::Metal, 2.4e9).unwrap(),
            Permittivity::PerfectConductor
        );
    }

    #[test]
    fn concrete_and_wood_at_2_4_ghz() {
        // 0.0326 * 2.4^0.8095 and 0.0047 * 2.4^1.0718, evaluated with mpmath
        let sigma_concrete = 0.066_221_436_932_743_07;
        let sigma_wood = 0.012_011_804_822_091_257;
        assert!((Material::Concrete.conductivity(2.4e9).unwrap() - sigma_concrete).abs() < 1e-15);
        assert!((Material::Wood.conductivity(2.4e9).unwrap() - sigma_wood).abs() < 1e-15);

        let Permittivity::Dielectric(eps) = material_properties(Material::Concrete, 2.4e9).unwrap()
        else {
            panic!("concrete is a dielectric");
        };
        assert_eq!(eps.re, 5.31);
        assert!((eps.im + 0.495_973_828_492_487_66).abs() < 1e-12, "{}", eps.im);

        let Permittivity::Dielectric(eps) = material_properties(Material::Wood, 2.4e9).unwrap() else {
            panic!("wood is a dielectric");
        };
        assert_eq!(eps.re, 1.99);
    }

    #[test]
    fn frequency_window_is_enforced() {
        assert!(matches!(
            material_properties(Material::Brick, 0.5e9),
            Err(SceneError::FrequencyOutOfRange(_))
        ));
        assert!(material_properties(Material::Brick, 10.0e9).is_ok());
        assert!(material_properties(Material::Brick, 10.1e9).is_err());
    }

    #[test]
    fn conductivity_is_monotone_for_positive_exponents() {
        for m in Material::ALL {
            let Some((_, _, d)) = m.itu_parameters() else { continue };
            let mut prev = m.conductivity(1.0e9).unwrap();
            for k in 1..=90 {
                let f = 1.0e9 + k as f64 * 0.1e9;
                let s = m.conductivity(f).unwrap();
                if d > 0.0 {
                    assert!(s > prev);
                } else {
                    assert_eq!(s, prev);
                }
                prev = s;
            }
        }
    }

    #[test]
    fn names_round_trip_and_unknown_is_rejected() {
        for m in Material::ALL {
            assert_eq!(m.as_str().parse::<Material>().unwrap(), m);
        }
        assert!(matches!(
            "granite".parse::<Material>(),
            Err(SceneError::UnknownMaterial(ref s)) if s == "granite"
        ));
    }
}
