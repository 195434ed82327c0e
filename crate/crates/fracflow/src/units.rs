//! Unit conversion at the configuration boundary.
//!
//! Everything inside the simulator is SI (m, s, Pa, m², Pa·s). Case files
//! carry human-friendly quantities as strings with an explicit unit, e.g.
//! `"10 mD"`, `"30 day"`, `"100 bar"`. This module is the single place
//! where those are parsed and converted.

use crate::error::{FracflowError, Result};

pub const DARCY: f64 = 9.869233e-13; // m²
pub const MILLIDARCY: f64 = 1e-3 * DARCY;
pub const BAR: f64 = 1e5; // Pa
pub const PSI: f64 = 6894.757; // Pa
pub const CENTIPOISE: f64 = 1e-3; // Pa·s
pub const DAY: f64 = 86400.0; // s
pub const YEAR: f64 = 365.0 * DAY; // s (calendar convention used throughout)

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Pressure,
    Permeability,
    Viscosity,
    Compressibility,
    VolumeRate,
    Dimensionless,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Pressure => "pressure",
            Dimension::Permeability => "permeability",
            Dimension::Viscosity => "viscosity",
            Dimension::Compressibility => "compressibility",
            Dimension::VolumeRate => "volume rate",
            Dimension::Dimensionless => "dimensionless",
        }
    }
}

/// (symbol, dimension, factor to SI)
const UNIT_TABLE: &[(&str, Dimension, f64)] = &[
    ("m", Dimension::Length, 1.0),
    ("cm", Dimension::Length, 1e-2),
    ("mm", Dimension::Length, 1e-3),
    ("km", Dimension::Length, 1e3),
    ("ft", Dimension::Length, 0.3048),
    ("s", Dimension::Time, 1.0),
    ("sec", Dimension::Time, 1.0),
    ("min", Dimension::Time, 60.0),
    ("hour", Dimension::Time, 3600.0),
    ("day", Dimension::Time, DAY),
    ("days", Dimension::Time, DAY),
    ("year", Dimension::Time, YEAR),
    ("years", Dimension::Time, YEAR),
    ("Pa", Dimension::Pressure, 1.0),
    ("kPa", Dimension::Pressure, 1e3),
    ("MPa", Dimension::Pressure, 1e6),
    ("bar", Dimension::Pressure, BAR),
    ("psi", Dimension::Pressure, PSI),
    ("m2", Dimension::Permeability, 1.0),
    ("D", Dimension::Permeability, DARCY),
    ("mD", Dimension::Permeability, MILLIDARCY),
    ("Pa.s", Dimension::Viscosity, 1.0),
    ("Pa*s", Dimension::Viscosity, 1.0),
    ("cP", Dimension::Viscosity, CENTIPOISE),
    ("1/Pa", Dimension::Compressibility, 1.0),
    ("1/bar", Dimension::Compressibility, 1.0 / BAR),
    ("m3/s", Dimension::VolumeRate, 1.0),
    ("m3/day", Dimension::VolumeRate, 1.0 / DAY),
];

/// Parse a quantity string like `"10 mD"` or `"0.5 day"` into SI units,
/// checking that the unit has the expected dimension. A bare number is
/// accepted only for `Dimension::Dimensionless`.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64> {
    let trimmed = text.trim();
    let mut parts = trimmed.split_whitespace();
    let value_str = parts.next().ok_or_else(|| {
        FracflowError::config(trimmed, "empty quantity")
    })?;
    let value: f64 = value_str.parse().map_err(|_| {
        FracflowError::config(trimmed, format!("`{value_str}` is not a number"))
    })?;

    let unit = parts.next();
    if parts.next().is_some() {
        return Err(FracflowError::config(
            trimmed,
            "expected `<value> <unit>` with a single unit token",
        ));
    }

    match unit {
        None => {
            if expected == Dimension::Dimensionless {
                Ok(value)
            } else {
                Err(FracflowError::config(
                    trimmed,
                    format!("missing unit; expected a {} unit", expected.name()),
                ))
            }
        }
        Some(sym) => {
            let entry = UNIT_TABLE.iter().find(|(s, _, _)| *s == sym);
            match entry {
                Some((_, dim, factor)) if *dim == expected => Ok(value * factor),
                Some((_, dim, _)) => Err(FracflowError::config(
                    trimmed,
                    format!(
                        "unit `{sym}` is a {} unit, expected {}",
                        dim.name(),
                        expected.name()
                    ),
                )),
                None => Err(FracflowError::config(
                    trimmed,
                    format!("unknown unit `{sym}`"),
                )),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_quantities() {
        assert_eq!(parse_quantity("10 mD", Dimension::Permeability).unwrap(), 10.0 * MILLIDARCY);
        assert_eq!(parse_quantity("1000 D", Dimension::Permeability).unwrap(), 1000.0 * DARCY);
        assert_eq!(parse_quantity("30 day", Dimension::Time).unwrap(), 30.0 * DAY);
        assert_eq!(parse_quantity("5 year", Dimension::Time).unwrap(), 5.0 * YEAR);
        assert_eq!(parse_quantity("100 bar", Dimension::Pressure).unwrap(), 1e7);
        assert_eq!(parse_quantity("1 cP", Dimension::Viscosity).unwrap(), 1e-3);
        assert_eq!(parse_quantity("0.5", Dimension::Dimensionless).unwrap(), 0.5);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let err = parse_quantity("10 mD", Dimension::Time).unwrap_err();
        assert!(err.to_string().contains("permeability"));
    }

    #[test]
    fn rejects_unknown_unit() {
        assert!(parse_quantity("10 furlong", Dimension::Length).is_err());
        assert!(parse_quantity("abc m", Dimension::Length).is_err());
        assert!(parse_quantity("10", Dimension::Length).is_err());
    }
}
