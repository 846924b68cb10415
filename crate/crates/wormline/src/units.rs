//! Quantity strings such as `"0.1 mm"` or `"10 µA"`, converted to SI.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Frequency,
    Current,
    Capacitance,
    Speed,
    Acceleration,
    Voltage,
    Dimensionless,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[
                ("m", 1.0),
                ("cm", 1e-2),
                ("mm", 1e-3),
                ("um", 1e-6),
                ("µm", 1e-6),
                ("μm", 1e-6),
                ("nm", 1e-9),
            ],
            Dimension::Time => &[
                ("s", 1.0),
                ("ms", 1e-3),
                ("us", 1e-6),
                ("µs", 1e-6),
                ("μs", 1e-6),
                ("ns", 1e-9),
                ("ps", 1e-12),
                ("fs", 1e-15),
            ],
            Dimension::Frequency => &[
                ("Hz", 1.0),
                ("kHz", 1e3),
                ("MHz", 1e6),
                ("GHz", 1e9),
                ("THz", 1e12),
            ],
            Dimension::Current => &[
                ("A", 1.0),
                ("mA", 1e-3),
                ("uA", 1e-6),
                ("µA", 1e-6),
                ("μA", 1e-6),
                ("nA", 1e-9),
            ],
            Dimension::Capacitance => &[
                ("F", 1.0),
                ("uF", 1e-6),
                ("µF", 1e-6),
                ("nF", 1e-9),
                ("pF", 1e-12),
                ("fF", 1e-15),
            ],
            Dimension::Speed => &[("m/s", 1.0), ("km/s", 1e3)],
            Dimension::Acceleration => &[("m/s^2", 1.0), ("m/s2", 1.0), ("m/s²", 1.0)],
            Dimension::Voltage => &[("V", 1.0), ("mV", 1e-3), ("uV", 1e-6), ("µV", 1e-6)],
            Dimension::Dimensionless => &[],
        }
    }

    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Length => "m",
            Dimension::Time => "s",
            Dimension::Frequency => "Hz",
            Dimension::Current => "A",
            Dimension::Capacitance => "F",
            Dimension::Speed => "m/s",
            Dimension::Acceleration => "m/s^2",
            Dimension::Voltage => "V",
            Dimension::Dimensionless => "1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError(String);

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UnitError {}

/// Parses `"<number> <unit>"` or a bare number (already SI).
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || matches!(c, '.' | '+' | '-'))
                && !((c == 'e' || c == 'E') && exponent_follows(&text[i + 1..]))
        })
        .map_or(text.len(), |(i, _)| i);
    let (number, unit) = (text[..split].trim(), text[split..].trim());
    let value: f64 = number
        .parse()
        .map_err(|_| UnitError(format!("cannot read a number from {text:?}")))?;
    if unit.is_empty() {
        return Ok(value);
    }
    dim.units()
        .iter()
        .find(|(name, _)| *name == unit)
        .map(|&(_, scale)| value * scale)
        .ok_or_else(|| {
            UnitError(format!(
                "unknown unit {unit:?} for a quantity in {}",
                dim.si_unit()
            ))
        })
}

fn exponent_follows(rest: &str) -> bool {
    let rest = rest.strip_prefix(['+', '-']).unwrap_or(rest);
    rest.starts_with(|c: char| c.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converts_common_units() {
        assert_eq!(parse_quantity("0.1 mm", Dimension::Length).unwrap(), 0.1 * 1e-3);
        assert_eq!(parse_quantity("10 µA", Dimension::Current).unwrap(), 10.0 * 1e-6);
        assert_eq!(parse_quantity("10uA", Dimension::Current).unwrap(), 10.0 * 1e-6);
        assert_eq!(parse_quantity("0.1 pF", Dimension::Capacitance).unwrap(), 0.1 * 1e-12);
        assert_eq!(parse_quantity("200 GHz", Dimension::Frequency).unwrap(), 200.0 * 1e9);
        assert_eq!(parse_quantity("2.5e18 m/s^2", Dimension::Acceleration).unwrap(), 2.5e18);
        assert_eq!(parse_quantity("1e-3", Dimension::Length).unwrap(), 1e-3);
        assert_eq!(parse_quantity("-5 mm", Dimension::Length).unwrap(), -5.0 * 1e-3);
        assert_eq!(parse_quantity("1E+2 ps", Dimension::Time).unwrap(), 1e2 * 1e-12);
    }

    #[test]
    fn rejects_wrong_dimension_and_garbage() {
        assert!(parse_quantity("5 GHz", Dimension::Length).is_err());
        assert!(parse_quantity("mm", Dimension::Length).is_err());
        assert!(parse_quantity("", Dimension::Length).is_err());
        assert!(parse_quantity("3 furlongs", Dimension::Length).is_err());
    }
}
