//! Norm exponents `p, q ∈ (0, ∞]` with an explicit infinity.
//!
//! Infinity is a first-class variant, never a large float: every consumer
//! branches on it explicitly, so `q = ∞` norms are exact maxima and exponent
//! arithmetic like `1 - 2/q` uses `1/∞ = 0` without approximation.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// Validated constructor for finite exponents; rejects NaN, infinities
    /// and non-positive values (use [`Exponent::Infinity`] for `∞`).
    pub fn finite(value: f64) -> Result<Self, Error> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "exponent must be a positive finite real or infinity, got {value}"
            )));
        }
        Ok(Exponent::Finite(value))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// `1/p`, with `1/∞ = 0` exactly.
    pub fn recip(&self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// True iff the exponent is at most `t` (infinity is larger than any t).
    pub fn le(&self, t: f64) -> bool {
        match self {
            Exponent::Finite(p) => *p <= t,
            Exponent::Infinity => false,
        }
    }

    /// True iff the exponent is at least `t`.
    pub fn ge(&self, t: f64) -> bool {
        match self {
            Exponent::Finite(p) => *p >= t,
            Exponent::Infinity => true,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "oo" | "∞" => Ok(Exponent::Infinity),
            t => {
                let v: f64 = t.parse().map_err(|_| {
                    Error::InvalidParameter(format!("cannot parse exponent from {s:?}"))
                })?;
                Exponent::finite(v)
            }
        }
    }
}

// JSON: finite exponents are numbers, infinity is the string "inf".
impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => serializer.serialize_f64(*p),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExpVisitor;

        impl<'de> Visitor<'de> for ExpVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exponent, E> {
                Exponent::finite(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exponent, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExpVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::Finite(2.0));
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("Infinity".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert!("-1".parse::<Exponent>().is_err());
        assert!("nan".parse::<Exponent>().is_err());
        assert_eq!(Exponent::Infinity.to_string(), "inf");
        assert_eq!(Exponent::Finite(1.5).to_string(), "1.5");
    }

    #[test]
    fn recip_is_exact_zero_at_infinity() {
        assert_eq!(Exponent::Infinity.recip(), 0.0);
        assert_eq!(Exponent::Finite(2.0).recip(), 0.5);
    }

    #[test]
    fn order_helpers() {
        assert!(Exponent::Finite(2.0).le(2.0));
        assert!(Exponent::Finite(2.0).ge(2.0));
        assert!(Exponent::Infinity.ge(2.0));
        assert!(!Exponent::Infinity.le(1e300));
    }

    #[test]
    fn json_round_trip() {
        let q: Exponent = serde_json::from_str("2.5").unwrap();
        assert_eq!(q, Exponent::Finite(2.5));
        let q: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(q, Exponent::Infinity);
        assert_eq!(serde_json::to_string(&Exponent::Infinity).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&Exponent::Finite(3.0)).unwrap(), "3.0");
    }
}
