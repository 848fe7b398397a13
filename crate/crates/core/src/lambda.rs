use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ratio of the field and bulk length scales; `Infinite` imposes the uniaxial constraint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

impl Lambda {
    pub fn finite(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self::Finite(value))
        } else if value == f64::INFINITY {
            Ok(Self::Infinite)
        } else {
            Err(Error::InvalidArgument(format!("lambda must be >= 0, got {value}")))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    /// `lambda^2`, or `None` for `Infinite`.
    pub fn squared(&self) -> Option<f64> {
        match self {
            Self::Finite(l) => Some(l * l),
            Self::Infinite => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Self::Finite(l) => *l,
            Self::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(l) => write!(f, "{l}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Lambda {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Self::Infinite),
            t => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("cannot read lambda from {s:?}")))?;
                Self::finite(v)
            }
        }
    }
}

impl Serialize for Lambda {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(l) => s.serialize_f64(*l),
            Self::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Lambda::finite(v).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
