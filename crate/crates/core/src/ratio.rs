//! Exact rationals in serialized form: always `"p/q"`, reduced, `q > 0`.

use std::fmt::Display;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serializer};

pub fn to_string<T: Clone + Integer + Display>(r: &Ratio<T>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse<T: Clone + Integer + FromStr>(s: &str) -> Option<Ratio<T>> {
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p = p.trim().parse().ok()?;
    let q: T = q.trim().parse().ok()?;
    if q.is_zero() {
        return None;
    }
    Some(Ratio::new(p, q))
}

pub fn serialize<T, S>(r: &Ratio<T>, s: S) -> Result<S::Ok, S::Error>
where
    T: Clone + Integer + Display,
    S: Serializer,
{
    s.serialize_str(&to_string(r))
}

pub fn deserialize<'de, T, D>(d: D) -> Result<Ratio<T>, D::Error>
where
    T: Clone + Integer + FromStr,
    D: Deserializer<'de>,
{
    let s = String::deserialize(d)?;
    parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
}

/// The same convention for optional fields.
pub mod option {
    use super::*;

    pub fn serialize<T, S>(r: &Option<Ratio<T>>, s: S) -> Result<S::Ok, S::Error>
    where
        T: Clone + Integer + Display,
        S: Serializer,
    {
        match r {
            Some(r) => s.serialize_some(&to_string(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<Option<Ratio<T>>, D::Error>
    where
        T: Clone + Integer + FromStr,
        D: Deserializer<'de>,
    {
        match Option::<String>::deserialize(d)? {
            None => Ok(None),
            Some(s) => parse(&s)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))),
        }
    }
}
