//! JSON has no infinity; non-finite floats travel as the strings `"inf"`,
//! `"-inf"` and `"nan"`.

use serde::{Deserialize, Deserializer, Serializer};

pub fn format(value: f64) -> String {
    if value == f64::INFINITY {
        "inf".to_string()
    } else if value == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if value.is_nan() {
        "nan".to_string()
    } else {
        value.to_string()
    }
}

pub fn parse(text: &str) -> Option<f64> {
    match text {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        other => other.parse().ok().filter(|v: &f64| v.is_finite()),
    }
}

pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        serializer.serialize_f64(*value)
    } else {
        serializer.serialize_str(&format(*value))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Number(f64),
    Text(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    match Repr::deserialize(deserializer)? {
        Repr::Number(v) => Ok(v),
        Repr::Text(s) => parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid float {s:?}"))),
    }
}
