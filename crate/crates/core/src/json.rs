//! Serialization helpers. Non-finite floats are written as the strings
//! `"inf"`, `"-inf"` and `"nan"` instead of JSON `null`.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

#[derive(Clone, Copy, Debug)]
pub struct JsonFloat(pub f64);

impl Serialize for JsonFloat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

pub(crate) fn float<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    JsonFloat(*v).serialize(s)
}

pub(crate) fn float_pairs<S: Serializer>(v: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &(a, b) in v {
        seq.serialize_element(&[JsonFloat(a), JsonFloat(b)])?;
    }
    seq.end()
}
