//! Complex numbers in configs: written as `[re, im]`, read from either
//! `[re, im]` or a bare real number.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Real(f64),
    Pair([f64; 2]),
}

pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
    Ok(match Repr::deserialize(d)? {
        Repr::Real(re) => C64::new(re, 0.0),
        Repr::Pair([re, im]) => C64::new(re, im),
    })
}
