//! Scalar types: arbitrary-precision integers and rationals, plus the
//! string codecs used by every on-disk format ("p/q" for rationals).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Int = BigInt;
pub type Rat = BigRational;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(Int::from(p), Int::from(q))
}

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(Int::from(v))
}

/// Renders a rational as `p` or `p/q`, always in lowest terms.
pub fn rat_to_string(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p` or `p/q` with nonzero q.
pub fn rat_from_string(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p, q),
        None => (s, "1"),
    };
    let p: Int = p
        .trim()
        .parse()
        .map_err(|_| format!("bad rational numerator in {s:?}"))?;
    let q: Int = q
        .trim()
        .parse()
        .map_err(|_| format!("bad rational denominator in {s:?}"))?;
    if q.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rat::new(p, q))
}

pub fn gcd_list(values: &[Int]) -> Int {
    let mut g = Int::zero();
    for v in values {
        g = num_integer::gcd(g, v.abs());
    }
    g
}

/// Scales a rational vector to a primitive integer vector by the positive
/// factor clearing denominators and dividing out the content.
pub fn primitive_integer_direction(v: &[Rat]) -> Option<Vec<Int>> {
    if v.iter().all(|x| x.is_zero()) {
        return None;
    }
    let mut lcm = Int::one();
    for x in v {
        lcm = num_integer::lcm(lcm, x.denom().clone());
    }
    let ints: Vec<Int> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let g = gcd_list(&ints);
    Some(ints.iter().map(|x| x / &g).collect())
}

/// Serde codecs for exact scalars inside derive-based structs.
pub mod codec {
    use super::*;
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub mod rat_str {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Rat, ser: S) -> Result<S::Ok, S::Error> {
            rat_to_string(x).serialize(ser)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rat, D::Error> {
            let s = String::deserialize(de)?;
            rat_from_string(&s).map_err(DeError::custom)
        }
    }

    pub mod rat_vec {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[Rat], ser: S) -> Result<S::Ok, S::Error> {
            xs.iter().map(rat_to_string).collect::<Vec<_>>().serialize(ser)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Rat>, D::Error> {
            let ss = Vec::<String>::deserialize(de)?;
            ss.iter()
                .map(|s| rat_from_string(s).map_err(DeError::custom))
                .collect()
        }
    }

    pub mod rat_vec_vec {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[Vec<Rat>], ser: S) -> Result<S::Ok, S::Error> {
            xs.iter()
                .map(|row| row.iter().map(rat_to_string).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(ser)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Vec<Rat>>, D::Error> {
            let ss = Vec::<Vec<String>>::deserialize(de)?;
            ss.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| rat_from_string(s).map_err(DeError::custom))
                        .collect()
                })
                .collect()
        }
    }

    pub mod int_vec {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[Int], ser: S) -> Result<S::Ok, S::Error> {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().serialize(ser)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Int>, D::Error> {
            let ss = Vec::<String>::deserialize(de)?;
            ss.iter()
                .map(|s| s.parse::<Int>().map_err(DeError::custom))
                .collect()
        }
    }

    pub mod int_vec_vec {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[Vec<Int>], ser: S) -> Result<S::Ok, S::Error> {
            xs.iter()
                .map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(ser)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Vec<Int>>, D::Error> {
            let ss = Vec::<Vec<String>>::deserialize(de)?;
            ss.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| s.parse::<Int>().map_err(DeError::custom))
                        .collect()
                })
                .collect()
        }
    }
}
