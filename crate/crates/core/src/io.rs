//! On-disk formats: fans as `{ "rank", "rays", "max_cones" }` with integer
//! entries, divisors as `{ "coeffs": ["p/q", ...] }` aligned with the ray
//! order. Exactness end to end: rationals travel as strings, never floats.

use crate::divisor::Divisor;
use crate::error::Error;
use crate::fan::{Fan, ToricModel};
use crate::num::{rat_from_string, rat_to_string, Int, Rat};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FanDoc {
    pub rank: usize,
    pub rays: Vec<Vec<i64>>,
    pub max_cones: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivisorDoc {
    pub coeffs: Vec<String>,
}

pub fn parse_fan(text: &str) -> Result<ToricModel, Error> {
    let doc: FanDoc = serde_json::from_str(text)
        .map_err(|e| Error::input(format!("fan parse error: {e}")))?;
    let rays: Vec<Vec<Int>> = doc
        .rays
        .iter()
        .map(|r| r.iter().map(|&x| Int::from(x)).collect())
        .collect();
    let fan = Fan::new(doc.rank, rays, doc.max_cones);
    fan.validate()?;
    Ok(ToricModel::birational(fan, doc.rank))
}

pub fn fan_to_doc(fan: &Fan) -> Result<FanDoc, Error> {
    let rays = fan
        .rays
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| {
                    i64::try_from(x).map_err(|_| Error::engine("ray entry exceeds i64"))
                })
                .collect::<Result<Vec<i64>, Error>>()
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(FanDoc {
        rank: fan.rank,
        rays,
        max_cones: fan.max_cones.clone(),
    })
}

pub fn parse_divisor(text: &str, fan: &Fan) -> Result<Divisor, Error> {
    let doc: DivisorDoc = serde_json::from_str(text)
        .map_err(|e| Error::input(format!("divisor parse error: {e}")))?;
    if doc.coeffs.len() != fan.rays.len() {
        return Err(Error::input(format!(
            "divisor has {} coefficients for a fan with {} rays",
            doc.coeffs.len(),
            fan.rays.len()
        )));
    }
    doc.coeffs
        .iter()
        .map(|s| rat_from_string(s).map_err(Error::Input))
        .collect()
}

pub fn divisor_to_doc(d: &[Rat]) -> DivisorDoc {
    DivisorDoc {
        coeffs: d.iter().map(rat_to_string).collect(),
    }
}

/// Deterministic JSON: serde walks struct fields in declaration order and
/// every map in the model types is an ordered container, so equal values
/// serialize byte-identically.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::engine(format!("serialize: {e}")))
}

pub fn from_json<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T, Error> {
    serde_json::from_str(text).map_err(|e| Error::input(format!("parse error: {e}")))
}
