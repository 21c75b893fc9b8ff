use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Boltzmann temperature. `Zero` is the deterministic argmax limit and
/// serializes as the string `"zero"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Zero,
    Finite(f64),
}

impl Temperature {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Temperature::Finite(t) if !(t > 0.0 && t.is_finite()) => Err(
                Error::InvalidPolicy(format!("temperature {t} must be positive and finite")),
            ),
            _ => Ok(()),
        }
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Temperature::Finite(1.0)
    }
}

impl Serialize for Temperature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Temperature::Zero => s.serialize_str("zero"),
            Temperature::Finite(t) => s.serialize_f64(*t),
        }
    }
}

impl<'de> Deserialize<'de> for Temperature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(t) => Ok(Temperature::Finite(t)),
            Repr::Word(w) if w == "zero" => Ok(Temperature::Zero),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "temperature must be a number or \"zero\", got {w:?}"
            ))),
        }
    }
}

/// Normalized `exp(u / temp)`; at zero temperature a point mass on the
/// first maximizer.
pub fn boltzmann(utilities: &[f64], temp: Temperature) -> Vec<f64> {
    if utilities.is_empty() {
        return Vec::new();
    }
    let mut best = 0;
    for (i, u) in utilities.iter().enumerate() {
        if *u > utilities[best] {
            best = i;
        }
    }
    match temp {
        Temperature::Zero => {
            let mut p = vec![0.0; utilities.len()];
            p[best] = 1.0;
            p
        }
        Temperature::Finite(t) => {
            let top = utilities[best];
            let w: Vec<f64> = utilities.iter().map(|u| ((u - top) / t).exp()).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect()
        }
    }
}

/// A speaker calibrated to one listener of its community: it picks target
/// trajectories with `temp_target` and messages with `temp_msg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeakerPolicy {
    pub listener_ref: usize,
    pub temp_msg: Temperature,
    pub temp_target: Temperature,
}

impl SpeakerPolicy {
    pub fn validate(&self) -> Result<()> {
        self.temp_msg.validate()?;
        self.temp_target.validate()
    }
}
