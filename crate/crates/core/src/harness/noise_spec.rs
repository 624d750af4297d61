//! Single-flag noise descriptions.
//!
//! ```text
//! spec  := "none" | term ("+" term)*
//! term  := ["vs/"] base
//! base  := "step:" t0_s ":" gain | "linear:" total | "sin:" hz ":" amp
//! ```
//!
//! Terms without the `vs/` prefix add to the illumination noise, prefixed
//! terms to the specular noise. `"linear:0.1+vs/sin:0.2:0.005"` is a 10%
//! illumination ramp plus slow specular sway.

use std::fmt;

use thiserror::Error;

use crate::srm::{NoiseComponent, NoiseSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid noise term '{token}': {reason}")]
pub struct NoiseParseError {
    pub token: String,
    pub reason: String,
}

fn fail(token: &str, reason: impl Into<String>) -> NoiseParseError {
    NoiseParseError {
        token: token.to_string(),
        reason: reason.into(),
    }
}

fn number(token: &str, field: &str) -> Result<f64, NoiseParseError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| fail(token, format!("'{field}' is not a finite number")))
}

fn parse_base(token: &str, body: &str) -> Result<NoiseComponent, NoiseParseError> {
    let fields: Vec<&str> = body.split(':').collect();
    match fields.as_slice() {
        ["step", t0, gain] => Ok(NoiseComponent::Step {
            t0_s: number(token, t0)?,
            gain: number(token, gain)?,
        }),
        ["linear", total] => Ok(NoiseComponent::Linear {
            total: number(token, total)?,
        }),
        ["sin", hz, amp] => {
            let freq_hz = number(token, hz)?;
            if freq_hz < 0.0 {
                return Err(fail(token, "frequency must be >= 0"));
            }
            Ok(NoiseComponent::Sinusoid {
                freq_hz,
                amplitude: number(token, amp)?,
            })
        }
        ["step" | "linear" | "sin", ..] => Err(fail(token, "wrong number of fields")),
        _ => Err(fail(token, "expected none, step:, linear: or sin:")),
    }
}

pub fn parse_noise_spec(input: &str) -> Result<NoiseSpec, NoiseParseError> {
    let input = input.trim();
    if input == "none" {
        return Ok(NoiseSpec::none());
    }
    let mut spec = NoiseSpec::none();
    for raw in input.split('+') {
        let token = raw.trim();
        if token.is_empty() {
            return Err(fail(raw, "empty term"));
        }
        if token == "none" {
            return Err(fail(token, "'none' cannot be combined with other terms"));
        }
        match token.strip_prefix("vs/") {
            Some(body) => spec.delta_vs.push(parse_base(token, body)?),
            None => spec.delta_i.push(parse_base(token, token)?),
        }
    }
    Ok(spec)
}

/// Writes a spec back in the grammar accepted by [`parse_noise_spec`].
pub struct NoiseSpecDisplay<'a>(pub &'a NoiseSpec);

impl fmt::Display for NoiseSpecDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_none() {
            return f.write_str("none");
        }
        let terms = self
            .0
            .delta_i
            .iter()
            .map(|c| ("", c))
            .chain(self.0.delta_vs.iter().map(|c| ("vs/", c)));
        for (k, (prefix, c)) in terms.enumerate() {
            if k > 0 {
                f.write_str("+")?;
            }
            match c {
                NoiseComponent::Step { t0_s, gain } => write!(f, "{prefix}step:{t0_s}:{gain}")?,
                NoiseComponent::Linear { total } => write!(f, "{prefix}linear:{total}")?,
                NoiseComponent::Sinusoid { freq_hz, amplitude } => {
                    write!(f, "{prefix}sin:{freq_hz}:{amplitude}")?
                }
            }
        }
        Ok(())
    }
}
