//! Named record generators.

use std::fmt;
use std::str::FromStr;

use paultrap_core::rpi::RecordShape;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordSpec(pub RecordShape<f64>);

impl FromStr for RecordSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p)),
            None => (s.trim(), None),
        };
        let values: Vec<f64> = match params {
            Some(p) => p
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| format!("record `{s}`: bad number `{}`", v.trim()))
                })
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let arity = |n: usize| {
            if values.len() == n {
                Ok(())
            } else {
                Err(format!("record `{name}` takes {n} parameter(s), got {}", values.len()))
            }
        };
        let shape = match name {
            "zero" => {
                arity(0)?;
                RecordShape::Zero
            }
            "constant" => {
                arity(1)?;
                RecordShape::Constant(values[0])
            }
            "sine" => {
                arity(3)?;
                RecordShape::Sine {
                    amplitude: values[0],
                    frequency: values[1],
                    phase: values[2],
                }
            }
            "matched" => {
                arity(2)?;
                RecordShape::Matched {
                    x0: values[0],
                    v0: values[1],
                }
            }
            other => return Err(format!("unknown record generator `{other}`")),
        };
        Ok(Self(shape))
    }
}

impl fmt::Display for RecordSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            RecordShape::Zero => write!(f, "zero"),
            RecordShape::Constant(v) => write!(f, "constant:{v:?}"),
            RecordShape::Sine {
                amplitude,
                frequency,
                phase,
            } => write!(f, "sine:{amplitude:?},{frequency:?},{phase:?}"),
            RecordShape::Matched { x0, v0 } => write!(f, "matched:{x0:?},{v0:?}"),
        }
    }
}
