//! Scalar time signals for prescribed boundary data.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Signal {
    Constant {
        value: f64,
    },
    /// `amplitude * sin(2 pi frequency t + phase)`
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Default for Signal {
    fn default() -> Self {
        Signal::zero()
    }
}

impl Signal {
    pub fn zero() -> Self {
        Signal::Constant { value: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Signal::Constant { value } => value,
            Signal::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * t + phase).sin(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Signal::Constant { value } => value == 0.0,
            Signal::Sine { amplitude, .. } => amplitude == 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            Signal::Constant { value } => value.is_finite(),
            Signal::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude.is_finite() && frequency.is_finite() && phase.is_finite(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        assert_eq!(Signal::Constant { value: 2.5 }.eval(7.0), 2.5);
        let s = Signal::Sine {
            amplitude: 2.0,
            frequency: 0.25,
            phase: 0.0,
        };
        assert!((s.eval(1.0) - 2.0).abs() < 1e-15);
        assert!(Signal::zero().is_zero());
    }

    #[test]
    fn phase_defaults_to_zero() {
        let s: Signal = serde_json::from_str(r#"{"kind":"sine","amplitude":1.0,"frequency":3.0}"#).unwrap();
        assert_eq!(
            s,
            Signal::Sine {
                amplitude: 1.0,
                frequency: 3.0,
                phase: 0.0
            }
        );
    }
}
