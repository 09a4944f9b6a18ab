use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Positivity {
    Strict,
    /// Bounded below by the given positive constant.
    BoundedBelow(f64),
    Unrestricted,
}

/// Composable terminal payoff grammar used by configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalSpec {
    /// `exp(shift + scale · w[coord])`.
    #[serde(rename = "exp_wT")]
    ExpWT {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        coord: usize,
    },
    /// `(offset + w[coord]²)^(power / 2)`.
    #[serde(rename = "power_wT")]
    PowerWT {
        power: f64,
        #[serde(default = "one")]
        offset: f64,
        #[serde(default)]
        coord: usize,
    },
    /// `shift + scale · w[coord]`.
    Affine {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        coord: usize,
    },
    /// `min(max(inner, lo), hi)`.
    Clamp { inner: Box<TerminalSpec>, lo: f64, hi: f64 },
    Const { value: f64 },
}

fn one() -> f64 {
    1.0
}

impl TerminalSpec {
    pub fn build(&self) -> Result<TerminalCondition> {
        let (phi, positivity): (Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, Positivity) = match self.clone() {
            TerminalSpec::ExpWT { scale, shift, coord } => {
                (Arc::new(move |w: &[f64]| (shift + scale * w[coord]).exp()), Positivity::Strict)
            }
            TerminalSpec::PowerWT { power, offset, coord } => {
                if !(offset > 0.0) {
                    return Err(Error::InvalidTerminal("power_wT needs offset > 0".into()));
                }
                let floor = if power >= 0.0 { offset.powf(0.5 * power) } else { 0.0 };
                let pos = if floor > 0.0 { Positivity::BoundedBelow(floor) } else { Positivity::Strict };
                (Arc::new(move |w: &[f64]| (offset + w[coord] * w[coord]).powf(0.5 * power)), pos)
            }
            TerminalSpec::Affine { scale, shift, coord } => {
                let pos = if scale == 0.0 && shift > 0.0 { Positivity::BoundedBelow(shift) } else { Positivity::Unrestricted };
                (Arc::new(move |w: &[f64]| shift + scale * w[coord]), pos)
            }
            TerminalSpec::Clamp { inner, lo, hi } => {
                if !(lo <= hi) {
                    return Err(Error::InvalidTerminal(format!("clamp needs lo <= hi, got [{lo}, {hi}]")));
                }
                let inner = inner.build()?;
                let pos = if lo > 0.0 { Positivity::BoundedBelow(lo) } else { inner.positivity };
                (Arc::new(move |w: &[f64]| inner.eval(w).max(lo).min(hi)), pos)
            }
            TerminalSpec::Const { value } => {
                let pos = if value > 0.0 { Positivity::BoundedBelow(value) } else { Positivity::Unrestricted };
                (Arc::new(move |_: &[f64]| value), pos)
            }
        };
        let mut tc = TerminalCondition::from_arc(phi, positivity, self.label());
        tc.spec = Some(self.clone());
        Ok(tc)
    }

    pub fn label(&self) -> String {
        match self {
            TerminalSpec::ExpWT { scale, shift, coord } => format!("exp({shift} + {scale} W{coord})"),
            TerminalSpec::PowerWT { power, offset, coord } => format!("({offset} + W{coord}^2)^({power}/2)"),
            TerminalSpec::Affine { scale, shift, coord } => format!("{shift} + {scale} W{coord}"),
            TerminalSpec::Clamp { inner, lo, hi } => format!("clamp({}, {lo}, {hi})", inner.label()),
            TerminalSpec::Const { value } => format!("{value}"),
        }
    }

    /// Largest Brownian coordinate referenced.
    pub fn max_coord(&self) -> usize {
        match self {
            TerminalSpec::ExpWT { coord, .. } | TerminalSpec::PowerWT { coord, .. } | TerminalSpec::Affine { coord, .. } => *coord,
            TerminalSpec::Clamp { inner, .. } => inner.max_coord(),
            TerminalSpec::Const { .. } => 0,
        }
    }
}

/// Markovian terminal value `X = φ(W_T)`.
#[derive(Clone)]
pub struct TerminalCondition {
    phi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub positivity: Positivity,
    pub label: String,
    pub spec: Option<TerminalSpec>,
}

impl fmt::Debug for TerminalCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TerminalCondition({}, {:?})", self.label, self.positivity)
    }
}

impl TerminalCondition {
    pub fn new(
        phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        positivity: Positivity,
        label: impl Into<String>,
    ) -> Self {
        Self::from_arc(Arc::new(phi), positivity, label)
    }

    pub fn from_arc(phi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, positivity: Positivity, label: impl Into<String>) -> Self {
        Self { phi, positivity, label: label.into(), spec: None }
    }

    pub fn constant(c: f64) -> Self {
        let pos = if c > 0.0 { Positivity::BoundedBelow(c) } else { Positivity::Unrestricted };
        Self::new(move |_| c, pos, format!("{c}"))
    }

    /// `exp(a W_T)` in one dimension.
    pub fn exp_w(a: f64) -> Self {
        TerminalSpec::ExpWT { scale: a, shift: 0.0, coord: 0 }.build().expect("valid spec")
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        (self.phi)(w)
    }

    /// Pointwise map `φ ↦ h(φ)`.
    pub fn map(&self, h: impl Fn(f64) -> f64 + Send + Sync + 'static, positivity: Positivity, label: impl Into<String>) -> Self {
        let phi = self.phi.clone();
        Self::new(move |w| h(phi(w)), positivity, label)
    }

    /// Pointwise combination of two payoffs.
    pub fn zip(
        &self,
        other: &TerminalCondition,
        h: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        positivity: Positivity,
        label: impl Into<String>,
    ) -> Self {
        let (a, b) = (self.phi.clone(), other.phi.clone());
        Self::new(move |w| h(a(w), b(w)), positivity, label)
    }

    /// `Xⁿ = n ∧ X ∨ 1/n`.
    pub fn clamp_level(&self, n: f64) -> Self {
        let (lo, hi) = (1.0 / n, n);
        self.map(move |x| x.max(lo).min(hi), Positivity::BoundedBelow(lo), format!("clamp({}, 1/{n}, {n})", self.label))
    }

    pub fn is_positive(&self) -> bool {
        !matches!(self.positivity, Positivity::Unrestricted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_builds_and_composes() {
        let json = r#"{"kind":"clamp","inner":{"kind":"exp_wT","scale":1.0},"lo":0.5,"hi":2.0}"#;
        let spec: TerminalSpec = serde_json::from_str(json).unwrap();
        let tc = spec.build().unwrap();
        assert_eq!(tc.eval(&[0.0]), 1.0);
        assert_eq!(tc.eval(&[5.0]), 2.0);
        assert_eq!(tc.eval(&[-5.0]), 0.5);
        assert_eq!(tc.positivity, Positivity::BoundedBelow(0.5));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = r#"{"kind":"const","value":1.0,"bogus":3}"#;
        assert!(serde_json::from_str::<TerminalSpec>(json).is_err());
    }

    #[test]
    fn clamp_level_bounds_payoff() {
        let x = TerminalCondition::exp_w(1.0).clamp_level(4.0);
        assert_eq!(x.eval(&[10.0]), 4.0);
        assert_eq!(x.eval(&[-10.0]), 0.25);
    }
}
