use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeff::CoefficientBundle;
use crate::error::{Error, Result};

/// Scalar driver `(t, y, z) -> value`.
pub type ScalarFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;
/// Vector-valued map `(t, y, z) -> R^n`.
pub type VectorFn = Arc<dyn Fn(f64, f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `Y = X + ∫ f ds − ∫ Z dW`.
    Ordinary,
    /// Ordinary form whose growth is `αy + βy|ln y| + γ|z| + δ|z|²/y`.
    LnQ,
    /// `−dY/Y = f̃ dt − Z dW`.
    Geometric,
    /// `Y = X + ∫ g₁ ds − ∫ g₂ dW`.
    TwoDriver,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Ordinary => "ordinary",
            Family::LnQ => "lnq",
            Family::Geometric => "geometric",
            Family::TwoDriver => "two_driver",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YDomain {
    Real,
    Positive,
}

/// Structural hypotheses a driver can be audited against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AssumptionId {
    /// `0 ≤ g ≤ αy + βy|ln y| + δ|z|²/y`.
    H1,
    /// H1 plus `γ|z|`.
    #[serde(rename = "H1'")]
    H1Prime,
    /// H1' plus a linear drift `η·z`.
    #[serde(rename = "H1''")]
    H1DoublePrime,
    /// Bounded coefficients with a `γ·z` drift.
    A,
    /// `0 ≤ g₁ ≤ αy + βy|ln y| + δy|z|²`.
    #[serde(rename = "A'")]
    APrime,
    /// Joint convexity of the log-quadratic driver in `(y, z)`.
    C,
    /// Joint convexity of `g₁(t, y, g₂⁻¹(t, y, v))` in `(y, v)`.
    #[serde(rename = "C'")]
    CPrime,
    /// Geometric-arithmetic convexity of the return driver.
    #[serde(rename = "GA")]
    Ga,
    /// `0 ≤ g₁ ≤ y(α + β|ln y| + γ|z| + δ|z|²)`.
    G1,
    /// `|g₂(t, y, z)| ≥ K y |z|` with a verified inverse in `z`.
    G2,
    /// Finite terminal moment of the required order.
    #[serde(rename = "G3-moments")]
    G3Moments,
    #[serde(rename = "increasing-in-y")]
    IncreasingInY,
    /// `0 ≤ g(z) ≤ C|z|`, convex and positively homogeneous.
    #[serde(rename = "sublinear-z")]
    SublinearZ,
}

impl AssumptionId {
    pub fn all() -> &'static [AssumptionId] {
        use AssumptionId::*;
        &[H1, H1Prime, H1DoublePrime, A, APrime, C, CPrime, Ga, G1, G2, G3Moments, IncreasingInY, SublinearZ]
    }

    pub fn label(&self) -> &'static str {
        use AssumptionId::*;
        match self {
            H1 => "H1",
            H1Prime => "H1'",
            H1DoublePrime => "H1''",
            A => "A",
            APrime => "A'",
            C => "C",
            CPrime => "C'",
            Ga => "GA",
            G1 => "G1",
            G2 => "G2",
            G3Moments => "G3-moments",
            IncreasingInY => "increasing-in-y",
            SublinearZ => "sublinear-z",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::all().iter().copied().find(|a| a.label() == s)
    }
}

/// Volatility map of a two-driver equation with its inverse in `z`.
#[derive(Clone)]
pub struct VolatilityMap {
    pub g2: VectorFn,
    pub g2_inv: VectorFn,
    /// Declared lower constant in `|g₂| ≥ K y |z|`.
    pub k_lower: Option<f64>,
}

/// `f̃(t, y, z) = f̃₁(t, y) + f̃₂(t, z)`, the split checked by the perspective convexity mode.
#[derive(Clone)]
pub struct Decomposition {
    pub y_part: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub z_part: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
}

/// The ambiguity term `g(t, z)` of a robust driver with its sublinear bound `C`.
#[derive(Clone)]
pub struct Ambiguity {
    pub g: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
    pub bound: f64,
}

/// Documented structural facts about a driver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverTraits {
    pub y_independent: bool,
    pub increasing_in_y: bool,
    /// `f̃(t, 1, 0) = 0`.
    pub normalized: bool,
    /// Signed driver that is exempt from the `g ≥ 0` growth audit.
    pub exempt_nonnegativity: bool,
}

/// How a transform maps solution pairs `(Y, Z)` of the source to the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushKind {
    Identity,
    /// `(ln y, z)`.
    Log,
    /// `(e^y, z)`.
    Exp,
    /// `(y, y z)`.
    ScaleZByY,
    /// `(y, z / y)`.
    DivideZByY,
    /// `(ln y, z / y)`.
    LogRelative,
    /// `(e^y, e^y z)`.
    ExpScaled,
    /// `(y, g₂(t, y, z))`.
    Volatility,
    /// `(y, g₂⁻¹(t, y, v))`.
    VolatilityInverse,
}

impl PushKind {
    pub fn inverse(self) -> Self {
        use PushKind::*;
        match self {
            Identity => Identity,
            Log => Exp,
            Exp => Log,
            ScaleZByY => DivideZByY,
            DivideZByY => ScaleZByY,
            LogRelative => ExpScaled,
            ExpScaled => LogRelative,
            Volatility => VolatilityInverse,
            VolatilityInverse => Volatility,
        }
    }

    pub fn apply(self, t: f64, y: f64, z: &[f64], map: Option<&VolatilityMap>) -> Result<(f64, Vec<f64>)> {
        use PushKind::*;
        let positive = |y: f64| {
            if y > 0.0 {
                Ok(())
            } else {
                Err(Error::OutsideDomain { y })
            }
        };
        let need_map = || map.ok_or_else(|| Error::Transform("volatility push-forward needs the g₂ map".into()));
        Ok(match self {
            Identity => (y, z.to_vec()),
            Log => {
                positive(y)?;
                (y.ln(), z.to_vec())
            }
            Exp => (y.exp(), z.to_vec()),
            ScaleZByY => (y, z.iter().map(|v| y * v).collect()),
            DivideZByY => {
                positive(y)?;
                (y, z.iter().map(|v| v / y).collect())
            }
            LogRelative => {
                positive(y)?;
                (y.ln(), z.iter().map(|v| v / y).collect())
            }
            ExpScaled => {
                let e = y.exp();
                (e, z.iter().map(|v| e * v).collect())
            }
            Volatility => (y, (need_map()?.g2)(t, y, z)),
            VolatilityInverse => (y, (need_map()?.g2_inv)(t, y, z)),
        })
    }
}

/// One step of driver lineage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub name: String,
    pub source: Family,
    pub target: Family,
    pub driver_map: String,
    pub push_forward: PushKind,
}

/// A BSDE driver with its family, growth bundle and lineage.
#[derive(Clone)]
pub struct DriverSpec {
    pub name: String,
    pub family: Family,
    /// The driver; for two-driver equations this is `g₁`.
    pub f: ScalarFn,
    pub volatility: Option<VolatilityMap>,
    pub coefficients: CoefficientBundle,
    pub domain_y: YDomain,
    pub lineage: Vec<TransformRecord>,
    pub documented: Vec<AssumptionId>,
    pub traits: DriverTraits,
    pub decomposition: Option<Decomposition>,
    pub ambiguity: Option<Ambiguity>,
}

impl fmt::Debug for DriverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriverSpec")
            .field("name", &self.name)
            .field("family", &self.family)
            .field("coefficients", &self.coefficients)
            .field("lineage", &self.lineage)
            .finish_non_exhaustive()
    }
}

impl DriverSpec {
    pub fn new(
        name: impl Into<String>,
        family: Family,
        f: impl Fn(f64, f64, &[f64]) -> f64 + Send + Sync + 'static,
        coefficients: CoefficientBundle,
    ) -> Self {
        Self::from_arc(name, family, Arc::new(f), coefficients)
    }

    pub fn from_arc(name: impl Into<String>, family: Family, f: ScalarFn, coefficients: CoefficientBundle) -> Self {
        let domain_y = match family {
            Family::Ordinary => YDomain::Real,
            _ => YDomain::Positive,
        };
        Self {
            name: name.into(),
            family,
            f,
            volatility: None,
            coefficients,
            domain_y,
            lineage: Vec::new(),
            documented: Vec::new(),
            traits: DriverTraits::default(),
            decomposition: None,
            ambiguity: None,
        }
    }

    pub fn two_driver(
        name: impl Into<String>,
        g1: impl Fn(f64, f64, &[f64]) -> f64 + Send + Sync + 'static,
        volatility: VolatilityMap,
        coefficients: CoefficientBundle,
    ) -> Self {
        let mut s = Self::new(name, Family::TwoDriver, g1, coefficients);
        s.volatility = Some(volatility);
        s
    }

    pub fn eval(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        (self.f)(t, y, z)
    }

    /// Domain- and finiteness-checked evaluation.
    pub fn try_eval(&self, t: f64, y: f64, z: &[f64]) -> Result<f64> {
        if self.domain_y == YDomain::Positive && !(y > 0.0) {
            return Err(Error::OutsideDomain { y });
        }
        let v = (self.f)(t, y, z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::OutsideDomain { y })
        }
    }

    pub fn require(&self, family: Family) -> Result<()> {
        if self.family == family {
            Ok(())
        } else {
            Err(Error::FamilyMismatch { expected: family.to_string(), found: self.family.to_string() })
        }
    }

    pub fn lineage_names(&self) -> Vec<String> {
        self.lineage.iter().map(|r| r.name.clone()).collect()
    }

    pub(crate) fn derived(
        &self,
        family: Family,
        f: ScalarFn,
        coefficients: CoefficientBundle,
        record: TransformRecord,
    ) -> Self {
        let mut lineage = self.lineage.clone();
        let name = format!("{} -> {}", self.name, record.name);
        lineage.push(record);
        let mut s = Self::from_arc(name, family, f, coefficients);
        s.lineage = lineage;
        s.traits = self.traits;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_kinds_invert() {
        let kinds = [
            PushKind::Identity,
            PushKind::Log,
            PushKind::Exp,
            PushKind::ScaleZByY,
            PushKind::DivideZByY,
            PushKind::LogRelative,
            PushKind::ExpScaled,
        ];
        for k in kinds {
            let (y, z) = (1.7, vec![-0.4, 2.5]);
            let (y1, z1) = k.apply(0.3, y, &z, None).unwrap();
            let (y2, z2) = k.inverse().apply(0.3, y1, &z1, None).unwrap();
            assert!((y2 - y).abs() < 1e-14, "{k:?}");
            for (a, b) in z2.iter().zip(&z) {
                assert!((a - b).abs() < 1e-14, "{k:?}");
            }
        }
    }

    #[test]
    fn positive_domain_rejects_zero() {
        let d = DriverSpec::new("d", Family::Geometric, |_, y, _| y, CoefficientBundle::zero(1.0));
        assert!(d.try_eval(0.0, 0.0, &[0.0]).is_err());
        assert!(d.try_eval(0.0, 1.0, &[0.0]).is_ok());
    }

    #[test]
    fn assumption_labels_round_trip() {
        for a in AssumptionId::all() {
            assert_eq!(AssumptionId::parse(a.label()), Some(*a));
            let json = serde_json::to_string(a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.label()));
        }
    }
}
