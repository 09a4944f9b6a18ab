use std::f64::consts::LN_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeff::{CoefficientBundle, TimeFn};
use crate::driver::{Ambiguity, AssumptionId, Decomposition, DriverSpec, DriverTraits, Family};
use crate::error::{Error, Result};

fn sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn norm(z: &[f64]) -> f64 {
    sq(z).sqrt()
}

/// One additive term of an inline driver definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    Const { c: f64 },
    /// `c |z|`.
    AbsZ { c: f64 },
    /// `c |z|²`.
    QuadZ { c: f64 },
    /// `c |z|² / y`.
    QuadZOverY { c: f64 },
    /// `c ln(1 + y)`.
    Log1pY { c: f64 },
    /// `c |ln y|`.
    AbsLogY { c: f64 },
    /// `c y |ln y|`.
    YAbsLogY { c: f64 },
    /// `c y`.
    LinearY { c: f64 },
    /// `c y²`.
    SquareY { c: f64 },
    /// `η · z`.
    LinearZ { eta: Vec<f64> },
}

impl Term {
    fn eval(&self, y: f64, z: &[f64]) -> f64 {
        match self {
            Term::Const { c } => *c,
            Term::AbsZ { c } => c * norm(z),
            Term::QuadZ { c } => c * sq(z),
            Term::QuadZOverY { c } => c * sq(z) / y,
            Term::Log1pY { c } => c * y.ln_1p(),
            Term::AbsLogY { c } => c * y.ln().abs(),
            Term::YAbsLogY { c } => c * y * y.ln().abs(),
            Term::LinearY { c } => c * y,
            Term::SquareY { c } => c * y * y,
            Term::LinearZ { eta } => eta.iter().zip(z).map(|(a, b)| a * b).sum(),
        }
    }

    fn uses_y(&self) -> bool {
        !matches!(self, Term::Const { .. } | Term::AbsZ { .. } | Term::QuadZ { .. } | Term::LinearZ { .. })
    }
}

/// Declared growth coefficients of an inline driver (constants).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BundleSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// No catalog driver sets this; only the audits exercise it.
    pub eta: Option<Vec<f64>>,
}

impl BundleSpec {
    pub fn build(&self, horizon: f64) -> Result<CoefficientBundle> {
        let b = CoefficientBundle::new(self.alpha.into(), self.beta.into(), self.gamma.into(), self.delta, horizon)?;
        Ok(match &self.eta {
            Some(e) => b.with_eta(e.iter().map(|v| TimeFn::Const(*v)).collect()),
            None => b,
        })
    }
}

/// A named driver with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogEntry {
    /// `f̃ ≡ 0`: the conditional expectation.
    Zero,
    /// `f̃ = −|z|²/2`: the geometric conditional expectation `exp E[ln X | F_t]`.
    GeomCondExp,
    /// `f̃ = (γ − 1)|z|²/2`: `E[X^γ | F_t]^{1/γ}`.
    GammaNorm { gamma: f64 },
    /// `f̃ = C|z| + (γ − 1)|z|²/2`: the γ-norm under drift ambiguity `|μ| ≤ C`.
    RobustGammaNorm { gamma: f64, ambiguity: f64 },
    /// `f̃ = β ln(1 + y)`.
    LogStar { beta: f64 },
    /// Sum of [`Term`]s in the given family with a declared bundle.
    Custom {
        family: Family,
        terms: Vec<Term>,
        #[serde(default)]
        bundle: BundleSpec,
    },
}

impl CatalogEntry {
    pub fn name(&self) -> &'static str {
        match self {
            CatalogEntry::Zero => "zero",
            CatalogEntry::GeomCondExp => "geom_cond_exp",
            CatalogEntry::GammaNorm { .. } => "gamma_norm",
            CatalogEntry::RobustGammaNorm { .. } => "robust_gamma_norm",
            CatalogEntry::LogStar { .. } => "log_star",
            CatalogEntry::Custom { .. } => "custom",
        }
    }

    /// Representative instance of every catalog name.
    pub fn defaults() -> Vec<CatalogEntry> {
        vec![
            CatalogEntry::Zero,
            CatalogEntry::GeomCondExp,
            CatalogEntry::GammaNorm { gamma: 2.0 },
            CatalogEntry::RobustGammaNorm { gamma: 2.0, ambiguity: 0.5 },
            CatalogEntry::LogStar { beta: 0.5 },
            CatalogEntry::Custom { family: Family::Geometric, terms: vec![Term::QuadZ { c: 0.5 }], bundle: BundleSpec { delta: 0.5, ..Default::default() } },
        ]
    }
}

pub fn zero(horizon: f64) -> DriverSpec {
    let mut d = DriverSpec::new("zero", Family::Geometric, |_, _, _| 0.0, CoefficientBundle::zero(horizon));
    d.documented = vec![AssumptionId::H1, AssumptionId::C, AssumptionId::CPrime, AssumptionId::Ga, AssumptionId::IncreasingInY];
    d.traits = DriverTraits { y_independent: true, increasing_in_y: true, normalized: true, exempt_nonnegativity: false };
    d.decomposition = Some(Decomposition { y_part: Arc::new(|_, _| 0.0), z_part: Arc::new(|_, _| 0.0) });
    d
}

pub fn geom_cond_exp(horizon: f64) -> DriverSpec {
    let bundle = CoefficientBundle::new(TimeFn::zero(), TimeFn::zero(), TimeFn::zero(), 0.5, horizon).expect("valid");
    let mut d = DriverSpec::new("geom_cond_exp", Family::Geometric, |_, _, z| -0.5 * sq(z), bundle);
    d.documented = vec![AssumptionId::IncreasingInY];
    d.traits = DriverTraits { y_independent: true, increasing_in_y: true, normalized: true, exempt_nonnegativity: true };
    d
}

pub fn gamma_norm(gamma: f64, horizon: f64) -> Result<DriverSpec> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(Error::InvalidCoefficient(format!("gamma_norm needs gamma >= 1, got {gamma}")));
    }
    let k = 0.5 * (gamma - 1.0);
    let bundle = CoefficientBundle::new(TimeFn::zero(), TimeFn::zero(), TimeFn::zero(), k, horizon)?;
    let mut d = DriverSpec::new(format!("gamma_norm(gamma={gamma})"), Family::Geometric, move |_, _, z| k * sq(z), bundle);
    d.documented = vec![AssumptionId::H1, AssumptionId::C, AssumptionId::CPrime, AssumptionId::Ga, AssumptionId::IncreasingInY];
    d.traits = DriverTraits { y_independent: true, increasing_in_y: true, normalized: true, exempt_nonnegativity: false };
    d.decomposition = Some(Decomposition { y_part: Arc::new(|_, _| 0.0), z_part: Arc::new(move |_, z| k * sq(z)) });
    Ok(d)
}

pub fn robust_gamma_norm(gamma: f64, ambiguity: f64, horizon: f64) -> Result<DriverSpec> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(Error::InvalidCoefficient(format!("robust_gamma_norm needs gamma >= 1, got {gamma}")));
    }
    if !(ambiguity >= 0.0) || !ambiguity.is_finite() {
        return Err(Error::InvalidCoefficient(format!("ambiguity bound must be >= 0, got {ambiguity}")));
    }
    let (k, c) = (0.5 * (gamma - 1.0), ambiguity);
    let bundle = CoefficientBundle::new(TimeFn::zero(), TimeFn::zero(), TimeFn::Const(c), k, horizon)?;
    let mut d = DriverSpec::new(
        format!("robust_gamma_norm(gamma={gamma}, C={c})"),
        Family::Geometric,
        move |_, _, z| c * norm(z) + k * sq(z),
        bundle,
    );
    d.documented = vec![
        AssumptionId::H1Prime,
        AssumptionId::C,
        AssumptionId::CPrime,
        AssumptionId::Ga,
        AssumptionId::IncreasingInY,
        AssumptionId::SublinearZ,
    ];
    d.traits = DriverTraits { y_independent: true, increasing_in_y: true, normalized: true, exempt_nonnegativity: false };
    d.decomposition = Some(Decomposition { y_part: Arc::new(|_, _| 0.0), z_part: Arc::new(move |_, z| c * norm(z) + k * sq(z)) });
    d.ambiguity = Some(Ambiguity { g: Arc::new(move |_, z| c * norm(z)), bound: c });
    Ok(d)
}

/// `f̃ = β(t) ln(1 + y)`, bounded by `β ln 2 + β |ln y|`.
pub fn log_star_fn(beta: TimeFn, horizon: f64) -> Result<DriverSpec> {
    let alpha = match &beta {
        TimeFn::Const(b) => TimeFn::Const(b * LN_2),
        other => {
            let b = other.clone();
            TimeFn::custom(move |t| b.eval(t) * LN_2)
        }
    };
    let bundle = CoefficientBundle::new(alpha, beta.clone(), TimeFn::zero(), 0.0, horizon)?;
    let b = beta.clone();
    let mut d = DriverSpec::new(format!("log_star(beta={beta:?})"), Family::Geometric, move |t, y: f64, _| b.eval(t) * y.ln_1p(), bundle);
    d.documented = vec![AssumptionId::H1, AssumptionId::C, AssumptionId::Ga, AssumptionId::IncreasingInY];
    d.traits = DriverTraits { y_independent: false, increasing_in_y: true, normalized: false, exempt_nonnegativity: false };
    let b = beta;
    d.decomposition = Some(Decomposition { y_part: Arc::new(move |t, y: f64| b.eval(t) * y.ln_1p()), z_part: Arc::new(|_, _| 0.0) });
    Ok(d)
}

pub fn log_star(beta: f64, horizon: f64) -> Result<DriverSpec> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidCoefficient(format!("log_star needs beta >= 0, got {beta}")));
    }
    let mut d = log_star_fn(TimeFn::Const(beta), horizon)?;
    d.name = format!("log_star(beta={beta})");
    Ok(d)
}

pub fn custom(family: Family, terms: Vec<Term>, bundle: &BundleSpec, horizon: f64) -> Result<DriverSpec> {
    if family == Family::TwoDriver {
        return Err(Error::Unsupported("inline two-driver definitions need a volatility map; use the library API".into()));
    }
    let label = terms.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(" + ");
    let y_free = terms.iter().all(|t| !t.uses_y());
    let bundle = bundle.build(horizon)?;
    let ts = terms.clone();
    let mut d = DriverSpec::new(format!("custom[{label}]"), family, move |_, y, z| ts.iter().map(|t| t.eval(y, z)).sum(), bundle);
    d.traits.y_independent = y_free;
    Ok(d)
}

/// Build a catalog driver on horizon `T`.
pub fn catalog_get(entry: &CatalogEntry, horizon: f64) -> Result<DriverSpec> {
    match entry {
        CatalogEntry::Zero => Ok(zero(horizon)),
        CatalogEntry::GeomCondExp => Ok(geom_cond_exp(horizon)),
        CatalogEntry::GammaNorm { gamma } => gamma_norm(*gamma, horizon),
        CatalogEntry::RobustGammaNorm { gamma, ambiguity } => robust_gamma_norm(*gamma, *ambiguity, horizon),
        CatalogEntry::LogStar { beta } => log_star(*beta, horizon),
        CatalogEntry::Custom { family, terms, bundle } => custom(*family, terms.clone(), bundle, horizon),
    }
}

/// Catalog row for display.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogListing {
    pub name: String,
    pub family: Family,
    pub example: CatalogEntry,
    pub documented: Vec<AssumptionId>,
    pub traits: DriverTraits,
}

pub fn list_catalog() -> Vec<CatalogListing> {
    CatalogEntry::defaults()
        .into_iter()
        .map(|e| {
            let d = catalog_get(&e, 1.0).expect("defaults are valid");
            CatalogListing { name: e.name().into(), family: d.family, documented: d.documented.clone(), traits: d.traits, example: e }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_parse_from_json() {
        let e: CatalogEntry = serde_json::from_str(r#"{"name":"robust_gamma_norm","gamma":2.0,"ambiguity":0.5}"#).unwrap();
        assert_eq!(e, CatalogEntry::RobustGammaNorm { gamma: 2.0, ambiguity: 0.5 });
        let c: CatalogEntry = serde_json::from_str(
            r#"{"name":"custom","family":"geometric","terms":[{"kind":"log1p_y","c":1.0}],"bundle":{"alpha":0.7,"beta":1.0}}"#,
        )
        .unwrap();
        let d = catalog_get(&c, 1.0).unwrap();
        assert!((d.eval(0.0, 1.0, &[0.0]) - LN_2).abs() < 1e-15);
        assert!(!d.traits.y_independent);
    }

    #[test]
    fn listing_is_stable() {
        let names: Vec<String> = list_catalog().into_iter().map(|l| l.name).collect();
        assert_eq!(names, ["zero", "geom_cond_exp", "gamma_norm", "robust_gamma_norm", "log_star", "custom"]);
    }

    #[test]
    fn catalog_values() {
        let g = gamma_norm(3.0, 1.0).unwrap();
        assert_eq!(g.eval(0.0, 2.0, &[1.0, 1.0]), 2.0);
        let r = robust_gamma_norm(2.0, 0.5, 1.0).unwrap();
        assert_eq!(r.eval(0.0, 1.0, &[-2.0]), 1.0 + 2.0);
        assert_eq!(geom_cond_exp(1.0).eval(0.0, 5.0, &[2.0]), -2.0);
        assert!((log_star(2.0, 1.0).unwrap().eval(0.0, 1.0, &[]) - 2.0 * LN_2).abs() < 1e-15);
        assert!(gamma_norm(0.5, 1.0).is_err());
        assert!(robust_gamma_norm(2.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn normalization_trait_matches_values() {
        for e in CatalogEntry::defaults() {
            let d = catalog_get(&e, 1.0).unwrap();
            if d.traits.normalized {
                assert_eq!(d.eval(0.3, 1.0, &[0.0]), 0.0, "{}", d.name);
            }
        }
    }
}
