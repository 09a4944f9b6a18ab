use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic coefficient `t -> value`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFn {
    Const(f64),
    /// `a + b t`.
    Affine { a: f64, b: f64 },
    /// Right-continuous step function: `values[k]` on `[breaks[k-1], breaks[k])`,
    /// so `values.len() == breaks.len() + 1`.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Const(c) => write!(f, "Const({c})"),
            TimeFn::Affine { a, b } => write!(f, "Affine({a} + {b} t)"),
            TimeFn::Piecewise { breaks, values } => write!(f, "Piecewise({breaks:?}, {values:?})"),
            TimeFn::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl TimeFn {
    pub fn zero() -> Self {
        TimeFn::Const(0.0)
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TimeFn::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFn::Const(c) => *c,
            TimeFn::Affine { a, b } => a + b * t,
            TimeFn::Piecewise { breaks, values } => {
                let k = breaks.partition_point(|&b| b <= t);
                values[k]
            }
            TimeFn::Custom(f) => f(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TimeFn::Const(c) => *c == 0.0,
            TimeFn::Affine { a, b } => *a == 0.0 && *b == 0.0,
            TimeFn::Piecewise { values, .. } => values.iter().all(|v| *v == 0.0),
            TimeFn::Custom(_) => false,
        }
    }

    /// `∫_a^b self(t) dt`, exact except for `Custom` (adaptive Simpson).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return if b == a { 0.0 } else { -self.integral(b, a) };
        }
        match self {
            TimeFn::Const(c) => c * (b - a),
            TimeFn::Affine { a: c0, b: c1 } => c0 * (b - a) + 0.5 * c1 * (b * b - a * a),
            TimeFn::Piecewise { breaks, values } => {
                let mut total = 0.0;
                let mut lo = a;
                let mut k = breaks.partition_point(|&x| x <= a);
                while lo < b {
                    let hi = if k < breaks.len() { breaks[k].min(b) } else { b };
                    total += values[k] * (hi - lo);
                    lo = hi;
                    k += 1;
                }
                total
            }
            TimeFn::Custom(f) => adaptive_simpson(f.as_ref(), a, b, 1e-13, 40),
        }
    }

    fn validate(&self, name: &str, horizon: f64) -> Result<()> {
        if let TimeFn::Piecewise { breaks, values } = self {
            if values.len() != breaks.len() + 1 {
                return Err(Error::InvalidCoefficient(format!(
                    "{name}: piecewise needs values.len() == breaks.len() + 1"
                )));
            }
            if breaks.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidCoefficient(format!("{name}: breaks must increase")));
            }
        }
        for k in 0..=200 {
            let t = horizon * k as f64 / 200.0;
            let v = self.eval(t);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidCoefficient(format!("{name}({t}) = {v} is not a finite non-negative value")));
            }
        }
        if let TimeFn::Piecewise { values, .. } = self {
            if values.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::InvalidCoefficient(format!("{name}: negative piece")));
            }
        }
        Ok(())
    }
}

impl From<f64> for TimeFn {
    fn from(c: f64) -> Self {
        TimeFn::Const(c)
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, depth)
}

/// Growth coefficients `(α, β, γ, δ)` with their integrals `A = ∫α`, `B = ∫β` over `[0, T]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientBundle {
    pub alpha: TimeFn,
    pub beta: TimeFn,
    pub gamma: TimeFn,
    pub delta: f64,
    /// Optional linear-in-z drift vector, audit-only.
    pub eta: Option<Vec<TimeFn>>,
    pub horizon: f64,
    pub a_int: f64,
    pub b_int: f64,
}

impl CoefficientBundle {
    pub fn new(alpha: TimeFn, beta: TimeFn, gamma: TimeFn, delta: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidCoefficient(format!("horizon must be positive, got {horizon}")));
        }
        alpha.validate("alpha", horizon)?;
        beta.validate("beta", horizon)?;
        gamma.validate("gamma", horizon)?;
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidCoefficient(format!("delta must be finite and non-negative, got {delta}")));
        }
        let a_int = alpha.integral(0.0, horizon);
        let b_int = beta.integral(0.0, horizon);
        Ok(Self { alpha, beta, gamma, delta, eta: None, horizon, a_int, b_int })
    }

    pub fn zero(horizon: f64) -> Self {
        Self::new(TimeFn::zero(), TimeFn::zero(), TimeFn::zero(), 0.0, horizon).expect("zero bundle is valid")
    }

    pub fn with_eta(mut self, eta: Vec<TimeFn>) -> Self {
        self.eta = Some(eta);
        self
    }

    /// Same bundle with `δ` shifted by `shift` (used by the log transforms, which add `|z|²/2`).
    pub fn shift_delta(&self, shift: f64) -> Self {
        let mut b = self.clone();
        b.delta += shift;
        b
    }

    /// Bundle after dividing the volatility variable by a lower constant `K`: `(α, β, γ/K, δ/K²)`.
    pub fn rescale_z(&self, k: f64) -> Self {
        let mut b = self.clone();
        let g = self.gamma.clone();
        b.gamma = match g {
            TimeFn::Const(c) => TimeFn::Const(c / k),
            TimeFn::Affine { a, b: s } => TimeFn::Affine { a: a / k, b: s / k },
            TimeFn::Piecewise { breaks, values } => {
                TimeFn::Piecewise { breaks, values: values.into_iter().map(|v| v / k).collect() }
            }
            TimeFn::Custom(f) => TimeFn::Custom(Arc::new(move |t| f(t) / k)),
        };
        b.delta = self.delta / (k * k);
        b
    }

    /// `∫_t^T β`.
    pub fn beta_tail(&self, t: f64) -> f64 {
        self.beta.integral(t, self.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_legendre_5(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let x = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
        let w = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
                let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                (0..5).map(|k| w[k] * f(c + r * x[k])).sum::<f64>() * r
            })
            .sum()
    }

    #[test]
    fn integrals_match_independent_quadrature() {
        let fns = [
            TimeFn::Const(0.3),
            TimeFn::Affine { a: 0.2, b: 1.5 },
            TimeFn::custom(|t: f64| 1.0 + t + (3.0 * t).sin().powi(2)),
        ];
        for f in &fns {
            let exact = f.integral(0.0, 2.0);
            let oracle = gauss_legendre_5(&|t| f.eval(t), 0.0, 2.0, 4000);
            assert!((exact - oracle).abs() <= 1e-10 * oracle.abs(), "{f:?}: {exact} vs {oracle}");
        }
    }

    #[test]
    fn piecewise_integral_splits_at_breaks() {
        let f = TimeFn::Piecewise { breaks: vec![0.5, 1.0], values: vec![1.0, 2.0, 4.0] };
        assert_eq!(f.eval(0.5), 2.0);
        assert!((f.integral(0.0, 2.0) - (0.5 + 1.0 + 4.0)).abs() < 1e-15);
        assert!((f.integral(0.25, 0.75) - (0.25 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn bundle_rejects_negative_coefficients() {
        assert!(CoefficientBundle::new(TimeFn::Const(-1.0), TimeFn::zero(), TimeFn::zero(), 0.0, 1.0).is_err());
        assert!(CoefficientBundle::new(TimeFn::zero(), TimeFn::zero(), TimeFn::zero(), -0.1, 1.0).is_err());
        let b = CoefficientBundle::new(TimeFn::Const(1.0), TimeFn::Affine { a: 0.0, b: 2.0 }, TimeFn::zero(), 0.5, 2.0).unwrap();
        assert_eq!(b.a_int, 2.0);
        assert_eq!(b.b_int, 4.0);
    }

    #[test]
    fn rescale_divides_gamma_and_delta() {
        let b = CoefficientBundle::new(TimeFn::zero(), TimeFn::zero(), TimeFn::Const(1.0), 2.0, 1.0).unwrap();
        let r = b.rescale_z(2.0);
        assert_eq!(r.gamma.eval(0.3), 0.5);
        assert_eq!(r.delta, 0.5);
    }
}
