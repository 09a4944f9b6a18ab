use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeff::CoefficientBundle;
use crate::driver::{AssumptionId, DriverSpec, Family};
use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::terminal::TerminalCondition;
use crate::transforms;

use super::qmc::Halton;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// A sampled point where an inequality fails, with its (negative) margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub labels: Vec<String>,
    pub point: Vec<f64>,
    pub margin: f64,
}

/// Box `[t_min, t_max] × [y_min, y_max] × [−z_max, z_max]^dim` sampled by audits.
/// `y` is sampled log-uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingWindow {
    pub t_min: f64,
    pub t_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_max: f64,
    pub dim: usize,
}

impl SamplingWindow {
    pub fn standard(horizon: f64, dim: usize) -> Self {
        Self { t_min: 0.0, t_max: horizon, y_min: 0.1, y_max: 10.0, z_max: 5.0, dim }
    }

    fn t(&self, u: f64) -> f64 {
        self.t_min + u * (self.t_max - self.t_min)
    }

    fn y(&self, u: f64) -> f64 {
        (self.y_min.ln() + u * (self.y_max.ln() - self.y_min.ln())).exp()
    }

    fn z(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|v| self.z_max * (2.0 * v - 1.0)).collect()
    }

    /// Quasi-random `(t, y, z)` points plus the window corners.
    fn points(&self, samples: usize, seed: u64) -> Vec<(f64, f64, Vec<f64>)> {
        let mut out = Vec::with_capacity(samples + 12);
        for t in [self.t_min, self.t_max] {
            for y in [self.y_min, 1.0, self.y_max] {
                out.push((t, y, vec![0.0; self.dim]));
                let mut z = vec![0.0; self.dim];
                z[0] = self.z_max;
                out.push((t, y, z.clone()));
            }
        }
        let mut h = Halton::new(2 + self.dim, seed);
        for _ in 0..samples {
            let u = h.next_point();
            out.push((self.t(u[0]), self.y(u[1]), self.z(&u[2..])));
        }
        out
    }

    /// Quasi-random pairs `(t, y₁, z₁, y₂, z₂)` sharing a time.
    fn pairs(&self, samples: usize, seed: u64) -> Vec<(f64, f64, Vec<f64>, f64, Vec<f64>)> {
        let n = self.dim;
        let mut h = Halton::new(3 + 2 * n, seed);
        (0..samples)
            .map(|_| {
                let u = h.next_point();
                (self.t(u[0]), self.y(u[1]), self.z(&u[2..2 + n]), self.y(u[2 + n]), self.z(&u[3 + n..3 + 2 * n]))
            })
            .collect()
    }
}

/// Result of auditing one assumption on one driver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionAudit {
    pub assumption: AssumptionId,
    pub driver: String,
    pub verdict: Verdict,
    /// Smallest sampled margin (negative means violated before tolerance).
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    pub samples: usize,
    pub seed: u64,
    pub window: SamplingWindow,
    pub certified_k: Option<f64>,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub notes: Vec<String>,
}

struct Tracker {
    labels: Vec<String>,
    worst: f64,
    fail: Option<Witness>,
    count: usize,
}

impl Tracker {
    fn new(labels: &[&str]) -> Self {
        Self { labels: labels.iter().map(|s| s.to_string()).collect(), worst: f64::INFINITY, fail: None, count: 0 }
    }

    fn record(&mut self, point: impl FnOnce() -> Vec<f64>, margin: f64, tol: f64) {
        self.count += 1;
        let m = if margin.is_nan() { -f64::MAX } else { margin };
        self.worst = self.worst.min(m);
        if m < -tol && self.fail.as_ref().is_none_or(|w| m < w.margin) {
            self.fail = Some(Witness { labels: self.labels.clone(), point: point(), margin: m });
        }
    }

    fn finish(self, assumption: AssumptionId, driver: &DriverSpec, window: &SamplingWindow, samples: usize, seed: u64) -> AssumptionAudit {
        let verdict = if self.fail.is_some() { Verdict::Fail } else { Verdict::Pass };
        AssumptionAudit {
            assumption,
            driver: driver.name.clone(),
            verdict,
            worst_margin: if self.count == 0 { 0.0 } else { self.worst },
            witness: self.fail,
            samples,
            seed,
            window: window.clone(),
            certified_k: None,
            estimate: None,
            std_error: None,
            notes: Vec::new(),
        }
    }
}

fn inconclusive(assumption: AssumptionId, driver: &DriverSpec, window: &SamplingWindow, samples: usize, seed: u64, note: String) -> AssumptionAudit {
    AssumptionAudit {
        assumption,
        driver: driver.name.clone(),
        verdict: Verdict::Inconclusive,
        worst_margin: 0.0,
        witness: None,
        samples,
        seed,
        window: window.clone(),
        certified_k: None,
        estimate: None,
        std_error: None,
        notes: vec![note],
    }
}

fn sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn tol(scale: f64) -> f64 {
    1e-12 * (1.0 + scale.abs())
}

fn labels_tyz(dim: usize) -> Vec<String> {
    let mut l = vec!["t".to_string(), "y".to_string()];
    l.extend((0..dim).map(|d| format!("z{d}")));
    l
}

fn point_tyz(t: f64, y: f64, z: &[f64]) -> Vec<f64> {
    let mut p = vec![t, y];
    p.extend_from_slice(z);
    p
}

/// Upper growth bound for the given assumption at `(t, y, z)`.
pub fn growth_bound(id: AssumptionId, b: &CoefficientBundle, t: f64, y: f64, z: &[f64]) -> f64 {
    let (a, be, g, d) = (b.alpha.eval(t), b.beta.eval(t), b.gamma.eval(t), b.delta);
    let (nz, z2) = (sq(z).sqrt(), sq(z));
    let lin: f64 = b.eta.as_ref().map_or(0.0, |e| e.iter().zip(z).map(|(c, v)| c.eval(t) * v).sum());
    let base = a * y + be * y * y.ln().abs();
    match id {
        AssumptionId::H1 => base + d * z2 / y,
        AssumptionId::H1Prime => base + g * nz + d * z2 / y,
        AssumptionId::H1DoublePrime | AssumptionId::A => base + g * nz + lin + d * z2 / y,
        AssumptionId::APrime => base + d * y * z2,
        AssumptionId::G1 => y * (a + be * y.ln().abs() + g * nz + d * z2),
        _ => f64::NAN,
    }
}

/// Log-quadratic form of a driver.
pub fn lnq_form(driver: &DriverSpec, dim: usize) -> Result<DriverSpec> {
    match driver.family {
        Family::LnQ => Ok(driver.clone()),
        Family::Geometric => transforms::gbsde_to_lnq(driver),
        Family::TwoDriver => transforms::twodriver_reduce(driver, dim),
        Family::Ordinary => Err(Error::Unsupported("an ordinary driver has no log-quadratic form without a positivity premise".into())),
    }
}

/// Two-driver form of a driver.
pub fn twodriver_form(driver: &DriverSpec) -> Result<DriverSpec> {
    match driver.family {
        Family::TwoDriver => Ok(driver.clone()),
        Family::Geometric => transforms::gbsde_to_twodriver(driver),
        Family::LnQ => transforms::lnq_to_twodriver(driver, transforms::proportional_volatility()),
        Family::Ordinary => Err(Error::Unsupported("ordinary drivers have no two-driver form here".into())),
    }
}

/// Return-driver (geometric) form of a driver.
pub fn geometric_form(driver: &DriverSpec, dim: usize) -> Result<DriverSpec> {
    match driver.family {
        Family::Geometric => Ok(driver.clone()),
        Family::LnQ => transforms::lnq_to_gbsde(driver),
        Family::TwoDriver => transforms::lnq_to_gbsde(&transforms::twodriver_reduce(driver, dim)?),
        Family::Ordinary => transforms::ordinary_to_gbsde(driver),
    }
}

fn bound_audit(form: &DriverSpec, id: AssumptionId, reported: &DriverSpec, window: &SamplingWindow, samples: usize, seed: u64) -> AssumptionAudit {
    let mut tr = Tracker::new(&[]);
    tr.labels = labels_tyz(window.dim);
    let b = &form.coefficients;
    for (t, y, z) in window.points(samples, seed) {
        let g = form.eval(t, y, &z);
        let h = growth_bound(id, b, t, y, &z);
        let m = g.min(h - g);
        tr.record(|| point_tyz(t, y, &z), m, tol(h));
    }
    let mut a = tr.finish(id, reported, window, samples, seed);
    if id == AssumptionId::A {
        a.notes.push("coefficients are bounded on the sampled times".into());
    }
    a
}

fn g2_audit(spec: &DriverSpec, window: &SamplingWindow, samples: usize, seed: u64) -> AssumptionAudit {
    let Some(map) = spec.volatility.clone() else {
        return inconclusive(AssumptionId::G2, spec, window, samples, seed, "no volatility map".into());
    };
    let mut tr = Tracker::new(&[]);
    tr.labels = labels_tyz(window.dim);
    let mut k_cert = f64::INFINITY;
    let pts = window.points(samples, seed);
    for (t, y, z) in &pts {
        let v = (map.g2)(*t, *y, z);
        let back = (map.g2_inv)(*t, *y, &v);
        let err = back.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        tr.record(|| point_tyz(*t, *y, z), -err, 1e-9 * sq(z).sqrt().max(1.0));
        let nz = sq(z).sqrt();
        if nz > 0.0 {
            k_cert = k_cert.min(sq(&v).sqrt() / (y * nz));
        }
    }
    let k = map.k_lower.unwrap_or(k_cert);
    for (t, y, z) in &pts {
        let v = (map.g2)(*t, *y, z);
        let m = sq(&v).sqrt() - k * y * sq(z).sqrt();
        tr.record(|| point_tyz(*t, *y, z), m, tol(k * y * sq(z).sqrt()));
    }
    let mut a = tr.finish(AssumptionId::G2, spec, window, samples, seed);
    if map.k_lower.is_none() && !(k_cert > 0.0) {
        a.verdict = Verdict::Fail;
        a.notes.push("no positive lower constant could be certified".into());
    }
    a.certified_k = Some(k_cert);
    a
}

/// Check `0 ≤ g ≤` the growth bound of (H1), (H1)' or (H1)'' (chosen from the bundle)
/// on quasi-random samples, reducing geometric and two-driver inputs first.
/// Two-driver inputs also get the volatility lower-bound check and a certified `K`.
pub fn validate_growth(driver: &DriverSpec, window: &SamplingWindow, samples: usize, seed: u64) -> AssumptionAudit {
    let b = &driver.coefficients;
    let id = if b.eta.is_some() {
        AssumptionId::H1DoublePrime
    } else if !b.gamma.is_zero() {
        AssumptionId::H1Prime
    } else {
        AssumptionId::H1
    };
    if driver.traits.exempt_nonnegativity {
        return inconclusive(id, driver, window, samples, seed, "signed driver, exempt from the g >= 0 growth audit".into());
    }
    if driver.family == Family::TwoDriver {
        let g2 = g2_audit(driver, window, samples, seed);
        if g2.verdict != Verdict::Pass {
            let mut a = g2;
            a.assumption = id;
            a.notes.push("volatility map failed the G2 check".into());
            return a;
        }
        let mut a = match transforms::twodriver_reduce(driver, window.dim) {
            Ok(form) => bound_audit(&form, id, driver, window, samples, seed),
            Err(e) => inconclusive(id, driver, window, samples, seed, e.to_string()),
        };
        a.certified_k = g2.certified_k;
        return a;
    }
    match lnq_form(driver, window.dim) {
        Ok(form) => bound_audit(&form, id, driver, window, samples, seed),
        Err(e) => inconclusive(id, driver, window, samples, seed, e.to_string()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityMode {
    /// Convexity of the driver as given, jointly in `(y, z)`.
    Joint,
    /// `f̃(t, y₁^λ y₂^{1−λ}, λz₁ + (1−λ)z₂) ≤ λ f̃(t, y₁, z₁) + (1−λ) f̃(t, y₂, z₂)`.
    Ga,
    /// Convexity of the split `f̃₁(t, y)` and `f̃₂(t, z)` separately, and joint
    /// convexity of the reduced two-driver form.
    Perspective,
}

fn lambdas(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a3b_da7a_0001);
    let mut l = vec![0.25, 0.5, 0.75];
    l.extend((0..100).map(|_| rng.random::<f64>()));
    l
}

fn pair_labels(dim: usize) -> Vec<String> {
    let mut l = vec!["t".to_string(), "y1".to_string()];
    l.extend((0..dim).map(|d| format!("z1_{d}")));
    l.push("y2".into());
    l.extend((0..dim).map(|d| format!("z2_{d}")));
    l.push("lambda".into());
    l
}

fn pair_point(t: f64, y1: f64, z1: &[f64], y2: f64, z2: &[f64], lam: f64) -> Vec<f64> {
    let mut p = vec![t, y1];
    p.extend_from_slice(z1);
    p.push(y2);
    p.extend_from_slice(z2);
    p.push(lam);
    p
}

fn mix(a: &[f64], b: &[f64], lam: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect()
}

fn convexity_pass(
    f: &dyn Fn(f64, f64, &[f64]) -> f64,
    geometric_mean: bool,
    tr: &mut Tracker,
    window: &SamplingWindow,
    samples: usize,
    seed: u64,
) {
    let ls = lambdas(seed);
    for (t, y1, z1, y2, z2) in window.pairs(samples, seed) {
        let (f1, f2) = (f(t, y1, &z1), f(t, y2, &z2));
        for &lam in &ls {
            let ym = if geometric_mean { y1.powf(lam) * y2.powf(1.0 - lam) } else { lam * y1 + (1.0 - lam) * y2 };
            let fm = f(t, ym, &mix(&z1, &z2, lam));
            let rhs = lam * f1 + (1.0 - lam) * f2;
            tr.record(|| pair_point(t, y1, &z1, y2, &z2, lam), rhs - fm, tol(rhs.abs() + fm.abs()));
        }
    }
}

/// Sampled convexity check in the given mode.
pub fn check_convexity(driver: &DriverSpec, mode: ConvexityMode, window: &SamplingWindow, samples: usize, seed: u64) -> AssumptionAudit {
    let dim = window.dim;
    match mode {
        ConvexityMode::Joint | ConvexityMode::Ga => {
            let mut tr = Tracker::new(&[]);
            tr.labels = pair_labels(dim);
            let f = driver.f.clone();
            convexity_pass(&|t, y, z| f(t, y, z), mode == ConvexityMode::Ga, &mut tr, window, samples, seed);
            let id = if mode == ConvexityMode::Ga { AssumptionId::Ga } else { AssumptionId::C };
            tr.finish(id, driver, window, samples, seed)
        }
        ConvexityMode::Perspective => {
            let Some(dec) = driver.decomposition.clone() else {
                return inconclusive(AssumptionId::CPrime, driver, window, samples, seed, "driver declares no y/z split".into());
            };
            let mut tr = Tracker::new(&[]);
            tr.labels = pair_labels(dim);
            for (t, y, z) in window.points(samples, seed) {
                let (a, b) = ((dec.y_part)(t, y), (dec.z_part)(t, &z));
                tr.record(|| pair_point(t, y, &z, y, &z, 1.0), a.min(b), tol(0.0));
            }
            let yp = dec.y_part.clone();
            convexity_pass(&|t, y, _| yp(t, y), false, &mut tr, window, samples, seed);
            let zp = dec.z_part.clone();
            convexity_pass(&|t, _, z| zp(t, z), false, &mut tr, window, samples, seed);
            match twodriver_form(driver).and_then(|td| transforms::twodriver_reduce(&td, dim)) {
                Ok(red) => {
                    let g = red.f.clone();
                    convexity_pass(&|t, y, v| g(t, y, v), false, &mut tr, window, samples, seed);
                }
                Err(e) => return inconclusive(AssumptionId::CPrime, driver, window, samples, seed, e.to_string()),
            }
            let mut a = tr.finish(AssumptionId::CPrime, driver, window, samples, seed);
            a.notes.push("perspective mode: split terms and reduced form checked separately".into());
            a
        }
    }
}

fn increasing_audit(driver: &DriverSpec, window: &SamplingWindow, samples: usize, seed: u64) -> Result<AssumptionAudit> {
    let form = geometric_form(driver, window.dim)?;
    let mut tr = Tracker::new(&[]);
    tr.labels = pair_labels(window.dim);
    for (t, y1, z, y2, _) in window.pairs(samples, seed) {
        let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
        let (a, b) = (form.eval(t, lo, &z), form.eval(t, hi, &z));
        tr.record(|| pair_point(t, lo, &z, hi, &z, 1.0), b - a, tol(a.abs() + b.abs()));
    }
    Ok(tr.finish(AssumptionId::IncreasingInY, driver, window, samples, seed))
}

fn sublinear_audit(driver: &DriverSpec, window: &SamplingWindow, samples: usize, seed: u64) -> AssumptionAudit {
    let Some(amb) = driver.ambiguity.clone() else {
        return inconclusive(AssumptionId::SublinearZ, driver, window, samples, seed, "driver declares no ambiguity term".into());
    };
    let mut tr = Tracker::new(&[]);
    tr.labels = labels_tyz(window.dim);
    let c = amb.bound;
    for (t, y, z) in window.points(samples, seed) {
        let g = (amb.g)(t, &z);
        let cap = c * sq(&z).sqrt();
        tr.record(|| point_tyz(t, y, &z), g.min(cap - g), tol(cap));
        for s in [0.5, 2.0, 3.7] {
            let zs: Vec<f64> = z.iter().map(|v| s * v).collect();
            let gs = (amb.g)(t, &zs);
            tr.record(|| point_tyz(t, s, &z), -(gs - s * g).abs(), tol(s * g));
        }
    }
    let gg = amb.g.clone();
    let mut conv = Tracker::new(&[]);
    conv.labels = pair_labels(window.dim);
    convexity_pass(&|t, _, z| gg(t, z), false, &mut conv, window, samples, seed);
    let mut a = tr.finish(AssumptionId::SublinearZ, driver, window, samples, seed);
    let b = conv.finish(AssumptionId::SublinearZ, driver, window, samples, seed);
    a.worst_margin = a.worst_margin.min(b.worst_margin);
    if a.witness.is_none() {
        a.witness = b.witness;
        a.verdict = b.verdict;
    }
    a
}

/// Audit one assumption on a driver, converting to the form the assumption is stated in.
pub fn audit(driver: &DriverSpec, id: AssumptionId, window: &SamplingWindow, samples: usize, seed: u64) -> AssumptionAudit {
    let fallback = |e: Error| inconclusive(id, driver, window, samples, seed, e.to_string());
    match id {
        AssumptionId::H1 | AssumptionId::H1Prime | AssumptionId::H1DoublePrime | AssumptionId::A => {
            if driver.traits.exempt_nonnegativity {
                return inconclusive(id, driver, window, samples, seed, "signed driver, exempt from the g >= 0 growth audit".into());
            }
            match lnq_form(driver, window.dim) {
                Ok(form) => bound_audit(&form, id, driver, window, samples, seed),
                Err(e) => fallback(e),
            }
        }
        AssumptionId::APrime | AssumptionId::G1 => match twodriver_form(driver) {
            Ok(form) => bound_audit(&form, id, driver, window, samples, seed),
            Err(e) => fallback(e),
        },
        AssumptionId::G2 => match twodriver_form(driver) {
            Ok(form) => g2_audit(&form, window, samples, seed),
            Err(e) => fallback(e),
        },
        AssumptionId::C => match lnq_form(driver, window.dim) {
            Ok(form) => {
                let mut a = check_convexity(&form, ConvexityMode::Joint, window, samples, seed);
                a.driver = driver.name.clone();
                a
            }
            Err(e) => fallback(e),
        },
        AssumptionId::CPrime => {
            if driver.decomposition.is_some() {
                return check_convexity(driver, ConvexityMode::Perspective, window, samples, seed);
            }
            match twodriver_form(driver).and_then(|td| transforms::twodriver_reduce(&td, window.dim)) {
                Ok(form) => {
                    let mut a = check_convexity(&form, ConvexityMode::Joint, window, samples, seed);
                    a.assumption = AssumptionId::CPrime;
                    a.driver = driver.name.clone();
                    a
                }
                Err(e) => fallback(e),
            }
        }
        AssumptionId::Ga => match geometric_form(driver, window.dim) {
            Ok(form) => {
                let mut a = check_convexity(&form, ConvexityMode::Ga, window, samples, seed);
                a.driver = driver.name.clone();
                a
            }
            Err(e) => fallback(e),
        },
        AssumptionId::IncreasingInY => increasing_audit(driver, window, samples, seed).unwrap_or_else(fallback),
        AssumptionId::SublinearZ => sublinear_audit(driver, window, samples, seed),
        AssumptionId::G3Moments => inconclusive(id, driver, window, samples, seed, "needs a payoff and an ensemble; use moment_report".into()),
    }
}

/// Terminal moment order needed for the a-priori estimates: `p (2δ + 1)(e^B + 1)`.
pub fn required_moment_order(bundle: &CoefficientBundle, p: f64, delta: f64) -> f64 {
    p * (2.0 * delta + 1.0) * (bundle.b_int.exp() + 1.0)
}

fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-10 * (1.0 + a.abs()) {
            break;
        }
        if fc.is_nan() || fc < fd {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        }
    }
    0.5 * (a + b)
}

/// Estimate `E[X^q]` for the required order `q` with a mean-shifted importance sampler
/// built on the ensemble's terminal Gaussian draws.
///
/// The shift maximizes `q ln X(w) − |w|²/2T`; a maximizer on the search boundary or a
/// non-finite objective means the integrand does not decay and the moment is reported
/// as infinite (fail). An error bar spanning an order of magnitude is inconclusive.
pub fn moment_report(x: &TerminalCondition, bundle: &CoefficientBundle, p: f64, delta: f64, ensemble: &PathEnsemble) -> AssumptionAudit {
    let q = required_moment_order(bundle, p, delta);
    let horizon = ensemble.grid().horizon();
    let n = ensemble.dim();
    let r = 40.0 * horizon.sqrt();
    let window = SamplingWindow::standard(horizon, n);
    let obj = |w: &[f64]| q * x.eval(w).ln() - sq(w) / (2.0 * horizon);
    let mut theta = vec![0.0; n];
    for _ in 0..4 {
        for d in 0..n {
            let f = |v: f64| {
                let mut w = theta.clone();
                w[d] = v;
                let o = obj(&w);
                if o.is_finite() { o } else { f64::INFINITY }
            };
            theta[d] = golden_max(&f, -r, r);
        }
    }
    let mut audit = AssumptionAudit {
        assumption: AssumptionId::G3Moments,
        driver: x.label.clone(),
        verdict: Verdict::Pass,
        worst_margin: 0.0,
        witness: None,
        samples: ensemble.paths(),
        seed: ensemble.seed(),
        window,
        certified_k: None,
        estimate: None,
        std_error: None,
        notes: vec![format!("required order q = {q}")],
    };
    let peak = obj(&theta);
    let at_edge = theta.iter().any(|v| v.abs() >= 0.99 * r);
    if at_edge || !peak.is_finite() {
        let base = obj(&vec![0.0; n]);
        let margin = if peak.is_finite() && base.is_finite() { -(peak - base).max(f64::MIN_POSITIVE) } else { -f64::MAX };
        let mut labels: Vec<String> = (0..n).map(|d| format!("w{d}")).collect();
        labels.push("q".into());
        let mut point = theta.clone();
        point.push(q);
        audit.verdict = Verdict::Fail;
        audit.worst_margin = margin;
        audit.witness = Some(Witness { labels, point, margin });
        audit.notes.push("q ln X(w) - |w|^2/2T does not decay; the moment is infinite".into());
        return audit;
    }
    let m = ensemble.paths();
    let shift2 = sq(&theta) / (2.0 * horizon);
    let logs: Vec<f64> = (0..m)
        .map(|k| {
            let u = ensemble.terminal(k);
            let w: Vec<f64> = u.iter().zip(&theta).map(|(a, b)| a + b).collect();
            let dot: f64 = u.iter().zip(&theta).map(|(a, b)| a * b).sum();
            q * x.eval(&w).ln() - dot / horizon - shift2
        })
        .collect();
    let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rel: Vec<f64> = logs.iter().map(|l| (l - lmax).exp()).collect();
    let mean = rel.iter().sum::<f64>() / m as f64;
    let var = rel.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m.max(2) - 1) as f64;
    let rel_se = (var / m as f64).sqrt() / mean;
    let log_moment = lmax + mean.ln();
    audit.estimate = Some(log_moment.exp());
    audit.std_error = Some(log_moment.exp() * rel_se);
    audit.notes.push(format!("ln E[X^q] = {log_moment}, relative standard error {rel_se:e}"));
    let (lo, hi) = (1.0 - rel_se, 1.0 + rel_se);
    if !(lo > 0.0) || hi / lo >= 10.0 {
        audit.verdict = Verdict::Inconclusive;
        audit.worst_margin = 0.0;
        audit.notes.push("error bar spans an order of magnitude".into());
    } else {
        audit.worst_margin = 10f64.ln() - (hi / lo).ln();
    }
    audit
}

/// Plain-text table of audits.
pub fn render_audits(audits: &[AssumptionAudit]) -> String {
    let mut s = format!("{:<36} {:<16} {:<13} {:>12}  witness\n", "driver", "assumption", "verdict", "margin");
    for a in audits {
        let w = a.witness.as_ref().map_or(String::from("-"), |w| {
            w.labels.iter().zip(&w.point).map(|(l, v)| format!("{l}={v:.4}")).collect::<Vec<_>>().join(" ")
        });
        let name: String = a.driver.chars().take(36).collect();
        s.push_str(&format!(
            "{:<36} {:<16} {:<13} {:>12.4e}  {}\n",
            name,
            a.assumption.label(),
            format!("{:?}", a.verdict).to_lowercase(),
            a.worst_margin,
            w
        ));
    }
    s
}
