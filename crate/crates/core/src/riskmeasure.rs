//! Dynamic return risk measures `ρ̃_t(X) = Y_t` of geometric BSDEs, their
//! correspondence with monetary measures `ρ̃ = exp ∘ ρ ∘ ln`, and sampled axiom audits.

use serde::{Deserialize, Serialize};

use crate::driver::{DriverSpec, Family};
use crate::drivers::audit::Verdict;
use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::lattice::{Lattice, Window};
use crate::solver::{solve_gbsde, solve_gbsde_window, SolverConfig, Support};
use crate::terminal::{Positivity, TerminalCondition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Cash-additive scale: `ρ_t(X)`.
    Monetary,
    /// Multiplicative scale: `ρ̃_t(X) > 0`.
    Return,
}

/// A risk measure evaluated on one payoff, at every node of its support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicEvaluation {
    pub kind: MeasureKind,
    pub payoff: String,
    pub lineage: Vec<String>,
    pub field: SolutionField,
}

/// `ρ̃_t(X)` through the geometric BSDE with driver `f̃`.
pub fn evaluate_return(support: Support<'_>, ft: &DriverSpec, x: &TerminalCondition, cfg: &SolverConfig) -> Result<DynamicEvaluation> {
    let field = solve_gbsde(support, x, ft, cfg)?;
    Ok(DynamicEvaluation { kind: MeasureKind::Return, payoff: x.label.clone(), lineage: field.meta.lineage.clone(), field })
}

fn terminal_states(field: &SolutionField) -> Vec<&[f64]> {
    let last = field.states.len() - 1;
    field.states[last].chunks(field.dim).collect()
}

fn check_terminal(field: &SolutionField, expect: impl Fn(&[f64]) -> f64, what: &str) -> Result<()> {
    let last = field.y.len() - 1;
    for (k, s) in terminal_states(field).into_iter().enumerate() {
        let (have, want) = (field.y[last][k], expect(s));
        if !((have - want).abs() <= 1e-12 * want.abs().max(1.0)) {
            return Err(Error::InvalidConfig(format!(
                "evaluation was not computed on {what}: terminal value {have} != {want} at state {s:?}"
            )));
        }
    }
    Ok(())
}

/// `ρ̃_t(X) = exp(ρ_t(ln X))` nodewise, from a monetary evaluation of `ln X`.
pub fn return_from_monetary(rho: &DynamicEvaluation, x: &TerminalCondition) -> Result<DynamicEvaluation> {
    if rho.kind != MeasureKind::Monetary {
        return Err(Error::InvalidConfig("expected a monetary evaluation".into()));
    }
    for s in terminal_states(&rho.field) {
        let v = x.eval(s);
        if !(v > 0.0) {
            return Err(Error::NonPositiveTerminal { value: v, state: s.to_vec() });
        }
    }
    check_terminal(&rho.field, |s| x.eval(s).ln(), "ln X")?;
    let mut field = rho.field.map_nodes(|_, y, z| (y.exp(), z.to_vec()));
    field.positive = true;
    let mut lineage = rho.lineage.clone();
    lineage.push("exp".into());
    Ok(DynamicEvaluation { kind: MeasureKind::Return, payoff: x.label.clone(), lineage, field })
}

/// `ρ_t(X) = ln ρ̃_t(e^X)` nodewise, from a return evaluation of `e^X`.
pub fn monetary_from_return(rho_tilde: &DynamicEvaluation, x: &TerminalCondition) -> Result<DynamicEvaluation> {
    if rho_tilde.kind != MeasureKind::Return {
        return Err(Error::InvalidConfig("expected a return evaluation".into()));
    }
    check_terminal(&rho_tilde.field, |s| x.eval(s).exp(), "exp X")?;
    if let Some(v) = rho_tilde.field.y.iter().flatten().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidConfig(format!("return evaluation has non-positive value {v}")));
    }
    let mut field = rho_tilde.field.map_nodes(|_, y, z| (y.ln(), z.to_vec()));
    field.positive = field.y.iter().flatten().all(|v| *v > 0.0);
    let mut lineage = rho_tilde.lineage.clone();
    lineage.push("ln".into());
    Ok(DynamicEvaluation { kind: MeasureKind::Monetary, payoff: x.label.clone(), lineage, field })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// `X ≤ X' ⇒ ρ̃(X) ≤ ρ̃(X')`.
    Monotone,
    /// `ρ̃_t(ξX) = ξ ρ̃_t(X)` for positive `F_t`-measurable `ξ`.
    PosHom,
    /// `ρ̃_t(ηX) ≤ η ρ̃_t(X)` for `F_t`-measurable `η ∈ (0, 1]`.
    StarShaped,
    /// `ρ̃(X^λ Y^{1−λ}) ≤ ρ̃(X)^λ ρ̃(Y)^{1−λ}`.
    MultConvex,
    /// `ρ̃_t(1) = 1`.
    Normalized,
    /// `ρ̃_s(ρ̃_t(X)) = ρ̃_s(X)` for `s ≤ t`.
    TimeConsistent,
    /// `ρ̃_0(n ∧ X ∨ 1/n) → ρ̃_0(X)`.
    Lebesgue,
    /// `ρ(X + m) = ρ(X) + m` for the monetary counterpart.
    CashAdditive,
    /// `ρ(X + m) ≥ ρ(X) + m` for `m ≥ 0`.
    CashSuperadditive,
    /// `ρ̃(X^η) = ρ̃(X)^η` for `η > 0`.
    MultPosHom,
}

impl Axiom {
    pub fn all() -> &'static [Axiom] {
        use Axiom::*;
        &[Monotone, PosHom, StarShaped, MultConvex, Normalized, TimeConsistent, Lebesgue, CashAdditive, CashSuperadditive, MultPosHom]
    }

    pub fn label(&self) -> &'static str {
        use Axiom::*;
        match self {
            Monotone => "monotone",
            PosHom => "pos_hom",
            StarShaped => "star_shaped",
            MultConvex => "mult_convex",
            Normalized => "normalized",
            TimeConsistent => "time_consistent",
            Lebesgue => "lebesgue",
            CashAdditive => "cash_additive",
            CashSuperadditive => "cash_superadditive",
            MultPosHom => "mult_pos_hom",
        }
    }
}

/// Multiplier `ξ(w)` known at lattice level `level`.
#[derive(Clone, Debug)]
pub struct StateScaling {
    pub level: usize,
    pub factor: TerminalCondition,
}

/// Payoffs and parameters an axiom is tested on.
#[derive(Clone, Debug, Default)]
pub struct InstanceSet {
    pub payoffs: Vec<TerminalCondition>,
    /// Ordered pairs `X ≤ X'` for monotonicity, or `(X, Y)` for convexity.
    pub pairs: Vec<(TerminalCondition, TerminalCondition)>,
    /// Constant multipliers, exponents, cash amounts or mixing weights.
    pub scalars: Vec<f64>,
    pub state_scalings: Vec<StateScaling>,
    /// Split levels for time consistency.
    pub levels: Vec<usize>,
    /// Clamp levels for the Lebesgue check.
    pub clamp_levels: Vec<f64>,
    /// Extra slack on top of ten times the solver tolerance.
    pub extra_slack: f64,
}

/// Outcome of one axiom audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub driver: String,
    pub instances: usize,
    /// Largest relative violation `(lhs − rhs)/max(1, |rhs|)`; equalities use the absolute gap.
    pub max_violation: f64,
    pub slack: f64,
    pub verdict: Verdict,
    pub worst_instance: Option<String>,
    /// Error sequence of the Lebesgue check.
    pub sequence: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

struct Collector {
    worst: f64,
    worst_instance: Option<String>,
    instances: usize,
    notes: Vec<String>,
}

impl Collector {
    fn new() -> Self {
        Self { worst: f64::NEG_INFINITY, worst_instance: None, instances: 0, notes: Vec::new() }
    }

    /// Record `lhs ≤ rhs` (or `lhs = rhs` when `equality`) over matching slices.
    fn compare(&mut self, lhs: &[f64], rhs: &[f64], equality: bool, label: impl Fn(usize) -> String) {
        for (k, (a, b)) in lhs.iter().zip(rhs).enumerate() {
            let gap = if equality { (a - b).abs() } else { a - b };
            let v = gap / b.abs().max(1.0);
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if v > self.worst {
                self.worst = v;
                self.worst_instance = Some(label(k));
            }
        }
    }

    fn finish(self, axiom: Axiom, driver: &DriverSpec, slack: f64) -> AxiomReport {
        let max_violation = if self.instances == 0 { 0.0 } else { self.worst.max(0.0) };
        let verdict = if self.instances == 0 {
            Verdict::Inconclusive
        } else if max_violation <= slack {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        AxiomReport {
            axiom,
            driver: driver.name.clone(),
            instances: self.instances,
            max_violation,
            slack,
            verdict,
            worst_instance: self.worst_instance,
            sequence: None,
            notes: self.notes,
        }
    }
}

fn rho(l: &Lattice, ft: &DriverSpec, x: &TerminalCondition, cfg: &SolverConfig) -> Result<SolutionField> {
    solve_gbsde(Support::Lattice(l), x, ft, cfg)
}

fn scaled(x: &TerminalCondition, c: f64) -> TerminalCondition {
    x.map(move |v| c * v, Positivity::Strict, format!("{c} * {}", x.label))
}

/// Scaling at an interior level: solve each subtree rooted at `(level, j)` with
/// terminal `ξ(w_j) X` and compare with `ξ(w_j) ρ̃_level(X)(j)` through `relation`.
fn state_scaled_check(
    col: &mut Collector,
    l: &Lattice,
    ft: &DriverSpec,
    x: &TerminalCondition,
    s: &StateScaling,
    base: &SolutionField,
    cfg: &SolverConfig,
    equality: bool,
) -> Result<()> {
    let n = l.steps();
    if s.level > n {
        return Err(Error::InvalidConfig(format!("scaling level {} exceeds the lattice depth {n}", s.level)));
    }
    for j in 0..=s.level {
        let xi = s.factor.eval(&[l.state(s.level, j)]);
        let window = Window { root_level: s.level, root_j: j, terminal_level: n };
        let terminal: Vec<f64> = l.payoff_values(x, window, n).into_iter().map(|v| xi * v).collect();
        let sub = solve_gbsde_window(l, window, &terminal, ft, cfg)?;
        let lhs = sub.y[0][0];
        let rhs = xi * base.y[s.level][j];
        col.compare(&[lhs], &[rhs], equality, |_| format!("{} scaled by {} at level {}, node {j}", x.label, s.factor.label, s.level));
    }
    col.instances += 1;
    Ok(())
}

fn flat(f: &SolutionField) -> Vec<f64> {
    f.y.iter().flatten().copied().collect()
}

/// Sampled audit of one axiom on the lattice. Violations are relative, and
/// pass when at most `10 · tolerance + extra_slack`.
pub fn audit_axiom(ft: &DriverSpec, axiom: Axiom, set: &InstanceSet, lattice: &Lattice, cfg: &SolverConfig) -> Result<AxiomReport> {
    ft.require(Family::Geometric)?;
    let slack = 10.0 * cfg.tolerance + set.extra_slack;
    let mut col = Collector::new();
    let l = lattice;
    match axiom {
        Axiom::Monotone => {
            for (lo, hi) in &set.pairs {
                let (a, b) = (l.terminal_values(lo), l.terminal_values(hi));
                if a.iter().zip(&b).any(|(u, v)| u > v) {
                    col.notes.push(format!("skipped unordered pair ({}, {})", lo.label, hi.label));
                    continue;
                }
                let (fa, fb) = (rho(l, ft, lo, cfg)?, rho(l, ft, hi, cfg)?);
                col.compare(&flat(&fa), &flat(&fb), false, |_| format!("{} <= {}", lo.label, hi.label));
                col.instances += 1;
            }
        }
        Axiom::PosHom | Axiom::StarShaped => {
            let equality = axiom == Axiom::PosHom;
            for x in &set.payoffs {
                let base = rho(l, ft, x, cfg)?;
                for &c in &set.scalars {
                    if !(c > 0.0) || (!equality && c > 1.0) {
                        col.notes.push(format!("skipped multiplier {c}"));
                        continue;
                    }
                    let lhs = flat(&rho(l, ft, &scaled(x, c), cfg)?);
                    let rhs: Vec<f64> = flat(&base).into_iter().map(|v| c * v).collect();
                    col.compare(&lhs, &rhs, equality, |_| format!("{} scaled by {c}", x.label));
                    col.instances += 1;
                }
                for s in &set.state_scalings {
                    state_scaled_check(&mut col, l, ft, x, s, &base, cfg, equality)?;
                }
            }
        }
        Axiom::MultConvex => {
            for (x, y) in &set.pairs {
                let (fx, fy) = (flat(&rho(l, ft, x, cfg)?), flat(&rho(l, ft, y, cfg)?));
                for &lam in &set.scalars {
                    if !(lam > 0.0 && lam < 1.0) {
                        col.notes.push(format!("skipped weight {lam}"));
                        continue;
                    }
                    let mixed = x.zip(y, move |a, b| a.powf(lam) * b.powf(1.0 - lam), Positivity::Strict, "mix");
                    let lhs = flat(&rho(l, ft, &mixed, cfg)?);
                    let rhs: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a.powf(lam) * b.powf(1.0 - lam)).collect();
                    col.compare(&lhs, &rhs, false, |_| format!("{}^{lam} {}^{}", x.label, y.label, 1.0 - lam));
                    col.instances += 1;
                }
            }
        }
        Axiom::Normalized => {
            let f = flat(&rho(l, ft, &TerminalCondition::constant(1.0), cfg)?);
            col.compare(&f, &vec![1.0; f.len()], true, |k| format!("node {k}"));
            col.instances += 1;
        }
        Axiom::TimeConsistent => {
            for x in &set.payoffs {
                let full = rho(l, ft, x, cfg)?;
                for &k in &set.levels {
                    if k == 0 || k > l.steps() {
                        col.notes.push(format!("skipped split level {k}"));
                        continue;
                    }
                    let window = Window { root_level: 0, root_j: 0, terminal_level: k };
                    let part = solve_gbsde_window(l, window, &full.y[k], ft, cfg)?;
                    let lhs: Vec<f64> = part.y.iter().flatten().copied().collect();
                    let rhs: Vec<f64> = full.y[..=k].iter().flatten().copied().collect();
                    col.compare(&lhs, &rhs, true, |_| format!("{} split at level {k}", x.label));
                    col.instances += 1;
                }
            }
        }
        Axiom::Lebesgue => {
            let mut reports = Vec::new();
            for x in &set.payoffs {
                reports.push(lebesgue_check(ft, x, &set.clamp_levels, l, cfg)?);
            }
            let worst = reports
                .iter()
                .max_by(|a, b| a.max_violation.total_cmp(&b.max_violation))
                .cloned();
            return Ok(match worst {
                Some(mut r) => {
                    r.instances = reports.len();
                    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
                        r.verdict = Verdict::Fail;
                    }
                    r
                }
                None => col.finish(axiom, ft, slack),
            });
        }
        Axiom::CashAdditive | Axiom::CashSuperadditive => {
            let equality = axiom == Axiom::CashAdditive;
            for x in &set.payoffs {
                let base: Vec<f64> = flat(&rho(l, ft, x, cfg)?).into_iter().map(f64::ln).collect();
                for &m in &set.scalars {
                    if !equality && m < 0.0 {
                        col.notes.push(format!("skipped negative cash amount {m}"));
                        continue;
                    }
                    let shifted: Vec<f64> = flat(&rho(l, ft, &scaled(x, m.exp()), cfg)?).into_iter().map(f64::ln).collect();
                    let target: Vec<f64> = base.iter().map(|v| v + m).collect();
                    if equality {
                        col.compare(&shifted, &target, true, |_| format!("ln {} + {m}", x.label));
                    } else {
                        col.compare(&target, &shifted, false, |_| format!("ln {} + {m}", x.label));
                    }
                    col.instances += 1;
                }
            }
        }
        Axiom::MultPosHom => {
            for x in &set.payoffs {
                let base = flat(&rho(l, ft, x, cfg)?);
                for &eta in &set.scalars {
                    if !(eta > 0.0) {
                        col.notes.push(format!("skipped exponent {eta}"));
                        continue;
                    }
                    let powered = x.map(move |v| v.powf(eta), Positivity::Strict, format!("{}^{eta}", x.label));
                    let lhs = flat(&rho(l, ft, &powered, cfg)?);
                    let rhs: Vec<f64> = base.iter().map(|v| v.powf(eta)).collect();
                    col.compare(&lhs, &rhs, true, |_| format!("{}^{eta}", x.label));
                    col.instances += 1;
                }
            }
        }
    }
    Ok(col.finish(axiom, ft, slack))
}

/// `|ρ̃_0(Xⁿ) − ρ̃_0(X)|` for the clamps `Xⁿ = n ∧ X ∨ 1/n`; passes when the errors
/// do not increase along `levels`.
pub fn lebesgue_check(ft: &DriverSpec, x: &TerminalCondition, levels: &[f64], lattice: &Lattice, cfg: &SolverConfig) -> Result<AxiomReport> {
    let slack = 10.0 * cfg.tolerance;
    let target = rho(lattice, ft, x, cfg)?.y0();
    let mut errors = Vec::with_capacity(levels.len());
    for &n in levels {
        if !(n > 1.0) {
            return Err(Error::InvalidConfig(format!("clamp level must exceed 1, got {n}")));
        }
        errors.push((rho(lattice, ft, &x.clamp_level(n), cfg)?.y0() - target).abs());
    }
    let mut worst: f64 = 0.0;
    let mut worst_instance = None;
    for (k, w) in errors.windows(2).enumerate() {
        let rise = (w[1] - w[0]) / target.abs().max(1.0);
        if rise > worst {
            worst = rise;
            worst_instance = Some(format!("level {} -> {}", levels[k], levels[k + 1]));
        }
    }
    Ok(AxiomReport {
        axiom: Axiom::Lebesgue,
        driver: ft.name.clone(),
        instances: 1,
        max_violation: worst,
        slack,
        verdict: if worst <= slack { Verdict::Pass } else { Verdict::Fail },
        worst_instance,
        sequence: Some(errors),
        notes: vec![format!("target rho_0(X) = {target}")],
    })
}

/// Plain-text table of axiom reports.
pub fn render_axioms(reports: &[AxiomReport]) -> String {
    let mut s = format!("{:<36} {:<18} {:>9} {:>12} {:>10}  {}\n", "driver", "axiom", "instances", "violation", "slack", "verdict");
    for r in reports {
        let name: String = r.driver.chars().take(36).collect();
        s.push_str(&format!(
            "{:<36} {:<18} {:>9} {:>12.3e} {:>10.1e}  {}\n",
            name,
            r.axiom.label(),
            r.instances,
            r.max_violation,
            r.slack,
            format!("{:?}", r.verdict).to_lowercase()
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::catalog;
    use crate::solver::solve_lattice;
    use crate::transforms;

    fn lat() -> Lattice {
        Lattice::uniform(1.0, 24).unwrap()
    }

    #[test]
    fn correspondence_round_trips() {
        let l = lat();
        let ft = catalog::robust_gamma_norm(2.0, 0.3, 1.0).unwrap();
        let x = TerminalCondition::exp_w(0.8);
        let rt = evaluate_return(Support::Lattice(&l), &ft, &x, &SolverConfig::default()).unwrap();
        let logx = TerminalCondition::new(|w| 0.8 * w[0], Positivity::Unrestricted, "0.8 W");
        let m = monetary_from_return(&rt, &logx).unwrap();
        let back = return_from_monetary(&m, &x).unwrap();
        assert!(back.field.max_abs_diff_y(&rt.field).unwrap() <= 1e-12 * rt.field.y0().max(1.0) * 10.0);
        assert_eq!(back.kind, MeasureKind::Return);
    }

    #[test]
    fn monetary_solve_matches_return_route() {
        // An ordinary lattice solve of ln X under f = f̃(e^y, z) + |z|²/2 exponentiates to ρ̃
        // up to the difference between the two volatility read-outs, which is O(Δt).
        let l = Lattice::uniform(1.0, 64).unwrap();
        let ft = catalog::gamma_norm(2.0, 1.0).unwrap();
        let f = transforms::gbsde_to_ordinary(&ft).unwrap();
        let logx = TerminalCondition::new(|w| 0.5 * w[0], Positivity::Unrestricted, "0.5 W");
        let field = solve_lattice(&l, &logx, &f, &SolverConfig::default()).unwrap();
        let m = DynamicEvaluation { kind: MeasureKind::Monetary, payoff: "ln X".into(), lineage: vec![], field };
        let x = TerminalCondition::exp_w(0.5);
        let r = return_from_monetary(&m, &x).unwrap();
        let direct = evaluate_return(Support::Lattice(&l), &ft, &x, &SolverConfig::default()).unwrap();
        assert!((r.field.y0() - direct.field.y0()).abs() < 1e-3);
    }

    #[test]
    fn wrong_payoff_is_detected() {
        let l = lat();
        let rt = evaluate_return(Support::Lattice(&l), &catalog::zero(1.0), &TerminalCondition::exp_w(1.0), &SolverConfig::default()).unwrap();
        assert!(monetary_from_return(&rt, &TerminalCondition::constant(1.0)).is_err());
        let m = DynamicEvaluation { kind: MeasureKind::Monetary, ..rt.clone() };
        let neg = TerminalCondition::new(|w| w[0], Positivity::Unrestricted, "W");
        assert!(matches!(return_from_monetary(&m, &neg), Err(Error::NonPositiveTerminal { .. })));
    }

    #[test]
    fn normalization_and_time_consistency_hold() {
        let l = lat();
        let ft = catalog::gamma_norm(2.0, 1.0).unwrap();
        let cfg = SolverConfig::default();
        let set = InstanceSet { payoffs: vec![TerminalCondition::exp_w(0.7)], levels: vec![5, 12, 23], ..Default::default() };
        let n = audit_axiom(&ft, Axiom::Normalized, &set, &l, &cfg).unwrap();
        assert_eq!(n.verdict, Verdict::Pass);
        assert_eq!(n.max_violation, 0.0);
        let t = audit_axiom(&ft, Axiom::TimeConsistent, &set, &l, &cfg).unwrap();
        assert_eq!(t.verdict, Verdict::Pass, "{t:?}");
        assert_eq!(t.instances, 3);
    }

    #[test]
    fn log_star_is_not_homogeneous() {
        let l = lat();
        let ft = catalog::log_star(1.0, 1.0).unwrap();
        let set = InstanceSet { payoffs: vec![TerminalCondition::exp_w(0.5)], scalars: vec![3.0], ..Default::default() };
        let r = audit_axiom(&ft, Axiom::PosHom, &set, &l, &SolverConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let s = InstanceSet { scalars: vec![0.3], ..set };
        let r = audit_axiom(&ft, Axiom::StarShaped, &s, &l, &SolverConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn geometric_expectation_is_multiplicatively_homogeneous() {
        let l = lat();
        let set = InstanceSet { payoffs: vec![TerminalCondition::exp_w(0.9)], scalars: vec![0.5, 2.0], ..Default::default() };
        let r = audit_axiom(&catalog::geom_cond_exp(1.0), Axiom::MultPosHom, &set, &l, &SolverConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        let g = audit_axiom(&catalog::gamma_norm(2.0, 1.0).unwrap(), Axiom::MultPosHom, &set, &l, &SolverConfig::default()).unwrap();
        assert_eq!(g.verdict, Verdict::Fail);
    }

    #[test]
    fn lebesgue_errors_decrease() {
        let l = Lattice::uniform(1.0, 40).unwrap();
        let r = lebesgue_check(&catalog::gamma_norm(2.0, 1.0).unwrap(), &TerminalCondition::exp_w(1.0), &[2.0, 4.0, 8.0, 16.0, 32.0], &l, &SolverConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let seq = r.sequence.unwrap();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
    }
}
