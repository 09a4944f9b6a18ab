use gbsde::drivers::catalog;
use gbsde::solver::{solve_gbsde, solve_lnq};
use gbsde::{transforms, Lattice, Positivity, SolverConfig, Support, TerminalCondition};
use proptest::prelude::*;

fn payoff(a: f64, b: f64) -> TerminalCondition {
    TerminalCondition::new(move |w: &[f64]| (a * w[0]).exp() + b, Positivity::BoundedBelow(b), "exp(aW)+b")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // A larger terminal gives a pointwise larger solution.
    #[test]
    fn solution_is_monotone_in_the_terminal(a in -1.0f64..1.0, b in 0.01f64..1.0, bump in 0.0f64..0.5, gamma in 1.0f64..3.0) {
        let l = Lattice::uniform(1.0, 24).unwrap();
        let ft = catalog::gamma_norm(gamma, 1.0).unwrap();
        let cfg = SolverConfig::default();
        let lo = solve_gbsde(Support::Lattice(&l), &payoff(a, b), &ft, &cfg).unwrap();
        let hi = solve_gbsde(Support::Lattice(&l), &payoff(a, b + bump), &ft, &cfg).unwrap();
        for (x, y) in lo.y.iter().flatten().zip(hi.y.iter().flatten()) {
            prop_assert!(*x <= *y * (1.0 + 1e-12));
        }
    }

    // Solving through the log-quadratic driver reproduces the direct solve.
    #[test]
    fn lnq_route_agrees_with_direct(a in -1.0f64..1.0, b in 0.01f64..1.0, gamma in 1.0f64..3.0) {
        let l = Lattice::uniform(1.0, 24).unwrap();
        let ft = catalog::gamma_norm(gamma, 1.0).unwrap();
        let cfg = SolverConfig::default();
        let x = payoff(a, b);
        let direct = solve_gbsde(Support::Lattice(&l), &x, &ft, &cfg).unwrap();
        let routed = solve_lnq(Support::Lattice(&l), &x, &transforms::gbsde_to_lnq(&ft).unwrap(), &cfg).unwrap();
        for (x, y) in direct.y.iter().flatten().zip(routed.y.iter().flatten()) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }
}
