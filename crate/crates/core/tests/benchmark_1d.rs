//! End-to-end runs on the 1D benchmark: k² = 2·10⁴, 256 interior cells, β₀ = 0.6.

use helmex::analysis::{condition_vs_m, condition_vs_omega, preconditioned_spectrum, spearman};
use helmex::krylov::solve;
use helmex::vector::rel_diff;
use helmex::{ExpansionConfig, ExpansionPreconditioner, InnerMode, Method, Problem, ProblemSpec, SolverConfig};

const BETA0: f64 = 0.6;
const K2: f64 = 2.0e4;

fn iterations(problem: &Problem, m: usize, mode: InnerMode, method: Method) -> (usize, Vec<helmex::Complex64>) {
    let inner = problem.inner_solver(BETA0, mode).unwrap();
    let pre = ExpansionPreconditioner::new(ExpansionConfig::taylor(m, BETA0, K2), inner).unwrap();
    let (x, report) = solve(&problem.a, &pre, &problem.rhs, &SolverConfig::new(method, 1e-8, 1000)).unwrap();
    assert!(report.converged, "m={m} {mode} {method}: {}", report.stop_reason);
    if method == Method::Gmres {
        assert!(report.is_monotone());
    }
    (report.iterations, x)
}

#[test]
fn exact_inner_iteration_counts() {
    let problem = Problem::build(&ProblemSpec::benchmark_1d()).unwrap();
    let p: Vec<usize> = (1..=5).map(|m| iterations(&problem, m, InnerMode::ExactLu, Method::BiCgStab).0).collect();
    for (got, want) in p.iter().zip([34, 22, 16, 13, 11]) {
        assert!((*got as f64 - want as f64).abs() <= 0.15 * want as f64, "p = {p:?}");
    }
    assert!(p.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn vcycle_inner_iteration_counts() {
    let problem = Problem::build(&ProblemSpec::benchmark_1d()).unwrap();
    let p: Vec<usize> = (1..=5).map(|m| iterations(&problem, m, InnerMode::VCycle, Method::BiCgStab).0).collect();
    for (got, want) in p.iter().zip([49, 39, 34, 31, 30]) {
        assert!((*got as f64 - want as f64).abs() <= 0.2 * want as f64, "p = {p:?}");
    }
    assert!(p.windows(2).all(|w| w[1] <= w[0]));
    let cost: Vec<usize> = p.iter().enumerate().map(|(i, p)| (i + 1) * p).collect();
    assert!(cost.windows(2).all(|w| w[1] > w[0]), "m·p = {cost:?}");
}

#[test]
fn krylov_methods_agree() {
    let problem = Problem::build(&ProblemSpec::benchmark_1d()).unwrap();
    for m in [1, 3] {
        let (_, xb) = iterations(&problem, m, InnerMode::ExactLu, Method::BiCgStab);
        let (_, xg) = iterations(&problem, m, InnerMode::ExactLu, Method::Gmres);
        // both stop at a preconditioned residual of 1e-8; κ ≲ 30 bounds the error gap
        assert!(rel_diff(&xb, &xg) < 1e-6, "m={m}: {}", rel_diff(&xb, &xg));
    }
}

#[test]
fn condition_numbers() {
    let problem = Problem::build(&ProblemSpec::benchmark_1d()).unwrap();
    let kappa = condition_vs_m(&problem, BETA0, &[1, 2, 3, 4, 5]).unwrap();
    let k2 = kappa[1].1;
    assert!((k2 - 17.29).abs() <= 0.1 * 17.29, "κ(EX(2)A) = {k2}");
    assert!(kappa.windows(2).all(|w| w[1].1 < w[0].1));

    let p1 = [34.0, 22.0, 16.0, 13.0, 11.0];
    let k: Vec<f64> = kappa.iter().map(|&(_, c)| c).collect();
    assert!((spearman(&k, &p1).unwrap() - 1.0).abs() < 1e-12);

    let report = preconditioned_spectrum(&ExpansionConfig::taylor(2, BETA0, K2), &problem).unwrap();
    assert!((report.condition_number - k2).abs() < 1e-8 * k2);

    let omegas: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
    let sweep = condition_vs_omega(&problem, BETA0, 2, &omegas).unwrap();
    let (w_min, k_min) = sweep.iter().cloned().fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    assert!((k_min - 15.13).abs() <= 0.1 * 15.13, "min κ = {k_min}");
    assert!((1.5..=2.0).contains(&w_min), "argmin ω = {w_min}");
    // ω = 1 is the plain expansion
    assert!((sweep[10].1 - k2).abs() < 1e-8 * k2);
}
