//! Subcommand implementations. Each writes its CSV into `cfg.out` and
//! returns whether every requested run converged.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use helmex::analysis::{self, condition_vs_m, condition_vs_omega, preconditioned_operator_spectrum, DENSE_LIMIT};
use helmex::krylov::solve;
use helmex::{
    Complex64 as c64, ExpansionPreconditioner, Family, InnerMode, Method, Problem, SolveReport, SolverConfig,
};

use crate::config::RunConfig;
use crate::csv_out::{sci, CsvFile};

/// Summary of a command: exit status plus one line per failed run.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn converged(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Raised when a dense analysis is asked to use approximate inverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefusesVcycleMode;

impl std::fmt::Display for RefusesVcycleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("dense analysis needs exact CSL inverses; use inner = exact")
    }
}

impl std::error::Error for RefusesVcycleMode {}

pub struct SolveRun {
    pub m: usize,
    pub solution: Vec<c64>,
    pub report: SolveReport,
    /// Assembly, factorization and polynomial fitting, excluded from `report.wall_time`.
    pub setup_seconds: f64,
    pub nominal_wu_per_apply: u64,
}

pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    cfg.validate()?;
    Ok(Problem::build(&cfg.problem_spec())?)
}

pub fn build_preconditioner(
    cfg: &RunConfig,
    problem: &Problem,
    m: usize,
    mode: InnerMode,
) -> Result<ExpansionPreconditioner> {
    let inner = problem.inner_solver_with(cfg.beta0, mode, cfg.multigrid())?;
    let expansion = cfg.expansion(m);
    Ok(match expansion.family {
        Family::GmresPoly => ExpansionPreconditioner::gmres_fitted(expansion, inner, &problem.a, &problem.rhs)?,
        _ => ExpansionPreconditioner::new(expansion, inner)?,
    })
}

/// One preconditioned solve of the configured problem with degree `m`.
pub fn run_one(cfg: &RunConfig, problem: &Problem, m: usize, solver: &SolverConfig) -> Result<SolveRun> {
    let start = Instant::now();
    let pre = build_preconditioner(cfg, problem, m, cfg.inner_mode())?;
    let setup_seconds = start.elapsed().as_secs_f64();
    let (solution, report) = solve(&problem.a, &pre, &problem.rhs, solver)?;
    Ok(SolveRun {
        m,
        solution,
        report,
        setup_seconds,
        nominal_wu_per_apply: pre.config().nominal_work_units_per_apply(),
    })
}

fn describe(run: &SolveRun) -> String {
    let r = &run.report;
    format!(
        "m={} method={} p={} converged={} stop={} rel_resid_true={:.3e} wu={} solve_s={:.3} setup_s={:.3}",
        run.m,
        r.method,
        r.iterations,
        r.converged,
        r.stop_reason,
        r.final_true_residual,
        r.work_units,
        r.wall_time,
        run.setup_seconds
    )
}

fn dump_operator(cfg: &RunConfig, problem: &Problem) -> Result<()> {
    if let Some(path) = &cfg.dump_operator {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        problem.a.write_matrix_market(BufWriter::new(file))?;
    }
    Ok(())
}

fn ensure_out(cfg: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    dump_operator(cfg, &problem)?;
    let out = ensure_out(cfg)?;
    let run = run_one(cfg, &problem, cfg.m, &cfg.solver())?;

    let mut sol = CsvFile::create(&out.join("solution.csv"), &["index", "re", "im", "abs"])?;
    for (i, u) in run.solution.iter().enumerate() {
        sol.row(&[i.to_string(), sci(u.re), sci(u.im), sci(u.norm())])?;
    }
    sol.finish()?;

    let r = &run.report;
    let mut hist = CsvFile::create(&out.join("history.csv"), &["iter", "rel_resid_precond", "rel_resid_true"])?;
    for (i, res) in r.residual_history.iter().enumerate() {
        let truth = r.true_residual_history.get(i).copied().unwrap_or(f64::NAN);
        hist.row(&[i.to_string(), sci(*res), sci(truth)])?;
    }
    hist.finish()?;

    println!("{}", describe(&run));
    let mut outcome = Outcome::default();
    if !r.converged {
        outcome.failures.push(format!("m={} stop={} iterations={}", run.m, r.stop_reason, r.iterations));
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    /// `None` when the run aborted with an error.
    pub p: Option<usize>,
    pub ratio_to_m1: f64,
    /// `C = (cost per apply) · p`, with `m` per apply for EX(m).
    pub wu_nominal: Option<u64>,
    /// CSL inversions actually performed, including the initial residual.
    pub wu_actual: Option<u64>,
    pub cpu_seconds: f64,
    pub converged: bool,
    /// Whether the preconditioned residual never increased.
    pub monotone: bool,
    /// One-line summary of the run or of the error that stopped it.
    pub detail: String,
}

/// Runs the configured solve for every `m`, continuing past failures.
pub fn sweep_m(cfg: &RunConfig, problem: &Problem, ms: &[usize]) -> Result<Vec<SweepRow>> {
    // per-iteration true residuals would add solution reconstructions to the timed loop
    let solver = SolverConfig { record_true_residual: false, ..cfg.solver() };
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        let row = match run_one(cfg, problem, m, &solver) {
            Ok(run) => {
                let r = &run.report;
                SweepRow {
                    m,
                    p: Some(r.iterations),
                    ratio_to_m1: f64::NAN,
                    wu_nominal: Some(run.nominal_wu_per_apply * r.iterations as u64),
                    wu_actual: Some(r.work_units),
                    cpu_seconds: r.wall_time,
                    converged: r.converged,
                    monotone: r.is_monotone(),
                    detail: describe(&run),
                }
            }
            Err(e) => SweepRow {
                m,
                p: None,
                ratio_to_m1: f64::NAN,
                wu_nominal: None,
                wu_actual: None,
                cpu_seconds: f64::NAN,
                converged: false,
                monotone: false,
                detail: format!("m={m} error={e:#}"),
            },
        };
        rows.push(row);
    }
    let base = rows.iter().find(|r| r.m == 1).or(rows.first()).and_then(|r| r.p);
    for row in &mut rows {
        if let (Some(p), Some(b)) = (row.p, base) {
            row.ratio_to_m1 = p as f64 / b as f64;
        }
    }
    Ok(rows)
}

fn outcome_of(rows: &[SweepRow]) -> Outcome {
    Outcome { failures: rows.iter().filter(|r| !r.converged).map(|r| r.detail.clone()).collect() }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_m(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut f =
        CsvFile::create(path, &["m", "p", "ratio_to_m1", "wu_nominal", "wu_actual", "cpu_seconds", "converged"])?;
    for r in rows {
        f.row(&[
            r.m.to_string(),
            opt(r.p),
            sci(r.ratio_to_m1),
            opt(r.wu_nominal),
            opt(r.wu_actual),
            sci(r.cpu_seconds),
            r.converged.to_string(),
        ])?;
    }
    f.finish()
}

pub fn cmd_sweep_m(cfg: &RunConfig) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    dump_operator(cfg, &problem)?;
    let out = ensure_out(cfg)?;
    let rows = sweep_m(cfg, &problem, &cfg.ms(1..=5))?;
    for r in &rows {
        println!("{}", r.detail);
    }
    write_sweep_m(&out.join("sweep_m.csv"), &rows)?;
    Ok(outcome_of(&rows))
}

/// Dense analysis needs exact inverses; an explicit V-cycle request is refused.
fn require_exact(cfg: &RunConfig) -> Result<()> {
    if cfg.inner == Some(InnerMode::VCycle) {
        return Err(RefusesVcycleMode.into());
    }
    Ok(())
}

pub fn cmd_sweep_omega(cfg: &RunConfig) -> Result<Outcome> {
    require_exact(cfg)?;
    let problem = build_problem(cfg)?;
    let out = ensure_out(cfg)?;
    let omegas =
        cfg.omega_range.as_ref().map(|r| r.0.clone()).unwrap_or_else(|| (0..=8).map(|i| 0.25 * i as f64).collect());
    let rows = condition_vs_omega(&problem, cfg.beta0, cfg.m, &omegas)?;
    let mut f = CsvFile::create(&out.join("sweep_omega.csv"), &["omega", "kappa"])?;
    for (w, k) in &rows {
        println!("omega={w} kappa={k:.6}");
        f.row(&[sci(*w), sci(*k)])?;
    }
    f.finish()?;
    Ok(Outcome::default())
}

pub fn cmd_condition(cfg: &RunConfig) -> Result<Outcome> {
    require_exact(cfg)?;
    let problem = build_problem(cfg)?;
    let out = ensure_out(cfg)?;
    let rows = condition_vs_m(&problem, cfg.beta0, &cfg.ms(1..=5))?;
    let mut f = CsvFile::create(&out.join("condition.csv"), &["m", "kappa"])?;
    for (m, k) in &rows {
        println!("m={m} kappa={k:.6}");
        f.row(&[m.to_string(), sci(*k)])?;
    }
    f.finish()?;
    Ok(Outcome::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub m: usize,
    pub p: Option<usize>,
    pub converged: bool,
    /// `p(1)/m`: the iteration count that would keep `m·p` at the CSL cost.
    pub constant_budget_p: f64,
}

impl TradeoffRow {
    pub fn cost(&self) -> Option<usize> {
        self.p.map(|p| p * self.m)
    }
}

/// EX(m)-BiCGStab for each `m`, with the constant-budget reference curve.
pub fn tradeoff(cfg: &RunConfig, problem: &Problem, ms: &[usize]) -> Result<Vec<TradeoffRow>> {
    let cfg = RunConfig { method: Method::BiCgStab, ..cfg.clone() };
    let sweep = sweep_m(&cfg, problem, ms)?;
    let p1 = sweep.iter().find(|r| r.m == 1).and_then(|r| r.p);
    let p1 = match p1 {
        Some(p) => p as f64,
        None => run_one(&cfg, problem, 1, &cfg.solver())?.report.iterations as f64,
    };
    Ok(sweep
        .iter()
        .map(|r| TradeoffRow { m: r.m, p: r.p, converged: r.converged, constant_budget_p: p1 / r.m as f64 })
        .collect())
}

pub fn cmd_tradeoff(cfg: &RunConfig) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    let out = ensure_out(cfg)?;
    let rows = tradeoff(cfg, &problem, &cfg.ms(1..=100))?;
    for r in &rows {
        println!("m={} p={} m_times_p={}", r.m, opt(r.p), opt(r.cost()));
    }
    let mut f = CsvFile::create(&out.join("tradeoff.csv"), &["m", "p", "m_times_p", "constant_budget_p"])?;
    for r in &rows {
        f.row(&[r.m.to_string(), opt(r.p), opt(r.cost()), sci(r.constant_budget_p)])?;
    }
    f.finish()?;
    Ok(Outcome { failures: rows.iter().filter(|r| !r.converged).map(|r| format!("m={} not converged", r.m)).collect() })
}

/// Eigenvalues of `A`, `M(β₀)` and the preconditioned operator.
pub fn spectra(cfg: &RunConfig, problem: &Problem) -> Result<Vec<(String, Vec<c64>)>> {
    if problem.size() > DENSE_LIMIT {
        return Err(helmex::Error::TooLarge { size: problem.size(), limit: DENSE_LIMIT }.into());
    }
    let a = analysis::eigenvalues(&problem.a.to_dense())?;
    let m = analysis::eigenvalues(&problem.csl_operator(cfg.beta0)?.to_dense())?;
    let pre = build_preconditioner(cfg, problem, cfg.m, InnerMode::ExactLu)?;
    let label = pre.config().label();
    let pa = preconditioned_operator_spectrum(&pre, &problem.a, label.clone())?;
    Ok(vec![("A".into(), a), (format!("M({})", cfg.beta0), m), (format!("{label}A"), pa.eigenvalues)])
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    require_exact(cfg)?;
    let problem = build_problem(cfg)?;
    dump_operator(cfg, &problem)?;
    let out = ensure_out(cfg)?;
    let sets = spectra(cfg, &problem)?;
    let mut f = CsvFile::create(&out.join("spectrum.csv"), &["operator", "re", "im"])?;
    for (name, eig) in &sets {
        let mut sorted = eig.clone();
        sorted.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        for z in &sorted {
            f.row(&[name.clone(), sci(z.re), sci(z.im)])?;
        }
        let spread = eig.iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
        println!("{name}: {} eigenvalues, max |lambda - 1| = {spread:.6e}", eig.len());
    }
    f.finish()?;
    Ok(Outcome::default())
}
