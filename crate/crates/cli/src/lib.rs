//! Benchmark harness for the expansion preconditioners: single solves,
//! sweeps over the degree `m` and the weight `ω`, and dense spectra,
//! written as CSV.

pub mod commands;
pub mod config;
pub mod csv_out;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{Outcome, RefusesVcycleMode};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "helmex", version, about = "Expansion preconditioners for the indefinite Helmholtz equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One preconditioned solve; writes solution.csv and history.csv.
    Solve,
    /// Iteration counts over a range of m; writes sweep_m.csv.
    SweepM,
    /// κ(EX_ω(m)A) over a range of ω; writes sweep_omega.csv.
    SweepOmega,
    /// Iterations and cost m·p for m = 1..m_max; writes tradeoff.csv.
    Tradeoff,
    /// Eigenvalues of A, M(β₀) and EX(m)A; writes spectrum.csv.
    Spectrum,
    /// κ(EX(m)A) over a range of m; writes condition.csv.
    Condition,
}

/// Command-line overrides; each mirrors a config-file key.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// key = value file applied before the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dim: Option<String>,
    #[arg(long, global = true)]
    pub k_squared: Option<String>,
    /// Cells per axis on the unit interval.
    #[arg(long, global = true)]
    pub n: Option<String>,
    #[arg(long, global = true)]
    pub ecs_angle: Option<String>,
    /// taylor | weighted | gmres-poly
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true)]
    pub m: Option<String>,
    /// `1..5`, `1:5` or `1,2,4`.
    #[arg(long, global = true)]
    pub m_range: Option<String>,
    #[arg(long, global = true)]
    pub omega: Option<String>,
    /// `start:stop:step` or a comma list.
    #[arg(long, global = true)]
    pub omega_range: Option<String>,
    #[arg(long, global = true)]
    pub beta0: Option<String>,
    /// exact | vcycle
    #[arg(long, global = true)]
    pub inner: Option<String>,
    /// rediscretized | galerkin
    #[arg(long, global = true)]
    pub coarse: Option<String>,
    /// Multigrid levels including the finest; coarsens fully when absent.
    #[arg(long, global = true)]
    pub levels: Option<String>,
    /// bicgstab | gmres
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<String>,
    #[arg(long, global = true)]
    pub max_iter: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Write the Helmholtz matrix in Matrix Market format.
    #[arg(long, global = true)]
    pub dump_operator: Option<String>,
}

impl Flags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 18] {
        [
            ("dim", &self.dim),
            ("k_squared", &self.k_squared),
            ("n", &self.n),
            ("ecs_angle", &self.ecs_angle),
            ("family", &self.family),
            ("m", &self.m),
            ("m_range", &self.m_range),
            ("omega", &self.omega),
            ("omega_range", &self.omega_range),
            ("beta0", &self.beta0),
            ("inner", &self.inner),
            ("coarse", &self.coarse),
            ("levels", &self.levels),
            ("method", &self.method),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("out", &self.out),
            ("dump_operator", &self.dump_operator),
        ]
    }

    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match command {
        Command::Solve => commands::cmd_solve(cfg),
        Command::SweepM => commands::cmd_sweep_m(cfg),
        Command::SweepOmega => commands::cmd_sweep_omega(cfg),
        Command::Tradeoff => commands::cmd_tradeoff(cfg),
        Command::Spectrum => commands::cmd_spectrum(cfg),
        Command::Condition => commands::cmd_condition(cfg),
    }
}

/// Stable identifier of an error for the first field of the stderr line.
pub fn error_code(err: &anyhow::Error) -> &'static str {
    if err.downcast_ref::<RefusesVcycleMode>().is_some() {
        return "refuses_vcycle_mode";
    }
    match err.chain().find_map(|e| e.downcast_ref::<helmex::Error>()) {
        Some(helmex::Error::InvalidSpec(_) | helmex::Error::InvalidConfig(_)) => "invalid_config",
        Some(helmex::Error::TooLarge { .. }) => "too_large",
        Some(helmex::Error::Io(_)) => "io",
        Some(_) => "solver_error",
        None if err.chain().any(|e| e.downcast_ref::<std::io::Error>().is_some()) => "io",
        None => "invalid_config",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("helmex-flags-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("run.cfg");
        std::fs::write(&file, "m = 3\ntol = 1e-4\ninner = exact\n").unwrap();
        let cli = Cli::try_parse_from(["helmex", "solve", "--config", file.to_str().unwrap(), "--m", "2"]).unwrap();
        assert_eq!(cli.command, Command::Solve);
        let cfg = cli.flags.resolve().unwrap();
        assert_eq!((cfg.m, cfg.tol), (2, 1e-4));
        assert_eq!(cfg.inner, Some(helmex::InnerMode::ExactLu));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn error_codes() {
        let e: anyhow::Error = RefusesVcycleMode.into();
        assert_eq!(error_code(&e), "refuses_vcycle_mode");
        let e: anyhow::Error = helmex::Error::TooLarge { size: 3, limit: 2 }.into();
        assert_eq!(error_code(&e.context("spectrum")), "too_large");
        let e = RunConfig::default().set("tol", "x").unwrap_err();
        assert_eq!(error_code(&e), "invalid_config");
    }
}
