//! Run configuration: defaults, `key = value` files and flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use helmex::multigrid::MultigridOptions;
use helmex::{ExpansionConfig, Family, InnerMode, Method, ProblemSpec, SolverConfig};

/// Coarse-level operator of the V-cycle inner solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coarse {
    #[default]
    Rediscretized,
    Galerkin,
}

impl FromStr for Coarse {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rediscretized" | "rediscretize" => Ok(Self::Rediscretized),
            "galerkin" => Ok(Self::Galerkin),
            other => bail!("unknown coarse operator '{other}'"),
        }
    }
}

impl fmt::Display for Coarse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rediscretized => "rediscretized",
            Self::Galerkin => "galerkin",
        })
    }
}

/// Inclusive integer range `a..b`, `a:b` or a comma list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MRange(pub Vec<usize>);

impl FromStr for MRange {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bounds = s.split_once("..=").or_else(|| s.split_once("..")).or_else(|| s.split_once(':'));
        let values: Vec<usize> = match bounds {
            Some((a, b)) => {
                let a: usize = a.trim().parse().with_context(|| format!("bad m-range start in '{s}'"))?;
                let b: usize = b.trim().parse().with_context(|| format!("bad m-range end in '{s}'"))?;
                (a..=b).collect()
            }
            None => s
                .split(',')
                .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad m value '{v}'")))
                .collect::<Result<_>>()?,
        };
        if values.is_empty() || values.contains(&0) {
            bail!("m-range '{s}' must be non-empty with m >= 1");
        }
        Ok(Self(values))
    }
}

/// `start:stop:step` (inclusive) or a comma list of weights.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaRange(pub Vec<f64>);

impl FromStr for OmegaRange {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |v: &str| v.trim().parse::<f64>().with_context(|| format!("bad omega value '{v}'"));
        let values = match parts.as_slice() {
            [start, stop, step] => {
                let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
                if step.is_nan() || step <= 0.0 || stop < start {
                    bail!("omega-range '{s}' needs step > 0 and stop >= start");
                }
                // index-based so the grid points are exact multiples of the step
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=count).map(|i| start + i as f64 * step).collect()
            }
            [list] => list.split(',').map(num).collect::<Result<_>>()?,
            _ => bail!("omega-range '{s}' must be start:stop:step or a comma list"),
        };
        Ok(Self(values))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub k_squared: f64,
    pub n: usize,
    pub ecs_angle: f64,
    pub family: Family,
    pub m: usize,
    pub m_range: Option<MRange>,
    pub omega: f64,
    pub omega_range: Option<OmegaRange>,
    pub beta0: f64,
    /// `None` means the command's default (V-cycle, or exact for dense analysis).
    pub inner: Option<InnerMode>,
    pub coarse: Coarse,
    pub levels: Option<usize>,
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub out: PathBuf,
    pub dump_operator: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            k_squared: 2.0e4,
            n: 256,
            ecs_angle: std::f64::consts::FRAC_PI_6,
            family: Family::Taylor,
            m: 1,
            m_range: None,
            omega: 1.0,
            omega_range: None,
            beta0: 0.6,
            inner: None,
            coarse: Coarse::Rediscretized,
            levels: None,
            method: Method::BiCgStab,
            tol: 1e-8,
            max_iter: 1000,
            out: PathBuf::from("."),
            dump_operator: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::default();
        cfg.merge_str(&text).with_context(|| format!("in {}", path.display()))?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value, got '{line}'", lineno + 1);
            };
            self.set(key, value).with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(())
    }

    /// Sets one key. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let key = key.trim().replace('-', "_").to_ascii_lowercase();
        let num = |v: &str| v.parse::<f64>().with_context(|| format!("{key}: '{v}' is not a number"));
        let int = |v: &str| v.parse::<usize>().with_context(|| format!("{key}: '{v}' is not a non-negative integer"));
        match key.as_str() {
            "dim" => self.dim = int(value)?,
            "k_squared" | "k2" => self.k_squared = num(value)?,
            "n" => self.n = int(value)?,
            "ecs_angle" => self.ecs_angle = num(value)?,
            "family" => self.family = value.parse()?,
            "m" => self.m = int(value)?,
            "m_range" => self.m_range = Some(value.parse()?),
            "omega" => self.omega = num(value)?,
            "omega_range" => self.omega_range = Some(value.parse()?),
            "beta0" => self.beta0 = num(value)?,
            "inner" => self.inner = Some(value.parse()?),
            "coarse" => self.coarse = value.parse()?,
            "levels" => self.levels = Some(int(value)?),
            "method" => self.method = value.parse()?,
            "tol" => self.tol = num(value)?,
            "max_iter" => self.max_iter = int(value)?,
            "out" => self.out = PathBuf::from(value),
            "dump_operator" => self.dump_operator = Some(PathBuf::from(value)),
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec { ecs_angle: self.ecs_angle, ..ProblemSpec::new(self.dim, self.k_squared, self.n) }
    }

    pub fn inner_mode(&self) -> InnerMode {
        self.inner.unwrap_or(InnerMode::VCycle)
    }

    pub fn expansion(&self, m: usize) -> ExpansionConfig {
        ExpansionConfig { family: self.family, m, omega: self.omega, beta0: self.beta0, k_squared: self.k_squared }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig::new(self.method, self.tol, self.max_iter)
    }

    pub fn multigrid(&self) -> MultigridOptions {
        let base = MultigridOptions { levels: self.levels, ..MultigridOptions::v11(self.dim) };
        match self.coarse {
            Coarse::Rediscretized => base.rediscretized(self.k_squared, self.beta0),
            Coarse::Galerkin => base,
        }
    }

    /// The requested m values, or `fallback` when none were given.
    pub fn ms(&self, fallback: std::ops::RangeInclusive<usize>) -> Vec<usize> {
        self.m_range.as_ref().map(|r| r.0.clone()).unwrap_or_else(|| fallback.collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.problem_spec().validate()?;
        self.expansion(self.m).validate()?;
        self.solver().validate()?;
        if self.max_iter == 0 {
            bail!("max_iter must be at least 1");
        }
        if self.levels == Some(0) {
            bail!("levels must be at least 1");
        }
        Ok(())
    }
}
