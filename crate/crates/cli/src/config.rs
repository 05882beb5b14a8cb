//! Flat `key = value` run configuration. Parsing is strict: unknown or
//! repeated keys are errors, so a config file always means exactly one run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mcnsfv_core::scheme::LinearSolverKind;
use mcnsfv_core::{ExperimentId, ExperimentModel, SchemeConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentId,
    pub d: usize,
    pub n: usize,
    pub dt_factor: f64,
    pub final_time: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub a: f64,
    pub mu: f64,
    pub lambda: f64,
    pub half_width: f64,
    pub sample_sizes: Vec<usize>,
    pub realisations: usize,
    pub reference_samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 means all available cores.
    pub threads: usize,
    pub linear_solver: LinearSolverKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentId::SteadyState,
            d: 2,
            n: 64,
            dt_factor: 1.0,
            final_time: 0.1,
            epsilon: 0.6,
            gamma: 1.4,
            a: 1.0,
            mu: 0.1,
            lambda: 0.0,
            half_width: 0.1,
            sample_sizes: vec![5, 10, 20, 40, 80],
            realisations: 10,
            reference_samples: 512,
            seed: 0,
            out: PathBuf::from("out"),
            threads: 0,
            linear_solver: LinearSolverKind::Auto,
        }
    }
}

pub const KEYS: [&str; 18] = [
    "experiment",
    "d",
    "n",
    "dt_factor",
    "T",
    "epsilon",
    "gamma",
    "a",
    "mu",
    "lambda",
    "half_width",
    "N",
    "M",
    "S",
    "seed",
    "out",
    "threads",
    "linear_solver",
];

fn solver_name(kind: LinearSolverKind) -> &'static str {
    match kind {
        LinearSolverKind::Auto => "auto",
        LinearSolverKind::Direct => "direct",
        LinearSolverKind::Gmres => "gmres",
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{value}`")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!(
                    "line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
            if seen.contains(&key) {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            seen.push(key);
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "experiment" => {
                self.experiment = v.parse().map_err(|_| {
                    CliError::Config(format!("`experiment`: unknown experiment `{v}`"))
                })?
            }
            "d" => self.d = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "dt_factor" => self.dt_factor = num(key, v)?,
            "T" => self.final_time = num(key, v)?,
            "epsilon" => self.epsilon = num(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "a" => self.a = num(key, v)?,
            "mu" => self.mu = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "half_width" => self.half_width = num(key, v)?,
            "N" => {
                self.sample_sizes = v
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "M" => self.realisations = num(key, v)?,
            "S" => self.reference_samples = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "threads" => self.threads = num(key, v)?,
            "linear_solver" => {
                self.linear_solver = match v {
                    "auto" => LinearSolverKind::Auto,
                    "direct" => LinearSolverKind::Direct,
                    "gmres" => LinearSolverKind::Gmres,
                    _ => {
                        return Err(CliError::Config(format!(
                            "`linear_solver`: unknown solver `{v}`"
                        )))
                    }
                }
            }
            _ => unreachable!("key list checked by the caller"),
        }
        Ok(())
    }

    /// Canonical text form; `parse(emit(c)) == c` for every valid config.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let n_list: Vec<String> = self.sample_sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "dt_factor = {:?}", self.dt_factor);
        let _ = writeln!(s, "T = {:?}", self.final_time);
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "gamma = {:?}", self.gamma);
        let _ = writeln!(s, "a = {:?}", self.a);
        let _ = writeln!(s, "mu = {:?}", self.mu);
        let _ = writeln!(s, "lambda = {:?}", self.lambda);
        let _ = writeln!(s, "half_width = {:?}", self.half_width);
        let _ = writeln!(s, "N = {}", n_list.join(","));
        let _ = writeln!(s, "M = {}", self.realisations);
        let _ = writeln!(s, "S = {}", self.reference_samples);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "linear_solver = {}", solver_name(self.linear_solver));
        s
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::Config(format!("`{key}`: {why}")));
        if !(self.epsilon > -1.0) {
            return bad("epsilon", "must satisfy -1 < epsilon");
        }
        if !(self.dt_factor > 0.0 && self.dt_factor.is_finite()) {
            return bad("dt_factor", "must be positive");
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad("T", "must be positive");
        }
        if !(self.gamma > 1.0) {
            return bad("gamma", "must exceed 1");
        }
        if !(self.a >= 0.0) {
            return bad("a", "must be nonnegative");
        }
        if !(self.mu > 0.0) {
            return bad("mu", "must be positive");
        }
        let eta = (self.d as f64 - 2.0) / self.d as f64 * self.mu + self.lambda;
        if !(eta >= 0.0) {
            return bad("lambda", "(d-2)/d mu + lambda must be nonnegative");
        }
        if !(self.half_width >= 0.0 && self.half_width < 1.0) {
            return bad("half_width", "must lie in [0, 1)");
        }
        if self.d != 2 && self.d != 3 {
            return bad("d", "must be 2 or 3");
        }
        if self.n < 2 {
            return bad("n", "must be at least 2");
        }
        if self.sample_sizes.is_empty() || self.sample_sizes[0] < 2 {
            return bad("N", "needs at least one size, each >= 2");
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("N", "must be strictly increasing");
        }
        if self.realisations == 0 {
            return bad("M", "must be at least 1");
        }
        if self.reference_samples < 2 {
            return bad("S", "must be at least 2");
        }
        Ok(())
    }

    pub fn scheme(&self) -> SchemeConfig {
        let mut s = SchemeConfig {
            epsilon: self.epsilon,
            dt_factor: self.dt_factor,
            final_time: self.final_time,
            ..SchemeConfig::default()
        };
        s.solver.linear = self.linear_solver;
        s
    }

    pub fn model(&self) -> Result<ExperimentModel, CliError> {
        let mut m = ExperimentModel::new(self.experiment, self.half_width, self.seed)
            .map_err(|e| CliError::Config(e.to_string()))?;
        m.mu = self.mu;
        m.lambda = self.lambda;
        Ok(m)
    }
}
