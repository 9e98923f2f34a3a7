//! Real-coded evolutionary search over damper positions.
//!
//! Each of the `N_d` genes is the position of one damper, kept as a real in
//! its box `[k, P - N_d + k]` and rounded at decode time. Gene vectors that
//! do not round to a strictly increasing sequence are not simulated; they
//! receive a large penalty on both objectives instead.

pub mod mopso;
pub mod nsga2;
pub mod operators;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Evaluator, ObjectiveSet};
use crate::model::DamperConfiguration;

/// Objective value assigned to both objectives of an undecodable individual.
pub const PENALTY: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nsga2,
    Mopso1,
    Mopso2,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Nsga2 => "NSGA-II",
            Self::Mopso1 => "MOPSO-1",
            Self::Mopso2 => "MOPSO-2",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nsga2" | "nsgaii" => Ok(Self::Nsga2),
            "mopso1" => Ok(Self::Mopso1),
            "mopso2" => Ok(Self::Mopso2),
            other => Err(Error::config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoeaConfig {
    pub algorithm: Algorithm,
    /// Population or swarm size.
    pub population: usize,
    pub iterations: usize,
    pub p_c: f64,
    pub eta_c: f64,
    /// Mutation probability; `None` means `1 / N_d` for NSGA-II and 0.05
    /// for the swarm variants.
    pub p_mut: Option<f64>,
    pub eta_m: f64,
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
    pub repository_capacity: usize,
    pub grid_divisions: usize,
    pub seed: u64,
}

impl Default for MoeaConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Nsga2,
            population: 40,
            iterations: 200,
            p_c: 0.9,
            eta_c: 15.0,
            p_mut: None,
            eta_m: 7.0,
            w: 0.4,
            c1: 2.0,
            c2: 2.0,
            repository_capacity: 100,
            grid_divisions: 30,
            seed: 1,
        }
    }
}

impl MoeaConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn effective_p_mut(&self, n_dampers: usize) -> f64 {
        match (self.p_mut, self.algorithm) {
            (Some(p), _) => p,
            (None, Algorithm::Nsga2) => 1.0 / n_dampers.max(1) as f64,
            (None, _) => 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        prob("p_c", self.p_c)?;
        if let Some(p) = self.p_mut {
            prob("p_mut", p)?;
        }
        for (name, v) in [("eta_c", self.eta_c), ("eta_m", self.eta_m)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("w", self.w), ("c1", self.c1), ("c2", self.c2)] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        if self.population < 2 {
            return Err(Error::config("population must be at least 2"));
        }
        if self.repository_capacity < 2 || self.grid_divisions < 2 {
            return Err(Error::config(
                "repository_capacity and grid_divisions must be at least 2",
            ));
        }
        Ok(())
    }
}

/// Box for gene `k` (1-based): `[k, P - N_d + k]`.
pub fn bounds(p: usize, n_d: usize, k: usize) -> (f64, f64) {
    debug_assert!(1 <= k && k <= n_d && n_d <= p);
    (k as f64, (p - n_d + k) as f64)
}

pub fn all_bounds(p: usize, n_d: usize) -> Vec<(f64, f64)> {
    (1..=n_d).map(|k| bounds(p, n_d, k)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Config(DamperConfiguration),
    Penalty,
}

/// Rounds (half away from zero) and clamps each gene into its box; yields a
/// configuration only when the result is strictly increasing.
pub fn decode(genes: &[f64], p: usize) -> Decoded {
    let n_d = genes.len();
    if n_d > p {
        return Decoded::Penalty;
    }
    let mut positions = Vec::with_capacity(n_d);
    for (i, g) in genes.iter().enumerate() {
        let (lo, hi) = bounds(p, n_d, i + 1);
        let r = if g.is_finite() { g.round().clamp(lo, hi) } else { lo };
        let pos = r as usize;
        if positions.last().is_some_and(|&prev| prev >= pos) {
            return Decoded::Penalty;
        }
        positions.push(pos);
    }
    match DamperConfiguration::new(positions) {
        Ok(c) => Decoded::Config(c),
        Err(_) => Decoded::Penalty,
    }
}

/// What a search algorithm is allowed to ask about a placement problem.
pub trait Problem: Sync {
    fn n_positions(&self) -> usize;
    fn n_dampers(&self) -> usize;
    fn evaluate(&self, config: &DamperConfiguration) -> Result<(f64, f64)>;
}

/// A structural evaluator restricted to one objective set and damper count.
#[derive(Debug, Clone, Copy)]
pub struct PlacementProblem<'a> {
    pub evaluator: &'a Evaluator,
    pub set: ObjectiveSet,
    pub n_dampers: usize,
}

impl Problem for PlacementProblem<'_> {
    fn n_positions(&self) -> usize {
        self.evaluator.n_positions()
    }

    fn n_dampers(&self) -> usize {
        self.n_dampers
    }

    fn evaluate(&self, config: &DamperConfiguration) -> Result<(f64, f64)> {
        Ok(self.evaluator.evaluate_objectives(config, self.set)?.pair())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Evaluated {
    pub config: Option<DamperConfiguration>,
    pub objectives: (f64, f64),
}

/// Decodes and evaluates a batch in parallel. Consumes no randomness, so
/// results do not depend on the worker count.
pub(crate) fn evaluate_batch<P: Problem + ?Sized>(
    problem: &P,
    genes: &[Vec<f64>],
) -> Result<Vec<Evaluated>> {
    let p = problem.n_positions();
    genes
        .par_iter()
        .map(|g| match decode(g, p) {
            Decoded::Config(c) => {
                let objectives = problem.evaluate(&c)?;
                Ok(Evaluated {
                    config: Some(c),
                    objectives,
                })
            }
            Decoded::Penalty => Ok(Evaluated {
                config: None,
                objectives: (PENALTY, PENALTY),
            }),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPoint {
    pub config: DamperConfiguration,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub config: MoeaConfig,
    pub seed: u64,
    /// Function evaluations charged to the run, `N_p * N_iter`.
    pub n_fe: u64,
    pub points: Vec<RunPoint>,
}

impl RunResult {
    pub(crate) fn new(cfg: &MoeaConfig, mut points: Vec<RunPoint>) -> Self {
        points.sort_by(|a, b| {
            a.f1.total_cmp(&b.f1)
                .then(a.f2.total_cmp(&b.f2))
                .then_with(|| a.config.cmp(&b.config))
        });
        points.dedup_by(|a, b| a.config == b.config);
        Self {
            algorithm: cfg.algorithm,
            config: cfg.clone(),
            seed: cfg.seed,
            n_fe: (cfg.population * cfg.iterations) as u64,
            points,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }
}

/// Runs the algorithm named in `cfg`.
pub fn run<P: Problem + ?Sized>(cfg: &MoeaConfig, problem: &P) -> Result<RunResult> {
    cfg.validate()?;
    if problem.n_dampers() == 0 || problem.n_dampers() > problem.n_positions() {
        return Err(Error::config(format!(
            "cannot place {} dampers on {} positions",
            problem.n_dampers(),
            problem.n_positions()
        )));
    }
    match cfg.algorithm {
        Algorithm::Nsga2 => nsga2::run(cfg, problem),
        Algorithm::Mopso1 | Algorithm::Mopso2 => mopso::run(cfg, problem),
    }
}
