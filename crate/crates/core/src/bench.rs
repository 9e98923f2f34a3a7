//! Success-rate benchmarking of the evolutionary searches against the
//! exhaustive front.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumeration::{all_configurations, count_configurations, pareto_filter, ParetoFront};
use crate::error::{Error, Result};
use crate::metrics::{ObjectiveSet, ObjectiveVector};
use crate::model::{position_count, DamperConfiguration};
use crate::moea::{self, MoeaConfig, Problem};

/// Relative tolerance for matching a returned objective pair to a front point.
pub const HIT_TOLERANCE: f64 = 1e-9;

/// Identifies the optimisation problem an oracle front belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemContext {
    pub n_floors: usize,
    pub n_dampers: usize,
    pub set: ObjectiveSet,
}

impl ProblemContext {
    /// Size of the solution space, `C(3 N_f - 2, N_d)`.
    pub fn space_size(&self) -> Result<u64> {
        count_configurations(position_count(self.n_floors), self.n_dampers)
    }
}

/// Exact front of a problem, points in ascending-`f1` order.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub context: ProblemContext,
    pub front: ParetoFront<DamperConfiguration>,
}

impl Oracle {
    pub fn new(context: ProblemContext, front: ParetoFront<DamperConfiguration>) -> Result<Self> {
        if front.is_empty() {
            return Err(Error::config("oracle front is empty"));
        }
        if let Some(p) = front.points.iter().find(|p| p.objectives.set != context.set) {
            return Err(Error::config(format!(
                "oracle front holds {} objectives, expected {}",
                p.objectives.set, context.set
            )));
        }
        Ok(Self { context, front })
    }
}

/// What is being benchmarked.
#[derive(Debug, Clone, PartialEq)]
pub enum Contender {
    Moea(MoeaConfig),
    /// Full enumeration treated as an algorithm; every run evaluates the
    /// whole space once.
    Exhaustive,
}

impl Contender {
    pub fn label(&self) -> String {
        match self {
            Self::Moea(cfg) => cfg.algorithm.to_string(),
            Self::Exhaustive => "exhaustive".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub algorithm: String,
    pub n_p: u64,
    pub n_iter: u64,
    pub n_r: usize,
    /// Effective mutation probability; absent for the exhaustive search.
    pub p_mut: Option<f64>,
    /// Rendered mutation setting, e.g. `1/N_d` or `0.05`.
    pub p_mut_label: String,
    pub space_size: u64,
    pub ce: f64,
    pub seeds: Vec<u64>,
    /// Runs that hit each front point, in front order.
    pub success_counts: Vec<usize>,
    /// `hits[r][k]`: run `r` returned front point `k`.
    pub hits: Vec<Vec<bool>>,
}

impl BenchmarkReport {
    pub fn front_size(&self) -> usize {
        self.success_counts.len()
    }

    /// `SR(k)` as `"N_k/N_r"`, `k` 1-based.
    pub fn sr_text(&self, k: usize) -> String {
        format!("{}/{}", self.success_counts[k - 1], self.n_r)
    }

    pub fn sr(&self, k: usize) -> f64 {
        self.success_counts[k - 1] as f64 / self.n_r as f64
    }
}

/// `N_p * N_iter * N_r / S`.
pub fn computational_effort(n_p: u64, n_iter: u64, n_r: usize, space_size: u64) -> f64 {
    (n_p as f64 * n_iter as f64 * n_r as f64) / space_size as f64
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= HIT_TOLERANCE * a.abs().max(b.abs())
}

/// Which front points appear among `returned`.
pub fn hit_vector(front: &[(f64, f64)], returned: &[(f64, f64)]) -> Vec<bool> {
    front
        .iter()
        .map(|&(f1, f2)| returned.iter().any(|&(g1, g2)| close(f1, g1) && close(f2, g2)))
        .collect()
}

fn check_context<P: Problem + ?Sized>(oracle: &Oracle, context: &ProblemContext, problem: &P) -> Result<()> {
    if oracle.context != *context {
        return Err(Error::config(format!(
            "oracle was computed for N_f={}, N_d={}, {} but the problem is N_f={}, N_d={}, {}",
            oracle.context.n_floors,
            oracle.context.n_dampers,
            oracle.context.set,
            context.n_floors,
            context.n_dampers,
            context.set
        )));
    }
    if problem.n_positions() != position_count(context.n_floors) || problem.n_dampers() != context.n_dampers {
        return Err(Error::config(format!(
            "problem has {} positions and {} dampers, inconsistent with N_f={}, N_d={}",
            problem.n_positions(),
            problem.n_dampers(),
            context.n_floors,
            context.n_dampers
        )));
    }
    Ok(())
}

fn exhaustive_pairs<P: Problem + ?Sized>(problem: &P, set: ObjectiveSet) -> Result<Vec<(f64, f64)>> {
    let configs: Vec<DamperConfiguration> =
        all_configurations(problem.n_positions(), problem.n_dampers())?.collect();
    let items = configs
        .into_par_iter()
        .map(|c| {
            let (f1, f2) = problem.evaluate(&c)?;
            Ok((ObjectiveVector { f1, f2, set }, c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pareto_filter(items)?.pairs())
}

/// Runs `runs` trials with seeds `base_seed + 1 ..= base_seed + runs` and
/// scores each against the oracle front.
pub fn run_benchmark<P: Problem + ?Sized>(
    contender: &Contender,
    runs: usize,
    base_seed: u64,
    oracle: &Oracle,
    context: &ProblemContext,
    problem: &P,
) -> Result<BenchmarkReport> {
    check_context(oracle, context, problem)?;
    if runs == 0 {
        return Err(Error::config("a benchmark needs at least one run"));
    }
    let space_size = context.space_size()?;
    let front = oracle.front.pairs();
    let seeds: Vec<u64> = (1..=runs as u64).map(|r| base_seed + r).collect();

    let (hits, n_p, n_iter, p_mut, p_mut_label) = match contender {
        Contender::Moea(cfg) => {
            cfg.validate()?;
            let hits = seeds
                .par_iter()
                .map(|&seed| {
                    let run_cfg = MoeaConfig { seed, ..cfg.clone() };
                    let result = moea::run(&run_cfg, problem)?;
                    let got: Vec<(f64, f64)> = result.points.iter().map(|p| (p.f1, p.f2)).collect();
                    Ok(hit_vector(&front, &got))
                })
                .collect::<Result<Vec<_>>>()?;
            let p_mut = cfg.effective_p_mut(context.n_dampers);
            let label = match cfg.p_mut {
                None if cfg.algorithm == moea::Algorithm::Nsga2 => "1/N_d".to_string(),
                _ => format!("{p_mut}"),
            };
            (hits, cfg.population as u64, cfg.iterations as u64, Some(p_mut), label)
        }
        Contender::Exhaustive => {
            // seed-independent, so one sweep serves every run
            let got = exhaustive_pairs(problem, context.set)?;
            let row = hit_vector(&front, &got);
            (vec![row; runs], space_size, 1, None, "-".to_string())
        }
    };

    let success_counts = (0..front.len())
        .map(|k| hits.iter().filter(|row| row[k]).count())
        .collect();
    Ok(BenchmarkReport {
        algorithm: contender.label(),
        n_p,
        n_iter,
        n_r: runs,
        p_mut,
        p_mut_label,
        space_size,
        ce: computational_effort(n_p, n_iter, runs, space_size),
        seeds,
        success_counts,
        hits,
    })
}

/// Rendered comparison of several reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub csv: String,
    pub text: String,
    /// Reports were scored against fronts of different sizes.
    pub front_size_mismatch: bool,
}

/// One row per report: algorithm, sizes, `p_mut`, CE and `SR(1..K)`.
/// Rows with fewer front points are padded.
pub fn compare_table(reports: &[BenchmarkReport]) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(Error::invalid("nothing to tabulate"));
    }
    let k_max = reports.iter().map(|r| r.front_size()).max().unwrap_or(0);
    let mismatch = reports.iter().any(|r| r.front_size() != k_max);

    let mut header: Vec<String> = ["algorithm", "N_p", "N_iter", "N_r", "p_mut", "CE"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=k_max).map(|k| format!("SR({k})")));
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![
                r.algorithm.clone(),
                r.n_p.to_string(),
                r.n_iter.to_string(),
                r.n_r.to_string(),
                r.p_mut_label.clone(),
                format!("{:.3}", r.ce),
            ];
            row.extend((1..=k_max).map(|k| {
                if k <= r.front_size() {
                    r.sr_text(k)
                } else {
                    "-".to_string()
                }
            }));
            row
        })
        .collect();

    let mut csv = header.join(",");
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.join(","));
        csv.push('\n');
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for row in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        let _ = writeln!(text, "{}", cells.join("  ").trim_end());
    }
    if mismatch {
        let sizes: Vec<String> = reports.iter().map(|r| r.front_size().to_string()).collect();
        let _ = writeln!(text, "warning: rows scored against fronts of different sizes ({})", sizes.join(", "));
    }
    Ok(ComparisonTable {
        csv,
        text,
        front_size_mismatch: mismatch,
    })
}

/// Pretty JSON of the full reports, hit matrices included.
pub fn reports_to_json(reports: &[BenchmarkReport]) -> Result<String> {
    serde_json::to_string_pretty(reports).map_err(|e| Error::config(e.to_string()))
}
