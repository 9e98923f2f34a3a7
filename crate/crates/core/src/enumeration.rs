//! Exhaustive search over every damper configuration and exact Pareto-front
//! extraction.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{AccelerationKind, Evaluator, ObjectiveSet, ObjectiveVector, ResponseSummary};
use crate::model::DamperConfiguration;

/// Number of configurations handed to one worker at a time. Fixed so that
/// chunk boundaries do not depend on the worker count.
pub const CHUNK_SIZE: u64 = 2048;

/// Binomial coefficient C(p, n_d), exact.
pub fn count_configurations(p: usize, n_d: usize) -> Result<u64> {
    if n_d > p {
        return Err(Error::invalid(format!(
            "cannot place {n_d} dampers on {p} positions"
        )));
    }
    let k = n_d.min(p - n_d) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (p as u128 - i) / (i + 1);
    }
    u64::try_from(acc).map_err(|_| Error::invalid("configuration count overflows u64"))
}

/// Lexicographic stream of strictly increasing `n_d`-tuples over `1..=p`.
#[derive(Debug, Clone)]
pub struct Combinations {
    p: usize,
    current: Option<Vec<usize>>,
    remaining: u64,
}

impl Combinations {
    /// Stream starting at lexicographic rank `start` (0-based).
    pub fn starting_at(p: usize, n_d: usize, start: u64) -> Result<Self> {
        let total = count_configurations(p, n_d)?;
        if start >= total {
            return Ok(Self {
                p,
                current: None,
                remaining: 0,
            });
        }
        Ok(Self {
            p,
            current: Some(unrank(p, n_d, start)),
            remaining: total - start,
        })
    }
}

/// The combination at lexicographic `rank` (0-based). `rank` must be below
/// C(p, n_d).
fn unrank(p: usize, n_d: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(n_d);
    let mut next = 1;
    for slot in 0..n_d {
        let left = n_d - slot - 1;
        loop {
            // combinations that start with `next` in this slot
            let block = count_configurations(p - next, left).unwrap_or(0);
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

impl Iterator for Combinations {
    type Item = DamperConfiguration;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.current.as_mut()?;
        let item = DamperConfiguration::new(cur.clone()).expect("combinations are increasing");
        self.remaining -= 1;
        if self.remaining == 0 {
            self.current = None;
            return Some(item);
        }
        let k = cur.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if cur[i] < self.p - (k - 1 - i) {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

pub fn all_configurations(p: usize, n_d: usize) -> Result<Combinations> {
    Combinations::starting_at(p, n_d, 0)
}

/// `a` dominates `b` under minimisation.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint<T> {
    pub objectives: ObjectiveVector,
    /// Every payload achieving exactly these objective values, sorted.
    pub payloads: Vec<T>,
}

/// Nondominated points sorted by ascending `f1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront<T> {
    pub points: Vec<FrontPoint<T>>,
}

impl<T> ParetoFront<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| p.objectives.pair()).collect()
    }

    /// `true` when some front point dominates `candidate`.
    pub fn dominates_point(&self, candidate: (f64, f64)) -> bool {
        self.points.iter().any(|p| dominates(p.objectives.pair(), candidate))
    }
}

/// Keeps the nondominated subset, merging exactly equal objective pairs
/// into one front point.
pub fn pareto_filter<T, I>(items: I) -> Result<ParetoFront<T>>
where
    T: Ord,
    I: IntoIterator<Item = (ObjectiveVector, T)>,
{
    let mut items: Vec<(ObjectiveVector, T)> = items.into_iter().collect();
    if items.is_empty() {
        return Err(Error::invalid("cannot extract a front from an empty set"));
    }
    if items.iter().any(|(o, _)| !(o.f1.is_finite() && o.f2.is_finite())) {
        return Err(Error::invalid("objective values must be finite"));
    }
    items.sort_by(|(a, pa), (b, pb)| {
        a.f1.total_cmp(&b.f1)
            .then(a.f2.total_cmp(&b.f2))
            .then_with(|| pa.cmp(pb))
    });
    let mut points: Vec<FrontPoint<T>> = Vec::new();
    let mut best_f2 = f64::INFINITY;
    let mut last: Option<(f64, f64)> = None;
    for (obj, payload) in items {
        let pair = obj.pair();
        if last == Some(pair) {
            // same group as the previous item
            if let Some(p) = points.last_mut().filter(|p| p.objectives.pair() == pair) {
                p.payloads.push(payload);
            }
            continue;
        }
        last = Some(pair);
        if obj.f2 < best_f2 {
            best_f2 = obj.f2;
            points.push(FrontPoint {
                objectives: obj,
                payloads: vec![payload],
            });
        }
    }
    Ok(ParetoFront { points })
}

/// Every configuration with its objective vector.
#[derive(Debug, Clone)]
pub struct SolutionSpace {
    pub set: ObjectiveSet,
    pub n_floors: usize,
    pub n_dampers: usize,
    pub entries: Vec<(DamperConfiguration, ObjectiveVector)>,
}

impl SolutionSpace {
    pub fn front(&self) -> Result<ParetoFront<DamperConfiguration>> {
        pareto_filter(self.entries.iter().map(|(c, o)| (*o, c.clone())))
    }

    /// `f1,f2,config` rows in enumeration order.
    pub fn write_scatter_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "f1,f2,config")?;
        for (c, o) in &self.entries {
            writeln!(out, "{:?},{:?},{c}", o.f1, o.f2)?;
        }
        Ok(())
    }
}

/// Peak responses of every configuration; one enumeration serves all three
/// objective sets.
#[derive(Debug, Clone)]
pub struct SummarySpace {
    pub n_floors: usize,
    pub n_dampers: usize,
    pub entries: Vec<(DamperConfiguration, ResponseSummary)>,
    pub elapsed: Duration,
}

impl SummarySpace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mean_evaluation_time(&self) -> Duration {
        if self.entries.is_empty() {
            return Duration::ZERO;
        }
        self.elapsed / self.entries.len() as u32
    }

    pub fn solution_space(&self, set: ObjectiveSet, accel: AccelerationKind) -> SolutionSpace {
        SolutionSpace {
            set,
            n_floors: self.n_floors,
            n_dampers: self.n_dampers,
            entries: self
                .entries
                .iter()
                .map(|(c, s)| (c.clone(), s.objectives(set, accel)))
                .collect(),
        }
    }
}

/// Runs `f` on a pool of `jobs` threads (`0` means all available cores).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Summaries of every configuration of `n_d` dampers, in rank order.
/// Only the canonical member of each mirror pair is integrated; chunks are
/// solved in parallel on the current rayon pool.
pub fn enumerate_summaries(evaluator: &Evaluator, n_d: usize) -> Result<SummarySpace> {
    let p = evaluator.n_positions();
    let total = count_configurations(p, n_d)?;
    let start = Instant::now();
    let chunks: Vec<u64> = (0..total.div_ceil(CHUNK_SIZE)).collect();
    let parts: Vec<Result<Vec<(DamperConfiguration, Option<ResponseSummary>)>>> = chunks
        .par_iter()
        .map(|&c| {
            let first = c * CHUNK_SIZE;
            let len = CHUNK_SIZE.min(total - first) as usize;
            Combinations::starting_at(p, n_d, first)?
                .take(len)
                .map(|cfg| {
                    if evaluator.canonical(&cfg) == cfg {
                        evaluator.solve(&cfg).map(|s| (cfg, Some(s)))
                    } else {
                        Ok((cfg, None))
                    }
                })
                .collect()
        })
        .collect();
    let mut solved = Vec::with_capacity(total as usize);
    for part in parts {
        solved.extend(part?);
    }
    let canonical: HashMap<&DamperConfiguration, ResponseSummary> =
        solved.iter().filter_map(|(c, s)| s.map(|s| (c, s))).collect();
    let entries = solved
        .iter()
        .map(|(c, s)| {
            let s = match s {
                Some(s) => *s,
                None => canonical[&evaluator.canonical(c)].mirrored(),
            };
            (c.clone(), s)
        })
        .collect();
    Ok(SummarySpace {
        n_floors: evaluator.n_floors(),
        n_dampers: n_d,
        entries,
        elapsed: start.elapsed(),
    })
}

/// Solution space and exact front for one objective set.
pub fn exhaustive_front(
    evaluator: &Evaluator,
    set: ObjectiveSet,
    n_d: usize,
) -> Result<(SolutionSpace, ParetoFront<DamperConfiguration>, SummarySpace)> {
    let summaries = enumerate_summaries(evaluator, n_d)?;
    let space = summaries.solution_space(set, evaluator.acceleration_kind());
    let front = space.front()?;
    Ok((space, front, summaries))
}

/// `f1,f2,config,front_index` rows, one per achieving configuration;
/// `front_index` is 1-based in ascending-`f1` order.
pub fn write_front_csv<W: Write>(front: &ParetoFront<DamperConfiguration>, mut out: W) -> Result<()> {
    writeln!(out, "f1,f2,config,front_index")?;
    for (k, p) in front.points.iter().enumerate() {
        for c in &p.payloads {
            writeln!(out, "{:?},{:?},{c},{}", p.objectives.f1, p.objectives.f2, k + 1)?;
        }
    }
    Ok(())
}

pub fn read_front_csv<R: BufRead>(
    source: R,
    set: ObjectiveSet,
) -> Result<ParetoFront<DamperConfiguration>> {
    let mut points: Vec<FrontPoint<DamperConfiguration>> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if lineno == 1 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::parse(lineno, "expected f1,f2,config,front_index"));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("'{s}' is not a number")))
        };
        let (f1, f2) = (num(cols[0])?, num(cols[1])?);
        let config: DamperConfiguration = cols[2]
            .parse()
            .map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
        let k: usize = cols[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, "bad front index"))?;
        if k == points.len() + 1 {
            points.push(FrontPoint {
                objectives: ObjectiveVector { f1, f2, set },
                payloads: vec![config],
            });
        } else if k == points.len() && points[k - 1].objectives.pair() == (f1, f2) {
            points[k - 1].payloads.push(config);
        } else {
            return Err(Error::parse(lineno, "front indices must be contiguous"));
        }
    }
    if points.is_empty() {
        return Err(Error::invalid("front file has no points"));
    }
    Ok(ParetoFront { points })
}
