//! Multi-objective particle swarm with an external repository of
//! nondominated positions and an adaptive objective-space grid for leader
//! selection and archive pruning.
//!
//! The two variants differ only in the mutation step: MOPSO-1 resets one
//! randomly chosen coordinate uniformly inside its box, MOPSO-2 perturbs it
//! with polynomial mutation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operators::polynomial_mutation;
use super::{all_bounds, evaluate_batch, Algorithm, Evaluated, MoeaConfig, Problem, RunPoint, RunResult};
use crate::enumeration::dominates;
use crate::error::Result;
use crate::model::DamperConfiguration;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveMember {
    pub position: Vec<f64>,
    pub config: DamperConfiguration,
    pub objectives: (f64, f64),
}

/// Bounded archive of pairwise nondominated solutions.
#[derive(Debug, Clone)]
pub struct Repository {
    capacity: usize,
    divisions: usize,
    members: Vec<ArchiveMember>,
}

impl Repository {
    pub fn new(capacity: usize, divisions: usize) -> Self {
        Self {
            capacity,
            divisions,
            members: Vec::new(),
        }
    }

    pub fn members(&self) -> &[ArchiveMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Grid cell of every member. The grid spans the members' current
    /// objective ranges, so it adapts whenever the archive changes.
    fn cells(&self) -> Vec<usize> {
        let d = self.divisions;
        let range = |get: fn(&ArchiveMember) -> f64| {
            self.members
                .iter()
                .map(get)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let r1 = range(|m| m.objectives.0);
        let r2 = range(|m| m.objectives.1);
        let idx = |v: f64, (lo, hi): (f64, f64)| {
            if hi > lo {
                (((v - lo) / (hi - lo) * d as f64) as usize).min(d - 1)
            } else {
                0
            }
        };
        self.members
            .iter()
            .map(|m| idx(m.objectives.0, r1) * d + idx(m.objectives.1, r2))
            .collect()
    }

    fn occupancy(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, c) in self.cells().into_iter().enumerate() {
            map.entry(c).or_default().push(i);
        }
        map
    }

    /// Adds a candidate unless it is dominated by, or duplicates the
    /// configuration of, a current member. Members it dominates are
    /// dropped; overflow evicts a random member of the most crowded cell.
    pub fn insert<R: Rng>(&mut self, candidate: ArchiveMember, rng: &mut R) -> bool {
        if self.members.iter().any(|m| {
            m.config == candidate.config || dominates(m.objectives, candidate.objectives)
        }) {
            return false;
        }
        self.members
            .retain(|m| !dominates(candidate.objectives, m.objectives));
        self.members.push(candidate);
        if self.members.len() > self.capacity {
            let occ = self.occupancy();
            let crowded = occ
                .values()
                .fold(None::<&Vec<usize>>, |best, v| match best {
                    Some(b) if b.len() >= v.len() => Some(b),
                    _ => Some(v),
                })
                .expect("archive is not empty");
            let victim = crowded[rng.random_range(0..crowded.len())];
            self.members.remove(victim);
        }
        true
    }

    /// Roulette-wheel choice of a cell with fitness `10 / occupancy`, then a
    /// uniform choice inside the cell.
    pub fn select_leader<R: Rng>(&self, rng: &mut R) -> Option<&ArchiveMember> {
        if self.members.is_empty() {
            return None;
        }
        let occ = self.occupancy();
        let total: f64 = occ.values().map(|v| 10.0 / v.len() as f64).sum();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = occ.values().next_back().expect("nonempty");
        for v in occ.values() {
            let fit = 10.0 / v.len() as f64;
            if pick < fit {
                chosen = v;
                break;
            }
            pick -= fit;
        }
        Some(&self.members[chosen[rng.random_range(0..chosen.len())]])
    }
}

struct Particle {
    position: Vec<f64>,
    velocity: Vec<f64>,
    best_position: Vec<f64>,
    best_objectives: (f64, f64),
}

fn archive<R: Rng>(repo: &mut Repository, positions: &[Vec<f64>], evals: &[Evaluated], rng: &mut R) {
    for (x, e) in positions.iter().zip(evals) {
        if let Some(config) = &e.config {
            repo.insert(
                ArchiveMember {
                    position: x.clone(),
                    config: config.clone(),
                    objectives: e.objectives,
                },
                rng,
            );
        }
    }
}

pub(crate) fn run<P: Problem + ?Sized>(cfg: &MoeaConfig, problem: &P) -> Result<RunResult> {
    let (p, n_d) = (problem.n_positions(), problem.n_dampers());
    let bounds = all_bounds(p, n_d);
    let p_mut = cfg.effective_p_mut(n_d);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let positions: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect();
    let evals = evaluate_batch(problem, &positions)?;
    let mut repo = Repository::new(cfg.repository_capacity, cfg.grid_divisions);
    archive(&mut repo, &positions, &evals, &mut rng);
    let mut swarm: Vec<Particle> = positions
        .into_iter()
        .zip(&evals)
        .map(|(x, e)| Particle {
            velocity: vec![0.0; n_d],
            best_position: x.clone(),
            best_objectives: e.objectives,
            position: x,
        })
        .collect();

    for _ in 1..cfg.iterations {
        for particle in swarm.iter_mut() {
            let leader = repo
                .select_leader(&mut rng)
                .map(|m| m.position.clone())
                .unwrap_or_else(|| particle.best_position.clone());
            for (k, &(lo, hi)) in bounds.iter().enumerate() {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let x = particle.position[k];
                let v = cfg.w * particle.velocity[k]
                    + cfg.c1 * r1 * (particle.best_position[k] - x)
                    + cfg.c2 * r2 * (leader[k] - x);
                let vmax = hi - lo;
                let mut v = v.clamp(-vmax, vmax);
                let mut x = x + v;
                if x < lo || x > hi {
                    x = x.clamp(lo, hi);
                    v = -v;
                }
                particle.position[k] = x;
                particle.velocity[k] = v;
            }
            if rng.random::<f64>() < p_mut {
                let k = rng.random_range(0..n_d);
                let (lo, hi) = bounds[k];
                particle.position[k] = match cfg.algorithm {
                    Algorithm::Mopso2 => {
                        polynomial_mutation(particle.position[k], lo, hi, cfg.eta_m, &mut rng)
                    }
                    _ => rng.random_range(lo..=hi),
                };
            }
        }

        let positions: Vec<Vec<f64>> = swarm.iter().map(|s| s.position.clone()).collect();
        let evals = evaluate_batch(problem, &positions)?;
        archive(&mut repo, &positions, &evals, &mut rng);
        for (particle, e) in swarm.iter_mut().zip(&evals) {
            let replace = if dominates(e.objectives, particle.best_objectives) {
                true
            } else if dominates(particle.best_objectives, e.objectives) {
                false
            } else {
                rng.random::<bool>()
            };
            if replace {
                particle.best_position = particle.position.clone();
                particle.best_objectives = e.objectives;
            }
        }
    }

    let points = repo
        .members
        .iter()
        .map(|m| RunPoint {
            config: m.config.clone(),
            f1: m.objectives.0,
            f2: m.objectives.1,
        })
        .collect();
    Ok(RunResult::new(cfg, points))
}
