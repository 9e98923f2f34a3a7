//! Elitist nondominated sorting GA with crowding-distance niching.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operators::{polynomial_mutation, sbx_crossover};
use super::{all_bounds, evaluate_batch, Evaluated, MoeaConfig, Problem, RunPoint, RunResult};
use crate::enumeration::dominates;
use crate::error::Result;

/// Fronts of mutually nondominated indices, best first.
pub fn fast_nondominated_sort(objs: &[(f64, f64)]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    let mut fronts = vec![Vec::new()];
    for p in 0..n {
        for q in 0..n {
            if dominates(objs[p], objs[q]) {
                dominated_by[p].push(q);
            } else if dominates(objs[q], objs[p]) {
                counts[p] += 1;
            }
        }
        if counts[p] == 0 {
            fronts[0].push(p);
        }
    }
    let mut i = 0;
    while !fronts[i].is_empty() {
        let mut next = Vec::new();
        for &p in &fronts[i] {
            for &q in &dominated_by[p] {
                counts[q] -= 1;
                if counts[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(next);
        i += 1;
    }
    fronts.pop();
    fronts
}

/// Crowding distance of each member of `front` (same order as `front`).
pub fn crowding_distance(objs: &[(f64, f64)], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for axis in 0..2 {
        let val = |i: usize| if axis == 0 { objs[front[i]].0 } else { objs[front[i]].1 };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| val(a).total_cmp(&val(b)).then(a.cmp(&b)));
        let (lo, hi) = (val(order[0]), val(order[n - 1]));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..n - 1 {
                dist[order[w]] += (val(order[w + 1]) - val(order[w - 1])) / (hi - lo);
            }
        }
    }
    dist
}

struct Ranked {
    rank: Vec<usize>,
    crowding: Vec<f64>,
}

fn rank_population(objs: &[(f64, f64)]) -> (Vec<Vec<usize>>, Ranked) {
    let fronts = fast_nondominated_sort(objs);
    let mut rank = vec![0; objs.len()];
    let mut crowding = vec![0.0; objs.len()];
    for (r, front) in fronts.iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distance(objs, front)) {
            rank[i] = r;
            crowding[i] = d;
        }
    }
    (fronts, Ranked { rank, crowding })
}

fn tournament<R: Rng>(ranked: &Ranked, rng: &mut R) -> usize {
    let n = ranked.rank.len();
    let a = rng.random_range(0..n);
    let b = rng.random_range(0..n);
    let by_rank = ranked.rank[a].cmp(&ranked.rank[b]);
    let by_crowd = ranked.crowding[b].total_cmp(&ranked.crowding[a]);
    match by_rank.then(by_crowd) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if rng.random::<bool>() {
                a
            } else {
                b
            }
        }
    }
}

pub(crate) fn run<P: Problem + ?Sized>(cfg: &MoeaConfig, problem: &P) -> Result<RunResult> {
    let (p, n_d) = (problem.n_positions(), problem.n_dampers());
    let bounds = all_bounds(p, n_d);
    let p_mut = cfg.effective_p_mut(n_d);
    let n_p = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut genes: Vec<Vec<f64>> = (0..n_p)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect();
    let mut evals: Vec<Evaluated> = evaluate_batch(problem, &genes)?;

    // The initial population is the first of `iterations` evaluation rounds.
    for _ in 1..cfg.iterations {
        let objs: Vec<(f64, f64)> = evals.iter().map(|e| e.objectives).collect();
        let (_, ranked) = rank_population(&objs);

        let mut offspring = Vec::with_capacity(n_p + 1);
        while offspring.len() < n_p {
            let a = tournament(&ranked, &mut rng);
            let b = tournament(&ranked, &mut rng);
            let (c1, c2) = sbx_crossover(&genes[a], &genes[b], &bounds, cfg.eta_c, cfg.p_c, &mut rng);
            for mut child in [c1, c2] {
                for (g, &(lo, hi)) in child.iter_mut().zip(&bounds) {
                    if rng.random::<f64>() < p_mut {
                        *g = polynomial_mutation(*g, lo, hi, cfg.eta_m, &mut rng);
                    }
                }
                offspring.push(child);
            }
        }
        offspring.truncate(n_p);
        let off_evals = evaluate_batch(problem, &offspring)?;

        genes.extend(offspring);
        evals.extend(off_evals);
        let objs: Vec<(f64, f64)> = evals.iter().map(|e| e.objectives).collect();
        let (fronts, _) = rank_population(&objs);
        let mut keep: Vec<usize> = Vec::with_capacity(n_p);
        for front in fronts {
            if keep.len() + front.len() <= n_p {
                keep.extend(front);
            } else {
                let d = crowding_distance(&objs, &front);
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&x, &y| d[y].total_cmp(&d[x]).then(front[x].cmp(&front[y])));
                keep.extend(order.into_iter().take(n_p - keep.len()).map(|i| front[i]));
            }
            if keep.len() == n_p {
                break;
            }
        }
        genes = keep.iter().map(|&i| genes[i].clone()).collect();
        evals = keep.iter().map(|&i| evals[i].clone()).collect();
    }

    let objs: Vec<(f64, f64)> = evals.iter().map(|e| e.objectives).collect();
    let fronts = fast_nondominated_sort(&objs);
    let points = fronts
        .first()
        .into_iter()
        .flatten()
        .filter_map(|&i| {
            evals[i].config.as_ref().map(|c| RunPoint {
                config: c.clone(),
                f1: evals[i].objectives.0,
                f2: evals[i].objectives.1,
            })
        })
        .collect();
    Ok(RunResult::new(cfg, points))
}
