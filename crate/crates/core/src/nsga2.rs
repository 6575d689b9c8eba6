//! NSGA-II with simulated binary crossover and polynomial mutation, used as
//! the centralized baseline on the ZDT problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pareto::{non_dominated_sort, ObjectiveVector, Objectives};
use crate::problems::{Problem, ProblemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaError {
    #[error("population size must be at least 4, got {0}")]
    Population(usize),
    #[error("invalid operator parameter: {0}")]
    Parameter(&'static str),
    #[error("bounds of variable {0} are not finite or inverted")]
    Bounds(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    /// Per-variable mutation probability; `None` means `1 / n_vars`.
    pub mutation_prob: Option<f64>,
    pub mutation_eta: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 25,
            generations: 600,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_prob: None,
            mutation_eta: 20.0,
            seed: 0,
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<(), GaError> {
        if self.population < 4 {
            return Err(GaError::Population(self.population));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(GaError::Parameter("crossover probability"));
        }
        if self.mutation_prob.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
            return Err(GaError::Parameter("mutation probability"));
        }
        if !(self.crossover_eta >= 0.0 && self.mutation_eta >= 0.0) {
            return Err(GaError::Parameter("distribution index"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objectives: ObjectiveVector,
}

impl Objectives for Solution {
    fn objectives(&self) -> &[f64] {
        self.objectives.values()
    }
}

/// Share of variables exchanged when a pair is crossed.
const PER_VARIABLE_CROSSOVER: f64 = 0.5;
const SBX_EPS: f64 = 1e-14;

/// Bounded simulated binary crossover. With probability `1 - prob` the
/// children are copies of the parents.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    eta: f64,
    prob: f64,
    bounds: &[(f64, f64)],
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if !rng.gen_bool(prob) {
        return (c1, c2);
    }
    for i in 0..p1.len() {
        if !rng.gen_bool(PER_VARIABLE_CROSSOVER) || (p1[i] - p2[i]).abs() <= SBX_EPS {
            continue;
        }
        let (xl, xu) = bounds[i];
        let (y1, y2) = if p1[i] < p2[i] { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
        let u: f64 = rng.gen();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - xl) / (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (xu - y2) / (y2 - y1));
        let a = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(xl, xu);
        let b = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(xl, xu);
        if rng.gen_bool(0.5) {
            c1[i] = b;
            c2[i] = a;
        } else {
            c1[i] = a;
            c2[i] = b;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation; each variable mutates with probability `prob`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &[f64],
    eta: f64,
    prob: f64,
    bounds: &[(f64, f64)],
    rng: &mut R,
) -> Vec<f64> {
    let mut y = x.to_vec();
    for (i, v) in y.iter_mut().enumerate() {
        if !rng.gen_bool(prob) {
            continue;
        }
        let (xl, xu) = bounds[i];
        if xu <= xl {
            continue;
        }
        let d1 = (*v - xl) / (xu - xl);
        let d2 = (xu - *v) / (xu - xl);
        let r: f64 = rng.gen();
        let pow = 1.0 / (eta + 1.0);
        let dq = if r < 0.5 {
            let val = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (*v + dq * (xu - xl)).clamp(xl, xu);
    }
    y
}

/// Crowding distance within one front. Boundary points get infinity.
pub fn crowding_distance<T: Objectives>(front: &[T]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let d = front[0].objectives().len();
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..d {
        order.sort_by(|&a, &b| front[a].objectives()[m].total_cmp(&front[b].objectives()[m]));
        let lo = front[order[0]].objectives()[m];
        let hi = front[order[n - 1]].objectives()[m];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if hi <= lo {
            continue;
        }
        for k in 1..n - 1 {
            let i = order[k];
            if dist[i].is_finite() {
                dist[i] +=
                    (front[order[k + 1]].objectives()[m] - front[order[k - 1]].objectives()[m]) / (hi - lo);
            }
        }
    }
    dist
}

/// Rank and crowding of every member of a population.
fn rank_and_crowd(pop: &[Solution]) -> (Vec<usize>, Vec<f64>, Vec<Vec<usize>>) {
    let fronts = non_dominated_sort(pop).expect("population is nonempty and consistent");
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![0.0; pop.len()];
    for (r, front) in fronts.iter().enumerate() {
        let members: Vec<&Solution> = front.iter().map(|&i| &pop[i]).collect();
        for (&i, c) in front.iter().zip(crowding_distance(&members)) {
            rank[i] = r;
            crowd[i] = c;
        }
    }
    (rank, crowd, fronts)
}

fn tournament<R: Rng + ?Sized>(rank: &[usize], crowd: &[f64], rng: &mut R) -> usize {
    let a = rng.gen_range(0..rank.len());
    let b = rng.gen_range(0..rank.len());
    match rank[a].cmp(&rank[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if crowd[b] > crowd[a] {
                b
            } else {
                a
            }
        }
    }
}

/// Per-generation view handed to an observer.
pub struct Generation<'a> {
    pub index: usize,
    pub population: &'a [Solution],
    /// Members of the first non-dominated front of the population.
    pub first_front: Vec<usize>,
    /// The first front of parents plus offspring did not fit and was thinned
    /// by crowding.
    pub first_front_truncated: bool,
}

/// Runs NSGA-II and returns the non-dominated members of the final population.
pub fn run_nsga2(problem: &dyn Problem, cfg: &GaConfig) -> Result<Vec<Solution>, GaError> {
    run_nsga2_observed(problem, cfg, |_| {})
}

pub fn run_nsga2_observed(
    problem: &dyn Problem,
    cfg: &GaConfig,
    mut observe: impl FnMut(&Generation<'_>),
) -> Result<Vec<Solution>, GaError> {
    cfg.validate()?;
    let bounds = problem.bounds();
    if let Some(i) = bounds.iter().position(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
        return Err(GaError::Bounds(i));
    }
    let n = problem.n_vars();
    let pm = cfg.mutation_prob.unwrap_or(1.0 / n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let evaluate = |x: Vec<f64>| -> Result<Solution, GaError> {
        let objectives = problem.evaluate(&x)?;
        Ok(Solution { x, objectives })
    };

    let mut pop: Vec<Solution> = (0..cfg.population)
        .map(|_| {
            let x = bounds.iter().map(|&(l, h)| if l == h { l } else { rng.gen_range(l..=h) }).collect();
            evaluate(x)
        })
        .collect::<Result<_, _>>()?;
    let (mut rank, mut crowd, fronts) = rank_and_crowd(&pop);
    observe(&Generation {
        index: 0,
        population: &pop,
        first_front: fronts[0].clone(),
        first_front_truncated: false,
    });

    for gen in 1..=cfg.generations {
        let mut offspring = Vec::with_capacity(cfg.population + 1);
        while offspring.len() < cfg.population {
            let a = tournament(&rank, &crowd, &mut rng);
            let b = tournament(&rank, &crowd, &mut rng);
            let (c1, c2) = sbx_crossover(
                &pop[a].x,
                &pop[b].x,
                cfg.crossover_eta,
                cfg.crossover_prob,
                &bounds,
                &mut rng,
            );
            offspring.push(evaluate(polynomial_mutation(&c1, cfg.mutation_eta, pm, &bounds, &mut rng))?);
            if offspring.len() < cfg.population {
                offspring.push(evaluate(polynomial_mutation(&c2, cfg.mutation_eta, pm, &bounds, &mut rng))?);
            }
        }

        let mut combined = pop;
        combined.extend(offspring);
        let fronts = non_dominated_sort(&combined).expect("nonempty");
        let truncated = fronts[0].len() > cfg.population;
        let mut next: Vec<usize> = Vec::with_capacity(cfg.population);
        for front in &fronts {
            if next.len() + front.len() <= cfg.population {
                next.extend(front);
                continue;
            }
            let members: Vec<&Solution> = front.iter().map(|&i| &combined[i]).collect();
            let cd = crowding_distance(&members);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&x, &y| cd[y].total_cmp(&cd[x]));
            next.extend(order.into_iter().take(cfg.population - next.len()).map(|k| front[k]));
            break;
        }
        let mut slots: Vec<Option<Solution>> = combined.into_iter().map(Some).collect();
        pop = next.into_iter().map(|i| slots[i].take().expect("unique")).collect();
        let (r, c, fronts) = rank_and_crowd(&pop);
        rank = r;
        crowd = c;
        observe(&Generation {
            index: gen,
            population: &pop,
            first_front: fronts[0].clone(),
            first_front_truncated: truncated,
        });
    }

    let first: Vec<usize> = rank.iter().enumerate().filter(|(_, &r)| r == 0).map(|(i, _)| i).collect();
    Ok(first.into_iter().map(|i| pop[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::{dominates, hypervolume};
    use crate::problems::{Zdt, ZdtVariant};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn sbx_identity_and_bounds() {
        let b = vec![(0.0, 1.0); 3];
        let p1 = [0.1, 0.5, 0.9];
        let p2 = [0.8, 0.2, 0.0];
        let (c1, c2) = sbx_crossover(&p1, &p2, 15.0, 0.0, &b, &mut rng(1));
        assert_eq!((c1.as_slice(), c2.as_slice()), (&p1[..], &p2[..]));
        let mut r = rng(2);
        for _ in 0..1000 {
            let (c1, c2) = sbx_crossover(&p1, &p2, 2.0, 1.0, &b, &mut r);
            assert!(c1.iter().chain(&c2).all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn sbx_children_approach_parents_for_large_eta() {
        let b = vec![(0.0, 1.0)];
        let mut r = rng(3);
        for _ in 0..200 {
            let (c1, c2) = sbx_crossover(&[0.3], &[0.7], 1e6, 1.0, &b, &mut r);
            let (lo, hi) = (c1[0].min(c2[0]), c1[0].max(c2[0]));
            assert!((lo - 0.3).abs() < 1e-4 && (hi - 0.7).abs() < 1e-4, "{lo} {hi}");
        }
    }

    /// Spread factor CDF of unbounded SBX.
    fn sbx_cdf(beta: f64, eta: f64) -> f64 {
        if beta <= 1.0 {
            0.5 * beta.powf(eta + 1.0)
        } else {
            1.0 - 0.5 * beta.powf(-(eta + 1.0))
        }
    }

    #[test]
    fn sbx_spread_matches_density() {
        // Far bounds make the bounded operator coincide with the unbounded one.
        let b = vec![(-1e6, 1e6)];
        let eta = 15.0;
        let mut r = rng(4);
        let mut betas = Vec::new();
        while betas.len() < 100_000 {
            let (c1, c2) = sbx_crossover(&[0.4], &[0.6], eta, 1.0, &b, &mut r);
            if c1[0] == 0.4 || c1[0] == 0.6 {
                continue;
            }
            betas.push((c2[0] - c1[0]).abs() / 0.2);
        }
        betas.sort_by(f64::total_cmp);
        let n = betas.len() as f64;
        let ks = betas
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let f = sbx_cdf(b, eta);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        // 0.1% critical value of the one-sample KS test is about 1.95/sqrt(n).
        assert!(ks < 1.95 / n.sqrt(), "ks = {ks}");
    }

    #[test]
    fn mutation_identity_bounds_and_direction() {
        let b = vec![(0.0, 1.0); 4];
        let x = [0.0, 0.3, 0.7, 1.0];
        assert_eq!(polynomial_mutation(&x, 20.0, 0.0, &b, &mut rng(5)), x.to_vec());
        let mut r = rng(6);
        for _ in 0..2000 {
            let y = polynomial_mutation(&x, 20.0, 1.0, &b, &mut r);
            assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(y[0] >= 0.0 && y[3] <= 1.0);
        }
        // At the lower bound a move can only go up.
        let mut moved = 0;
        for _ in 0..2000 {
            let y = polynomial_mutation(&[0.0], 20.0, 1.0, &b[..1], &mut r);
            if y[0] > 0.0 {
                moved += 1;
            }
        }
        assert!(moved > 500);
    }

    #[test]
    fn mutation_displacement_shrinks_with_eta() {
        let b = vec![(0.0, 1.0)];
        let mean_shift = |eta: f64| {
            let mut r = rng(7);
            (0..10_000)
                .map(|_| (polynomial_mutation(&[0.5], eta, 1.0, &b, &mut r)[0] - 0.5).abs())
                .sum::<f64>()
                / 10_000.0
        };
        let shifts: Vec<f64> = [1.0, 5.0, 20.0, 100.0].iter().map(|&e| mean_shift(e)).collect();
        assert!(shifts.windows(2).all(|w| w[0] > w[1]), "{shifts:?}");
    }

    #[test]
    fn crowding_examples() {
        assert!(crowding_distance(&[[0.0, 1.0], [1.0, 0.0]]).iter().all(|d| d.is_infinite()));
        let c = crowding_distance(&[[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]]);
        assert!(c[0].is_infinite() && c[2].is_infinite());
        // Each objective contributes (2 - 0) / 2 = 1.
        assert_eq!(c[1], 2.0);
        let perm = crowding_distance(&[[1.0, 1.0], [2.0, 0.0], [0.0, 2.0]]);
        assert_eq!(perm[0], 2.0);
        assert_eq!(crowding_distance::<[f64; 2]>(&[]), Vec::<f64>::new());
    }

    #[test]
    fn one_generation_front_comes_from_initial_population() {
        let p = Zdt::new(ZdtVariant::Zdt1);
        let cfg = GaConfig {
            generations: 0,
            seed: 3,
            ..GaConfig::default()
        };
        let mut initial = Vec::new();
        let front = run_nsga2_observed(&p, &cfg, |g| {
            if g.index == 0 {
                initial = g.population.to_vec();
            }
        })
        .unwrap();
        let nd = crate::pareto::non_dominated_indices(&initial);
        assert_eq!(front.len(), nd.len());
        for s in &front {
            assert!(nd.iter().any(|&i| initial[i] == *s));
        }
        let one = run_nsga2(&p, &GaConfig { generations: 1, ..cfg.clone() }).unwrap();
        assert!(!one.is_empty());
    }

    #[test]
    fn elitism_bounds_and_determinism() {
        let p = Zdt::new(ZdtVariant::Zdt2);
        let cfg = GaConfig {
            generations: 60,
            seed: 11,
            ..GaConfig::default()
        };
        let r = Zdt::reference_point();
        let mut last_hv = 0.0;
        let front = run_nsga2_observed(&p, &cfg, |g| {
            assert!(g.population.iter().all(|s| s.x.iter().all(|v| (0.0..=1.0).contains(v))));
            let first: Vec<&Solution> = g.first_front.iter().map(|&i| &g.population[i]).collect();
            let hv = hypervolume(&first, &r).unwrap();
            if !g.first_front_truncated {
                assert!(hv >= last_hv - 1e-12, "generation {}: {hv} < {last_hv}", g.index);
            }
            last_hv = hv;
        })
        .unwrap();
        for a in &front {
            for b in &front {
                assert!(!dominates(a.objectives(), b.objectives()).unwrap());
            }
        }
        assert_eq!(front, run_nsga2(&p, &cfg).unwrap());
        assert!(matches!(
            run_nsga2(&p, &GaConfig { population: 3, ..cfg }),
            Err(GaError::Population(3))
        ));
    }
}
