//! Sparrow search algorithm over box-bounded real vectors.
//!
//! The population is split into three roles every iteration:
//!
//! - *Producers* (the best-ranked fraction) either decay their position
//!   multiplicatively while the warning value stays below the safety
//!   threshold, or take a Gaussian step when it does not.
//! - *Followers* (everyone else) either collapse toward the best-known
//!   position or, for the worse-ranked half, reset to a Gaussian step scaled
//!   by their distance from the worst position.
//! - *Alerters* (a random 10–30% subset) perturb around the best position,
//!   or scatter when they are the best themselves.
//!
//! Minimization convention throughout; the best-ever solution is retained
//! across iterations, so the reported best fitness never worsens. All random
//! draws happen in a fixed serial order, so a run is a pure function of
//! (seed, config, objective) even when fitness evaluation is parallel.

mod benchmarks;

pub use benchmarks::{benchmark_objectives, BenchmarkFn, BenchmarkObjective};

use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{Prng, RandomSource};

/// Guards the denominator of the scatter branch against exact zero.
pub const DENOMINATOR_EPSILON: f64 = 1e-50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsaError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective returned non-finite value {value} at position {position:?}")]
    Evaluation { value: f64, position: Vec<f64> },
    #[error("unknown benchmark objective `{0}` (expected sphere, rastrigin or rosenbrock)")]
    UnknownObjective(String),
}

/// Anything the optimizer can minimize: a pure, deterministic function of
/// the position vector. Implemented for plain closures.
pub trait Objective: Sync {
    fn evaluate(&self, position: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for F {
    fn evaluate(&self, position: &[f64]) -> f64 {
        self(position)
    }
}

/// Optimizer configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SsaConfig {
    /// Population size n.
    pub pop_size: usize,
    /// Number of iterations to run.
    pub iter_max: usize,
    /// Search-space dimension.
    pub dim: usize,
    /// Per-dimension lower bounds.
    pub lower: Vec<f64>,
    /// Per-dimension upper bounds.
    pub upper: Vec<f64>,
    /// Safety threshold ST, in (0.5, 1).
    pub safety_threshold: f64,
    /// Fraction of the population acting as producers.
    pub producer_fraction: f64,
    /// Fraction of the population acting as alerters, in [0.1, 0.3].
    pub alerter_fraction: f64,
    pub seed: u64,
}

impl SsaConfig {
    /// Defaults everywhere except the search-space geometry.
    pub fn new(dim: usize, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            pop_size: 30,
            iter_max: 100,
            dim,
            lower,
            upper,
            safety_threshold: 0.8,
            producer_fraction: 0.2,
            alerter_fraction: 0.2,
            seed: 0,
        }
    }

    /// Same bounds in every dimension.
    pub fn uniform_bounds(dim: usize, lower: f64, upper: f64) -> Self {
        Self::new(dim, vec![lower; dim], vec![upper; dim])
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iter_max: usize) -> Self {
        self.iter_max = iter_max;
        self
    }

    pub fn with_pop_size(mut self, pop_size: usize) -> Self {
        self.pop_size = pop_size;
        self
    }

    /// Number of producers: `round(producer_fraction * n)`, at least 1.
    pub fn producer_count(&self) -> usize {
        ((self.producer_fraction * self.pop_size as f64).round() as usize)
            .clamp(1, self.pop_size)
    }

    /// Number of alerters: `round(alerter_fraction * n)`.
    pub fn alerter_count(&self) -> usize {
        ((self.alerter_fraction * self.pop_size as f64).round() as usize).min(self.pop_size)
    }

    pub fn validate(&self) -> Result<(), SsaError> {
        let fail = |msg: String| Err(SsaError::InvalidConfig(msg));
        if self.pop_size < 2 {
            return fail(format!("pop_size must be at least 2, got {}", self.pop_size));
        }
        if self.dim == 0 {
            return fail("dim must be positive".into());
        }
        if self.lower.len() != self.dim || self.upper.len() != self.dim {
            return fail(format!(
                "bounds must have dim {} entries, got {}/{}",
                self.dim,
                self.lower.len(),
                self.upper.len()
            ));
        }
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return fail(format!("bounds in dimension {j} must satisfy lower < upper, got [{lo}, {hi}]"));
            }
        }
        if !(self.safety_threshold > 0.5 && self.safety_threshold < 1.0) {
            return fail(format!(
                "safety_threshold must lie in (0.5, 1), got {}",
                self.safety_threshold
            ));
        }
        if self.producer_fraction * (self.pop_size as f64) < 1.0 {
            return fail(format!(
                "producer_fraction {} yields no producers for pop_size {}",
                self.producer_fraction, self.pop_size
            ));
        }
        if !(0.1..=0.3).contains(&self.alerter_fraction) {
            return fail(format!(
                "alerter_fraction must lie in [0.1, 0.3], got {}",
                self.alerter_fraction
            ));
        }
        Ok(())
    }

    fn clamp(&self, position: &mut [f64]) {
        for (x, (&lo, &hi)) in position.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(lo, hi);
        }
    }
}

/// Positions, fitness values and the running best/worst of one SSA run.
///
/// Invariants: `best_fitness` never worsens across steps, and every position
/// stays inside the configured bounds.
#[derive(Debug, Clone)]
pub struct SparrowPopulation {
    pub positions: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub worst_position: Vec<f64>,
    pub worst_fitness: f64,
    /// Completed iterations.
    pub iteration: usize,
}

impl SparrowPopulation {
    /// Uniform random initialization inside the bounds, followed by one full
    /// evaluation.
    pub fn init(
        objective: &dyn Objective,
        cfg: &SsaConfig,
        rng: &mut impl RandomSource,
    ) -> Result<Self, SsaError> {
        cfg.validate()?;
        let positions: Vec<Vec<f64>> = (0..cfg.pop_size)
            .map(|_| {
                (0..cfg.dim)
                    .map(|j| rng.next_uniform_in(cfg.lower[j], cfg.upper[j]))
                    .collect()
            })
            .collect();
        let fitness = evaluate_all(objective, &positions)?;
        let (best_idx, worst_idx) = extremes(&fitness);
        Ok(Self {
            best_position: positions[best_idx].clone(),
            best_fitness: fitness[best_idx],
            worst_position: positions[worst_idx].clone(),
            worst_fitness: fitness[worst_idx],
            positions,
            fitness,
            iteration: 0,
        })
    }
}

/// Producer move: multiplicative decay toward the origin while the warning
/// value stays below the safety threshold, otherwise a Gaussian step along
/// the all-ones direction.
///
/// Draw order: warning value R2 (uniform); then either alpha (uniform in
/// (0,1)) on the safe branch or Q (normal) on the alarmed branch. `rank` is
/// the sparrow's 1-based fitness rank.
pub fn producer_update(
    position: &[f64],
    rank: usize,
    cfg: &SsaConfig,
    rng: &mut impl RandomSource,
) -> Vec<f64> {
    debug_assert!(rank >= 1);
    let warning = rng.next_uniform();
    let mut next: Vec<f64> = if warning < cfg.safety_threshold {
        let alpha = rng.next_uniform_open();
        let decay = (-(rank as f64) / (alpha * cfg.iter_max.max(1) as f64)).exp();
        position.iter().map(|x| x * decay).collect()
    } else {
        let q = rng.next_normal();
        position.iter().map(|x| x + q).collect()
    };
    cfg.clamp(&mut next);
    next
}

/// Follower move. The worse-ranked half (`rank > n/2`) resets to a Gaussian
/// step scaled by its distance from the worst position; the rest collapse
/// toward the best position, each component stepping `±1/dim` of its
/// distance from the best.
///
/// Draw order on the reset branch: Q (normal), then alpha (uniform in
/// (0,1)). On the collapse branch: `dim` uniforms, one sign per component.
pub fn follower_update(
    position: &[f64],
    rank: usize,
    best: &[f64],
    worst: &[f64],
    cfg: &SsaConfig,
    rng: &mut impl RandomSource,
) -> Vec<f64> {
    debug_assert!(rank >= 1);
    let dim = position.len() as f64;
    let mut next: Vec<f64> = if rank * 2 > cfg.pop_size {
        let q = rng.next_normal();
        let alpha = rng.next_uniform_open();
        let scale = alpha * cfg.iter_max.max(1) as f64;
        position
            .iter()
            .zip(worst)
            .map(|(&x, &w)| q * ((w - x) / scale).exp())
            .collect()
    } else {
        position
            .iter()
            .zip(best)
            .map(|(&x, &b)| b + (x - b).abs() * rng.next_sign() / dim)
            .collect()
    };
    cfg.clamp(&mut next);
    next
}

/// Alerter move. A sparrow that is not the best-known jumps around the best
/// position with a Gaussian coefficient; the best itself scatters by a
/// uniform coefficient scaled with its distance from the worst over the
/// fitness gap.
///
/// Draw order: beta (normal) when `fitness > best_fitness`, otherwise k
/// (uniform in [-1, 1)).
pub fn alerter_update(
    position: &[f64],
    fitness: f64,
    best_fitness: f64,
    worst_fitness: f64,
    best: &[f64],
    worst: &[f64],
    cfg: &SsaConfig,
    rng: &mut impl RandomSource,
) -> Vec<f64> {
    debug_assert!(best_fitness <= fitness);
    let mut next: Vec<f64> = if fitness > best_fitness {
        let beta = rng.next_normal();
        position
            .iter()
            .zip(best)
            .map(|(&x, &b)| b + beta * (x - b).abs())
            .collect()
    } else {
        let k = rng.next_uniform_in(-1.0, 1.0);
        let gap = fitness - worst_fitness + DENOMINATOR_EPSILON;
        position
            .iter()
            .zip(worst)
            .map(|(&x, &w)| x + k * ((x - w).abs() / gap))
            .collect()
    };
    cfg.clamp(&mut next);
    next
}

/// One full iteration: rank by fitness, move producers, followers and a
/// random alerter subset, re-evaluate, and fold the results into the
/// elitist best / current worst.
pub fn ssa_step(
    pop: &mut SparrowPopulation,
    objective: &dyn Objective,
    cfg: &SsaConfig,
    rng: &mut impl RandomSource,
) -> Result<(), SsaError> {
    let n = cfg.pop_size;

    // Ascending fitness order; ties keep their current order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pop.fitness[a]
            .partial_cmp(&pop.fitness[b])
            .expect("fitness values are finite")
    });
    let positions: Vec<Vec<f64>> = order.iter().map(|&i| pop.positions[i].clone()).collect();
    let fitness: Vec<f64> = order.iter().map(|&i| pop.fitness[i]).collect();
    pop.positions = positions;
    pop.fitness = fitness;

    let producers = cfg.producer_count();
    for rank0 in 0..n {
        let rank = rank0 + 1;
        pop.positions[rank0] = if rank <= producers {
            producer_update(&pop.positions[rank0], rank, cfg, rng)
        } else {
            follower_update(
                &pop.positions[rank0],
                rank,
                &pop.best_position,
                &pop.worst_position,
                cfg,
                rng,
            )
        };
    }

    // Alerter subset: partial Fisher-Yates over the indices, then visited in
    // ascending order so the per-sparrow draws are serially reproducible.
    let alerters = cfg.alerter_count();
    let mut indices: Vec<usize> = (0..n).collect();
    for j in 0..alerters {
        let pick = j + (rng.next_uniform() * (n - j) as f64) as usize;
        indices.swap(j, pick.min(n - 1));
    }
    let mut chosen: Vec<usize> = indices[..alerters].to_vec();
    chosen.sort_unstable();
    for idx in chosen {
        pop.positions[idx] = alerter_update(
            &pop.positions[idx],
            pop.fitness[idx],
            pop.best_fitness,
            pop.worst_fitness,
            &pop.best_position,
            &pop.worst_position,
            cfg,
            rng,
        );
    }

    pop.fitness = evaluate_all(objective, &pop.positions)?;
    let (best_idx, worst_idx) = extremes(&pop.fitness);
    if pop.fitness[best_idx] < pop.best_fitness {
        pop.best_fitness = pop.fitness[best_idx];
        pop.best_position = pop.positions[best_idx].clone();
    }
    pop.worst_fitness = pop.fitness[worst_idx];
    pop.worst_position = pop.positions[worst_idx].clone();
    pop.iteration += 1;
    Ok(())
}

/// Result of one optimization run.
#[derive(Debug, Clone)]
pub struct SsaResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best-so-far fitness per iteration; entry 0 is the post-initialization
    /// best, entry t the best after t steps. Non-increasing.
    pub history: Vec<f64>,
}

/// Runs `cfg.iter_max` iterations from a fresh seeded population and returns
/// the elitist best.
pub fn ssa_optimize(objective: &dyn Objective, cfg: &SsaConfig) -> Result<SsaResult, SsaError> {
    ssa_optimize_with(objective, cfg, |_, _| {})
}

/// Like [`ssa_optimize`], invoking `on_iteration(iteration, best_fitness)`
/// after initialization (iteration 0) and after every step.
pub fn ssa_optimize_with(
    objective: &dyn Objective,
    cfg: &SsaConfig,
    mut on_iteration: impl FnMut(usize, f64),
) -> Result<SsaResult, SsaError> {
    let mut rng = Prng::new(cfg.seed);
    let mut pop = SparrowPopulation::init(objective, cfg, &mut rng)?;
    let mut history = Vec::with_capacity(cfg.iter_max + 1);
    history.push(pop.best_fitness);
    on_iteration(0, pop.best_fitness);
    for t in 1..=cfg.iter_max {
        ssa_step(&mut pop, objective, cfg, &mut rng)?;
        history.push(pop.best_fitness);
        on_iteration(t, pop.best_fitness);
    }
    Ok(SsaResult {
        best_position: pop.best_position,
        best_fitness: pop.best_fitness,
        history,
    })
}

/// Evaluates every position, in parallel; objectives are pure so the result
/// does not depend on scheduling. The error, if any, names the lowest
/// offending index.
fn evaluate_all(objective: &dyn Objective, positions: &[Vec<f64>]) -> Result<Vec<f64>, SsaError> {
    let values: Vec<f64> = positions
        .par_iter()
        .map(|p| objective.evaluate(p))
        .collect();
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(SsaError::Evaluation {
            value: values[bad],
            position: positions[bad].clone(),
        });
    }
    Ok(values)
}

fn extremes(fitness: &[f64]) -> (usize, usize) {
    let mut best = 0;
    let mut worst = 0;
    for (i, &f) in fitness.iter().enumerate() {
        if f < fitness[best] {
            best = i;
        }
        if f > fitness[worst] {
            worst = i;
        }
    }
    (best, worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Random source that replays scripted values; used to pin the
    /// closed-form update examples.
    struct Scripted {
        uniforms: Vec<f64>,
        normals: Vec<f64>,
    }

    impl Scripted {
        fn new(uniforms: &[f64], normals: &[f64]) -> Self {
            Self {
                uniforms: uniforms.to_vec(),
                normals: normals.to_vec(),
            }
        }
    }

    impl RandomSource for Scripted {
        fn next_uniform(&mut self) -> f64 {
            assert!(!self.uniforms.is_empty(), "scripted uniforms exhausted");
            self.uniforms.remove(0)
        }
        fn next_normal(&mut self) -> f64 {
            assert!(!self.normals.is_empty(), "scripted normals exhausted");
            self.normals.remove(0)
        }
    }

    fn wide_cfg(dim: usize) -> SsaConfig {
        SsaConfig::uniform_bounds(dim, -1e9, 1e9)
    }

    #[test]
    fn producer_decay_branch_matches_closed_form() {
        let mut cfg = wide_cfg(1);
        cfg.iter_max = 100;
        // R2 = 0.2 < ST, alpha = 0.5.
        let mut rng = Scripted::new(&[0.2, 0.5], &[]);
        let next = producer_update(&[1.0], 1, &cfg, &mut rng);
        assert!((next[0] - (-1.0 / 50.0f64).exp()).abs() < 1e-12);
        assert!((next[0] - 0.980_198_673_306_755_2).abs() < 1e-12);
    }

    #[test]
    fn producer_decay_second_example() {
        let mut cfg = wide_cfg(1);
        cfg.iter_max = 10;
        let mut rng = Scripted::new(&[0.2, 1.0 - f64::EPSILON], &[]);
        let next = producer_update(&[2.0], 2, &cfg, &mut rng);
        // alpha is as close to 1 as the stream allows: 2 * exp(-0.2).
        assert!((next[0] - 2.0 * (-0.2f64).exp()).abs() < 1e-9);
        assert!((next[0] - 1.637_461_506_155_963_5).abs() < 1e-9);
    }

    #[test]
    fn producer_alarm_branch_with_zero_step() {
        let cfg = wide_cfg(3);
        // R2 = 0.95 >= ST, Q = 0.
        let mut rng = Scripted::new(&[0.95], &[0.0]);
        let x = [1.5, -2.0, 0.25];
        assert_eq!(producer_update(&x, 1, &cfg, &mut rng), x.to_vec());
    }

    #[test]
    fn follower_collapse_branch_at_best_stays_at_best() {
        let cfg = wide_cfg(2);
        let best = [3.0, -1.0];
        let mut rng = Scripted::new(&[0.9, 0.1], &[]);
        let next = follower_update(&best, 1, &best, &[0.0, 0.0], &cfg, &mut rng);
        assert_eq!(next, best.to_vec());
    }

    #[test]
    fn follower_reset_branch_matches_closed_form() {
        let mut cfg = wide_cfg(1);
        cfg.pop_size = 4;
        cfg.iter_max = 10;
        // rank 3 > n/2; Q = 1, alpha as close to 1 as possible.
        let mut rng = Scripted::new(&[1.0 - f64::EPSILON], &[1.0]);
        let next = follower_update(&[3.0], 3, &[0.0], &[5.0], &cfg, &mut rng);
        assert!((next[0] - 0.2f64.exp()).abs() < 1e-9);
        assert!((next[0] - 1.221_402_758_160_17).abs() < 1e-9);
    }

    #[test]
    fn follower_reset_at_worst_equals_q() {
        let mut cfg = wide_cfg(2);
        cfg.pop_size = 4;
        cfg.iter_max = 10;
        let q = -0.73;
        let mut rng = Scripted::new(&[0.42], &[q]);
        let worst = [2.0, 2.0];
        let next = follower_update(&worst, 4, &[0.0, 0.0], &worst, &cfg, &mut rng);
        assert_eq!(next, vec![q, q]);
    }

    #[test]
    fn alerter_zero_beta_lands_on_best() {
        let cfg = wide_cfg(2);
        let best = [1.0, -1.0];
        let mut rng = Scripted::new(&[], &[0.0]);
        let next = alerter_update(&[5.0, 5.0], 2.0, 1.0, 9.0, &best, &[8.0, 8.0], &cfg, &mut rng);
        assert_eq!(next, best.to_vec());
    }

    #[test]
    fn alerter_at_best_position_is_fixed_point_for_any_beta() {
        let cfg = wide_cfg(2);
        let best = [1.0, -1.0];
        let mut rng = Scripted::new(&[], &[123.456]);
        let next = alerter_update(&best, 2.0, 1.0, 9.0, &best, &[8.0, 8.0], &cfg, &mut rng);
        assert_eq!(next, best.to_vec());
    }

    #[test]
    fn alerter_scatter_with_zero_k_is_identity() {
        let cfg = wide_cfg(2);
        // k = 2*0.5 - 1 = 0.
        let mut rng = Scripted::new(&[0.5], &[]);
        let x = [4.0, -4.0];
        let next = alerter_update(&x, 1.0, 1.0, 9.0, &[1.0, 1.0], &[8.0, 8.0], &cfg, &mut rng);
        assert_eq!(next, x.to_vec());
    }

    #[test]
    fn step_preserves_elitism_and_bounds() {
        let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let mut cfg = SsaConfig::uniform_bounds(3, -5.0, 5.0);
        cfg.pop_size = 12;
        cfg.iter_max = 50;
        cfg.seed = 9;
        let mut rng = Prng::new(cfg.seed);
        let mut pop = SparrowPopulation::init(&sphere, &cfg, &mut rng).unwrap();
        let mut last_best = pop.best_fitness;
        for _ in 0..50 {
            ssa_step(&mut pop, &sphere, &cfg, &mut rng).unwrap();
            assert!(pop.best_fitness <= last_best);
            last_best = pop.best_fitness;
            for p in &pop.positions {
                assert!(p.iter().all(|&x| (-5.0..=5.0).contains(&x)));
            }
        }
    }

    #[test]
    fn constant_objective_keeps_constant_best() {
        let constant = |_: &[f64]| 4.25;
        let mut cfg = SsaConfig::uniform_bounds(2, -1.0, 1.0);
        cfg.pop_size = 8;
        cfg.iter_max = 20;
        let result = ssa_optimize(&constant, &cfg).unwrap();
        assert_eq!(result.best_fitness, 4.25);
        assert!(result.history.iter().all(|&f| f == 4.25));
    }

    #[test]
    fn sphere_improves_with_budget() {
        let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let mut cfg = SsaConfig::uniform_bounds(2, -5.0, 5.0);
        cfg.pop_size = 30;
        cfg.seed = 0;
        cfg.iter_max = 1;
        let short = ssa_optimize(&sphere, &cfg).unwrap();
        cfg.iter_max = 100;
        let long = ssa_optimize(&sphere, &cfg).unwrap();
        assert!(long.best_fitness < short.best_fitness);
    }

    #[test]
    fn history_is_non_increasing_and_deterministic() {
        let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let mut cfg = SsaConfig::uniform_bounds(4, -2.0, 2.0);
        cfg.pop_size = 10;
        cfg.iter_max = 30;
        cfg.seed = 123;
        let a = ssa_optimize(&sphere, &cfg).unwrap();
        let b = ssa_optimize(&sphere, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best_position, b.best_position);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.history.len(), cfg.iter_max + 1);
    }

    #[test]
    fn nan_objective_reports_position() {
        let bad = |x: &[f64]| if x[0] > 0.0 { f64::NAN } else { 1.0 };
        let mut cfg = SsaConfig::uniform_bounds(1, -1.0, 1.0);
        cfg.pop_size = 6;
        cfg.iter_max = 3;
        let err = ssa_optimize(&bad, &cfg).unwrap_err();
        assert!(matches!(err, SsaError::Evaluation { .. }));
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let base = SsaConfig::uniform_bounds(2, -1.0, 1.0);
        let mut c = base.clone();
        c.safety_threshold = 0.5;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.alerter_fraction = 0.4;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.lower = vec![2.0, 2.0];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.producer_fraction = 0.0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.pop_size = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn role_partition_counts() {
        let mut cfg = SsaConfig::uniform_bounds(2, -1.0, 1.0);
        cfg.pop_size = 30;
        assert_eq!(cfg.producer_count(), 6);
        assert_eq!(cfg.alerter_count(), 6);
        cfg.pop_size = 7;
        cfg.producer_fraction = 0.2;
        assert_eq!(cfg.producer_count(), 1);
        assert_eq!(cfg.producer_count() + (cfg.pop_size - cfg.producer_count()), 7);
    }
}
