//! Standard test objectives for validating the optimizer.

use super::{Objective, SsaError};

pub type BenchmarkFn = fn(&[f64]) -> f64;

/// A named benchmark with its textbook search box.
#[derive(Debug, Clone)]
pub struct BenchmarkObjective {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
    function: BenchmarkFn,
}

impl BenchmarkObjective {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.function)(x)
    }
}

impl Objective for BenchmarkObjective {
    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.function)(x)
    }
}

/// Sum of squares; global minimum 0 at the origin.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Highly multimodal cosine lattice; global minimum 0 at the origin.
pub fn rastrigin(x: &[f64]) -> f64 {
    const A: f64 = 10.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    A * x.len() as f64
        + x.iter()
            .map(|&v| v * v - A * (two_pi * v).cos())
            .sum::<f64>()
}

/// Banana-valley function over consecutive pairs; global minimum 0 at the
/// all-ones point.
pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            100.0 * (b - a * a).powi(2) + (1.0 - a).powi(2)
        })
        .sum()
}

/// Looks up a benchmark by name: `sphere`, `rastrigin` or `rosenbrock`.
pub fn benchmark_objectives(name: &str) -> Result<BenchmarkObjective, SsaError> {
    match name {
        "sphere" => Ok(BenchmarkObjective {
            name: "sphere",
            lower: -5.12,
            upper: 5.12,
            function: sphere,
        }),
        "rastrigin" => Ok(BenchmarkObjective {
            name: "rastrigin",
            lower: -5.12,
            upper: 5.12,
            function: rastrigin,
        }),
        "rosenbrock" => Ok(BenchmarkObjective {
            name: "rosenbrock",
            lower: -5.0,
            upper: 10.0,
            function: rosenbrock,
        }),
        other => Err(SsaError::UnknownObjective(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optima_are_where_the_textbooks_say() {
        assert_eq!(sphere(&[0.0; 10]), 0.0);
        assert_eq!(rastrigin(&[0.0; 5]), 0.0);
        assert_eq!(rosenbrock(&[1.0; 6]), 0.0);
    }

    #[test]
    fn registry_lookup() {
        for name in ["sphere", "rastrigin", "rosenbrock"] {
            let b = benchmark_objectives(name).unwrap();
            assert_eq!(b.name, name);
            assert!(b.lower < b.upper);
        }
        assert!(matches!(
            benchmark_objectives("ackley"),
            Err(SsaError::UnknownObjective(_))
        ));
    }

    #[test]
    fn rastrigin_away_from_origin_is_positive() {
        assert!(rastrigin(&[0.5, -0.5]) > 0.0);
        assert!(rosenbrock(&[0.0, 0.0]) > 0.0);
    }
}
