//! Multi-restart projected gradient ascent over a product of ℓ1 balls.

use rand::Rng;

use super::projection::project_l1_in_place;

/// Settings for the inner-supremum search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub iterations: usize,
    pub step_size: f64,
    /// Stop a restart once an accepted step improves the objective by less
    /// than `tolerance · max(|f|, 1)`.
    pub tolerance: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            restarts: 8,
            iterations: 500,
            step_size: 0.1,
            tolerance: 1e-9,
        }
    }
}

const MIN_STEP: f64 = 1e-12;

/// A contiguous slice of the parameter vector constrained to an ℓ1 ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Block {
    pub start: usize,
    pub len: usize,
    pub radius: f64,
}

pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, point: &[f64]) -> f64;
    fn gradient(&self, point: &[f64], grad: &mut [f64]);
}

/// Central differences with step `h`, one coordinate at a time.
pub fn central_difference_gradient<F: Fn(&[f64]) -> f64>(f: F, point: &[f64], h: f64, grad: &mut [f64]) {
    let mut probe = point.to_vec();
    for (i, g) in grad.iter_mut().enumerate() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        *g = (up - down) / (2.0 * h);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    /// Best objective among all evaluated feasible iterates; NaN if any
    /// evaluation was non-finite.
    pub value: f64,
    pub point: Vec<f64>,
}

fn project(point: &mut [f64], blocks: &[L1Block]) {
    for b in blocks {
        // radii are validated by the estimators
        project_l1_in_place(&mut point[b.start..b.start + b.len], b.radius).expect("non-negative radius");
    }
}

fn random_feasible<R: Rng + ?Sized>(dim: usize, blocks: &[L1Block], rng: &mut R) -> Vec<f64> {
    let mut p = vec![0.0; dim];
    for b in blocks {
        let slice = &mut p[b.start..b.start + b.len];
        for x in slice.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let norm: f64 = slice.iter().map(|x: &f64| x.abs()).sum();
        let target = b.radius * rng.gen::<f64>();
        if norm > 0.0 {
            slice.iter_mut().for_each(|x| *x *= target / norm);
        }
    }
    p
}

/// Maximize `objective` over the blocks' ℓ1 balls.
///
/// Restart 0 starts from the origin, the rest from random feasible points.
/// Each restart takes gradient steps, halving the step until the projected
/// candidate improves, so the returned value is the objective at a feasible
/// point and at least the value at the origin.
pub fn maximize<O: Objective, R: Rng + ?Sized>(
    objective: &O,
    blocks: &[L1Block],
    settings: &OptimizerSettings,
    rng: &mut R,
) -> Maximum {
    let dim = objective.dim();
    let mut best = Maximum {
        value: f64::NEG_INFINITY,
        point: vec![0.0; dim],
    };
    let mut grad = vec![0.0; dim];
    let mut candidate = vec![0.0; dim];
    for restart in 0..settings.restarts.max(1) {
        let mut point = if restart == 0 {
            vec![0.0; dim]
        } else {
            random_feasible(dim, blocks, rng)
        };
        let mut value = objective.value(&point);
        if !value.is_finite() {
            return Maximum { value: f64::NAN, point };
        }
        let mut step = settings.step_size;
        'iterations: for _ in 0..settings.iterations {
            objective.gradient(&point, &mut grad);
            if grad.iter().any(|g| !g.is_finite()) {
                return Maximum { value: f64::NAN, point };
            }
            loop {
                for ((c, p), g) in candidate.iter_mut().zip(&point).zip(&grad) {
                    *c = p + step * g;
                }
                project(&mut candidate, blocks);
                let cand_value = objective.value(&candidate);
                if !cand_value.is_finite() {
                    return Maximum {
                        value: f64::NAN,
                        point: candidate,
                    };
                }
                if cand_value > value {
                    let improvement = cand_value - value;
                    std::mem::swap(&mut point, &mut candidate);
                    value = cand_value;
                    if improvement < settings.tolerance * value.abs().max(1.0) {
                        break 'iterations;
                    }
                    break;
                }
                step *= 0.5;
                if step < MIN_STEP {
                    break 'iterations;
                }
            }
        }
        if value > best.value {
            best = Maximum { value, point };
        }
    }
    best
}
