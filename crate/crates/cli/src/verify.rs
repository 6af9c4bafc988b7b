//! One-shot runner of the invariant suites.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rbm_complexity::meanfield::{cd1_log_partition, meanfield_hidden, meanfield_visible};
use rbm_complexity::numerics::log1p_exp;
use rbm_complexity::rademacher::{
    central_difference_gradient, compositional_t, project_l1, sup_linear_l1, HObjective, LoglikPart1Objective,
    Objective,
};
use rbm_complexity::rbm::{
    free_energy_part1, log_partition_bruteforce, log_partition_factorized, part1_bruteforce, RbmParams,
};
use rbm_complexity::stream_rng;

use crate::commands::projected_weights;

/// Test-only fault injection.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyOptions {
    /// Added to every factorized part-1 value before comparison.
    pub part1_perturbation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
    /// Largest observed discrepancy, in the suite's own units.
    pub worst: f64,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

struct Tally {
    checks: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            checks: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    /// `err` must not exceed `tol`; NaN counts as a failure.
    fn check(&mut self, err: f64, tol: f64) {
        self.checks += 1;
        if !(err <= tol) {
            self.failures += 1;
        }
        if err.is_nan() || err > self.worst {
            self.worst = err;
        }
    }

    fn flag(&mut self, ok: bool) {
        self.check(if ok { 0.0 } else { 1.0 }, 0.0);
    }
}

fn timed(name: &'static str, body: impl FnOnce(&mut Tally)) -> SuiteReport {
    let start = Instant::now();
    let mut t = Tally::new();
    body(&mut t);
    SuiteReport {
        name,
        checks: t.checks,
        failures: t.failures,
        worst: t.worst,
        elapsed: start.elapsed(),
    }
}

fn random_bits(rng: &mut ChaCha8Rng, k: usize) -> Vec<u8> {
    (0..k).map(|_| u8::from(rng.gen::<bool>())).collect()
}

/// 200 machines with `k, m ∈ 1..=8` and parameters uniform in `[-2, 2]`,
/// 10 inputs each: factorized part 1 vs. the sum over hidden states, 1e-9.
pub fn factorization_suite(seed: u64, opts: VerifyOptions) -> SuiteReport {
    timed("factorization", |t| {
        let mut rng = stream_rng(seed, 101);
        for _ in 0..200 {
            let (k, m) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
            let params = RbmParams::random_uniform(k, m, 2.0, &mut rng).expect("valid shape");
            for _ in 0..10 {
                let x = random_bits(&mut rng, k);
                let fast = free_energy_part1(&params, &x).map(|v| v + opts.part1_perturbation);
                let slow = part1_bruteforce(&params, &x);
                t.check(
                    match (fast, slow) {
                        (Ok(a), Ok(b)) => (a - b).abs(),
                        _ => f64::NAN,
                    },
                    1e-9,
                );
            }
        }
    })
}

/// 100 machines with `k + m ≤ 14`: factorized vs. joint enumeration of ln Z.
pub fn partition_suite(seed: u64) -> SuiteReport {
    timed("partition", |t| {
        let mut rng = stream_rng(seed, 102);
        for _ in 0..100 {
            let k = rng.gen_range(1..=13);
            let m = rng.gen_range(1..=14 - k);
            let params = RbmParams::random_uniform(k, m, 2.0, &mut rng).expect("valid shape");
            let err = match (log_partition_factorized(&params), log_partition_bruteforce(&params)) {
                (Ok(a), Ok(b)) => (a - b).abs(),
                _ => f64::NAN,
            };
            t.check(err, 1e-9);
        }
    })
}

/// `|φ(g₁) − φ(g₂)| ≤ |g₁ − g₂| + 1e-12` for the softplus `φ`, 10⁵ pairs in
/// `[-50, 50]`. The reported excess is `|Δφ| − |Δg|`.
pub fn lipschitz_suite(seed: u64) -> SuiteReport {
    timed("lipschitz", |t| {
        let mut rng = stream_rng(seed, 103);
        for _ in 0..100_000 {
            let g1: f64 = rng.gen_range(-50.0..=50.0);
            let g2: f64 = rng.gen_range(-50.0..=50.0);
            let excess = (log1p_exp(g1) - log1p_exp(g2)).abs() - (g1 - g2).abs();
            t.check(excess.max(0.0), 1e-12);
        }
    })
}

/// The ℓ1/ℓ∞ duality behind the linear inner sup: the analytic value equals
/// the best of the `2d` ball vertices and dominates random feasible points.
pub fn holder_suite(seed: u64) -> SuiteReport {
    timed("holder", |t| {
        let mut rng = stream_rng(seed, 104);
        for _ in 0..1000 {
            let d = rng.gen_range(1..=8);
            let radius = rng.gen_range(0.0..=3.0);
            let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..=2.0)).collect();
            let Ok(analytic) = sup_linear_l1(&a, radius) else {
                t.check(f64::NAN, 0.0);
                continue;
            };
            let vertex = a
                .iter()
                .flat_map(|&ai| [ai * radius, -ai * radius])
                .fold(f64::NEG_INFINITY, f64::max);
            t.check((analytic - vertex).abs(), 1e-12);
            for _ in 0..10 {
                let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let norm: f64 = v.iter().map(|x| x.abs()).sum();
                let target = radius * rng.gen::<f64>();
                v.iter_mut().for_each(|x| *x *= target / norm);
                let inner: f64 = a.iter().zip(&v).map(|(x, y)| x * y).sum();
                t.check((inner - analytic).max(0.0), 1e-12);
            }
        }
    })
}

fn l1_ball_nearest(p: [f64; 2], radius: f64, centre: [f64; 2], half_width: f64, step: f64) -> [f64; 2] {
    let steps = (2.0 * half_width / step).round() as i64;
    let mut best = (f64::INFINITY, centre);
    for i in 0..=steps {
        let x = centre[0] - half_width + i as f64 * step;
        for j in 0..=steps {
            let y = centre[1] - half_width + j as f64 * step;
            if x.abs() + y.abs() > radius {
                continue;
            }
            let d = (x - p[0]).powi(2) + (y - p[1]).powi(2);
            if d < best.0 {
                best = (d, [x, y]);
            }
        }
    }
    best.1
}

/// 500 random 2-D points against a grid search of the ball (step 1e-2, then
/// 1e-4 around the coarse winner): output distance ≤ 1e-3. Points already in
/// the ball must come back unchanged.
pub fn projection_suite(seed: u64) -> SuiteReport {
    timed("projection", |t| {
        let mut rng = stream_rng(seed, 105);
        for _ in 0..500 {
            let radius = rng.gen_range(0.05..=2.0);
            let p = [rng.gen_range(-3.0..=3.0), rng.gen_range(-3.0..=3.0)];
            let Ok(out) = project_l1(&p, radius) else {
                t.check(f64::NAN, 0.0);
                continue;
            };
            let coarse = l1_ball_nearest(p, radius, [0.0, 0.0], radius, 1e-2);
            let fine = l1_ball_nearest(p, radius, coarse, 2e-2, 1e-4);
            t.check(((out[0] - fine[0]).powi(2) + (out[1] - fine[1]).powi(2)).sqrt(), 1e-3);

            let norm = p[0].abs() + p[1].abs();
            let inside = if norm <= radius {
                p
            } else {
                let s = rng.gen_range(0.0..1.0) * radius / norm;
                [p[0] * s, p[1] * s]
            };
            t.flag(project_l1(&inside, radius).is_ok_and(|q| q == inside));
        }
    })
}

fn gradient_error<O: Objective>(obj: &O, point: &[f64]) -> f64 {
    let mut analytic = vec![0.0; obj.dim()];
    let mut numeric = vec![0.0; obj.dim()];
    obj.gradient(point, &mut analytic);
    central_difference_gradient(|q| obj.value(q), point, 1e-6, &mut numeric);
    let diff = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    diff / scale
}

/// Analytic vs. central-difference gradients of the H and LOGLIK_PART1
/// objectives at 100 random points each; relative error (Euclidean) ≤ 1e-4.
pub fn gradient_suite(seed: u64) -> SuiteReport {
    timed("gradient", |t| {
        let mut rng = stream_rng(seed, 106);
        for _ in 0..100 {
            let n = rng.gen_range(5..=40);
            let k = rng.gen_range(2..=10);
            let m = rng.gen_range(1..=4);
            let x = Array2::from_shape_simple_fn((n, k), || f64::from(u8::from(rng.gen::<bool>())));
            let weights: Vec<f64> = (0..n).map(|_| if rng.gen() { 1.0 } else { -1.0 } / n as f64).collect();
            let h = HObjective::new(&x, &weights);
            let p: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            t.check(gradient_error(&h, &p), 1e-4);
            let part1 = LoglikPart1Objective::new(&x, &weights, m);
            let p: Vec<f64> = (0..part1.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            t.check(gradient_error(&part1, &p), 1e-4);
        }
    })
}

/// 200 instances: the CD-1 log-partition equals the explicit mean-field
/// composition hidden → visible → softplus sum, within 1e-12.
pub fn meanfield_suite(seed: u64) -> SuiteReport {
    timed("meanfield", |t| {
        let mut rng = stream_rng(seed, 107);
        for _ in 0..200 {
            let (k, m) = (rng.gen_range(1..=12), rng.gen_range(1..=8));
            let w = Array2::from_shape_simple_fn((k, m), || rng.gen_range(-2.0..=2.0));
            let params = RbmParams::from_weights(w.clone()).expect("valid shape");
            let x = random_bits(&mut rng, k);
            let composed = meanfield_hidden(&params, &x)
                .and_then(|h| meanfield_visible(&params, h.as_slice().expect("contiguous")))
                .map(|xt| w.t().dot(&xt).iter().map(|&g| log1p_exp(g)).sum::<f64>());
            let err = match (cd1_log_partition(&params, &x), composed) {
                (Ok(a), Ok(b)) => (a - b).abs(),
                _ => f64::NAN,
            };
            t.check(err, 1e-12);
        }
    })
}

/// `|t_W(x)| ≤ max_j ‖W_{·j}‖₁` at 10⁴ random `(W, u, j, x)`.
pub fn t_range_suite(seed: u64) -> SuiteReport {
    timed("t_range", |t| {
        let mut rng = stream_rng(seed, 108);
        for _ in 0..10_000 {
            let (k, m) = (rng.gen_range(1..=12), rng.gen_range(1..=6));
            let radius = rng.gen_range(0.0..=5.0);
            let w = projected_weights(k, m, radius, &mut rng);
            let cap = w
                .columns()
                .into_iter()
                .map(|c| c.iter().map(|v: &f64| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            let x: Array1<f64> = (0..k).map(|_| f64::from(u8::from(rng.gen::<bool>()))).collect();
            let (u, j) = (rng.gen_range(0..k), rng.gen_range(0..m));
            let value = compositional_t(w.view(), x.view(), u, j);
            t.check((value.abs() - cap).max(0.0), 0.0);
        }
    })
}

pub fn run_all(seed: u64, opts: VerifyOptions) -> Vec<SuiteReport> {
    vec![
        factorization_suite(seed, opts),
        partition_suite(seed),
        lipschitz_suite(seed),
        projection_suite(seed),
        gradient_suite(seed),
        holder_suite(seed),
        meanfield_suite(seed),
        t_range_suite(seed),
    ]
}
