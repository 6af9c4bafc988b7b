//! Classes built from the mean-field CD-1 pipeline.
//!
//! `t_W(x) = W_{uj} · σ(Σ_v W_{uv} · σ(xᵀW_{·v}))` is the compositional
//! function whose `k`-fold sum controls the CD-1 log-partition; the CD-1
//! log-partition class itself is estimated directly as well. Both objectives
//! take their gradients by central differences over the `k·m` weights, which
//! are laid out column-major so every column is one ℓ1 block.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView1, ArrayView2, ShapeBuilder};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{log1p_exp, sigmoid};
use crate::rbm::BinaryDataset;
use crate::stream_rng;

use super::optimizer::{central_difference_gradient, maximize, L1Block, Objective, OptimizerSettings};
use super::projection::project_l1_in_place;
use super::{restart_rng, run_estimate, ClassName, ConstraintSpec, EstimateReport, InnerSupKind, RademacherBatch, ReportMeta};

const FD_STEP: f64 = 1e-6;

/// `t_W(x)` for output unit `u` and column `j` (both 0-based).
pub fn compositional_t(weights: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>, u: usize, j: usize) -> f64 {
    let hidden = x.dot(&weights).mapv(sigmoid);
    weights[[u, j]] * sigmoid(weights.row(u).dot(&hidden))
}

fn column_blocks(k: usize, m: usize, radius: f64) -> Vec<L1Block> {
    (0..m)
        .map(|j| L1Block {
            start: j * k,
            len: k,
            radius,
        })
        .collect()
}

fn as_matrix(p: &[f64], k: usize, m: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((k, m).f(), p).expect("parameter length k*m")
}

/// `(1/n)Σ σ_i t_W(x⁽ⁱ⁾)` for a fixed `(u, j)`.
#[derive(Debug, Clone)]
pub struct TObjective<'a> {
    x: &'a Array2<f64>,
    weights: &'a [f64],
    m: usize,
    u: usize,
    j: usize,
}

impl<'a> TObjective<'a> {
    pub fn new(x: &'a Array2<f64>, weights: &'a [f64], m: usize, u: usize, j: usize) -> Self {
        Self { x, weights, m, u, j }
    }
}

impl Objective for TObjective<'_> {
    fn dim(&self) -> usize {
        self.x.ncols() * self.m
    }

    fn value(&self, p: &[f64]) -> f64 {
        let w = as_matrix(p, self.x.ncols(), self.m);
        let hidden = self.x.dot(&w).mapv(sigmoid);
        let inner = hidden.dot(&w.row(self.u));
        let scale = w[[self.u, self.j]];
        inner
            .iter()
            .zip(self.weights)
            .map(|(&a, &s)| s * scale * sigmoid(a))
            .sum()
    }

    fn gradient(&self, p: &[f64], grad: &mut [f64]) {
        central_difference_gradient(|q| self.value(q), p, FD_STEP, grad);
    }
}

/// `(1/n)Σ σ_i · cd1_log_partition(W; x⁽ⁱ⁾)`.
#[derive(Debug, Clone)]
pub struct Cd1LogZObjective<'a> {
    x: &'a Array2<f64>,
    weights: &'a [f64],
    m: usize,
}

impl<'a> Cd1LogZObjective<'a> {
    pub fn new(x: &'a Array2<f64>, weights: &'a [f64], m: usize) -> Self {
        Self { x, weights, m }
    }
}

impl Objective for Cd1LogZObjective<'_> {
    fn dim(&self) -> usize {
        self.x.ncols() * self.m
    }

    fn value(&self, p: &[f64]) -> f64 {
        let w = as_matrix(p, self.x.ncols(), self.m);
        let hidden = self.x.dot(&w).mapv(sigmoid);
        let visible = hidden.dot(&w.t()).mapv(sigmoid);
        let pre = visible.dot(&w);
        pre.rows()
            .into_iter()
            .zip(self.weights)
            .map(|(row, &s)| s * row.iter().map(|&g| log1p_exp(g)).sum::<f64>())
            .sum()
    }

    fn gradient(&self, p: &[f64], grad: &mut [f64]) {
        central_difference_gradient(|q| self.value(q), p, FD_STEP, grad);
    }
}

fn check_opt(opt: &OptimizerSettings, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    if opt.restarts == 0 || opt.iterations == 0 || !(opt.step_size > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid optimizer settings {opt:?}")));
    }
    Ok(())
}

/// Class T: best `(u, j)` pair, each maximized over the column-bounded `W`.
pub fn estimate_r_t(
    data: &BinaryDataset,
    spec: &ConstraintSpec,
    m: usize,
    batch: &mut RademacherBatch,
    opt: &OptimizerSettings,
) -> Result<EstimateReport> {
    check_opt(opt, m)?;
    let x = data.to_f64();
    let k = data.dim();
    let blocks = column_blocks(k, m, spec.w_radius);
    let seed = batch.seed;
    let meta = ReportMeta {
        class_name: ClassName::T,
        inner_sup_kind: InnerSupKind::Optimized,
        restarts: opt.restarts,
        iterations: opt.iterations,
        m: Some(m),
        b_radius: None,
        w_radius: Some(spec.w_radius),
    };
    run_estimate(data, batch, meta, |idx, weights| {
        let mut rng = restart_rng(seed, idx);
        let mut best = f64::NEG_INFINITY;
        for u in 0..k {
            for j in 0..m {
                let objective = TObjective::new(&x, weights, m, u, j);
                let value = maximize(&objective, &blocks, opt, &mut rng).value;
                if !value.is_finite() {
                    return f64::NAN;
                }
                best = best.max(value);
            }
        }
        best
    })
}

/// CD-1 log-partition class `x ↦ Σ_j ln(1 + exp(x̃ᵀW_{·j}))`.
pub fn estimate_r_cd1_log_z(
    data: &BinaryDataset,
    spec: &ConstraintSpec,
    m: usize,
    batch: &mut RademacherBatch,
    opt: &OptimizerSettings,
) -> Result<EstimateReport> {
    check_opt(opt, m)?;
    let x = data.to_f64();
    let blocks = column_blocks(data.dim(), m, spec.w_radius);
    let seed = batch.seed;
    let meta = ReportMeta {
        class_name: ClassName::Cd1LogZ,
        inner_sup_kind: InnerSupKind::Optimized,
        restarts: opt.restarts,
        iterations: opt.iterations,
        m: Some(m),
        b_radius: None,
        w_radius: Some(spec.w_radius),
    };
    run_estimate(data, batch, meta, |idx, weights| {
        let objective = Cd1LogZObjective::new(&x, weights, m);
        maximize(&objective, &blocks, opt, &mut restart_rng(seed, idx)).value
    })
}

/// One explicit member `t_W` of the compositional class.
#[derive(Debug, Clone, PartialEq)]
pub struct TMember {
    pub weights: Array2<f64>,
    pub u: usize,
    pub j: usize,
}

impl TMember {
    pub fn new(weights: Array2<f64>, u: usize, j: usize) -> Result<Self> {
        let (k, m) = weights.dim();
        if u >= k || j >= m {
            return Err(Error::InvalidArgument(format!(
                "member index (u={u}, j={j}) out of range for a {k}x{m} weight matrix"
            )));
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::NonFinite("member weights"));
        }
        Ok(Self { weights, u, j })
    }

    /// Largest column ℓ1 norm.
    pub fn max_column_l1(&self) -> f64 {
        self.weights
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|w| w.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, x: ArrayView1<'_, f64>) -> f64 {
        compositional_t(self.weights.view(), x, self.u, self.j)
    }
}

/// `count` members with entries uniform in `[-1, 1]`, every column projected
/// onto the ℓ1 ball of `radius`, and a uniformly drawn `(u, j)`.
pub fn random_t_members(k: usize, m: usize, count: usize, radius: f64, seed: u64) -> Result<Vec<TMember>> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidArgument("k and m must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| {
            let mut weights = Array2::from_shape_simple_fn((k, m), || rng.gen_range(-1.0..=1.0));
            for mut col in weights.columns_mut() {
                let mut buf = col.to_vec();
                project_l1_in_place(&mut buf, radius)?;
                col.assign(&ArrayView1::from(&buf));
            }
            let u = rng.gen_range(0..k);
            let j = rng.gen_range(0..m);
            TMember::new(weights, u, j)
        })
        .collect()
}

/// Exact maximum over an explicit finite subclass of T.
pub fn estimate_r_finite_t(data: &BinaryDataset, members: &[TMember], batch: &mut RademacherBatch) -> Result<EstimateReport> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("finite class needs at least one member".into()));
    }
    for member in members {
        if member.weights.nrows() != data.dim() {
            return Err(Error::DimensionMismatch {
                what: "member weight rows",
                expected: data.dim(),
                found: member.weights.nrows(),
            });
        }
    }
    let x = data.to_f64();
    let table: Vec<Vec<f64>> = members
        .iter()
        .map(|member| x.rows().into_iter().map(|row| member.eval(row)).collect())
        .collect();
    let radius = members.iter().map(TMember::max_column_l1).fold(0.0, f64::max);
    let meta = ReportMeta {
        class_name: ClassName::FiniteT,
        inner_sup_kind: InnerSupKind::FiniteMax,
        restarts: 0,
        iterations: 0,
        m: Some(members[0].weights.ncols()),
        b_radius: None,
        w_radius: Some(radius),
    };
    run_estimate(data, batch, meta, |_, weights| {
        table
            .iter()
            .map(|values| values.iter().zip(weights).map(|(t, s)| t * s).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

/// Distinct behaviour vectors `(t_W(x⁽¹⁾), …, t_W(x⁽ⁿ⁾))` over `grid` after
/// rounding each coordinate to the nearest multiple of `epsilon`.
pub fn count_quantized_behaviors(
    data: &BinaryDataset,
    grid: &[Array2<f64>],
    u: usize,
    j: usize,
    epsilon: f64,
) -> Result<usize> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("behaviour grid is empty".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let x = data.to_f64();
    let mut seen = HashSet::new();
    for weights in grid {
        let member = TMember::new(weights.clone(), u, j)?;
        if weights.nrows() != data.dim() {
            return Err(Error::DimensionMismatch {
                what: "grid weight rows",
                expected: data.dim(),
                found: weights.nrows(),
            });
        }
        let behaviour: Vec<i64> = x
            .rows()
            .into_iter()
            .map(|row| (member.eval(row) / epsilon).round() as i64)
            .collect();
        seen.insert(behaviour);
    }
    Ok(seen.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rademacher::sample_sigma_batch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use crate::meanfield::cd1_log_partition_real;
    use std::f64::consts::LN_2;

    fn cd1_objective_reference(x: &Array2<f64>, weights: &[f64], w: ArrayView2<'_, f64>) -> f64 {
        x.rows()
            .into_iter()
            .zip(weights)
            .map(|(row, &s)| s * cd1_log_partition_real(w, row))
            .sum()
    }

    fn bernoulli(n: usize, k: usize, seed: u64) -> BinaryDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BinaryDataset::new(Array2::from_shape_simple_fn((n, k), || rng.gen_range(0..=1u8))).unwrap()
    }

    fn quick() -> OptimizerSettings {
        OptimizerSettings {
            restarts: 4,
            iterations: 200,
            ..OptimizerSettings::default()
        }
    }

    #[test]
    fn t_range_is_bounded_by_the_scale_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for member in random_t_members(5, 3, 200, 1.0, 2).unwrap() {
            let x: Vec<f64> = (0..5).map(|_| f64::from(rng.gen_range(0..=1u8))).collect();
            let t = member.eval(ArrayView1::from(&x));
            assert!(t.abs() <= member.weights[[member.u, member.j]].abs());
            assert!(member.max_column_l1() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn batched_cd1_objective_matches_per_sample_pipeline() {
        let data = bernoulli(12, 4, 3);
        let x = data.to_f64();
        let weights: Vec<f64> = (0..12).map(|i| if i % 3 == 0 { 0.1 } else { -0.05 }).collect();
        let obj = Cd1LogZObjective::new(&x, &weights, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let reference = cd1_objective_reference(&x, &weights, as_matrix(&p, 4, 3));
        assert!((obj.value(&p) - reference).abs() < 1e-13);
    }

    #[test]
    fn t_objective_matches_member_evaluation() {
        let data = bernoulli(10, 3, 5);
        let x = data.to_f64();
        let weights = vec![0.1; 10];
        let member = &random_t_members(3, 2, 1, 1.0, 6).unwrap()[0];
        let obj = TObjective::new(&x, &weights, 2, member.u, member.j);
        let p: Vec<f64> = member.weights.t().iter().copied().collect();
        let direct: f64 = x.rows().into_iter().map(|r| 0.1 * member.eval(r)).sum();
        assert!((obj.value(&p) - direct).abs() < 1e-14);
    }

    #[test]
    fn zero_radius_t_is_zero() {
        let data = bernoulli(10, 3, 7);
        let spec = ConstraintSpec::new(0.0, 0.0).unwrap();
        let mut batch = sample_sigma_batch(10, 10, 8).unwrap();
        let r = estimate_r_t(&data, &spec, 2, &mut batch, &quick()).unwrap();
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn t_estimate_is_nonnegative_and_below_the_radius() {
        let data = bernoulli(15, 3, 9);
        let spec = ConstraintSpec::new(0.0, 1.0).unwrap();
        let mut batch = sample_sigma_batch(15, 12, 10).unwrap();
        let r = estimate_r_t(&data, &spec, 2, &mut batch, &quick()).unwrap();
        assert!(batch.per_sigma_values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(r.mean <= 1.0 + 3.0 * r.stderr);
    }

    #[test]
    fn cd1_class_at_zero_radius_is_constant() {
        let data = bernoulli(10, 3, 11);
        let spec = ConstraintSpec::new(0.0, 0.0).unwrap();
        let mut batch = sample_sigma_batch(10, 10, 12).unwrap();
        estimate_r_cd1_log_z(&data, &spec, 2, &mut batch, &quick()).unwrap();
        for (sigma, v) in batch.sigma_vectors.iter().zip(&batch.per_sigma_values) {
            let s: f64 = sigma.iter().map(|&s| f64::from(s)).sum::<f64>() / 10.0;
            assert!((v - 2.0 * LN_2 * s).abs() < 1e-14);
        }
    }

    #[test]
    fn cd1_class_dominates_zero_weights() {
        let data = bernoulli(12, 3, 13);
        let spec = ConstraintSpec::new(0.0, 1.0).unwrap();
        let mut batch = sample_sigma_batch(12, 10, 14).unwrap();
        estimate_r_cd1_log_z(&data, &spec, 2, &mut batch, &quick()).unwrap();
        for (sigma, v) in batch.sigma_vectors.iter().zip(&batch.per_sigma_values) {
            let s: f64 = sigma.iter().map(|&s| f64::from(s)).sum::<f64>() / 12.0;
            assert!(*v >= 2.0 * LN_2 * s);
        }
    }

    #[test]
    fn finite_class_examples() {
        let data = bernoulli(30, 4, 15);
        let members = random_t_members(4, 2, 1, 1.0, 16).unwrap();
        let mut batch = sample_sigma_batch(30, 4000, 17).unwrap();
        let single = estimate_r_finite_t(&data, &members, &mut batch).unwrap();
        assert!(single.mean.abs() <= 3.0 * single.stderr);
        assert_eq!(single.inner_sup_kind, InnerSupKind::FiniteMax);

        let repeated = vec![members[0].clone(); 5];
        let same = estimate_r_finite_t(&data, &repeated, &mut batch).unwrap();
        assert_eq!((same.mean, same.stderr), (single.mean, single.stderr));

        assert!(estimate_r_finite_t(&data, &[], &mut batch).is_err());
    }

    #[test]
    fn behaviour_counts() {
        let data = bernoulli(20, 4, 18);
        let grid: Vec<Array2<f64>> = random_t_members(4, 2, 1000, 1.0, 19)
            .unwrap()
            .into_iter()
            .map(|m| m.weights)
            .collect();
        assert_eq!(count_quantized_behaviors(&data, &grid[..1], 0, 0, 0.05).unwrap(), 1);
        let dup = vec![grid[0].clone(), grid[0].clone()];
        assert_eq!(count_quantized_behaviors(&data, &dup, 0, 0, 0.05).unwrap(), 1);
        let c = count_quantized_behaviors(&data, &grid, 1, 1, 0.05).unwrap();
        assert!((1..=1000).contains(&c));
        assert!(count_quantized_behaviors(&data, &[], 0, 0, 0.05).is_err());
        assert!(count_quantized_behaviors(&data, &grid, 0, 0, 0.0).is_err());
        assert!(count_quantized_behaviors(&data, &grid, 9, 0, 0.05).is_err());
    }

    #[test]
    fn member_validation() {
        assert!(TMember::new(Array2::zeros((3, 2)), 3, 0).is_err());
        assert!(TMember::new(Array2::zeros((3, 2)), 0, 2).is_err());
        assert!(TMember::new(Array2::from_elem((1, 1), f64::NAN), 0, 0).is_err());
    }
}
