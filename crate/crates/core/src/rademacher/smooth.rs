//! Softplus classes: `h(x) = bᵀx + ln(1 + e^{wᵀx})` and its `m`-column sum,
//! the data-dependent part of the exact log-likelihood with `c = 0`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::numerics::{log1p_exp, sigmoid};
use crate::rbm::BinaryDataset;

use super::optimizer::{maximize, L1Block, Objective, OptimizerSettings};
use super::{restart_rng, run_estimate, ClassName, ConstraintSpec, EstimateReport, InnerSupKind, RademacherBatch, ReportMeta};

/// `(1/n)Σ σ_i [m·bᵀx⁽ⁱ⁾ + Σ_j ln(1 + exp(w_jᵀx⁽ⁱ⁾))]` over `[b, w_1, …, w_m]`.
///
/// With `columns = 1` this is the H objective.
#[derive(Debug, Clone)]
pub struct LoglikPart1Objective<'a> {
    x: &'a Array2<f64>,
    weights: Array1<f64>,
    signed_mean: Array1<f64>,
    columns: usize,
}

impl<'a> LoglikPart1Objective<'a> {
    /// `weights[i]` is `σ_i / n`.
    pub fn new(x: &'a Array2<f64>, weights: &[f64], columns: usize) -> Self {
        let weights = Array1::from(weights.to_vec());
        let signed_mean = x.t().dot(&weights);
        Self {
            x,
            weights,
            signed_mean,
            columns,
        }
    }

    fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn blocks(&self, spec: &ConstraintSpec) -> Vec<L1Block> {
        let k = self.k();
        std::iter::once(L1Block {
            start: 0,
            len: k,
            radius: spec.b_radius,
        })
        .chain((0..self.columns).map(|j| L1Block {
            start: (j + 1) * k,
            len: k,
            radius: spec.w_radius,
        }))
        .collect()
    }
}

impl Objective for LoglikPart1Objective<'_> {
    fn dim(&self) -> usize {
        self.k() * (self.columns + 1)
    }

    fn value(&self, p: &[f64]) -> f64 {
        let k = self.k();
        let b = ArrayView1::from(&p[..k]);
        let mut total = self.columns as f64 * b.dot(&self.signed_mean);
        for j in 0..self.columns {
            let w = ArrayView1::from(&p[(j + 1) * k..(j + 2) * k]);
            let pre = self.x.dot(&w);
            total += pre
                .iter()
                .zip(&self.weights)
                .map(|(&g, &s)| s * log1p_exp(g))
                .sum::<f64>();
        }
        total
    }

    fn gradient(&self, p: &[f64], grad: &mut [f64]) {
        let k = self.k();
        let scale = self.columns as f64;
        for (g, v) in grad[..k].iter_mut().zip(&self.signed_mean) {
            *g = scale * v;
        }
        for j in 0..self.columns {
            let w = ArrayView1::from(&p[(j + 1) * k..(j + 2) * k]);
            let coef: Array1<f64> = self
                .x
                .dot(&w)
                .iter()
                .zip(&self.weights)
                .map(|(&g, &s)| s * sigmoid(g))
                .collect();
            let gw = self.x.t().dot(&coef);
            grad[(j + 1) * k..(j + 2) * k].copy_from_slice(gw.as_slice().expect("contiguous"));
        }
    }
}

/// The single-column class H.
#[derive(Debug, Clone)]
pub struct HObjective<'a>(LoglikPart1Objective<'a>);

impl<'a> HObjective<'a> {
    pub fn new(x: &'a Array2<f64>, weights: &[f64]) -> Self {
        Self(LoglikPart1Objective::new(x, weights, 1))
    }

    pub fn blocks(&self, spec: &ConstraintSpec) -> Vec<L1Block> {
        self.0.blocks(spec)
    }
}

impl Objective for HObjective<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, p: &[f64]) -> f64 {
        self.0.value(p)
    }

    fn gradient(&self, p: &[f64], grad: &mut [f64]) {
        self.0.gradient(p, grad)
    }
}

fn check_optimizer(opt: &OptimizerSettings) -> Result<()> {
    if opt.restarts == 0 || opt.iterations == 0 || !(opt.step_size > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "optimizer needs restarts >= 1, iterations >= 1 and a positive step, got {opt:?}"
        )));
    }
    Ok(())
}

fn softplus_estimate(
    class_name: ClassName,
    columns: usize,
    data: &BinaryDataset,
    spec: &ConstraintSpec,
    batch: &mut RademacherBatch,
    opt: &OptimizerSettings,
) -> Result<EstimateReport> {
    check_optimizer(opt)?;
    let x = data.to_f64();
    let seed = batch.seed;
    let meta = ReportMeta {
        class_name,
        inner_sup_kind: InnerSupKind::Optimized,
        restarts: opt.restarts,
        iterations: opt.iterations,
        m: Some(columns),
        b_radius: Some(spec.b_radius),
        w_radius: Some(spec.w_radius),
    };
    run_estimate(data, batch, meta, |idx, weights| {
        let objective = LoglikPart1Objective::new(&x, weights, columns);
        let blocks = objective.blocks(spec);
        maximize(&objective, &blocks, opt, &mut restart_rng(seed, idx)).value
    })
}

/// Class H: `x ↦ bᵀx + ln(1 + e^{wᵀx})`, `‖b‖₁ ≤ B`, `‖w‖₁ ≤ W`, `c = 0`.
pub fn estimate_r_h(
    data: &BinaryDataset,
    spec: &ConstraintSpec,
    batch: &mut RademacherBatch,
    opt: &OptimizerSettings,
) -> Result<EstimateReport> {
    let mut report = softplus_estimate(ClassName::H, 1, data, spec, batch, opt)?;
    report.m = None;
    Ok(report)
}

/// Part 1 of the log-likelihood, `Σ_j [bᵀx + ln(1 + e^{w_jᵀx})]`, with shared `b`.
pub fn estimate_r_loglik_part1(
    data: &BinaryDataset,
    spec: &ConstraintSpec,
    m: usize,
    batch: &mut RademacherBatch,
    opt: &OptimizerSettings,
) -> Result<EstimateReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    softplus_estimate(ClassName::LoglikPart1, m, data, spec, batch, opt)
}
