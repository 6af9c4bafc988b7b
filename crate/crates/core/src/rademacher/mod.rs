//! Monte-Carlo estimation of empirical Rademacher complexity
//! `R̂_S(H) = E_σ[sup_{h∈H} (1/n) Σ_i σ_i h(x⁽ⁱ⁾)]`.
//!
//! Each estimator evaluates the inner supremum once per σ vector of a
//! [`RademacherBatch`] and reports the mean and standard error. The inner
//! supremum is exact for the linear classes and the finite class; for the
//! non-linear classes it is the best iterate of a multi-restart projected
//! gradient ascent, so the reported value never exceeds the true supremum.
//!
//! Per-σ work runs on the rayon pool. Optimizer restarts for σ index `i` draw
//! from stream `i + 1` of the batch seed, which keeps every report
//! independent of the thread count.

mod compositional;
mod linear;
mod optimizer;
mod projection;
mod smooth;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::mean_and_stderr;
use crate::rbm::BinaryDataset;

pub use compositional::{
    compositional_t, count_quantized_behaviors, estimate_r_cd1_log_z, estimate_r_finite_t, estimate_r_t,
    random_t_members, Cd1LogZObjective, TMember, TObjective,
};
pub use linear::{estimate_r_f, estimate_r_g, sup_linear_l1};
pub use optimizer::{central_difference_gradient, maximize, L1Block, Maximum, Objective, OptimizerSettings};
pub use projection::{project_l1, project_l1_in_place};
pub use smooth::{estimate_r_h, estimate_r_loglik_part1, HObjective, LoglikPart1Objective};

/// Treatment of the hidden bias `c` in the estimated classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CMode {
    /// `c = 0`; a free `c` would make `sup_c c·Σσ_i` unbounded.
    #[default]
    FixedZero,
}

/// ℓ1 radii of the hypothesis balls: `‖b‖₁ ≤ B`, `‖W_{·j}‖₁ ≤ W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    pub b_radius: f64,
    pub w_radius: f64,
    pub c_mode: CMode,
}

impl ConstraintSpec {
    pub fn new(b_radius: f64, w_radius: f64) -> Result<Self> {
        for (name, r) in [("B_radius", b_radius), ("W_radius", w_radius)] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {r}")));
            }
        }
        Ok(Self {
            b_radius,
            w_radius,
            c_mode: CMode::FixedZero,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassName {
    F,
    G,
    H,
    LoglikPart1,
    T,
    Cd1LogZ,
    FiniteT,
}

impl ClassName {
    pub const ALL: [ClassName; 7] = [
        ClassName::F,
        ClassName::G,
        ClassName::H,
        ClassName::LoglikPart1,
        ClassName::T,
        ClassName::Cd1LogZ,
        ClassName::FiniteT,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassName::F => "F",
            ClassName::G => "G",
            ClassName::H => "H",
            ClassName::LoglikPart1 => "LOGLIK_PART1",
            ClassName::T => "T",
            ClassName::Cd1LogZ => "CD1_LOGZ",
            ClassName::FiniteT => "FINITE_T",
        }
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassName::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown class name `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSupKind {
    Analytic,
    Optimized,
    FiniteMax,
}

impl InnerSupKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InnerSupKind::Analytic => "analytic",
            InnerSupKind::Optimized => "optimized",
            InnerSupKind::FiniteMax => "finite-max",
        }
    }
}

impl fmt::Display for InnerSupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Seeded σ vectors and, once an estimator has run, the per-σ suprema.
#[derive(Debug, Clone, PartialEq)]
pub struct RademacherBatch {
    pub sigma_vectors: Vec<Vec<i8>>,
    pub seed: u64,
    pub per_sigma_values: Vec<f64>,
}

impl RademacherBatch {
    pub fn n(&self) -> usize {
        self.sigma_vectors.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.sigma_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_vectors.is_empty()
    }

    fn check_against(&self, data: &BinaryDataset) -> Result<()> {
        if self.n() != data.len() {
            return Err(Error::DimensionMismatch {
                what: "sigma vector length",
                expected: data.len(),
                found: self.n(),
            });
        }
        Ok(())
    }
}

/// `count` i.i.d. uniform `±1` vectors of length `n`.
pub fn sample_sigma_batch(n: usize, count: usize, seed: u64) -> Result<RademacherBatch> {
    if n == 0 || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "sigma batch needs n >= 1 and count >= 1, got n={n}, count={count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma_vectors = (0..count)
        .map(|_| (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
        .collect();
    Ok(RademacherBatch {
        sigma_vectors,
        seed,
        per_sigma_values: Vec::new(),
    })
}

/// Result of one estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub class_name: ClassName,
    pub mean: f64,
    pub stderr: f64,
    /// σ vectors that contributed to `mean` (excluded ones are not counted).
    pub num_sigma: usize,
    /// σ vectors whose objective went non-finite.
    pub excluded: usize,
    pub optimizer_restarts: usize,
    pub optimizer_iterations: usize,
    pub inner_sup_kind: InnerSupKind,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub m: Option<usize>,
    pub b_radius: Option<f64>,
    pub w_radius: Option<f64>,
}

/// Shape and radius metadata echoed into a report.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ReportMeta {
    pub class_name: ClassName,
    pub inner_sup_kind: InnerSupKind,
    pub restarts: usize,
    pub iterations: usize,
    pub m: Option<usize>,
    pub b_radius: Option<f64>,
    pub w_radius: Option<f64>,
}

/// Evaluate `inner` for every σ (in parallel), store the values on the batch
/// and summarise the finite ones.
pub(crate) fn run_estimate<F>(
    data: &BinaryDataset,
    batch: &mut RademacherBatch,
    meta: ReportMeta,
    inner: F,
) -> Result<EstimateReport>
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    batch.check_against(data)?;
    let n = data.len() as f64;
    let values: Vec<f64> = batch
        .sigma_vectors
        .par_iter()
        .enumerate()
        .map(|(idx, sigma)| {
            let weights: Vec<f64> = sigma.iter().map(|&s| f64::from(s) / n).collect();
            inner(idx, &weights)
        })
        .collect();
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let excluded = values.len() - finite.len();
    if finite.is_empty() {
        return Err(Error::NonFinite("every per-sigma objective"));
    }
    let (mean, stderr) = mean_and_stderr(&finite);
    batch.per_sigma_values = values;
    Ok(EstimateReport {
        class_name: meta.class_name,
        mean,
        stderr,
        num_sigma: finite.len(),
        excluded,
        optimizer_restarts: meta.restarts,
        optimizer_iterations: meta.iterations,
        inner_sup_kind: meta.inner_sup_kind,
        seed: batch.seed,
        n: data.len(),
        k: data.dim(),
        m: meta.m,
        b_radius: meta.b_radius,
        w_radius: meta.w_radius,
    })
}

/// RNG for the optimizer restarts of σ index `idx`.
pub(crate) fn restart_rng(seed: u64, idx: usize) -> ChaCha8Rng {
    crate::stream_rng(seed, idx as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_batch_examples() {
        let b = sample_sigma_batch(1, 1, 3).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.sigma_vectors[0][0] == 1 || b.sigma_vectors[0][0] == -1);

        assert_eq!(sample_sigma_batch(7, 20, 5).unwrap(), sample_sigma_batch(7, 20, 5).unwrap());
        assert_ne!(sample_sigma_batch(7, 20, 5).unwrap(), sample_sigma_batch(7, 20, 6).unwrap());
        assert!(sample_sigma_batch(0, 3, 1).is_err());
        assert!(sample_sigma_batch(3, 0, 1).is_err());
    }

    #[test]
    fn sigma_coordinates_are_centred() {
        let b = sample_sigma_batch(4, 100_000, 11).unwrap();
        for coord in 0..4 {
            let mean = b.sigma_vectors.iter().map(|s| f64::from(s[coord])).sum::<f64>() / 1e5;
            assert!(mean.abs() <= 0.02, "coordinate {coord}: {mean}");
        }
        assert!(b.sigma_vectors.iter().flatten().all(|&s| s == 1 || s == -1));
    }

    #[test]
    fn class_names_parse() {
        for c in ClassName::ALL {
            assert_eq!(c.as_str().parse::<ClassName>().unwrap(), c);
        }
        assert!("Q".parse::<ClassName>().is_err());
    }

    #[test]
    fn constraint_spec_rejects_negative_radii() {
        assert!(ConstraintSpec::new(-1.0, 0.0).is_err());
        assert!(ConstraintSpec::new(0.0, f64::INFINITY).is_err());
        assert_eq!(ConstraintSpec::new(1.0, 2.0).unwrap().c_mode, CMode::FixedZero);
    }
}
