//! Exact restricted Boltzmann machine.
//!
//! Energy of a joint state is `-xᵀb - hᵀc - xᵀWh` with `x ∈ {0,1}^k`,
//! `h ∈ {0,1}^m`. Everything here is computed exactly by enumeration, so
//! all entry points carry size guards (`k ≤ 20`, `m ≤ 20`, `k + m ≤ 24`).
//!
//! Visible configurations are indexed so that bit `i` of the index is the
//! value of visible unit `i` (unit 0 is the least significant bit).

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_len, ensure_limit, Error, Result};
use crate::numerics::{log1p_exp, LogSumExp};

pub const MAX_VISIBLE: usize = 20;
pub const MAX_HIDDEN: usize = 20;
pub const MAX_JOINT: usize = 24;

/// The parameter triple `{c, b, W}` of a `k`-visible, `m`-hidden RBM.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    weights: Array2<f64>,
    visible_bias: Array1<f64>,
    hidden_bias: Array1<f64>,
}

impl RbmParams {
    /// `weights` is `k × m`, `visible_bias` has length `k`, `hidden_bias` length `m`.
    pub fn new(
        weights: Array2<f64>,
        visible_bias: Array1<f64>,
        hidden_bias: Array1<f64>,
    ) -> Result<Self> {
        let (k, m) = weights.dim();
        if k == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "RBM needs k >= 1 and m >= 1, got k={k}, m={m}"
            )));
        }
        ensure_len("visible bias", k, visible_bias.len())?;
        ensure_len("hidden bias", m, hidden_bias.len())?;
        if !weights.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        if !visible_bias.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("visible bias"));
        }
        if !hidden_bias.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("hidden bias"));
        }
        Ok(Self {
            weights,
            visible_bias,
            hidden_bias,
        })
    }

    pub fn zeros(k: usize, m: usize) -> Result<Self> {
        Self::new(Array2::zeros((k, m)), Array1::zeros(k), Array1::zeros(m))
    }

    /// Bias-free machine, the setting of the mean-field CD-1 analysis.
    pub fn from_weights(weights: Array2<f64>) -> Result<Self> {
        let (k, m) = weights.dim();
        Self::new(weights, Array1::zeros(k), Array1::zeros(m))
    }

    /// All parameters drawn i.i.d. uniform in `[-scale, scale]`.
    pub fn random_uniform<R: Rng + ?Sized>(k: usize, m: usize, scale: f64, rng: &mut R) -> Result<Self> {
        let mut draw = || if scale > 0.0 { rng.gen_range(-scale..=scale) } else { 0.0 };
        let weights = Array2::from_shape_simple_fn((k, m), &mut draw);
        let visible_bias = Array1::from_shape_simple_fn(k, &mut draw);
        let hidden_bias = Array1::from_shape_simple_fn(m, &mut draw);
        Self::new(weights, visible_bias, hidden_bias)
    }

    pub fn visible(&self) -> usize {
        self.weights.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn visible_bias(&self) -> &Array1<f64> {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &Array1<f64> {
        &self.hidden_bias
    }

    pub fn into_parts(self) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        (self.weights, self.visible_bias, self.hidden_bias)
    }
}

/// `n` binary samples of length `k`, one per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    samples: Array2<u8>,
}

impl BinaryDataset {
    pub fn new(samples: Array2<u8>) -> Result<Self> {
        let (n, k) = samples.dim();
        if n == 0 || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "dataset needs n >= 1 and k >= 1, got n={n}, k={k}"
            )));
        }
        if samples.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("dataset entries must be 0 or 1".into()));
        }
        Ok(Self { samples })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        for row in rows {
            ensure_len("dataset row", k, row.len())?;
        }
        let flat: Vec<u8> = rows.iter().flatten().copied().collect();
        let samples = Array2::from_shape_vec((n, k), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> &Array2<u8> {
        &self.samples
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, u8> {
        self.samples.row(i)
    }

    /// Samples as reals, for the estimators' inner products.
    pub fn to_f64(&self) -> Array2<f64> {
        self.samples.mapv(f64::from)
    }

    /// Index of each sample in the visible-configuration ordering.
    pub fn config_indices(&self) -> Vec<usize> {
        self.samples
            .axis_iter(Axis(0))
            .map(|row| config_index(row.iter().copied()))
            .collect()
    }

    /// New dataset holding the given rows, in that order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.samples.select(Axis(0), rows))
    }
}

/// `p(x)` over all `2^k` visible configurations, plus `ln Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub probabilities: Vec<f64>,
    pub log_partition: f64,
}

/// Visible configuration for an index: bit `i` is unit `i`.
pub fn config_from_index(index: usize, k: usize) -> Vec<u8> {
    (0..k).map(|i| ((index >> i) & 1) as u8).collect()
}

pub fn config_index<I: IntoIterator<Item = u8>>(bits: I) -> usize {
    bits.into_iter()
        .enumerate()
        .fold(0, |acc, (i, b)| acc | ((b as usize & 1) << i))
}

pub(crate) fn check_binary(what: &'static str, expected: usize, v: &[u8]) -> Result<()> {
    ensure_len(what, expected, v.len())?;
    if v.iter().any(|&b| b > 1) {
        return Err(Error::InvalidArgument(format!("{what} must be binary")));
    }
    Ok(())
}

fn dot_u8(weights: ArrayView1<'_, f64>, x: &[u8]) -> f64 {
    weights
        .iter()
        .zip(x)
        .filter(|(_, &b)| b == 1)
        .map(|(w, _)| w)
        .sum()
}

/// `-xᵀb - hᵀc - xᵀWh`.
pub fn energy(params: &RbmParams, x: &[u8], h: &[u8]) -> Result<f64> {
    check_binary("visible state", params.visible(), x)?;
    check_binary("hidden state", params.hidden(), h)?;
    let mut e = -dot_u8(params.visible_bias.view(), x) - dot_u8(params.hidden_bias.view(), h);
    for (j, &hj) in h.iter().enumerate() {
        if hj == 1 {
            e -= dot_u8(params.weights.column(j), x);
        }
    }
    Ok(e)
}

/// Factorized "part 1" of the log-likelihood, `ln Σ_h exp(-Energy(x, h))`.
///
/// The sum over `h` factorizes per hidden unit once `exp(xᵀb)` is pulled out,
/// so the visible-bias term appears once:
/// `xᵀb + Σ_j ln(1 + exp(xᵀW_j + c_j))`.
pub fn free_energy_part1(params: &RbmParams, x: &[u8]) -> Result<f64> {
    check_binary("visible state", params.visible(), x)?;
    Ok(part1_unchecked(params, x))
}

fn part1_unchecked(params: &RbmParams, x: &[u8]) -> f64 {
    let xb = dot_u8(params.visible_bias.view(), x);
    let m = params.hidden();
    xb + (0..m)
        .map(|j| log1p_exp(dot_u8(params.weights.column(j), x) + params.hidden_bias[j]))
        .sum::<f64>()
}

/// `ln Σ_h exp(-Energy(x, h))` by enumerating all `2^m` hidden states.
pub fn part1_bruteforce(params: &RbmParams, x: &[u8]) -> Result<f64> {
    check_binary("visible state", params.visible(), x)?;
    ensure_limit("m", params.hidden(), MAX_HIDDEN)?;
    let m = params.hidden();
    let xb = dot_u8(params.visible_bias.view(), x);
    // per-unit contribution of h_j = 1
    let unit: Vec<f64> = (0..m)
        .map(|j| params.hidden_bias[j] + dot_u8(params.weights.column(j), x))
        .collect();
    let acc: LogSumExp = (0..1usize << m)
        .map(|hidx| {
            let on: f64 = (0..m).filter(|j| (hidx >> j) & 1 == 1).map(|j| unit[j]).sum();
            xb + on
        })
        .collect();
    Ok(acc.value())
}

/// `ln Z` as the log-sum-exp of the factorized part 1 over all `2^k` visibles.
pub fn log_partition_factorized(params: &RbmParams) -> Result<f64> {
    ensure_limit("k", params.visible(), MAX_VISIBLE)?;
    let k = params.visible();
    let acc: LogSumExp = (0..1usize << k)
        .map(|idx| part1_unchecked(params, &config_from_index(idx, k)))
        .collect();
    Ok(acc.value())
}

/// `ln Z` by the double enumeration over every `(x, h)` pair.
pub fn log_partition_bruteforce(params: &RbmParams) -> Result<f64> {
    let (k, m) = (params.visible(), params.hidden());
    ensure_limit("k + m", k + m, MAX_JOINT)?;
    let mut acc = LogSumExp::new();
    let mut h = vec![0u8; m];
    for xidx in 0..1usize << k {
        let x = config_from_index(xidx, k);
        for hidx in 0..1usize << m {
            for (j, hj) in h.iter_mut().enumerate() {
                *hj = ((hidx >> j) & 1) as u8;
            }
            acc.push(-energy(params, &x, &h)?);
        }
    }
    Ok(acc.value())
}

/// `ln p(x) = part1(x) - ln Z`.
pub fn exact_log_likelihood(params: &RbmParams, x: &[u8]) -> Result<f64> {
    let part1 = free_energy_part1(params, x)?;
    Ok(part1 - log_partition_factorized(params)?)
}

/// Log-probability of every visible configuration, in index order.
pub fn log_probability_table(params: &RbmParams) -> Result<(Vec<f64>, f64)> {
    ensure_limit("k", params.visible(), MAX_VISIBLE)?;
    let k = params.visible();
    let part1: Vec<f64> = (0..1usize << k)
        .map(|idx| part1_unchecked(params, &config_from_index(idx, k)))
        .collect();
    let log_z = part1.iter().copied().collect::<LogSumExp>().value();
    Ok((part1.into_iter().map(|p| p - log_z).collect(), log_z))
}

pub fn exact_distribution(params: &RbmParams) -> Result<ExactDistribution> {
    let (log_probs, log_partition) = log_probability_table(params)?;
    Ok(ExactDistribution {
        probabilities: log_probs.into_iter().map(f64::exp).collect(),
        log_partition,
    })
}

/// Mean exact log-likelihood (nats per sample) of a dataset.
pub fn mean_exact_log_likelihood(params: &RbmParams, data: &BinaryDataset) -> Result<f64> {
    ensure_len("dataset width", params.visible(), data.dim())?;
    let (log_probs, _) = log_probability_table(params)?;
    let total: f64 = data.config_indices().into_iter().map(|i| log_probs[i]).sum();
    Ok(total / data.len() as f64)
}

/// `n` i.i.d. draws from the exact distribution by inverse CDF.
pub fn sample_dataset(params: &RbmParams, n: usize, seed: u64) -> Result<BinaryDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count n must be >= 1".into()));
    }
    let k = params.visible();
    let dist = exact_distribution(params)?;
    let mut cdf = Vec::with_capacity(dist.probabilities.len());
    let mut running = 0.0;
    for p in &dist.probabilities {
        running += p;
        cdf.push(running);
    }
    let last = cdf.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Array2::zeros((n, k));
    for mut row in samples.axis_iter_mut(Axis(0)) {
        let u: f64 = rng.gen::<f64>() * running;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        for (i, v) in row.iter_mut().enumerate() {
            *v = ((idx >> i) & 1) as u8;
        }
    }
    BinaryDataset::new(samples)
}
