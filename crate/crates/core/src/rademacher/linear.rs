use crate::error::{Error, Result};
use crate::rbm::BinaryDataset;

use super::{run_estimate, ClassName, ConstraintSpec, EstimateReport, InnerSupKind, RademacherBatch, ReportMeta};

/// `sup_{‖b‖₁ ≤ radius} bᵀv = radius · max_j |v_j|`.
pub fn sup_linear_l1(v: &[f64], radius: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be >= 0, got {radius}")));
    }
    let linf = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    Ok(radius * linf)
}

fn linear_estimate(
    class_name: ClassName,
    radius: f64,
    data: &BinaryDataset,
    batch: &mut RademacherBatch,
    meta_radii: (Option<f64>, Option<f64>),
) -> Result<EstimateReport> {
    let x = data.to_f64();
    let meta = ReportMeta {
        class_name,
        inner_sup_kind: InnerSupKind::Analytic,
        restarts: 0,
        iterations: 0,
        m: None,
        b_radius: meta_radii.0,
        w_radius: meta_radii.1,
    };
    // weights already carry the 1/n factor
    run_estimate(data, batch, meta, |_, weights| {
        let v = x.t().dot(&ndarray::ArrayView1::from(weights));
        radius * v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    })
}

/// Linear predictors `x ↦ bᵀx`, `‖b‖₁ ≤ B`.
pub fn estimate_r_f(data: &BinaryDataset, spec: &ConstraintSpec, batch: &mut RademacherBatch) -> Result<EstimateReport> {
    linear_estimate(ClassName::F, spec.b_radius, data, batch, (Some(spec.b_radius), None))
}

/// `x ↦ wᵀx + c` with `‖w‖₁ ≤ W` and `c` fixed at zero.
pub fn estimate_r_g(data: &BinaryDataset, spec: &ConstraintSpec, batch: &mut RademacherBatch) -> Result<EstimateReport> {
    linear_estimate(ClassName::G, spec.w_radius, data, batch, (None, Some(spec.w_radius)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rademacher::sample_sigma_batch;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bernoulli(n: usize, k: usize, seed: u64) -> BinaryDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BinaryDataset::new(Array2::from_shape_simple_fn((n, k), || rng.gen_range(0..=1u8))).unwrap()
    }

    #[test]
    fn sup_examples() {
        assert_eq!(sup_linear_l1(&[3.0, -5.0], 2.0).unwrap(), 10.0);
        assert_eq!(sup_linear_l1(&[3.0, -5.0], 0.0).unwrap(), 0.0);
        assert!(sup_linear_l1(&[1.0], -1.0).is_err());
    }

    #[test]
    fn sup_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let d = rng.gen_range(1..=6);
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let r = rng.gen_range(0.0..2.0);
            let brute = (0..d)
                .flat_map(|j| [r * v[j], -r * v[j]])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((sup_linear_l1(&v, r).unwrap() - brute).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_radius_gives_zero_mean() {
        let data = bernoulli(20, 5, 1);
        let spec = ConstraintSpec::new(0.0, 0.0).unwrap();
        let mut batch = sample_sigma_batch(20, 50, 2).unwrap();
        let r = estimate_r_f(&data, &spec, &mut batch).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(estimate_r_g(&data, &spec, &mut batch).unwrap().mean, 0.0);
    }

    #[test]
    fn single_all_ones_sample() {
        let data = BinaryDataset::from_rows(&[vec![1, 1, 1]]).unwrap();
        let spec = ConstraintSpec::new(1.0, 0.0).unwrap();
        let mut batch = sample_sigma_batch(1, 16, 3).unwrap();
        let r = estimate_r_f(&data, &spec, &mut batch).unwrap();
        assert_eq!(r.mean, 1.0);
        assert!(batch.per_sigma_values.iter().all(|&v| v == 1.0));
        assert_eq!(r.inner_sup_kind, InnerSupKind::Analytic);
    }

    #[test]
    fn g_matches_f_at_equal_radii() {
        let data = bernoulli(30, 6, 9);
        let spec = ConstraintSpec::new(0.8, 0.8).unwrap();
        let mut batch = sample_sigma_batch(30, 200, 1).unwrap();
        let f = estimate_r_f(&data, &spec, &mut batch).unwrap();
        let f_values = batch.per_sigma_values.clone();
        let g = estimate_r_g(&data, &spec, &mut batch).unwrap();
        assert_eq!((f.mean, f.stderr), (g.mean, g.stderr));
        assert_eq!(f_values, batch.per_sigma_values);
        assert_eq!(g.class_name, ClassName::G);
    }

    #[test]
    fn per_sigma_values_are_nonnegative_and_exact() {
        let data = bernoulli(12, 4, 5);
        let spec = ConstraintSpec::new(1.5, 0.0).unwrap();
        let mut batch = sample_sigma_batch(12, 30, 8).unwrap();
        estimate_r_f(&data, &spec, &mut batch).unwrap();
        for (sigma, &value) in batch.sigma_vectors.iter().zip(&batch.per_sigma_values) {
            assert!(value >= 0.0);
            let v: Vec<f64> = (0..4)
                .map(|j| (0..12).map(|i| f64::from(sigma[i]) * f64::from(data.samples()[[i, j]])).sum())
                .collect();
            let expected = sup_linear_l1(&v, 1.5).unwrap() / 12.0;
            assert!((value - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn batch_length_must_match_data() {
        let data = bernoulli(10, 3, 1);
        let spec = ConstraintSpec::new(1.0, 1.0).unwrap();
        let mut batch = sample_sigma_batch(9, 5, 1).unwrap();
        assert!(estimate_r_f(&data, &spec, &mut batch).is_err());
    }
}
