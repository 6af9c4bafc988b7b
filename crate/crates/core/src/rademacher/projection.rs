use crate::error::{Error, Result};

/// Euclidean projection onto `{u : ‖u‖₁ ≤ radius}` by sort-and-threshold.
pub fn project_l1(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    project_l1_in_place(&mut out, radius)?;
    Ok(out)
}

pub fn project_l1_in_place(v: &mut [f64], radius: f64) -> Result<()> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be >= 0, got {radius}")));
    }
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= radius {
        return Ok(());
    }
    if radius == 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return Ok(());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (idx, &u) in mags.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - radius) / (idx + 1) as f64;
        if u > candidate {
            threshold = candidate;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * (x.abs() - threshold).max(0.0);
    }
    Ok(())
}
