//! Closed-form Rademacher complexity bounds.
//!
//! All radii are ℓ1 radii: `B` bounds `‖b‖₁`, `W` bounds every column
//! `‖W_{·j}‖₁`. The VC dimension of the compositional class is never
//! computed, only supplied.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundName {
    Lemma1,
    Remark2,
    Theorem1,
    Lemma4Finite,
    Corollary1,
    SauerShelah,
}

impl BoundName {
    pub const ALL: [BoundName; 6] = [
        BoundName::Lemma1,
        BoundName::Remark2,
        BoundName::Theorem1,
        BoundName::Lemma4Finite,
        BoundName::Corollary1,
        BoundName::SauerShelah,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::Lemma1 => "LEMMA1",
            BoundName::Remark2 => "REMARK2",
            BoundName::Theorem1 => "THEOREM1",
            BoundName::Lemma4Finite => "LEMMA4_FINITE",
            BoundName::Corollary1 => "COROLLARY1",
            BoundName::SauerShelah => "SAUER_SHELAH",
        }
    }
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bound name `{s}`")))
    }
}

/// A bound value together with the inputs it was evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound_name: BoundName,
    pub value: f64,
    pub inputs: BTreeMap<&'static str, f64>,
}

impl BoundReport {
    fn new(bound_name: BoundName, value: f64, inputs: &[(&'static str, f64)]) -> Self {
        Self {
            bound_name,
            value,
            inputs: inputs.iter().copied().collect(),
        }
    }

    pub fn lemma1(b: f64, d: usize, n: usize) -> Result<Self> {
        let value = bound_lemma1(b, d, n)?;
        Ok(Self::new(
            BoundName::Lemma1,
            value,
            &[("B", b), ("d", d as f64), ("n", n as f64)],
        ))
    }

    pub fn remark2(w: f64, d: usize, n: usize) -> Result<Self> {
        let value = bound_remark2(w, d, n)?;
        Ok(Self::new(
            BoundName::Remark2,
            value,
            &[("W", w), ("d", d as f64), ("n", n as f64)],
        ))
    }

    pub fn theorem1(b: f64, w: f64, k: usize, m: usize, n: usize) -> Result<Self> {
        let value = bound_theorem1(b, w, k, m, n)?;
        Ok(Self::new(
            BoundName::Theorem1,
            value,
            &[("B", b), ("W", w), ("k", k as f64), ("m", m as f64), ("n", n as f64)],
        ))
    }

    pub fn lemma4_finite(w: f64, ln_card_t: f64, n: usize) -> Result<Self> {
        let value = bound_lemma4_finite(w, ln_card_t, n)?;
        Ok(Self::new(
            BoundName::Lemma4Finite,
            value,
            &[("W", w), ("ln_card_T", ln_card_t), ("n", n as f64)],
        ))
    }

    pub fn sauer_shelah(vc: u32, n: usize) -> Result<Self> {
        let value = sauer_shelah_ln_card(vc, n)?;
        Ok(Self::new(
            BoundName::SauerShelah,
            value,
            &[("vc", f64::from(vc)), ("n", n as f64)],
        ))
    }

    pub fn corollary1(w: f64, k: usize, m: usize, n: usize, vc: u32) -> Result<Self> {
        let value = bound_corollary1(w, k, m, n, vc)?;
        Ok(Self::new(
            BoundName::Corollary1,
            value,
            &[
                ("W", w),
                ("k", k as f64),
                ("m", m as f64),
                ("n", n as f64),
                ("vc", f64::from(vc)),
            ],
        ))
    }
}

fn check_radius(name: &str, r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {r}")))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("n must be >= 1".into()))
    }
}

// d = 1 would make ln d = 0 and the bound vacuously zero.
fn check_dim(name: &str, d: usize) -> Result<()> {
    if d >= 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be >= 2, got {d}")))
    }
}

fn massart_factor(d: usize, n: usize) -> f64 {
    (2.0 * (d as f64).ln() / n as f64).sqrt()
}

/// `B·√(2 ln d / n)` for linear predictors with `‖b‖₁ ≤ B` on `{0,1}^d`.
pub fn bound_lemma1(b: f64, d: usize, n: usize) -> Result<f64> {
    check_radius("B", b)?;
    check_dim("d", d)?;
    check_n(n)?;
    Ok(b * massart_factor(d, n))
}

/// Same form with the weight radius `W`.
pub fn bound_remark2(w: f64, d: usize, n: usize) -> Result<f64> {
    check_radius("W", w)?;
    check_dim("d", d)?;
    check_n(n)?;
    Ok(w * massart_factor(d, n))
}

/// `m·√(2 ln k / n)·(B + W)` for the part-1 log-likelihood class.
pub fn bound_theorem1(b: f64, w: f64, k: usize, m: usize, n: usize) -> Result<f64> {
    check_radius("B", b)?;
    check_radius("W", w)?;
    check_dim("k", k)?;
    check_n(n)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    Ok(m as f64 * massart_factor(k, n) * (b + w))
}

/// `W·√(2 ln|T| / n)` for a finite compositional class.
pub fn bound_lemma4_finite(w: f64, ln_card_t: f64, n: usize) -> Result<f64> {
    check_radius("W", w)?;
    check_radius("ln_card_T", ln_card_t)?;
    check_n(n)?;
    Ok(w * (2.0 * ln_card_t / n as f64).sqrt())
}

/// `vc·ln(n + 1)`, the log of the `(n+1)^vc` behaviour cap.
pub fn sauer_shelah_ln_card(vc: u32, n: usize) -> Result<f64> {
    check_n(n)?;
    Ok(f64::from(vc) * ((n + 1) as f64).ln())
}

/// `(W/√n)·(m·√(2 ln k) + k·√(2·vc·ln(n+1)))` for the CD-1 trained machine.
pub fn bound_corollary1(w: f64, k: usize, m: usize, n: usize, vc: u32) -> Result<f64> {
    check_radius("W", w)?;
    check_dim("k", k)?;
    check_n(n)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    let nf = n as f64;
    let part1 = m as f64 * (2.0 * (k as f64).ln()).sqrt();
    let log_z = k as f64 * (2.0 * sauer_shelah_ln_card(vc, n)?).sqrt();
    Ok(w / nf.sqrt() * (part1 + log_z))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values evaluated with mpmath at 30 digits.
    const LEMMA1_1_2_100: f64 = 0.117_741_002_251_547_47;
    const REMARK2_2_10_50: f64 = 0.606_970_851_754_058_54;
    const THEOREM1_1_1_10_4_50: f64 = 2.427_883_407_016_234_2;
    const LEMMA4_1_256_50: f64 = 0.470_964_009_006_189_88;
    const SAUER_3_100: f64 = 13.845_361_550_523_778;
    const COROLLARY1_1_4_2_100_3: f64 = 2.437_900_866_204_616;

    #[test]
    fn lemma1_examples() {
        assert_eq!(bound_lemma1(0.0, 5, 10).unwrap(), 0.0);
        assert!((bound_lemma1(1.0, 2, 100).unwrap() - LEMMA1_1_2_100).abs() < 1e-9);
        let a = bound_lemma1(1.3, 7, 40).unwrap();
        let b = bound_lemma1(1.3, 7, 80).unwrap();
        assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn remark2_examples() {
        assert_eq!(bound_remark2(0.0, 3, 3).unwrap(), 0.0);
        assert_eq!(bound_remark2(0.7, 9, 31).unwrap(), bound_lemma1(0.7, 9, 31).unwrap());
        assert!((bound_remark2(2.0, 10, 50).unwrap() - REMARK2_2_10_50).abs() < 1e-9);
    }

    #[test]
    fn theorem1_examples() {
        assert_eq!(bound_theorem1(0.0, 0.0, 10, 4, 50).unwrap(), 0.0);
        assert!((bound_theorem1(1.0, 1.0, 10, 4, 50).unwrap() - THEOREM1_1_1_10_4_50).abs() < 1e-6);
        let (b, w, k, m, n) = (0.4, 1.7, 6, 3, 77);
        let whole = bound_theorem1(b, w, k, m, n).unwrap();
        let parts = m as f64 * (bound_lemma1(b, k, n).unwrap() + bound_remark2(w, k, n).unwrap());
        assert!((whole - parts).abs() <= 4.0 * f64::EPSILON * whole);
    }

    #[test]
    fn lemma4_examples() {
        assert_eq!(bound_lemma4_finite(1.0, 0.0, 50).unwrap(), 0.0);
        assert!((bound_lemma4_finite(1.0, 256f64.ln(), 50).unwrap() - LEMMA4_1_256_50).abs() < 1e-6);
        let small = bound_lemma4_finite(1.0, 16f64.ln(), 50).unwrap();
        let big = bound_lemma4_finite(1.0, 256f64.ln(), 50).unwrap();
        assert!((big / small - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sauer_shelah_examples() {
        assert_eq!(sauer_shelah_ln_card(0, 10).unwrap(), 0.0);
        assert!((sauer_shelah_ln_card(3, 100).unwrap() - SAUER_3_100).abs() < 1e-5);
        assert!(sauer_shelah_ln_card(4, 100).unwrap() > sauer_shelah_ln_card(3, 100).unwrap());
        assert!(sauer_shelah_ln_card(3, 101).unwrap() > sauer_shelah_ln_card(3, 100).unwrap());
    }

    #[test]
    fn corollary1_examples() {
        assert_eq!(bound_corollary1(0.0, 4, 2, 100, 3).unwrap(), 0.0);
        assert!((bound_corollary1(1.0, 4, 2, 100, 3).unwrap() - COROLLARY1_1_4_2_100_3).abs() < 1e-5);
        let c = bound_corollary1(1.2, 5, 3, 60, 0).unwrap();
        let t = bound_theorem1(0.0, 1.2, 5, 3, 60).unwrap();
        assert!((c - t).abs() <= 4.0 * f64::EPSILON * t);
    }

    #[test]
    fn corollary1_decomposes_through_lemma4() {
        let (w, k, m, n, vc) = (0.9, 7, 3, 120, 4);
        let whole = bound_corollary1(w, k, m, n, vc).unwrap();
        let part1 = w / (n as f64).sqrt() * m as f64 * (2.0 * (k as f64).ln()).sqrt();
        let log_z = k as f64 * bound_lemma4_finite(w, sauer_shelah_ln_card(vc, n).unwrap(), n).unwrap();
        assert!((whole - (part1 + log_z)).abs() <= 8.0 * f64::EPSILON * whole);
    }

    #[test]
    fn domain_violations_are_rejected() {
        assert!(bound_lemma1(1.0, 1, 10).is_err());
        assert!(bound_lemma1(-1.0, 3, 10).is_err());
        assert!(bound_lemma1(1.0, 3, 0).is_err());
        assert!(bound_remark2(f64::NAN, 3, 10).is_err());
        assert!(bound_theorem1(1.0, 1.0, 10, 0, 50).is_err());
        assert!(bound_theorem1(1.0, 1.0, 1, 2, 50).is_err());
        assert!(bound_lemma4_finite(1.0, -0.1, 50).is_err());
        assert!(sauer_shelah_ln_card(2, 0).is_err());
        assert!(bound_corollary1(1.0, 1, 2, 10, 1).is_err());
    }

    #[test]
    fn reports_echo_inputs() {
        let r = BoundReport::theorem1(1.0, 0.5, 10, 4, 50).unwrap();
        assert_eq!(r.bound_name, BoundName::Theorem1);
        assert_eq!(r.inputs["B"], 1.0);
        assert_eq!(r.inputs["W"], 0.5);
        assert_eq!(r.inputs["m"], 4.0);
        assert_eq!(r.value, bound_theorem1(1.0, 0.5, 10, 4, 50).unwrap());
        let r = BoundReport::corollary1(1.0, 4, 2, 100, 3).unwrap();
        assert_eq!(r.inputs["vc"], 3.0);
        assert_eq!("COROLLARY1".parse::<BoundName>().unwrap(), BoundName::Corollary1);
    }
}
