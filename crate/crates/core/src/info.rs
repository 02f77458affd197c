//! Scalar information measures on finite alphabets.
//!
//! Everything is in nats (natural logarithm); callers that want bits divide
//! by `ln 2` at the display layer. The convention `0·ln 0 = 0` applies
//! throughout.

use crate::dist::JointDist;
use crate::error::{Error, Result};

/// Absolute tolerance for validating that probabilities sum to one.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Compensated (Kahan) summation; keeps entropy sums stable inside the
/// long 4-D inequality sweeps.
pub fn kahan_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for t in terms {
        let y = t - carry;
        let s = sum + y;
        carry = (s - sum) - y;
        sum = s;
    }
    sum
}

/// `-p ln p`, continuously extended by 0 at p = 0.
#[inline]
pub(crate) fn neg_p_ln_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

fn validate_pmf(p: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for (i, &x) in p.iter().enumerate() {
        if !x.is_finite() || x < -PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {x}, expected a probability"
            )));
        }
        sum += x.max(0.0);
    }
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "entries sum to {sum}, expected 1 within {PROB_SUM_TOL}"
        )));
    }
    Ok(sum)
}

/// Shannon entropy of a probability vector, in nats.
///
/// The input is validated to absolute tolerance `1e-9` and renormalized
/// internally so the mass sums to exactly one.
pub fn entropy(p: &[f64]) -> Result<f64> {
    let sum = validate_pmf(p)?;
    Ok(kahan_sum(p.iter().map(|&x| neg_p_ln_p(x.max(0.0) / sum))))
}

/// Entropy of an already-validated mass vector (no checks, no renormalization).
pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    kahan_sum(p.iter().map(|&x| neg_p_ln_p(x)))
}

/// Binary entropy `h(p) = p ln(1/p) + (1-p) ln(1/(1-p))` in nats.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("binary_entropy: p={p} not in [0,1]")));
    }
    Ok(neg_p_ln_p(p) + neg_p_ln_p(1.0 - p))
}

/// Binary convolution `a*b = (1-a)b + a(1-b)`: the crossover probability of
/// two independent binary symmetric channels in series.
pub fn binary_convolution(a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!(
            "binary_convolution: ({a}, {b}) not in [0,1]^2"
        )));
    }
    Ok((1.0 - a) * b + a * (1.0 - b))
}

/// Mutual information `I(X;Y) = H(X) + H(Y) - H(X,Y)` in nats.
///
/// Tiny negative values from rounding are clamped to zero.
pub fn mutual_information(joint: &JointDist) -> f64 {
    let hx = entropy_unchecked(joint.marginal_x());
    let hy = entropy_unchecked(joint.marginal_y());
    let hxy = joint.joint_entropy();
    let i = hx + hy - hxy;
    debug_assert!(i >= -1e-12, "mutual information {i} below -1e-12");
    i.max(0.0)
}
