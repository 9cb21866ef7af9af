//! `ℓp` norms of load vectors, including the `ℓ∞` special case.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which norm of the load vector the time-maximum objective is taken over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    /// Finite `p ≥ 1`.
    P(f64),
    /// Maximum entry.
    Inf,
}

impl Norm {
    /// Norm value of a nonnegative vector. Empty vectors evaluate to 0.
    pub fn evaluate(&self, v: &[f64]) -> Result<f64> {
        lp_norm(v, *self)
    }

    /// Decision exponent used by the potential-based policies: `ℓ∞` runs as
    /// the `log2 m` norm, finite `p` is honored as given (floored at 1).
    pub fn effective_p(&self, machines: usize) -> f64 {
        match self {
            Norm::P(p) => p.max(1.0),
            Norm::Inf => (machines.max(1) as f64).log2().max(1.0),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::P(p) => write!(f, "{p}"),
            Norm::Inf => write!(f, "inf"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Norm::Inf);
        }
        let p: f64 = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("not a norm: {s:?}")))?;
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "norm must be ≥ 1, got {p}"
            )));
        }
        Ok(Norm::P(p))
    }
}

/// `(Σ v_i^p)^(1/p)`, or the maximum entry for the `ℓ∞` case.
///
/// The sum is evaluated after factoring out the largest entry so that large
/// `p` does not overflow.
pub fn lp_norm(v: &[f64], norm: Norm) -> Result<f64> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::NormDomain);
    }
    let max = v.iter().cloned().fold(0.0_f64, f64::max);
    match norm {
        Norm::Inf => Ok(max),
        Norm::P(p) => {
            if !p.is_finite() || p < 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "norm must be ≥ 1, got {p}"
                )));
            }
            if max == 0.0 {
                return Ok(0.0);
            }
            let sum: f64 = v.iter().map(|x| (x / max).powf(p)).sum();
            Ok(max * sum.powf(1.0 / p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pythagorean() {
        assert_eq!(lp_norm(&[3.0, 4.0], Norm::P(2.0)).unwrap(), 5.0);
    }

    #[test]
    fn inf_is_max() {
        assert_eq!(lp_norm(&[3.0, 4.0], Norm::Inf).unwrap(), 4.0);
    }

    #[test]
    fn l1_is_sum() {
        assert_eq!(lp_norm(&[1.0, 1.0, 1.0, 1.0], Norm::P(1.0)).unwrap(), 4.0);
    }

    #[test]
    fn negative_entry_rejected() {
        assert!(lp_norm(&[1.0, -0.5], Norm::P(1.0)).is_err());
    }

    #[test]
    fn empty_vector_is_zero() {
        assert_eq!(lp_norm(&[], Norm::P(2.0)).unwrap(), 0.0);
        assert_eq!(lp_norm(&[], Norm::Inf).unwrap(), 0.0);
    }

    #[test]
    fn effective_p_maps_inf_to_log_m() {
        assert_eq!(Norm::P(7.0).effective_p(4), 7.0);
        assert_eq!(Norm::Inf.effective_p(8), 3.0);
        assert_eq!(Norm::P(0.5).effective_p(8), 1.0);
        assert_eq!(Norm::Inf.effective_p(1), 1.0);
    }

    proptest! {
        // p ≤ q implies ||v||_q ≤ ||v||_p, and the log2(m)-norm is within a
        // factor 2 of the max norm.
        #[test]
        fn norm_monotone_in_p(
            v in proptest::collection::vec(0.0_f64..100.0, 1..10),
            p in 1.0_f64..6.0,
            q in 0.0_f64..6.0,
        ) {
            let q = p + q;
            let np = lp_norm(&v, Norm::P(p)).unwrap();
            let nq = lp_norm(&v, Norm::P(q)).unwrap();
            prop_assert!(nq <= np * (1.0 + 1e-12));

            let m = v.len();
            let nlog = lp_norm(&v, Norm::P((m as f64).log2().max(1.0))).unwrap();
            let ninf = lp_norm(&v, Norm::Inf).unwrap();
            prop_assert!(ninf <= nlog * (1.0 + 1e-12));
            prop_assert!(nlog <= 2.0 * ninf + 1e-12);
        }
    }
}
