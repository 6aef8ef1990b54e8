use serde::{Deserialize, Serialize};

use super::normal_two_tailed;
use crate::error::{Error, Result};

/// Two-sided critical value used for the 95% decision flag.
pub const Z_CRITICAL_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPropZResult {
    pub x1: u64,
    pub n1: u64,
    pub x2: u64,
    pub n2: u64,
    pub p1: f64,
    pub p2: f64,
    pub pooled: f64,
    pub z: f64,
    pub p_two_tailed: f64,
    pub significant_at_95: bool,
}

/// Pooled two-sample z-test for a difference in success proportions.
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<TwoPropZResult> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidInput(
            "sample sizes must be at least 1".into(),
        ));
    }
    if x1 > n1 || x2 > n2 {
        return Err(Error::InvalidInput(format!(
            "successes exceed sample size ({x1}/{n1}, {x2}/{n2})"
        )));
    }
    let (fx1, fn1, fx2, fn2) = (x1 as f64, n1 as f64, x2 as f64, n2 as f64);
    let p1 = fx1 / fn1;
    let p2 = fx2 / fn2;
    let pooled = (fx1 + fx2) / (fn1 + fn2);
    if pooled <= 0.0 || pooled >= 1.0 {
        return Err(Error::DegenerateProportions(pooled));
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / fn1 + 1.0 / fn2)).sqrt();
    let z = (p1 - p2) / se;
    Ok(TwoPropZResult {
        x1,
        n1,
        x2,
        n2,
        p1,
        p2,
        pooled,
        z,
        p_two_tailed: normal_two_tailed(z),
        significant_at_95: z.abs() > Z_CRITICAL_95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_proportion_comparison() {
        let r = two_proportion_z(514, 1600, 2565, 4620).unwrap();
        assert!((r.pooled - 0.495).abs() < 5e-4);
        assert!((r.p1 - 0.321).abs() < 5e-4);
        assert!((r.p2 - 0.555).abs() < 5e-4);
        assert!((r.z + 16.13).abs() < 0.01, "z = {}", r.z);
        assert!(r.significant_at_95);
    }

    #[test]
    fn equal_proportions() {
        for (k, n) in [(1, 3), (5, 10), (99, 100)] {
            assert_eq!(two_proportion_z(k, n, k, n).unwrap().z, 0.0);
        }
    }

    #[test]
    fn direct_substitution() {
        // pooled 0.5, se = sqrt(0.25 * 0.2) = sqrt(0.05), z = -0.8 / sqrt(0.05).
        let r = two_proportion_z(1, 10, 9, 10).unwrap();
        assert!((r.z - (-0.8 / 0.05f64.sqrt())).abs() < 1e-12);
        assert_eq!((r.z * 1e4).round() / 1e4, -3.5777);
    }

    #[test]
    fn degenerate_and_invalid() {
        assert!(matches!(
            two_proportion_z(0, 5, 0, 7),
            Err(Error::DegenerateProportions(_))
        ));
        assert!(matches!(
            two_proportion_z(5, 5, 7, 7),
            Err(Error::DegenerateProportions(_))
        ));
        assert!(two_proportion_z(6, 5, 1, 7).is_err());
        assert!(two_proportion_z(0, 0, 1, 7).is_err());
    }
}
