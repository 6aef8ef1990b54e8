use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::{check_finite, mean, sample_variance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub n1: usize,
    pub n2: usize,
    pub mean_1: f64,
    pub mean_2: f64,
    pub t: f64,
    pub df: f64,
    pub p_two_tailed: f64,
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Pooled-variance (Student) two-sample t-test.
pub fn t_test_independent(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "t-test needs at least 2 observations per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    check_finite(a, "first sample")?;
    check_finite(b, "second sample")?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (m1, m2) = (mean(a), mean(b));
    let df = n1 + n2 - 2.0;
    let pooled = ((n1 - 1.0) * sample_variance(a) + (n2 - 1.0) * sample_variance(b)) / df;
    let se = (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    let t = if se > 0.0 {
        (m1 - m2) / se
    } else if m1 == m2 {
        0.0
    } else {
        return Err(Error::ZeroVarianceUnequalMeans);
    };
    Ok(TTestResult {
        n1: a.len(),
        n2: b.len(),
        mean_1: m1,
        mean_2: m2,
        t,
        df,
        p_two_tailed: student_t_two_tailed(t, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-tailed p as one minus twice the density integrated over [0, |t|],
    /// by composite Simpson's rule.
    fn quadrature_two_tailed(t: f64, df: f64) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let c = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp()
            / (df * std::f64::consts::PI).sqrt();
        let dens = |x: f64| c * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
        let n = 20_000;
        let h = t.abs() / n as f64;
        let mut s = dens(0.0) + dens(t.abs());
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * dens(i as f64 * h);
        }
        1.0 - 2.0 * s * h / 3.0
    }

    #[test]
    fn identical_samples() {
        let r = t_test_independent(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.t, r.p_two_tailed), (0.0, 1.0));
    }

    #[test]
    fn hand_computed_example() {
        let r = t_test_independent(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.df, 4.0);
        assert!((r.t - (-3.0 / (2.0f64 / 3.0).sqrt())).abs() < 1e-12);
        assert_eq!((r.t * 1e4).round() / 1e4, -3.6742);
        assert!((r.p_two_tailed - quadrature_two_tailed(r.t, r.df)).abs() < 1e-9);
    }

    #[test]
    fn p_matches_quadrature() {
        for &(t, df) in &[
            (0.5, 3.0),
            (1.7, 10.0),
            (2.5, 30.0),
            (-4.0, 7.0),
            (1.0, 1.0),
        ] {
            let got = student_t_two_tailed(t, df);
            let want = quadrature_two_tailed(t, df);
            assert!(
                (got - want).abs() < 1e-9 * want.max(1e-3),
                "t={t} df={df}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn zero_variance_cases() {
        let r = t_test_independent(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert!(matches!(
            t_test_independent(&[2.0, 2.0], &[3.0, 3.0]),
            Err(Error::ZeroVarianceUnequalMeans)
        ));
        assert!(t_test_independent(&[1.0], &[1.0, 2.0]).is_err());
    }
}
