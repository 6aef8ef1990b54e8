//! Hypothesis tests and reliability measures used to compare two cohorts.

mod binomial;
mod mann_whitney;
mod proportion;
mod reliability;
mod sample_size;
mod t_test;

pub use binomial::{
    binomial_cdf, binomial_sf, binomial_validity_test, exact_binomial_two_tailed,
    BinomialItemResult, ValidityItem,
};
pub use mann_whitney::{mann_whitney_exact_p, mann_whitney_u, midranks, UTestResult};
pub use proportion::{two_proportion_z, TwoPropZResult};
pub use reliability::{cronbach_alpha, cronbach_alpha_survey, AlphaResult, RELIABILITY_THRESHOLD};
pub use sample_size::{krejcie_morgan_min_sample, krejcie_morgan_raw};
pub use t_test::{student_t_two_tailed, t_test_independent, TTestResult};

pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;

/// Two-tailed standard normal tail probability `P(|Z| >= |z|)`.
pub fn normal_two_tailed(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with an `n - 1` denominator.
fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn check_finite(xs: &[f64], what: &str) -> crate::Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::InvalidInput(format!(
            "{what} contains a non-finite value"
        )))
    }
}
