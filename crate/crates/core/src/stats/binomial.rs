use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

fn pmf(i: u64, n: u64, p: f64) -> f64 {
    if p == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if i == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n, i) + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp()
}

/// `P(X <= k)` for `X ~ Binomial(n, p)`, by direct summation.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    (0..=k.min(n)).map(|i| pmf(i, n, p)).sum::<f64>().min(1.0)
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`, by direct summation.
pub fn binomial_sf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    (k..=n).map(|i| pmf(i, n, p)).sum::<f64>().min(1.0)
}

/// Exact two-tailed p under a fair null: twice the smaller tail, capped at 1.
pub fn exact_binomial_two_tailed(k: u64, n: u64) -> f64 {
    let lower = binomial_cdf(k, n, 0.5);
    let upper = binomial_sf(k, n, 0.5);
    (2.0 * lower.min(upper)).min(1.0)
}

/// Expert ratings for one questionnaire item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityItem {
    pub label: String,
    pub responses: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialItemResult {
    pub item_label: String,
    pub n: u64,
    pub cut_point: u8,
    pub count_at_or_below_cut: u64,
    pub count_above_cut: u64,
    pub observed_prop_above: f64,
    pub exact_p_two_tailed: f64,
    pub sig_level: f64,
    pub confirmed: bool,
}

/// Content validity per item: split ratings at `cut_point` and test the split
/// against an even one. An item is confirmed when the split is significant
/// and the majority sits above the cut.
pub fn binomial_validity_test(
    items: &[ValidityItem],
    cut_point: u8,
    sig_level: f64,
) -> Result<Vec<BinomialItemResult>> {
    if !(sig_level > 0.0 && sig_level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "significance level {sig_level} outside (0, 1)"
        )));
    }
    items
        .iter()
        .map(|item| {
            if item.responses.is_empty() {
                return Err(Error::EmptySample("validity item has no responses"));
            }
            let n = item.responses.len() as u64;
            let above = item.responses.iter().filter(|&&v| v > cut_point).count() as u64;
            let below = n - above;
            let p = exact_binomial_two_tailed(above, n);
            Ok(BinomialItemResult {
                item_label: item.label.clone(),
                n,
                cut_point,
                count_at_or_below_cut: below,
                count_above_cut: above,
                observed_prop_above: above as f64 / n as f64,
                exact_p_two_tailed: p,
                sig_level,
                confirmed: p < sig_level && above > below,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choose(n: u64, k: u64) -> u64 {
        (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
    }

    /// Exact rational tail for a fair coin: sum of C(n, i) over the tail / 2^n.
    fn fair_upper_tail(k: u64, n: u64) -> f64 {
        (k..=n).map(|i| choose(n, i)).sum::<u64>() as f64 / (1u64 << n) as f64
    }

    fn item(responses: Vec<u8>) -> ValidityItem {
        ValidityItem {
            label: "q".into(),
            responses,
        }
    }

    #[test]
    fn fifteen_of_sixteen() {
        let mut r = vec![5u8; 15];
        r.push(2);
        let out = binomial_validity_test(&[item(r)], 3, 0.05).unwrap();
        let res = &out[0];
        assert_eq!((res.count_above_cut, res.count_at_or_below_cut), (15, 1));
        assert_eq!((res.observed_prop_above * 100.0).round() / 100.0, 0.94);
        assert!((res.exact_p_two_tailed - 34.0 / 65536.0).abs() < 1e-15);
        assert!(res.confirmed);
    }

    #[test]
    fn even_split_is_not_confirmed() {
        let r = [vec![4u8; 8], vec![3u8; 8]].concat();
        let res = &binomial_validity_test(&[item(r)], 3, 0.05).unwrap()[0];
        assert_eq!(res.exact_p_two_tailed, 1.0);
        assert!(!res.confirmed);
    }

    #[test]
    fn unanimous_above() {
        let res = &binomial_validity_test(&[item(vec![5; 16])], 3, 0.05).unwrap()[0];
        assert!((res.exact_p_two_tailed - 2.0 / 65536.0).abs() < 1e-16);
        assert!(res.confirmed);
    }

    #[test]
    fn significant_majority_below_is_not_confirmed() {
        let res = &binomial_validity_test(&[item(vec![1; 16])], 3, 0.05).unwrap()[0];
        assert!(res.exact_p_two_tailed < 0.05);
        assert!(!res.confirmed);
    }

    #[test]
    fn empty_item_errors() {
        assert!(binomial_validity_test(&[item(vec![])], 3, 0.05).is_err());
    }

    #[test]
    fn tails_match_exact_rationals() {
        for n in 1..=30u64 {
            for k in 0..=n {
                assert!((binomial_sf(k, n, 0.5) - fair_upper_tail(k, n)).abs() < 1e-13);
            }
        }
    }
}
