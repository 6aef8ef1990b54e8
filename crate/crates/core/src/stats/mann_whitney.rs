use serde::{Deserialize, Serialize};

use super::{check_finite, normal_two_tailed};
use crate::error::{Error, Result};

/// Largest pooled sample handled by [`mann_whitney_exact_p`].
pub const EXACT_MAX_POOLED: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UTestResult {
    pub n1: usize,
    pub n2: usize,
    /// The smaller of the two U statistics.
    pub u: f64,
    /// Rank sum of the sample whose U is `u` (sample a on a tie).
    pub w: f64,
    /// Normal approximation with tie-corrected variance, no continuity correction.
    pub z: f64,
    pub p_two_tailed: f64,
}

/// Average ranks (1-based) of `values`, plus the size of every tie group.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end share ranks start+1..=end.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

fn pooled(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::EmptySample("first Mann-Whitney sample"));
    }
    if b.is_empty() {
        return Err(Error::EmptySample("second Mann-Whitney sample"));
    }
    check_finite(a, "first sample")?;
    check_finite(b, "second sample")?;
    Ok(a.iter().chain(b).copied().collect())
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<UTestResult> {
    let all = pooled(a, b)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let (ranks, ties) = midranks(&all);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let r2: f64 = ranks[a.len()..].iter().sum();

    // U counted from each sample's own rank sum.
    let u_a = r1 - n1 * (n1 + 1.0) / 2.0;
    let u_b = r2 - n2 * (n2 + 1.0) / 2.0;
    let (u, w) = if u_a <= u_b { (u_a, r1) } else { (u_b, r2) };

    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let z = if var > 0.0 {
        (u - n1 * n2 / 2.0) / var.sqrt()
    } else {
        // Every observation tied: no evidence either way.
        0.0
    };
    Ok(UTestResult {
        n1: a.len(),
        n2: b.len(),
        u,
        w,
        z,
        p_two_tailed: normal_two_tailed(z),
    })
}

/// Exact two-tailed permutation p-value for U, valid with ties.
///
/// Counts, over every way of choosing which pooled observations form the
/// first sample, those whose U is at least as far from `n1*n2/2` as the
/// observed one. Rank sums are tracked in half-rank units so all
/// comparisons are on integers.
pub fn mann_whitney_exact_p(a: &[f64], b: &[f64]) -> Result<f64> {
    let all = pooled(a, b)?;
    if all.len() > EXACT_MAX_POOLED {
        return Err(Error::ExactTooLarge {
            n1: a.len(),
            n2: b.len(),
        });
    }
    let (ranks, _) = midranks(&all);
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let n1 = a.len();
    let n2 = b.len();
    let max_sum: usize = doubled.iter().sum();

    // ways[j][s]: subsets of size j with doubled rank sum s.
    let mut ways = vec![vec![0.0f64; max_sum + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for (seen, &r) in doubled.iter().enumerate() {
        for j in (1..=n1.min(seen + 1)).rev() {
            let (prev, cur) = ways.split_at_mut(j);
            let (prev, cur) = (&prev[j - 1], &mut cur[0]);
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }

    // Doubled U for sample a: 2*R1 - n1(n1+1); its mean is n1*n2.
    let offset = n1 * (n1 + 1);
    let centre = (n1 * n2) as i64;
    let observed: usize = doubled[..n1].iter().sum();
    let observed_dev = (observed as i64 - offset as i64 - centre).abs();
    let mut extreme = 0.0;
    let mut total = 0.0;
    for (s, &count) in ways[n1].iter().enumerate() {
        if count == 0.0 {
            continue;
        }
        total += count;
        if (s as i64 - offset as i64 - centre).abs() >= observed_dev {
            extreme += count;
        }
    }
    Ok((extreme / total).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_separation() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.w, 6.0);
        assert!(r.z < 0.0);
        assert!(r.p_two_tailed < 0.1);
        // Only the two fully separated splits out of C(6,3) = 20 are as extreme.
        let exact = mann_whitney_exact_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((exact - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identical_samples() {
        let r = mann_whitney_u(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.u, 2.0);
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_two_tailed, 1.0);
    }

    #[test]
    fn midranks_with_ties() {
        let (ranks, ties) = midranks(&[1.0, 2.0, 2.0, 4.0, 5.0, 6.0, 7.0, 7.0, 9.0, 10.0]);
        assert_eq!(
            ranks,
            vec![1.0, 2.5, 2.5, 4.0, 5.0, 6.0, 7.5, 7.5, 9.0, 10.0]
        );
        assert_eq!(ties.iter().filter(|&&t| t == 2).count(), 2);
    }

    #[test]
    fn all_tied_gives_no_evidence() {
        let r = mann_whitney_u(&[3.0, 3.0], &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!((r.z, r.p_two_tailed), (0.0, 1.0));
        assert_eq!(
            mann_whitney_exact_p(&[3.0, 3.0], &[3.0, 3.0, 3.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn tie_corrected_variance_by_hand() {
        // Pooled [1,2,2,3]: ties {2,2}; var = (2*2/12)*((5) - 6/12) = 1.5.
        let r = mann_whitney_u(&[1.0, 2.0], &[2.0, 3.0]).unwrap();
        assert_eq!(r.u, 0.5);
        assert!((r.z - (0.5 - 2.0) / 1.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn empty_and_non_finite_inputs() {
        assert!(matches!(
            mann_whitney_u(&[], &[1.0]),
            Err(Error::EmptySample(_))
        ));
        assert!(mann_whitney_u(&[f64::NAN], &[1.0]).is_err());
        let big = vec![0.0; 40];
        assert!(matches!(
            mann_whitney_exact_p(&big, &big),
            Err(Error::ExactTooLarge { .. })
        ));
    }
}
