//! Brute-force reference implementations used only by tests. None of these
//! share code paths with the library routines they check.
#![allow(dead_code)]

use std::collections::HashMap;

use chrono::NaiveDate;
use rfm_pyramid::data_model::{RfmRecord, TransactionEvent};

/// U for sample `a` by direct pair counting: wins plus half of ties.
pub fn u_by_pairs(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Exact two-tailed permutation p by listing every split of the pooled
/// observations into groups of the original sizes.
pub fn exact_p_by_enumeration(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let n1 = a.len();
    let centre = (a.len() * b.len()) as f64 / 2.0;
    let observed = (u_by_pairs(a, b) - centre).abs();
    let mut extreme = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let (mut ga, mut gb) = (Vec::new(), Vec::new());
        for (i, &v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                ga.push(v);
            } else {
                gb.push(v);
            }
        }
        total += 1;
        // U values are multiples of 0.5, so this comparison is exact.
        if (u_by_pairs(&ga, &gb) - centre).abs() >= observed {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

/// Cronbach's alpha from the average item variance and the average
/// inter-item covariance.
pub fn alpha_by_covariance(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len() as f64;
    let k = rows[0].len();
    let means: Vec<f64> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let cov = |i: usize, j: usize| {
        rows.iter()
            .map(|r| (r[i] - means[i]) * (r[j] - means[j]))
            .sum::<f64>()
            / (n - 1.0)
    };
    let mut var_sum = 0.0;
    let mut cov_sum = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                var_sum += cov(i, i);
            } else {
                cov_sum += cov(i, j);
            }
        }
    }
    let kf = k as f64;
    let v_bar = var_sum / kf;
    let c_bar = cov_sum / (kf * (kf - 1.0));
    kf * c_bar / (v_bar + (kf - 1.0) * c_bar)
}

/// Group-by over a hash map, nothing shared with the library aggregation.
pub fn rfm_by_group(events: &[TransactionEvent], analysis: NaiveDate) -> Vec<RfmRecord> {
    let mut groups: HashMap<&str, Vec<&TransactionEvent>> = HashMap::new();
    for e in events {
        groups.entry(e.customer_id.as_str()).or_default().push(e);
    }
    let mut out: Vec<RfmRecord> = groups
        .into_iter()
        .map(|(id, evs)| {
            let last = evs.iter().map(|e| e.date).max().unwrap();
            let mut days = 0u32;
            let mut d = last;
            while d < analysis {
                d = d.succ_opt().unwrap();
                days += 1;
            }
            RfmRecord {
                customer_id: id.to_string(),
                recency_days: days,
                frequency: evs.len() as u32,
                monetary: evs.iter().map(|e| e.amount).sum(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.customer_id.cmp(&b.customer_id));
    out
}
