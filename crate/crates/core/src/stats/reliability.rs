use serde::{Deserialize, Serialize};

use super::{check_finite, sample_variance};
use crate::data_model::SurveyResponse;
use crate::error::{Error, Result};

/// Conventional lower bound for an acceptably reliable questionnaire.
pub const RELIABILITY_THRESHOLD: f64 = 0.70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: f64,
    pub k_items: usize,
    pub n_respondents: usize,
    pub item_variances: Vec<f64>,
    pub total_variance: f64,
    pub reliable: bool,
}

/// Cronbach's alpha over a respondents-by-items matrix, using sample variances.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<AlphaResult> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 respondents, got {n}"
        )));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 items, got {k}"
        )));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != k) {
        return Err(Error::InvalidInput(format!(
            "respondent {bad} has {} items, expected {k}",
            rows[bad].len()
        )));
    }
    for r in rows {
        check_finite(r, "response matrix")?;
    }

    let item_variances: Vec<f64> = (0..k)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            sample_variance(&col)
        })
        .collect();
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let total_variance = sample_variance(&totals);
    if total_variance <= 0.0 {
        return Err(Error::DegenerateResponses("total score variance is zero"));
    }
    let kf = k as f64;
    let alpha = kf / (kf - 1.0) * (1.0 - item_variances.iter().sum::<f64>() / total_variance);
    Ok(AlphaResult {
        alpha,
        k_items: k,
        n_respondents: n,
        item_variances,
        total_variance,
        reliable: alpha >= RELIABILITY_THRESHOLD,
    })
}

pub fn cronbach_alpha_survey(responses: &[SurveyResponse]) -> Result<AlphaResult> {
    let rows: Vec<Vec<f64>> = responses
        .iter()
        .map(|r| r.items.iter().map(|&v| f64::from(v)).collect())
        .collect();
    cronbach_alpha(&rows)
}
