/// Chi-square value for one degree of freedom at 95% confidence.
const CHI_SQUARE: f64 = 3.841;
const PROPORTION: f64 = 0.5;
const MARGIN: f64 = 0.05;

/// Unrounded Krejcie-Morgan sample size for a finite population.
pub fn krejcie_morgan_raw(population: u64) -> f64 {
    let n = population as f64;
    let pq = PROPORTION * (1.0 - PROPORTION);
    CHI_SQUARE * n * pq / (MARGIN * MARGIN * (n - 1.0) + CHI_SQUARE * pq)
}

/// Minimum adequate sample, rounded to the nearest whole respondent as in the
/// published Krejcie-Morgan table, and never more than the population.
pub fn krejcie_morgan_min_sample(population: u64) -> u64 {
    if population == 0 {
        return 0;
    }
    (krejcie_morgan_raw(population).round() as u64).min(population)
}
