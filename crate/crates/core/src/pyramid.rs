//! Customer pyramid: Lloyd's k-means over `(r, f, m)` code vectors, then
//! Platinum/Gold/Iron/Lead labels by descending centroid score.
//!
//! The assignment step runs on the rayon pool. Every reduction (inertia,
//! centroid sums) happens sequentially in point order afterwards, so a fit
//! is bit-identical whatever the worker count.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

pub const PYRAMID_CLASSES: usize = 4;
pub const DEFAULT_SEED: u64 = 20_150_131;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop once the summed centroid displacement of an iteration is at most this.
    pub tolerance: f64,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: PYRAMID_CLASSES,
            seed: DEFAULT_SEED,
            max_iterations: 300,
            tolerance: 1e-9,
            restarts: 10,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidConfig(
                "tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Point>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Which restart produced this solution.
    pub restart: usize,
}

#[inline]
fn sq_dist(a: &Point, b: &Point) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// Nearest centroid, lowest index on ties.
#[inline]
fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, sq_dist(p, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[Point], centroids: &[Point]) -> Vec<(usize, f64)> {
    points.par_iter().map(|p| nearest(p, centroids)).collect()
}

fn distinct_points(points: &[Point]) -> usize {
    let key = |p: &Point| p.map(|v| if v == 0.0 { 0u64 } else { v.to_bits() });
    points.iter().map(key).collect::<HashSet<_>>().len()
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// k-means++ seeding: first centre uniform, then each next centre drawn with
/// probability proportional to squared distance from the nearest chosen one.
fn kmeans_plus_plus(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points
        .par_iter()
        .map(|p| sq_dist(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let chosen = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just past the final sum.
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[chosen];
        centroids.push(c);
        d2.par_iter_mut()
            .zip(points.par_iter())
            .for_each(|(d, p)| *d = d.min(sq_dist(p, &c)));
    }
    centroids
}

/// Centroid means of the current assignment. An empty cluster takes over
/// the point lying farthest from its own centroid, which is moved to it.
fn update_centroids(
    points: &[Point],
    labels: &mut [(usize, f64)],
    k: usize,
    previous: &[Point],
) -> Vec<Point> {
    let mut counts = vec![0usize; k];
    for &(j, _) in labels.iter() {
        counts[j] += 1;
    }
    let mut forced = vec![None; k];
    for empty in 0..k {
        if counts[empty] != 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, &(j, _)) in labels.iter().enumerate() {
            if counts[j] <= 1 || forced[j] == Some(i) {
                continue;
            }
            let d = sq_dist(&points[i], &previous[j]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        if let Some((i, _)) = donor {
            counts[labels[i].0] -= 1;
            labels[i] = (empty, 0.0);
            counts[empty] = 1;
            forced[empty] = Some(i);
        }
    }

    let mut sums = vec![[0.0f64; 3]; k];
    for (p, &(j, _)) in points.iter().zip(labels.iter()) {
        for d in 0..3 {
            sums[j][d] += p[d];
        }
    }
    sums.iter()
        .zip(&counts)
        .enumerate()
        .map(|(j, (s, &c))| {
            if c == 0 {
                previous[j]
            } else {
                let n = c as f64;
                [s[0] / n, s[1] / n, s[2] / n]
            }
        })
        .collect()
}

fn lloyd(points: &[Point], config: &KMeansConfig, restart: usize) -> KMeansFit {
    let k = config.k;
    let mut rng = restart_rng(config.seed, restart);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut labels = assign(points, &centroids);
    let mut prev_inertia = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        iterations += 1;
        let updated = update_centroids(points, &mut labels, k, &centroids);
        let movement: f64 = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .sum();
        centroids = updated;

        let relabelled = assign(points, &centroids);
        let inertia: f64 = relabelled.iter().map(|&(_, d)| d).sum();
        debug_assert!(
            inertia <= prev_inertia + 1e-9 * prev_inertia.abs().max(1.0),
            "inertia rose from {prev_inertia} to {inertia}"
        );
        prev_inertia = inertia;
        let changed = relabelled.iter().zip(&labels).any(|(a, b)| a.0 != b.0);
        labels = relabelled;

        if !changed {
            converged = true;
            break;
        }
        if movement <= config.tolerance {
            // Assignments shifted by less than the tolerance; settle the
            // centroids on the final membership and stop.
            centroids = update_centroids(points, &mut labels, k, &centroids);
            converged = true;
            break;
        }
    }

    let assignments: Vec<usize> = labels.iter().map(|&(j, _)| j).collect();
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &j)| sq_dist(p, &centroids[j]))
        .sum();
    KMeansFit {
        assignments,
        centroids,
        inertia,
        iterations,
        converged,
        restart,
    }
}

/// Best-of-restarts Lloyd's k-means with squared Euclidean distance.
pub fn kmeans_fit(points: &[Point], config: &KMeansConfig) -> Result<KMeansFit> {
    config.validate()?;
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("points must be finite".into()));
    }
    let distinct = distinct_points(points);
    if distinct < config.k {
        return Err(Error::KExceedsDistinct {
            k: config.k,
            distinct,
        });
    }
    let mut best: Option<KMeansFit> = None;
    for restart in 0..config.restarts {
        let fit = lloyd(points, config, restart);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PyramidClass {
    Platinum,
    Gold,
    Iron,
    Lead,
}

impl PyramidClass {
    /// Top of the pyramid first.
    pub const ALL: [PyramidClass; 4] = [Self::Platinum, Self::Gold, Self::Iron, Self::Lead];

    /// Gold and Platinum form the success group.
    pub fn is_success(self) -> bool {
        matches!(self, Self::Platinum | Self::Gold)
    }
}

impl fmt::Display for PyramidClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Platinum => "Platinum",
            Self::Gold => "Gold",
            Self::Iron => "Iron",
            Self::Lead => "Lead",
        })
    }
}

/// What labelling needs to know about a cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterScore {
    pub rfm_sum: f64,
    pub count: usize,
}

/// Rank clusters by descending `rfm_sum` (then larger count, then lower
/// index) and hand out Platinum, Gold, Iron, Lead in that order.
pub fn label_clusters(clusters: &[ClusterScore]) -> Result<Vec<PyramidClass>> {
    if clusters.len() != PYRAMID_CLASSES {
        return Err(Error::ClusterCount(clusters.len()));
    }
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| {
        clusters[b]
            .rfm_sum
            .total_cmp(&clusters[a].rfm_sum)
            .then(clusters[b].count.cmp(&clusters[a].count))
            .then(a.cmp(&b))
    });
    let mut labels = vec![PyramidClass::Lead; clusters.len()];
    for (rank, &idx) in order.iter().enumerate() {
        labels[idx] = PyramidClass::ALL[rank];
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub r: f64,
    pub f: f64,
    pub m: f64,
}

impl From<Point> for Centroid {
    fn from(p: Point) -> Self {
        Self {
            r: p[0],
            f: p[1],
            m: p[2],
        }
    }
}

impl Centroid {
    pub fn rfm_sum(&self) -> f64 {
        self.r + self.f + self.m
    }
}

/// Per-cluster figures with no class attached; works for any `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub cluster_index: usize,
    pub centroid: Centroid,
    pub rfm_sum: f64,
    pub count: usize,
    pub percent: f64,
}

pub fn cluster_stats(centroids: &[Point], counts: &[usize]) -> Vec<ClusterStats> {
    let total: usize = counts.iter().sum();
    centroids
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (&c, &count))| {
            let centroid = Centroid::from(c);
            ClusterStats {
                cluster_index: i,
                centroid,
                rfm_sum: centroid.rfm_sum(),
                count,
                percent: if total == 0 {
                    0.0
                } else {
                    count as f64 * 100.0 / total as f64
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster_index: usize,
    pub class_label: PyramidClass,
    pub centroid: Centroid,
    pub rfm_sum: f64,
    pub count: usize,
    pub percent: f64,
    #[serde(skip)]
    pub member_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyramidReport {
    pub cohort_name: String,
    /// In cluster index order.
    pub clusters: Vec<ClusterSummary>,
    pub total: usize,
    pub success_count: usize,
    pub success_proportion: f64,
}

impl PyramidReport {
    pub fn class(&self, label: PyramidClass) -> &ClusterSummary {
        self.clusters
            .iter()
            .find(|c| c.class_label == label)
            .expect("a report holds every class exactly once")
    }

    /// Clusters from the top of the pyramid down.
    pub fn by_class(&self) -> Vec<&ClusterSummary> {
        PyramidClass::ALL.iter().map(|&l| self.class(l)).collect()
    }
}

/// Build a report from centroids and member counts alone.
pub fn summarize_counts(
    cohort_name: &str,
    centroids: &[Point],
    counts: &[usize],
) -> Result<PyramidReport> {
    if centroids.len() != counts.len() {
        return Err(Error::InvalidInput(
            "one count per centroid required".into(),
        ));
    }
    let stats = cluster_stats(centroids, counts);
    let labels = label_clusters(
        &stats
            .iter()
            .map(|s| ClusterScore {
                rfm_sum: s.rfm_sum,
                count: s.count,
            })
            .collect::<Vec<_>>(),
    )?;
    let total: usize = counts.iter().sum();
    let clusters: Vec<ClusterSummary> = stats
        .into_iter()
        .zip(labels)
        .map(|(s, class_label)| ClusterSummary {
            cluster_index: s.cluster_index,
            class_label,
            centroid: s.centroid,
            rfm_sum: s.rfm_sum,
            count: s.count,
            percent: s.percent,
            member_ids: Vec::new(),
        })
        .collect();
    let success_count = clusters
        .iter()
        .filter(|c| c.class_label.is_success())
        .map(|c| c.count)
        .sum();
    Ok(PyramidReport {
        cohort_name: cohort_name.to_string(),
        clusters,
        total,
        success_count,
        success_proportion: if total == 0 {
            0.0
        } else {
            success_count as f64 / total as f64
        },
    })
}

/// Summarise a four-cluster fit; `ids[i]` names the customer behind point `i`.
pub fn summarize(cohort_name: &str, ids: &[String], fit: &KMeansFit) -> Result<PyramidReport> {
    if ids.len() != fit.assignments.len() {
        return Err(Error::InvalidInput(format!(
            "{} ids for {} assignments",
            ids.len(),
            fit.assignments.len()
        )));
    }
    let mut counts = vec![0usize; fit.centroids.len()];
    for &j in &fit.assignments {
        counts[j] += 1;
    }
    let mut report = summarize_counts(cohort_name, &fit.centroids, &counts)?;
    for (id, &j) in ids.iter().zip(&fit.assignments) {
        report.clusters[j].member_ids.push(id.clone());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_mean() {
        let cfg = KMeansConfig {
            k: 1,
            ..Default::default()
        };
        let fit = kmeans_fit(&[[1.0, 1.0, 1.0], [5.0, 5.0, 5.0]], &cfg).unwrap();
        assert_eq!(fit.centroids, vec![[3.0, 3.0, 3.0]]);
        assert_eq!(fit.inertia, 24.0);
        let stats = cluster_stats(&fit.centroids, &[2]);
        assert_eq!(stats[0].percent, 100.0);
    }

    #[test]
    fn separable_duplicates() {
        let cfg = KMeansConfig {
            k: 2,
            ..Default::default()
        };
        let pts = [[1.0; 3], [5.0; 3], [1.0; 3], [5.0; 3]];
        let fit = kmeans_fit(&pts, &cfg).unwrap();
        assert_eq!(fit.inertia, 0.0);
        assert_eq!(fit.assignments[0], fit.assignments[2]);
        assert_eq!(fit.assignments[1], fit.assignments[3]);
        assert_ne!(fit.assignments[0], fit.assignments[1]);
    }

    #[test]
    fn too_few_distinct_points() {
        let pts = [[1.0; 3], [1.0; 3], [2.0; 3]];
        assert!(matches!(
            kmeans_fit(&pts, &KMeansConfig::default()),
            Err(Error::KExceedsDistinct { k: 4, distinct: 2 })
        ));
    }

    #[test]
    fn config_validation() {
        let bad = KMeansConfig {
            restarts: 0,
            ..Default::default()
        };
        assert!(kmeans_fit(&[[1.0; 3]], &bad).is_err());
    }

    #[test]
    fn empty_cluster_repair_keeps_k() {
        let mut labels = vec![(0, 0.0), (0, 0.0), (0, 0.0)];
        let pts = [[1.0; 3], [2.0; 3], [9.0; 3]];
        let prev = [[1.0; 3], [7.0; 3]];
        let c = update_centroids(&pts, &mut labels, 2, &prev);
        // The point farthest from centroid 0 moved into the empty cluster.
        assert_eq!(labels[2].0, 1);
        assert_eq!(c[1], [9.0; 3]);
        assert_eq!(c[0], [1.5; 3]);
    }

    #[test]
    fn labels_follow_descending_sum() {
        let s = |v: [f64; 4]| -> Vec<ClusterScore> {
            v.iter()
                .map(|&rfm_sum| ClusterScore { rfm_sum, count: 1 })
                .collect()
        };
        use PyramidClass::*;
        assert_eq!(
            label_clusters(&s([8.984158, 6.547332, 10.46541, 10.84694])).unwrap(),
            vec![Iron, Lead, Gold, Platinum]
        );
        assert_eq!(
            label_clusters(&s([9.207273, 4.971947, 14.14556, 10.54971])).unwrap(),
            vec![Iron, Lead, Platinum, Gold]
        );
    }

    #[test]
    fn label_ties_break_on_count_then_index() {
        use PyramidClass::*;
        let scores: Vec<ClusterScore> = [3, 7, 7, 1]
            .iter()
            .map(|&count| ClusterScore {
                rfm_sum: 9.0,
                count,
            })
            .collect();
        assert_eq!(
            label_clusters(&scores).unwrap(),
            vec![Iron, Platinum, Gold, Lead]
        );
        assert!(matches!(
            label_clusters(&scores[..3]),
            Err(Error::ClusterCount(3))
        ));
    }

    #[test]
    fn summarize_attaches_members() {
        let pts = [[5.0; 3], [4.0; 3], [2.0; 3], [1.0; 3], [5.0; 3]];
        let ids: Vec<String> = (0..5).map(|i| format!("c{i}")).collect();
        let fit = kmeans_fit(&pts, &KMeansConfig::default()).unwrap();
        let rep = summarize("x", &ids, &fit).unwrap();
        let plat = rep.class(PyramidClass::Platinum);
        assert_eq!(plat.member_ids, vec!["c0".to_string(), "c4".to_string()]);
        assert_eq!(rep.success_count, 3);
        assert_eq!(rep.total, 5);
    }
}
