//! DBSCAN clustering of target detections in the range-Doppler domain.
//!
//! The neighborhood predicate is Chebyshev distance in axes normalized by
//! the per-axis epsilon: two detections are neighbors when
//! `max(|dr|/eps_range, |dv|/eps_velocity) <= 1`. Cluster centroids are
//! SNR-weighted with linear power weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};
use crate::sensor::TargetDetection;

/// Noise label.
pub const NOISE: i64 = -1;
const UNCLASSIFIED: i64 = -2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields, default)]
pub struct ClusterParams<T: Scalar> {
    /// Range neighborhood radius (m).
    pub eps_range: T,
    /// Radial-velocity neighborhood radius (m/s).
    pub eps_velocity: T,
    /// Minimum neighborhood size (the point itself counts).
    pub min_pts: usize,
}

impl<T: Scalar> Default for ClusterParams<T> {
    fn default() -> Self {
        Self {
            eps_range: convert(1.5),
            eps_velocity: convert(1.0),
            min_pts: 1,
        }
    }
}

impl<T: Scalar> ClusterParams<T> {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.eps_range <= T::zero() {
            return Err(Error::config(format!("{prefix}.eps_range"), "must be > 0"));
        }
        if self.eps_velocity <= T::zero() {
            return Err(Error::config(format!("{prefix}.eps_velocity"), "must be > 0"));
        }
        if self.min_pts < 1 {
            return Err(Error::config(format!("{prefix}.min_pts"), "must be >= 1"));
        }
        Ok(())
    }
}

/// One cluster with its SNR-weighted centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster<T: Scalar> {
    /// Indices into the input detection slice.
    pub members: Vec<usize>,
    pub range: T,
    pub radial_velocity: T,
    pub azimuth_deg: T,
    /// Combined SNR: 10 log10 of the summed linear member powers.
    pub snr_db: T,
}

/// DBSCAN output: clusters, the noise set, and raw labels (cluster index or
/// [`NOISE`]) per input detection.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering<T: Scalar> {
    pub clusters: Vec<Cluster<T>>,
    pub noise: Vec<usize>,
    pub labels: Vec<i64>,
}

fn neighbors<T: Scalar>(
    dets: &[TargetDetection<T>],
    i: usize,
    params: &ClusterParams<T>,
) -> Vec<usize> {
    let a = &dets[i];
    dets.iter()
        .enumerate()
        .filter(|(_, b)| {
            let dr = (a.range - b.range).abs() / params.eps_range;
            let dv = (a.radial_velocity - b.radial_velocity).abs() / params.eps_velocity;
            dr.max(dv) <= T::one()
        })
        .map(|(j, _)| j)
        .collect()
}

/// Cluster detections with standard DBSCAN over the normalized Chebyshev
/// neighborhood. Points are seeded and expanded in index order, so the
/// labeling is deterministic.
pub fn dbscan_range_doppler<T: Scalar>(
    detections: &[TargetDetection<T>],
    params: &ClusterParams<T>,
) -> Result<Clustering<T>> {
    params.validate("cluster")?;
    let n = detections.len();
    let mut labels = vec![UNCLASSIFIED; n];
    let mut cluster_id: i64 = 0;
    for seed in 0..n {
        if labels[seed] != UNCLASSIFIED {
            continue;
        }
        let seed_neighbors = neighbors(detections, seed, params);
        if seed_neighbors.len() < params.min_pts {
            labels[seed] = NOISE;
            continue;
        }
        labels[seed] = cluster_id;
        let mut queue: std::collections::VecDeque<usize> = seed_neighbors.into();
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = cluster_id; // border point claimed
                continue;
            }
            if labels[j] != UNCLASSIFIED {
                continue;
            }
            labels[j] = cluster_id;
            let nbrs = neighbors(detections, j, params);
            if nbrs.len() >= params.min_pts {
                queue.extend(nbrs);
            }
        }
        cluster_id += 1;
    }

    let mut clusters = Vec::with_capacity(cluster_id as usize);
    for id in 0..cluster_id {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == id).collect();
        let ten: T = convert(10.0);
        let mut weight_sum = T::zero();
        let mut range = T::zero();
        let mut velocity = T::zero();
        let mut azimuth = T::zero();
        for &i in &members {
            let d = &detections[i];
            let w = ten.powf(d.snr_db / ten);
            weight_sum += w;
            range += w * d.range;
            velocity += w * d.radial_velocity;
            azimuth += w * d.azimuth_deg;
        }
        clusters.push(Cluster {
            members,
            range: range / weight_sum,
            radial_velocity: velocity / weight_sum,
            azimuth_deg: azimuth / weight_sum,
            snr_db: ten * weight_sum.log10(),
        });
    }
    let noise = (0..n).filter(|&i| labels[i] == NOISE).collect();
    Ok(Clustering { clusters, noise, labels })
}

/// Are two labelings the same partition up to cluster renaming (noise must
/// match exactly)?
pub fn same_clustering(a: &[i64], b: &[i64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut forward = std::collections::HashMap::new();
    let mut backward = std::collections::HashMap::new();
    for (&la, &lb) in a.iter().zip(b.iter()) {
        if (la == NOISE) != (lb == NOISE) {
            return false;
        }
        if la == NOISE {
            continue;
        }
        if *forward.entry(la).or_insert(lb) != lb {
            return false;
        }
        if *backward.entry(lb).or_insert(la) != la {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn det(range: f64, velocity: f64, snr: f64) -> TargetDetection<f64> {
        TargetDetection {
            range,
            radial_velocity: velocity,
            azimuth_deg: 0.0,
            snr_db: snr,
            timestamp: 0.0,
            sensor_id: 0,
        }
    }

    /// Independent reference: cores from neighborhood degrees, clusters as
    /// connected components of the core-core graph, borders attached to the
    /// earliest-created adjacent cluster.
    fn brute_force_dbscan(
        dets: &[TargetDetection<f64>],
        params: &ClusterParams<f64>,
    ) -> Vec<i64> {
        let n = dets.len();
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let dr = (dets[i].range - dets[j].range).abs() / params.eps_range;
                        let dv = (dets[i].radial_velocity - dets[j].radial_velocity).abs()
                            / params.eps_velocity;
                        dr.max(dv) <= 1.0
                    })
                    .collect()
            })
            .collect();
        let core: Vec<bool> = (0..n)
            .map(|i| adj[i].iter().filter(|&&x| x).count() >= params.min_pts)
            .collect();
        let mut labels = vec![NOISE; n];
        let mut next = 0i64;
        for i in 0..n {
            if !core[i] || labels[i] != NOISE {
                continue;
            }
            // Flood the core component.
            let mut stack = vec![i];
            labels[i] = next;
            while let Some(p) = stack.pop() {
                for q in 0..n {
                    if core[q] && adj[p][q] && labels[q] == NOISE {
                        labels[q] = next;
                        stack.push(q);
                    }
                }
            }
            next += 1;
        }
        // Borders go to the earliest-created adjacent core cluster.
        for i in 0..n {
            if core[i] || labels[i] != NOISE {
                continue;
            }
            let best = (0..n)
                .filter(|&j| core[j] && adj[i][j])
                .map(|j| labels[j])
                .min();
            if let Some(label) = best {
                labels[i] = label;
            }
        }
        labels
    }

    #[test]
    fn empty_input_has_no_clusters_and_no_noise() {
        let c = dbscan_range_doppler::<f64>(&[], &ClusterParams::default()).unwrap();
        assert!(c.clusters.is_empty());
        assert!(c.noise.is_empty());
    }

    #[test]
    fn nearby_pair_forms_one_cluster() {
        let params = ClusterParams {
            eps_range: 1.0,
            eps_velocity: 1.0,
            min_pts: 2,
        };
        let dets = vec![det(50.0, 10.0, 20.0), det(50.5, 10.1, 20.0)];
        let c = dbscan_range_doppler(&dets, &params).unwrap();
        assert_eq!(c.clusters.len(), 1);
        assert_eq!(c.clusters[0].members, vec![0, 1]);
        assert!(c.noise.is_empty());
    }

    #[test]
    fn far_point_is_noise_with_min_pts_two() {
        let params = ClusterParams {
            eps_range: 1.0,
            eps_velocity: 1.0,
            min_pts: 2,
        };
        let dets = vec![det(50.0, 10.0, 20.0), det(50.5, 10.0, 20.0), det(90.0, -5.0, 15.0)];
        let c = dbscan_range_doppler(&dets, &params).unwrap();
        assert_eq!(c.clusters.len(), 1);
        assert_eq!(c.noise, vec![2]);
    }

    #[test]
    fn snr_weighted_centroid_leans_toward_the_strong_member() {
        let params = ClusterParams::default();
        let dets = vec![det(50.0, 10.0, 30.0), det(51.0, 10.0, 10.0)];
        let c = dbscan_range_doppler(&dets, &params).unwrap();
        assert_eq!(c.clusters.len(), 1);
        assert!(c.clusters[0].range < 50.1);
    }

    #[test]
    fn matches_brute_force_reference_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for trial in 0..100 {
            let n = rng.gen_range(0..=50usize);
            let dets: Vec<_> = (0..n)
                .map(|_| {
                    det(
                        rng.gen_range(0.0..40.0),
                        rng.gen_range(-8.0..8.0),
                        rng.gen_range(10.0..30.0),
                    )
                })
                .collect();
            let params = ClusterParams {
                eps_range: rng.gen_range(0.5..4.0),
                eps_velocity: rng.gen_range(0.3..2.0),
                min_pts: rng.gen_range(1..=4),
            };
            let ours = dbscan_range_doppler(&dets, &params).unwrap();
            let reference = brute_force_dbscan(&dets, &params);
            assert!(
                same_clustering(&ours.labels, &reference),
                "trial {trial}: {:?} vs {:?}",
                ours.labels,
                reference
            );
        }
    }
}
