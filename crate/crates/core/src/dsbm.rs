//! Baseline clustering: regularised spectral clustering of each slice,
//! optionally smoothed over time, with labels carried forward by optimal
//! matching to the previous slice.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assign::{best_permutation, kmeans};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_desc, top_eigen};
use crate::net::{Adjacency, DynamicNetwork, MembershipSeries};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSettings {
    pub k: usize,
    /// Degree regularisation; `None` uses the slice's mean degree.
    pub tau: Option<f64>,
    /// Weight of the previous smoothed operator, in `[0, 1]`.
    pub smooth: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl SpectralSettings {
    pub fn new(k: usize) -> Self {
        Self { k, tau: None, smooth: 0.0, restarts: 20, seed: 1 }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.smooth) {
            return Err(Error::Config(format!("smoothing weight {} outside [0,1]", self.smooth)));
        }
        if self.tau.is_some_and(|t| t < 0.0 || !t.is_finite()) {
            return Err(Error::Config("tau must be a non-negative number".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceClustering {
    pub labels: Vec<usize>,
    /// Relative eigengap `(l_k - l_{k+1}) / l_1` of the operator.
    pub eigengap: f64,
    /// Set when the eigengap is too small for the partition to be meaningful.
    pub low_confidence: bool,
}

const LOW_GAP: f64 = 0.05;

/// `D_tau^{-1/2} A D_tau^{-1/2}` with `D_tau = D + tau I`.
pub fn regularized_operator(y: &Adjacency, tau: Option<f64>) -> DMatrix<f64> {
    let n = y.n();
    let deg: Vec<f64> = (0..n).map(|i| y.degree(i) as f64).collect();
    let tau = tau.unwrap_or_else(|| if n == 0 { 0.0 } else { deg.iter().sum::<f64>() / n as f64 });
    let scale: Vec<f64> = deg.iter().map(|d| if d + tau > 0.0 { 1.0 / (d + tau).sqrt() } else { 0.0 }).collect();
    let mut m = DMatrix::zeros(n, n);
    for (i, j) in y.edges() {
        let v = scale[i] * scale[j];
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

fn cluster_operator(op: DMatrix<f64>, settings: &SpectralSettings, stream: u64) -> SliceClustering {
    let n = op.nrows();
    let k = settings.k;
    let spectrum = eigenvalues_desc(op.clone());
    let (_, vecs) = top_eigen(op, k);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row: Vec<f64> = vecs.iter().map(|v| v[i]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let mut rng = seed::stream(settings.seed, "spectral", stream, 0);
    let km = kmeans(&points, k, settings.restarts, &mut rng);
    let lead = spectrum.first().copied().unwrap_or(0.0).abs();
    let gap = if k < n && lead > 0.0 { (spectrum[k - 1] - spectrum[k]) / lead } else { 0.0 };
    SliceClustering { labels: km.labels, eigengap: gap, low_confidence: k > 1 && gap < LOW_GAP }
}

/// Spectral clustering of one slice.
pub fn spectral_slice(y: &Adjacency, settings: &SpectralSettings) -> Result<SliceClustering> {
    settings.validate()?;
    if settings.k > y.n() {
        return Err(Error::InvalidInput(format!("k={} exceeds {} nodes", settings.k, y.n())));
    }
    Ok(cluster_operator(regularized_operator(y, settings.tau), settings, 0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsbmFit {
    pub membership: MembershipSeries,
    pub eigengaps: Vec<f64>,
    pub low_confidence: Vec<bool>,
}

/// Clusters every slice. With `smooth > 0` the operator of slice `t` is
/// blended with the smoothed operator of `t-1` before the eigen step. Labels
/// of each slice are permuted to best agree with the previous slice.
pub fn fit_dsbm(net: &DynamicNetwork, settings: &SpectralSettings) -> Result<DsbmFit> {
    settings.validate()?;
    if settings.k > net.n() {
        return Err(Error::InvalidInput(format!("k={} exceeds {} nodes", settings.k, net.n())));
    }
    let mut labels: Vec<Vec<usize>> = Vec::with_capacity(net.len());
    let mut gaps = Vec::with_capacity(net.len());
    let mut flags = Vec::with_capacity(net.len());
    let mut smoothed: Option<DMatrix<f64>> = None;
    for (t, y) in net.slices().iter().enumerate() {
        let op = regularized_operator(y, settings.tau);
        let op = match smoothed.take() {
            Some(prev) if settings.smooth > 0.0 => op * (1.0 - settings.smooth) + prev * settings.smooth,
            _ => op,
        };
        smoothed = Some(op.clone());
        let sc = cluster_operator(op, settings, t as u64);
        let aligned = match labels.last() {
            Some(prev) => {
                let perm = best_permutation(&sc.labels, prev, settings.k);
                sc.labels.iter().map(|&l| perm[l]).collect()
            }
            None => sc.labels,
        };
        labels.push(aligned);
        gaps.push(sc.eigengap);
        flags.push(sc.low_confidence);
    }
    Ok(DsbmFit { membership: MembershipSeries::new(labels, settings.k)?, eigengaps: gaps, low_confidence: flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_cliques(m: usize) -> Adjacency {
        let mut y = Adjacency::empty(2 * m);
        for b in 0..2 {
            for i in 0..m {
                for j in (i + 1)..m {
                    y.set(b * m + i, b * m + j, true);
                }
            }
        }
        y
    }

    fn planted(sizes: &[usize], p: f64, q: f64, rng: &mut ChaCha8Rng) -> (Adjacency, Vec<usize>) {
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
        let n = labels.len();
        let mut y = Adjacency::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let pr = if labels[i] == labels[j] { p } else { q };
                if rng.random::<f64>() < pr {
                    y.set(i, j, true);
                }
            }
        }
        (y, labels)
    }

    fn errors(a: &[usize], b: &[usize], k: usize) -> usize {
        let perm = best_permutation(a, b, k);
        a.iter().zip(b).filter(|(x, y)| perm[**x] != **y).count()
    }

    #[test]
    fn disjoint_cliques_split_exactly() {
        let sc = spectral_slice(&two_cliques(6), &SpectralSettings::new(2)).unwrap();
        assert!(sc.labels[..6].iter().all(|&l| l == sc.labels[0]));
        assert!(sc.labels[6..].iter().all(|&l| l == sc.labels[6]));
        assert_ne!(sc.labels[0], sc.labels[6]);
        assert!(!sc.low_confidence);
    }

    #[test]
    fn complete_graph_is_low_confidence() {
        let sc = spectral_slice(&Adjacency::complete(10), &SpectralSettings::new(2)).unwrap();
        assert!(sc.low_confidence);
        assert_eq!(sc.labels.len(), 10);
    }

    #[test]
    fn planted_partition_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (y, truth) = planted(&[50, 50, 50], 0.25, 0.02, &mut rng);
        let sc = spectral_slice(&y, &SpectralSettings::new(3)).unwrap();
        assert!(errors(&sc.labels, &truth, 3) as f64 / 150.0 < 0.05);
    }

    #[test]
    fn too_many_clusters_rejected() {
        assert!(spectral_slice(&Adjacency::empty(2), &SpectralSettings::new(3)).is_err());
    }

    #[test]
    fn static_series_gives_constant_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (y, _) = planted(&[30, 30], 0.3, 0.02, &mut rng);
        let net = DynamicNetwork::new(vec![y.clone(), y.clone(), y]).unwrap();
        let fit = fit_dsbm(&net, &SpectralSettings::new(2)).unwrap();
        let m = fit.membership.labels();
        assert_eq!(m[0], m[1]);
        assert_eq!(m[1], m[2]);
    }

    #[test]
    fn single_mover_switch_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (y0, truth) = planted(&[40, 40], 0.35, 0.01, &mut rng);
        // Node 0 rewires entirely into the second block at t = 2.
        let mut y2 = y0.clone();
        for j in 0..80 {
            y2.set(0, j, false);
        }
        for j in (40..80).step_by(3) {
            y2.set(0, j, true);
        }
        let net = DynamicNetwork::new(vec![y0.clone(), y0, y2]).unwrap();
        let fit = fit_dsbm(&net, &SpectralSettings::new(2)).unwrap();
        let m = fit.membership.labels();
        assert_eq!(m[0][0], m[0][1]);
        assert_eq!(m[1][0], m[1][1]);
        assert_eq!(m[2][0], m[2][40]);
        assert_eq!(errors(&m[0], &truth, 2), 0);
    }

    #[test]
    fn zero_smoothing_is_independent_clustering() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, _) = planted(&[25, 25], 0.3, 0.03, &mut rng);
        let (b, _) = planted(&[25, 25], 0.3, 0.03, &mut rng);
        let net = DynamicNetwork::new(vec![a.clone(), b.clone()]).unwrap();
        let s = SpectralSettings::new(2);
        let fit = fit_dsbm(&net, &s).unwrap();
        let solo = cluster_operator(regularized_operator(&b, None), &s, 1);
        assert_eq!(errors(&fit.membership.labels()[1], &solo.labels, 2), 0);
    }

    #[test]
    fn relabelling_nodes_permutes_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (y, _) = planted(&[30, 30, 30], 0.3, 0.01, &mut rng);
        let n = y.n();
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut z = Adjacency::empty(n);
        for (i, j) in y.edges() {
            z.set(perm[i], perm[j], true);
        }
        let s = SpectralSettings::new(3);
        let a = spectral_slice(&y, &s).unwrap().labels;
        let b = spectral_slice(&z, &s).unwrap().labels;
        let b_back: Vec<usize> = (0..n).map(|i| b[perm[i]]).collect();
        assert_eq!(errors(&a, &b_back, 3), 0);
    }
}
