//! Dynamic latent space model with a Markov cluster process, fit by MCMC.
//!
//! Node `i` at time `t` has a position `z` in `R^d` and a label `M`. Ties are
//! independent given positions, `logit P(y_ij = 1) = b0 - b1 |z_i - z_j|`.
//! Positions follow `z^0 ~ N(mu_M, s2_M)` and
//! `z^t ~ N(rho z^{t-1} + (1 - rho) mu_{M^t}, s2_{M^t})`; labels follow a
//! Markov chain with initial weights `lambda` and transition matrix `pi`.

use nalgebra::{DMatrix, Matrix};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::assign::{best_permutation, kmeans};
use crate::error::{Error, Result};
use crate::linalg::top_eigen;
use crate::net::{geodesic_matrix, Adjacency, DynamicNetwork, MembershipSeries};
use crate::seed;
use crate::stats::log1p_exp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlsmPriors {
    /// Variance of the isotropic normal prior on cluster means.
    pub mu_var: f64,
    /// Inverse-gamma shape and scale for cluster variances.
    pub sigma_shape: f64,
    pub sigma_scale: f64,
    /// Symmetric Dirichlet weight for `lambda` and each row of `pi`.
    pub dirichlet: f64,
    /// Standard deviation of the normal priors on `b0` and `b1`.
    pub beta_sd: f64,
}

impl Default for DlsmPriors {
    fn default() -> Self {
        Self { mu_var: 1.0, sigma_shape: 2.0, sigma_scale: 0.05, dirichlet: 1.0, beta_sd: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlsmSettings {
    pub k: usize,
    pub dim: usize,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    /// Initial random-walk scale for positions; tuned during burn-in.
    pub step: f64,
    pub rho: f64,
    pub seed: u64,
    pub priors: DlsmPriors,
}

impl DlsmSettings {
    pub fn new(k: usize) -> Self {
        Self { k, dim: 2, burn_in: 1000, samples: 1000, thin: 1, step: 0.3, rho: 0.5, seed: 1, priors: DlsmPriors::default() }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.dim == 0 {
            return Err(Error::Config("k and dim must be positive".into()));
        }
        if self.k > n {
            return Err(Error::InvalidInput(format!("k={} exceeds {} nodes", self.k, n)));
        }
        if self.samples == 0 || self.thin == 0 {
            return Err(Error::Config("samples and thin must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho={} outside [0,1)", self.rho)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config("step must be positive".into()));
        }
        let p = &self.priors;
        if !(p.mu_var > 0.0 && p.sigma_shape > 0.0 && p.sigma_scale > 0.0 && p.dirichlet > 0.0 && p.beta_sd > 0.0) {
            return Err(Error::Config("prior parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Full sampler state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub dim: usize,
    pub rho: f64,
    /// `positions[t][i * dim + c]`.
    pub positions: Vec<Vec<f64>>,
    pub labels: Vec<Vec<usize>>,
    pub mu: Vec<Vec<f64>>,
    pub sigma2: Vec<f64>,
    pub lambda: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub beta0: f64,
    pub beta1: f64,
}

impl LatentState {
    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn n(&self) -> usize {
        self.positions.first().map_or(0, |p| p.len() / self.dim)
    }

    pub fn position(&self, t: usize, i: usize) -> &[f64] {
        &self.positions[t][i * self.dim..(i + 1) * self.dim]
    }

    /// Prior log density of node `i`'s position and label at time `t`,
    /// including the label transition into `t`.
    fn node_prior(&self, t: usize, i: usize, z: &[f64], prev: Option<&[f64]>, label: usize) -> f64 {
        let lab = match t {
            0 => self.lambda[label].ln(),
            _ => self.transition[self.labels[t - 1][i]][label].ln(),
        };
        lab + self.position_prior(z, prev, label)
    }

    fn position_prior(&self, z: &[f64], prev: Option<&[f64]>, label: usize) -> f64 {
        let s2 = self.sigma2[label];
        let mu = &self.mu[label];
        let mut q = 0.0;
        for c in 0..self.dim {
            let mean = match prev {
                Some(p) => self.rho * p[c] + (1.0 - self.rho) * mu[c],
                None => mu[c],
            };
            q += (z[c] - mean) * (z[c] - mean);
        }
        -0.5 * q / s2 - 0.5 * self.dim as f64 * (2.0 * std::f64::consts::PI * s2).ln()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Log-likelihood of one slice given positions.
pub fn loglik_slice(positions: &[f64], dim: usize, beta0: f64, beta1: f64, y: &Adjacency) -> f64 {
    let n = y.n();
    let mut ll = 0.0;
    for i in 0..n {
        let zi = &positions[i * dim..(i + 1) * dim];
        for j in (i + 1)..n {
            let eta = beta0 - beta1 * distance(zi, &positions[j * dim..(j + 1) * dim]);
            ll += if y.has_edge(i, j) { eta } else { 0.0 } - log1p_exp(eta);
        }
    }
    ll
}

/// Per-slice classical scaling of shortest-path distances, rotated onto the
/// previous slice and scaled to unit root-mean-square norm.
fn scaled_geodesics(net: &DynamicNetwork, dim: usize) -> Vec<Vec<f64>> {
    let n = net.n();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(net.len());
    for y in net.slices() {
        let geo = geodesic_matrix(y);
        let far = geo.iter().flatten().flatten().copied().max().unwrap_or(0) + 1;
        let d2 = DMatrix::from_fn(n, n, |i, j| {
            let d = geo[i][j].unwrap_or(far) as f64;
            d * d
        });
        let row_mean: Vec<f64> = (0..n).map(|i| d2.row(i).sum() / n as f64).collect();
        let grand = row_mean.iter().sum::<f64>() / n as f64;
        let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_mean[i] - row_mean[j] + grand));
        let (vals, vecs) = top_eigen(b, dim);
        let mut z = vec![0.0; n * dim];
        for (c, (v, vec)) in vals.iter().zip(&vecs).enumerate() {
            let s = v.max(0.0).sqrt();
            for i in 0..n {
                z[i * dim + c] = vec[i] * s;
            }
        }
        normalize_rms(&mut z, dim);
        if let Some(prev) = out.last() {
            procrustes(&mut z, prev, dim);
        }
        out.push(z);
    }
    out
}

/// Root-mean-square position norm pooled over nodes and slices.
pub fn rms(positions: &[Vec<f64>], dim: usize) -> f64 {
    let (mut ss, mut count) = (0.0, 0usize);
    for z in positions {
        ss += z.iter().map(|v| v * v).sum::<f64>();
        count += z.len() / dim;
    }
    if count == 0 {
        0.0
    } else {
        (ss / count as f64).sqrt()
    }
}

fn normalize_rms(z: &mut [f64], dim: usize) -> f64 {
    let n = z.len() / dim;
    let rms = (z.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 1e-12 {
        z.iter_mut().for_each(|v| *v /= rms);
        rms
    } else {
        1.0
    }
}

/// Rotates `z` (about the origin) to best match `target`.
fn procrustes(z: &mut [f64], target: &[f64], dim: usize) {
    let n = z.len() / dim;
    let x = DMatrix::from_row_slice(n, dim, z);
    let y = DMatrix::from_row_slice(n, dim, target);
    let svd = Matrix::svd(x.transpose() * &y, true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else { return };
    let r = u * vt;
    let rotated = x * r;
    for i in 0..n {
        for c in 0..dim {
            z[i * dim + c] = rotated[(i, c)];
        }
    }
}

/// Logistic regression of ties on distance, with `b1` clamped at zero.
fn initial_beta(net: &DynamicNetwork, positions: &[Vec<f64>], dim: usize) -> (f64, f64) {
    let n = net.n();
    let (mut b0, mut b1) = (0.0, 1.0);
    for _ in 0..25 {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (y, z) in net.slices().iter().zip(positions) {
            for i in 0..n {
                for j in (i + 1)..n {
                    let x1 = -distance(&z[i * dim..(i + 1) * dim], &z[j * dim..(j + 1) * dim]);
                    let p = crate::stats::logistic(b0 + b1 * x1);
                    let r = if y.has_edge(i, j) { 1.0 } else { 0.0 } - p;
                    let w = p * (1.0 - p);
                    g0 += r;
                    g1 += r * x1;
                    h00 += w;
                    h01 += w * x1;
                    h11 += w * x1 * x1;
                }
            }
        }
        let det = h00 * h11 - h01 * h01;
        if det.abs() < 1e-12 {
            break;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        b0 += d0.clamp(-5.0, 5.0);
        b1 = (b1 + d1.clamp(-5.0, 5.0)).max(0.0);
        if d0.abs() + d1.abs() < 1e-8 {
            break;
        }
    }
    (b0, b1)
}

/// Starting state: scaled geodesics, per-slice k-means labels aligned over
/// time, and mixture parameters from those labels.
pub fn initialize(net: &DynamicNetwork, settings: &DlsmSettings) -> Result<LatentState> {
    settings.validate(net.n())?;
    let (k, dim) = (settings.k, settings.dim);
    let n = net.n();
    let positions = scaled_geodesics(net, dim);
    let mut rng = seed::stream(settings.seed, "dlsm-init", 0, 0);
    let mut labels: Vec<Vec<usize>> = Vec::with_capacity(net.len());
    for z in &positions {
        let points: Vec<Vec<f64>> = z.chunks(dim).map(|c| c.to_vec()).collect();
        let km = kmeans(&points, k, 10, &mut rng);
        let aligned = match labels.last() {
            Some(prev) => {
                let perm = best_permutation(&km.labels, prev, k);
                km.labels.iter().map(|&l| perm[l]).collect()
            }
            None => km.labels,
        };
        labels.push(aligned);
    }
    let mut mu = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for i in 0..n {
        let l = labels[0][i];
        counts[l] += 1;
        for c in 0..dim {
            mu[l][c] += positions[0][i * dim + c];
        }
    }
    for (m, &cnt) in mu.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= cnt.max(1) as f64);
    }
    let rho = settings.rho;
    let mut ss = vec![0.0; k];
    let mut ns = vec![0usize; k];
    for t in 0..net.len() {
        for i in 0..n {
            let l = labels[t][i];
            for c in 0..dim {
                let z = positions[t][i * dim + c];
                let mean = if t == 0 { mu[l][c] } else { rho * positions[t - 1][i * dim + c] + (1.0 - rho) * mu[l][c] };
                ss[l] += (z - mean) * (z - mean);
            }
            ns[l] += dim;
        }
    }
    let sigma2 = ss.iter().zip(&ns).map(|(s, &c)| (s / c.max(1) as f64).max(1e-3)).collect();
    let lambda = counts.iter().map(|&c| (c as f64 + 1.0) / (n + k) as f64).collect();
    let off = 0.1 / k as f64;
    let transition = (0..k).map(|a| (0..k).map(|b| if a == b { 0.9 + off } else { off }).collect()).collect();
    let (beta0, beta1) = initial_beta(net, &positions, dim);
    Ok(LatentState { dim, rho, positions, labels, mu, sigma2, lambda, transition, beta0, beta1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlsmDiagnostics {
    pub accept_position: f64,
    pub accept_beta: f64,
    pub position_step: f64,
    pub beta_step: f64,
    pub beta0_mean: f64,
    pub beta1_mean: f64,
    pub loglik_mean: f64,
    pub loglik_sd: f64,
    pub loglik_min: f64,
    pub loglik_max: f64,
    pub retained: usize,
    pub lambda_mean: Vec<f64>,
    pub transition_mean: Vec<Vec<f64>>,
    pub sigma2_mean: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DlsmFit {
    pub membership: MembershipSeries,
    pub diagnostics: DlsmDiagnostics,
    /// State at the last sweep.
    pub state: LatentState,
}

/// Streaming majority vote over label samples, each aligned to the first.
#[derive(Debug, Clone)]
pub struct ModeAccumulator {
    k: usize,
    reference: Option<Vec<usize>>,
    votes: Vec<Vec<u32>>,
    times: usize,
    n: usize,
}

impl ModeAccumulator {
    pub fn new(times: usize, n: usize, k: usize) -> Self {
        Self { k, reference: None, votes: vec![vec![0; k]; times * n], times, n }
    }

    pub fn push(&mut self, labels: &[Vec<usize>]) {
        let flat: Vec<usize> = labels.iter().flatten().copied().collect();
        let perm = match &self.reference {
            Some(r) => best_permutation(&flat, r, self.k),
            None => {
                self.reference = Some(flat.clone());
                (0..self.k).collect()
            }
        };
        for (v, &l) in self.votes.iter_mut().zip(&flat) {
            v[perm[l]] += 1;
        }
    }

    pub fn finish(&self) -> Result<MembershipSeries> {
        let mut out = vec![vec![0usize; self.n]; self.times];
        for (idx, v) in self.votes.iter().enumerate() {
            let best = (0..self.k).max_by_key(|&c| (v[c], std::cmp::Reverse(c))).unwrap_or(0);
            out[idx / self.n][idx % self.n] = best;
        }
        MembershipSeries::new(out, self.k)
    }
}

/// Marginal posterior mode of each label after aligning samples to the first.
pub fn posterior_modes(samples: &[MembershipSeries]) -> Result<MembershipSeries> {
    let first = samples.first().ok_or_else(|| Error::InvalidInput("no samples".into()))?;
    let mut acc = ModeAccumulator::new(first.len(), first.n(), first.k());
    for s in samples {
        acc.push(s.labels());
    }
    acc.finish()
}

struct Sampler<'a> {
    net: &'a DynamicNetwork,
    settings: &'a DlsmSettings,
    st: LatentState,
    /// `dist[t][i * n + j]`.
    dist: Vec<Vec<f64>>,
    /// `log(1 + exp(eta))` for every ordered pair, matching `dist`.
    soft: Vec<Vec<f64>>,
    spare: Vec<Vec<f64>>,
    step: f64,
    beta_step: f64,
    acc: [(u64, u64); 2],
}

fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map(|g| g.sample(rng)).unwrap_or(0.0).max(1e-300))
        .collect();
    let s: f64 = draws.iter().sum();
    draws.iter().map(|d| d / s).collect()
}

impl<'a> Sampler<'a> {
    fn new(net: &'a DynamicNetwork, settings: &'a DlsmSettings, st: LatentState) -> Self {
        let n = net.n();
        let dist: Vec<Vec<f64>> = st
            .positions
            .iter()
            .map(|z| {
                let mut d = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        d[i * n + j] = distance(&z[i * st.dim..(i + 1) * st.dim], &z[j * st.dim..(j + 1) * st.dim]);
                    }
                }
                d
            })
            .collect();
        let mut s = Self {
            net,
            settings,
            st,
            soft: dist.clone(),
            spare: dist.clone(),
            dist,
            step: settings.step,
            beta_step: 0.05,
            acc: [(0, 0); 2],
        };
        let mut soft = std::mem::take(&mut s.soft);
        s.soft_terms(s.st.beta0, s.st.beta1, &mut soft);
        s.soft = soft;
        s
    }

    /// Log-likelihood at the current coefficients, from the caches.
    fn cached_loglik(&self) -> f64 {
        let n = self.n();
        let (b0, b1) = (self.st.beta0, self.st.beta1);
        let mut ll = 0.0;
        for (t, y) in self.net.slices().iter().enumerate() {
            let (d, sp) = (&self.dist[t], &self.soft[t]);
            for i in 0..n {
                ll -= sp[i * n + i + 1..(i + 1) * n].iter().sum::<f64>();
                for j in y.neighbors(i).filter(|&j| j > i) {
                    ll += b0 - b1 * d[i * n + j];
                }
            }
        }
        ll
    }

    fn n(&self) -> usize {
        self.net.n()
    }

    /// Change in slice-`t` log-likelihood when node `i` moves to `z`; fills
    /// `scratch` with the new distances followed by the new soft terms.
    fn move_delta(&self, t: usize, i: usize, z: &[f64], scratch: &mut [f64]) -> f64 {
        let (n, dim) = (self.n(), self.st.dim);
        let pos = &self.st.positions[t];
        let row = &self.dist[t][i * n..(i + 1) * n];
        let soft = &self.soft[t][i * n..(i + 1) * n];
        let (b0, b1) = (self.st.beta0, self.st.beta1);
        let (nd, ns) = scratch.split_at_mut(n);
        let mut delta = 0.0;
        for j in 0..n {
            if j == i {
                nd[j] = 0.0;
                ns[j] = soft[j];
                continue;
            }
            let d = distance(z, &pos[j * dim..(j + 1) * dim]);
            nd[j] = d;
            ns[j] = log1p_exp(b0 - b1 * d);
            delta -= ns[j] - soft[j];
        }
        for j in self.net.slice(t).neighbors(i) {
            delta -= b1 * (nd[j] - row[j]);
        }
        delta
    }

    fn commit(&mut self, t: usize, i: usize, z: &[f64], scratch: &[f64]) {
        let (n, dim) = (self.n(), self.st.dim);
        self.st.positions[t][i * dim..(i + 1) * dim].copy_from_slice(z);
        let (nd, ns) = scratch.split_at(n);
        for j in 0..n {
            self.dist[t][i * n + j] = nd[j];
            self.dist[t][j * n + i] = nd[j];
            self.soft[t][i * n + j] = ns[j];
            self.soft[t][j * n + i] = ns[j];
        }
    }

    /// Fills `out` with soft terms at `(b0, b1)` and returns the
    /// log-likelihood there.
    fn soft_terms(&self, b0: f64, b1: f64, out: &mut [Vec<f64>]) -> f64 {
        let n = self.n();
        let mut ll = 0.0;
        for (t, y) in self.net.slices().iter().enumerate() {
            let (d, sp) = (&self.dist[t], &mut out[t]);
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = log1p_exp(b0 - b1 * d[i * n + j]);
                    sp[i * n + j] = v;
                    sp[j * n + i] = v;
                    ll -= v;
                }
                for j in y.neighbors(i).filter(|&j| j > i) {
                    ll += b0 - b1 * d[i * n + j];
                }
            }
        }
        ll
    }

    fn update_positions<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (n, dim, last) = (self.n(), self.st.dim, self.net.last_time());
        let mut scratch = vec![0.0; 2 * n];
        let mut prop = vec![0.0; dim];
        for t in 0..=last {
            for i in 0..n {
                let cur = self.st.position(t, i).to_vec();
                for c in 0..dim {
                    prop[c] = cur[c] + self.step * sample_normal(rng);
                }
                let label = self.st.labels[t][i];
                let prev = (t > 0).then(|| self.st.position(t - 1, i).to_vec());
                let mut log_a = self.move_delta(t, i, &prop, &mut scratch);
                log_a += self.st.position_prior(&prop, prev.as_deref(), label)
                    - self.st.position_prior(&cur, prev.as_deref(), label);
                if t < last {
                    let next = self.st.position(t + 1, i).to_vec();
                    let nl = self.st.labels[t + 1][i];
                    log_a += self.st.position_prior(&next, Some(&prop), nl) - self.st.position_prior(&next, Some(&cur), nl);
                }
                self.acc[0].1 += 1;
                if log_a >= 0.0 || rng.random::<f64>().ln() < log_a {
                    self.commit(t, i, &prop, &scratch);
                    self.acc[0].0 += 1;
                }
            }
        }
    }

    fn update_labels<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (n, last, k) = (self.n(), self.net.last_time(), self.st.k());
        if k < 2 {
            return;
        }
        let mut logp = vec![0.0; k];
        for t in 0..=last {
            for i in 0..n {
                let z = self.st.position(t, i).to_vec();
                let prev = (t > 0).then(|| self.st.position(t - 1, i).to_vec());
                for (c, lp) in logp.iter_mut().enumerate() {
                    *lp = self.st.node_prior(t, i, &z, prev.as_deref(), c);
                    if t < last {
                        *lp += self.st.transition[c][self.st.labels[t + 1][i]].ln();
                    }
                }
                let mx = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = logp.iter().map(|l| (l - mx).exp()).collect();
                let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
                let mut pick = k - 1;
                for (c, &wc) in w.iter().enumerate() {
                    if u < wc {
                        pick = c;
                        break;
                    }
                    u -= wc;
                }
                self.st.labels[t][i] = pick;
            }
        }
    }

    fn update_mixture<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (n, dim, last, k) = (self.n(), self.st.dim, self.net.last_time(), self.st.k());
        let rho = self.st.rho;
        let pr = &self.settings.priors;
        for c in 0..k {
            // Each observation contributes r ~ N(a mu, s2).
            let s2 = self.st.sigma2[c];
            let mut prec = 1.0 / pr.mu_var;
            let mut lin = vec![0.0; dim];
            for t in 0..=last {
                let a = if t == 0 { 1.0 } else { 1.0 - rho };
                for i in 0..n {
                    if self.st.labels[t][i] != c {
                        continue;
                    }
                    prec += a * a / s2;
                    for d in 0..dim {
                        let r = self.st.positions[t][i * dim + d] - if t == 0 { 0.0 } else { rho * self.st.positions[t - 1][i * dim + d] };
                        lin[d] += a * r / s2;
                    }
                }
            }
            for d in 0..dim {
                self.st.mu[c][d] = lin[d] / prec + sample_normal(rng) / prec.sqrt();
            }
            let mut ss = 0.0;
            let mut cnt = 0usize;
            for t in 0..=last {
                for i in 0..n {
                    if self.st.labels[t][i] != c {
                        continue;
                    }
                    let prev = (t > 0).then(|| &self.st.positions[t - 1][i * dim..(i + 1) * dim]);
                    for d in 0..dim {
                        let mean = match prev {
                            Some(p) => rho * p[d] + (1.0 - rho) * self.st.mu[c][d],
                            None => self.st.mu[c][d],
                        };
                        let r = self.st.positions[t][i * dim + d] - mean;
                        ss += r * r;
                    }
                    cnt += dim;
                }
            }
            let shape = pr.sigma_shape + cnt as f64 / 2.0;
            let scale = pr.sigma_scale + ss / 2.0;
            let g = Gamma::new(shape, 1.0 / scale).map(|g| g.sample(rng)).unwrap_or(1.0 / s2);
            self.st.sigma2[c] = (1.0 / g).max(1e-8);
        }
        let mut first = vec![pr.dirichlet; k];
        let mut trans = vec![vec![pr.dirichlet; k]; k];
        for i in 0..n {
            first[self.st.labels[0][i]] += 1.0;
            for t in 1..=last {
                trans[self.st.labels[t - 1][i]][self.st.labels[t][i]] += 1.0;
            }
        }
        self.st.lambda = sample_dirichlet(&first, rng);
        self.st.transition = trans.iter().map(|row| sample_dirichlet(row, rng)).collect();
    }

    fn update_beta<R: Rng + ?Sized>(&mut self, current: f64, rng: &mut R) -> f64 {
        let sd = self.settings.priors.beta_sd;
        let prior = |b0: f64, b1: f64| -(b0 * b0 + b1 * b1) / (2.0 * sd * sd);
        let b0 = self.st.beta0 + self.beta_step * sample_normal(rng);
        let b1 = (self.st.beta1 + self.beta_step * sample_normal(rng)).abs();
        let mut spare = std::mem::take(&mut self.spare);
        let ll = self.soft_terms(b0, b1, &mut spare);
        let log_a = ll + prior(b0, b1) - current - prior(self.st.beta0, self.st.beta1);
        self.acc[1].1 += 1;
        if log_a >= 0.0 || rng.random::<f64>().ln() < log_a {
            self.st.beta0 = b0;
            self.st.beta1 = b1;
            self.spare = std::mem::replace(&mut self.soft, spare);
            self.acc[1].0 += 1;
            ll
        } else {
            self.spare = spare;
            current
        }
    }

    /// Rescales all positions to unit root-mean-square norm over every node
    /// and slice, with `b1`, the cluster means and variances absorbing the
    /// factor so the likelihood is unchanged.
    fn project(&mut self) {
        let s = rms(&self.st.positions, self.st.dim);
        if s <= 1e-12 {
            return;
        }
        self.st.positions.iter_mut().flatten().for_each(|v| *v /= s);
        self.dist.iter_mut().flatten().for_each(|v| *v /= s);
        self.st.beta1 *= s;
        self.st.mu.iter_mut().flatten().for_each(|v| *v /= s);
        self.st.sigma2.iter_mut().for_each(|v| *v /= s * s);
    }

    fn rate(&self, idx: usize) -> f64 {
        let (a, t) = self.acc[idx];
        if t == 0 {
            0.0
        } else {
            a as f64 / t as f64
        }
    }
}

/// Runs the sampler and summarises memberships by marginal posterior modes.
pub fn fit_dlsm(net: &DynamicNetwork, settings: &DlsmSettings) -> Result<DlsmFit> {
    let init = initialize(net, settings)?;
    let mut rng = seed::stream(settings.seed, "dlsm-mcmc", 0, 0);
    let mut s = Sampler::new(net, settings, init);
    let total = settings.burn_in + settings.samples * settings.thin;
    let mut modes = ModeAccumulator::new(net.len(), net.n(), settings.k);
    let mut trace = Vec::with_capacity(settings.samples);
    let k = settings.k;
    let (mut b0_sum, mut b1_sum) = (0.0, 0.0);
    let mut lambda_sum = vec![0.0; k];
    let mut trans_sum = vec![vec![0.0; k]; k];
    let mut sigma_sum = vec![0.0; k];
    let mut window = [(0u64, 0u64); 2];
    for sweep in 0..total {
        s.update_positions(&mut rng);
        s.update_labels(&mut rng);
        s.update_mixture(&mut rng);
        let current = s.cached_loglik();
        let ll = s.update_beta(current, &mut rng);
        s.project();
        if !ll.is_finite() || !s.st.beta0.is_finite() || !s.st.beta1.is_finite() {
            return Err(Error::Numerical(format!("non-finite likelihood at sweep {sweep}")));
        }
        if sweep < settings.burn_in && (sweep + 1) % 25 == 0 {
            let rate = |now: (u64, u64), then: (u64, u64)| {
                let tries = now.1 - then.1;
                if tries == 0 { 0.3 } else { (now.0 - then.0) as f64 / tries as f64 }
            };
            let rp = rate(s.acc[0], window[0]);
            if rp < 0.2 {
                s.step *= 0.8;
            } else if rp > 0.4 {
                s.step *= 1.25;
            }
            let rb = rate(s.acc[1], window[1]);
            if rb < 0.15 {
                s.beta_step *= 0.7;
            } else if rb > 0.45 {
                s.beta_step *= 1.4;
            }
            window = s.acc;
        }
        if sweep >= settings.burn_in && (sweep - settings.burn_in) % settings.thin == 0 {
            modes.push(&s.st.labels);
            trace.push(s.cached_loglik());
            b0_sum += s.st.beta0;
            b1_sum += s.st.beta1;
            lambda_sum.iter_mut().zip(&s.st.lambda).for_each(|(a, b)| *a += b);
            trans_sum.iter_mut().flatten().zip(s.st.transition.iter().flatten()).for_each(|(a, b)| *a += b);
            sigma_sum.iter_mut().zip(&s.st.sigma2).for_each(|(a, b)| *a += b);
        }
    }
    let m = trace.len() as f64;
    let mean = trace.iter().sum::<f64>() / m;
    let var = trace.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0).max(1.0);
    let diagnostics = DlsmDiagnostics {
        accept_position: s.rate(0),
                accept_beta: s.rate(1),
        position_step: s.step,
        beta_step: s.beta_step,
        beta0_mean: b0_sum / m,
        beta1_mean: b1_sum / m,
        loglik_mean: mean,
        loglik_sd: var.sqrt(),
        loglik_min: trace.iter().copied().fold(f64::INFINITY, f64::min),
        loglik_max: trace.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        retained: trace.len(),
        lambda_mean: lambda_sum.iter().map(|v| v / m).collect(),
        transition_mean: trans_sum.iter().map(|r| r.iter().map(|v| v / m).collect()).collect(),
        sigma2_mean: sigma_sum.iter().map(|v| v / m).collect(),
    };
    Ok(DlsmFit { membership: modes.finish()?, diagnostics, state: s.st })
}
