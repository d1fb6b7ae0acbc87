//! Estimation of a cluster's temporal ERGM coefficients from observed
//! transitions: maximum pseudo-likelihood, exact maximum likelihood by full
//! enumeration (small graphs only) and Monte Carlo maximum likelihood.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::TransitionSampler;
use crate::linalg::{ascent_direction, inverse};
use crate::net::{transition_views, Adjacency, DynamicNetwork, MembershipSeries};
use crate::par;
use crate::seed;
use crate::stats::{log1p_exp, logistic, StatisticSpec};

/// Coefficients beyond this magnitude are treated as divergent.
const DIVERGENCE: f64 = 25.0;
/// Standard errors beyond this magnitude indicate a flat likelihood direction.
const SE_CEILING: f64 = 100.0;

/// One observed transition `y_prev -> y_curr` on a common node set.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPair {
    pub prev: Adjacency,
    pub curr: Adjacency,
}

/// Transitions sharing one coefficient vector. Pairs may have different
/// node counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionSeries {
    pairs: Vec<TransitionPair>,
}

impl TransitionSeries {
    pub fn new(pairs: Vec<TransitionPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("transition series is empty".into()));
        }
        if let Some((t, p)) = pairs.iter().enumerate().find(|(_, p)| p.prev.n() != p.curr.n()) {
            return Err(Error::Dimension(format!("pair {t}: {} vs {} nodes", p.prev.n(), p.curr.n())));
        }
        Ok(Self { pairs })
    }

    /// Consecutive slices of a whole network.
    pub fn from_network(net: &DynamicNetwork) -> Result<Self> {
        Self::new(
            net.slices()
                .windows(2)
                .map(|w| TransitionPair { prev: w[0].clone(), curr: w[1].clone() })
                .collect(),
        )
    }

    pub fn pairs(&self) -> &[TransitionPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn extend(&mut self, other: TransitionSeries) {
        self.pairs.extend(other.pairs);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Mple,
    ExactMle,
    McmcMle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub terms: Vec<String>,
    pub theta: Vec<f64>,
    pub std_err: Vec<f64>,
    pub method: FitMethod,
    pub iterations: usize,
    pub converged: bool,
    /// Exact log-likelihood (exact MLE), log pseudo-likelihood (MPLE), or
    /// absent for Monte Carlo fits.
    pub loglik: Option<f64>,
    /// Standard errors ignore dyad dependence (pseudo-likelihood).
    pub naive_std_err: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn std_errors(info: &[Vec<f64>]) -> Vec<f64> {
    match inverse(info) {
        Some(inv) => (0..info.len()).map(|i| inv[i][i].max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; info.len()],
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Change-statistic design rows collapsed to `(x, ones, total)`.
fn mple_design(spec: &StatisticSpec, series: &TransitionSeries) -> Vec<(Vec<f64>, f64, f64)> {
    let p = spec.len();
    let mut rows: HashMap<Vec<i64>, (f64, f64)> = HashMap::new();
    let mut c = vec![0.0; p];
    for pair in series.pairs() {
        let n = pair.curr.n();
        for i in 0..n {
            for j in (i + 1)..n {
                // Conditional given the rest of y_curr: change stats evaluated on y_curr.
                spec.change_into(&pair.curr, &pair.prev, i, j, &mut c);
                let key: Vec<i64> = c.iter().map(|v| *v as i64).collect();
                let e = rows.entry(key).or_insert((0.0, 0.0));
                e.0 += f64::from(u8::from(pair.curr.has_edge(i, j)));
                e.1 += 1.0;
            }
        }
    }
    let mut out: Vec<(Vec<f64>, f64, f64)> =
        rows.into_iter().map(|(k, (ones, total))| (k.iter().map(|&v| v as f64).collect(), ones, total)).collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    out
}

fn logistic_objective(rows: &[(Vec<f64>, f64, f64)], theta: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let p = theta.len();
    let mut ll = 0.0;
    let mut g = vec![0.0; p];
    let mut h = vec![vec![0.0; p]; p];
    for (x, ones, total) in rows {
        let eta = dot(x, theta);
        let pr = logistic(eta);
        ll += ones * eta - total * log1p_exp(eta);
        let resid = ones - total * pr;
        let w = total * pr * (1.0 - pr);
        for a in 0..p {
            g[a] += x[a] * resid;
            for b in 0..p {
                h[a][b] -= w * x[a] * x[b];
            }
        }
    }
    (ll, g, h)
}

/// Maximum pseudo-likelihood: logistic regression of each dyad's state on
/// its change statistics, by Newton-Raphson.
pub fn mple(spec: &StatisticSpec, series: &TransitionSeries) -> Result<FitResult> {
    let rows = mple_design(spec, series);
    let ones: f64 = rows.iter().map(|r| r.1).sum();
    let total: f64 = rows.iter().map(|r| r.2).sum();
    if total == 0.0 {
        return Err(Error::InvalidInput("no dyads in transition series".into()));
    }
    if ones == 0.0 || ones == total {
        return Err(Error::DegenerateResponse(format!("{ones} ties among {total} dyads")));
    }
    let p = spec.len();
    let mut theta = vec![0.0; p];
    let (mut ll, mut g, mut h) = logistic_objective(&rows, &theta);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 100 {
        if norm(&g) < 1e-8 {
            converged = true;
            break;
        }
        iterations += 1;
        let d = ascent_direction(&h, &g);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let cand: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di).collect();
            let (cll, cg, ch) = logistic_objective(&rows, &cand);
            if cll.is_finite() && cll >= ll - 1e-12 * ll.abs() {
                moved = cand != theta;
                theta = cand;
                ll = cll;
                g = cg;
                h = ch;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            // No representable improvement left: at the numerical optimum.
            converged = norm(&g) < 1e-6 * total.max(1.0);
            break;
        }
        if theta.iter().any(|t| t.abs() > DIVERGENCE) {
            break;
        }
    }
    let mut notes = Vec::new();
    let info: Vec<Vec<f64>> = h.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let std_err = std_errors(&info);
    // Separated data drive the coefficients off to infinity while the
    // information collapses; either symptom marks a non-existent estimate.
    if theta.iter().any(|t| t.abs() > DIVERGENCE) || std_err.iter().any(|s| !s.is_finite() || *s > SE_CEILING) {
        converged = false;
        notes.push("separation: coefficients diverge".to_string());
    }
    Ok(FitResult {
        terms: spec.names(),
        theta,
        std_err,
        method: FitMethod::Mple,
        iterations,
        converged,
        loglik: Some(ll),
        naive_std_err: true,
        notes,
    })
}

/// Largest pair size accepted by [`exact_mle`] (`2^15` successor graphs).
pub const EXACT_MAX_NODES: usize = 6;

/// Distinct statistic vectors of every successor graph of `prev`, with multiplicities.
fn enumerate_support(spec: &StatisticSpec, prev: &Adjacency) -> Vec<(Vec<f64>, f64)> {
    let n = prev.n();
    let dyads: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let mut y = Adjacency::empty(n);
    let mut stats = spec.stats_unchecked(&y, prev);
    let mut c = vec![0.0; spec.len()];
    let mut counts: HashMap<Vec<i64>, f64> = HashMap::new();
    let key = |s: &[f64]| s.iter().map(|v| v.round() as i64).collect::<Vec<_>>();
    *counts.entry(key(&stats)).or_default() += 1.0;
    // Gray-code walk: each step toggles exactly one dyad.
    for step in 1u64..(1u64 << dyads.len()) {
        let (i, j) = dyads[step.trailing_zeros() as usize];
        spec.change_into(&y, prev, i, j, &mut c);
        let on = !y.has_edge(i, j);
        y.set(i, j, on);
        let sign = if on { 1.0 } else { -1.0 };
        stats.iter_mut().zip(&c).for_each(|(s, ci)| *s += sign * ci);
        *counts.entry(key(&stats)).or_default() += 1.0;
    }
    let mut out: Vec<(Vec<f64>, f64)> = counts.into_iter().map(|(k, w)| (k.iter().map(|&v| v as f64).collect(), w)).collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    out
}

struct ExactTerm {
    observed: Vec<f64>,
    support: Vec<(Vec<f64>, f64)>,
}

fn exact_objective(terms: &[ExactTerm], theta: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let p = theta.len();
    let mut ll = 0.0;
    let mut g = vec![0.0; p];
    let mut h = vec![vec![0.0; p]; p];
    for t in terms {
        let etas: Vec<f64> = t.support.iter().map(|(s, _)| dot(s, theta)).collect();
        let mx = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = t.support.iter().zip(&etas).map(|((_, w), e)| w * (e - mx).exp()).sum();
        let log_psi = mx + z.ln();
        ll += dot(&t.observed, theta) - log_psi;
        let mut mean = vec![0.0; p];
        let mut second = vec![vec![0.0; p]; p];
        for ((s, w), e) in t.support.iter().zip(&etas) {
            let pr = w * (e - log_psi).exp();
            for a in 0..p {
                mean[a] += pr * s[a];
                for b in 0..p {
                    second[a][b] += pr * s[a] * s[b];
                }
            }
        }
        for a in 0..p {
            g[a] += t.observed[a] - mean[a];
            for b in 0..p {
                h[a][b] -= second[a][b] - mean[a] * mean[b];
            }
        }
    }
    (ll, g, h)
}

/// Exact maximum likelihood, computing every transition's normaliser by
/// enumerating all successor graphs. Pairs with fewer than two nodes carry
/// no dyads and are skipped.
pub fn exact_mle(spec: &StatisticSpec, series: &TransitionSeries) -> Result<FitResult> {
    if let Some(big) = series.pairs().iter().find(|p| p.prev.n() > EXACT_MAX_NODES) {
        return Err(Error::InvalidInput(format!(
            "exact likelihood needs at most {EXACT_MAX_NODES} nodes per transition, found {}",
            big.prev.n()
        )));
    }
    let terms: Vec<ExactTerm> = series
        .pairs()
        .iter()
        .filter(|p| p.prev.n() >= 2)
        .map(|p| ExactTerm { observed: spec.stats_unchecked(&p.curr, &p.prev), support: enumerate_support(spec, &p.prev) })
        .collect();
    if terms.is_empty() {
        return Err(Error::InvalidInput("no dyads in transition series".into()));
    }
    let p = spec.len();
    let mut theta = vec![0.0; p];
    let (mut ll, mut g, mut h) = exact_objective(&terms, &theta);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 200 {
        if norm(&g) < 1e-9 {
            converged = true;
            break;
        }
        iterations += 1;
        let d = ascent_direction(&h, &g);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di).collect();
            let (cll, cg, ch) = exact_objective(&terms, &cand);
            if cll.is_finite() && cll >= ll - 1e-13 * ll.abs() {
                moved = cand != theta;
                theta = cand;
                ll = cll;
                g = cg;
                h = ch;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            converged = norm(&g) < 1e-7;
            break;
        }
        if theta.iter().any(|t| t.abs() > DIVERGENCE) {
            break;
        }
    }
    let mut notes = Vec::new();
    let info: Vec<Vec<f64>> = h.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let std_err = std_errors(&info);
    if theta.iter().any(|t| t.abs() > DIVERGENCE) || std_err.iter().any(|s| !s.is_finite() || *s > SE_CEILING) {
        converged = false;
        notes.push("maximum likelihood estimate does not exist: observed statistics on the boundary".to_string());
    }
    Ok(FitResult {
        terms: spec.names(),
        theta,
        std_err,
        method: FitMethod::ExactMle,
        iterations,
        converged,
        loglik: Some(ll),
        naive_std_err: false,
        notes,
    })
}

/// Exact expected statistics of each transition at `theta`, summed over pairs.
pub fn exact_expected_stats(spec: &StatisticSpec, series: &TransitionSeries, theta: &[f64]) -> Result<Vec<f64>> {
    if series.pairs().iter().any(|p| p.prev.n() > EXACT_MAX_NODES) {
        return Err(Error::InvalidInput("pair too large for enumeration".into()));
    }
    let mut out = vec![0.0; spec.len()];
    for pair in series.pairs().iter().filter(|p| p.prev.n() >= 2) {
        let support = enumerate_support(spec, &pair.prev);
        let etas: Vec<f64> = support.iter().map(|(s, _)| dot(s, theta)).collect();
        let mx = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = support.iter().zip(&etas).map(|((_, w), e)| w * (e - mx).exp()).sum();
        for ((s, w), e) in support.iter().zip(&etas) {
            let pr = w * (e - mx).exp() / z;
            out.iter_mut().zip(s).for_each(|(o, v)| *o += pr * v);
        }
    }
    Ok(out)
}

/// Settings of the Monte Carlo likelihood approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcMleSettings {
    /// Retained networks per transition and outer iteration.
    pub samples: usize,
    /// Gibbs sweeps discarded before the first retained network.
    pub burn_in: usize,
    /// Gibbs sweeps between retained networks.
    pub thin: usize,
    pub max_outer: usize,
    /// Convergence threshold on the largest coefficient change.
    pub tol: f64,
    /// Largest coefficient change per outer iteration.
    pub step_cap: f64,
    /// Minimum effective sample size, as a fraction of `samples`, for the
    /// importance weights of every transition.
    pub min_ess: f64,
    pub seed: u64,
}

impl Default for McmcMleSettings {
    fn default() -> Self {
        Self { samples: 1000, burn_in: 50, thin: 1, max_outer: 20, tol: 1e-4, step_cap: 1.0, min_ess: 0.1, seed: 1 }
    }
}

/// Simulated statistics of one transition, stored row-major.
struct SampleBlock {
    observed: Vec<f64>,
    stats: Vec<f64>,
}

fn simulate_block(spec: &StatisticSpec, pair: &TransitionPair, theta: &[f64], s: &McmcMleSettings, stream: u64) -> SampleBlock {
    let mut rng = seed::stream(s.seed, "mcmc-mle", stream, 0);
    let mut sampler = TransitionSampler::new(spec, theta, &pair.prev, pair.curr.clone());
    for _ in 0..s.burn_in {
        sampler.sweep(&mut rng);
    }
    let mut stats = Vec::with_capacity(s.samples * spec.len());
    for _ in 0..s.samples {
        for _ in 0..s.thin.max(1) {
            sampler.sweep(&mut rng);
        }
        stats.extend_from_slice(sampler.stats());
    }
    SampleBlock { observed: spec.stats_unchecked(&pair.curr, &pair.prev), stats }
}

/// Importance-sampled log-likelihood ratio `l(theta0 + delta) - l(theta0)`
/// with gradient and Hessian in `delta`.
fn is_objective(blocks: &[SampleBlock], p: usize, delta: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let mut ll = 0.0;
    let mut g = vec![0.0; p];
    let mut h = vec![vec![0.0; p]; p];
    for b in blocks {
        let m = b.stats.len() / p;
        let etas: Vec<f64> = b.stats.chunks(p).map(|s| dot(s, delta)).collect();
        let mx = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = etas.iter().map(|e| (e - mx).exp()).sum();
        ll += dot(&b.observed, delta) - (mx + (z / m as f64).ln());
        let mut mean = vec![0.0; p];
        let mut second = vec![vec![0.0; p]; p];
        for (s, e) in b.stats.chunks(p).zip(&etas) {
            let w = (e - mx).exp() / z;
            for a in 0..p {
                mean[a] += w * s[a];
                for c in 0..p {
                    second[a][c] += w * s[a] * s[c];
                }
            }
        }
        for a in 0..p {
            g[a] += b.observed[a] - mean[a];
            for c in 0..p {
                h[a][c] -= second[a][c] - mean[a] * mean[c];
            }
        }
    }
    (ll, g, h)
}

fn min_ess_fraction(blocks: &[SampleBlock], p: usize, delta: &[f64]) -> f64 {
    blocks
        .iter()
        .map(|b| {
            let etas: Vec<f64> = b.stats.chunks(p).map(|s| dot(s, delta)).collect();
            let mx = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = etas.iter().map(|e| (e - mx).exp()).collect();
            let s1: f64 = w.iter().sum();
            let s2: f64 = w.iter().map(|x| x * x).sum();
            s1 * s1 / s2 / w.len() as f64
        })
        .fold(1.0, f64::min)
}

/// Maximises the importance-sampled objective inside the box `|delta_i| <= cap`.
fn maximise_in_box(blocks: &[SampleBlock], p: usize, cap: f64) -> Vec<f64> {
    let clip = |v: f64| v.clamp(-cap, cap);
    let mut delta = vec![0.0; p];
    let (mut ll, mut g, mut h) = is_objective(blocks, p, &delta);
    for _ in 0..100 {
        if norm(&g) < 1e-10 {
            break;
        }
        let d = ascent_direction(&h, &g);
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> = delta.iter().zip(&d).map(|(x, di)| clip(x + step * di)).collect();
            let (cll, cg, ch) = is_objective(blocks, p, &cand);
            if cll.is_finite() && cll > ll {
                delta = cand;
                ll = cll;
                g = cg;
                h = ch;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    delta
}

/// Monte Carlo maximum likelihood (Geyer-Thompson). Each outer iteration
/// simulates `samples` networks per transition at the current coefficients
/// and maximises the importance-sampled likelihood ratio within a trust
/// region. Every iteration reuses the same per-transition random streams, so
/// the fixed point is reached exactly rather than jittering with fresh noise.
pub fn mcmc_mle(spec: &StatisticSpec, series: &TransitionSeries, theta0: &[f64], settings: &McmcMleSettings) -> Result<FitResult> {
    let p = spec.len();
    if theta0.len() != p {
        return Err(Error::Dimension(format!("{} starting values for {p} statistics", theta0.len())));
    }
    if settings.samples < 2 {
        return Err(Error::Config("mcmc-mle needs at least two samples per transition".into()));
    }
    let pairs: Vec<&TransitionPair> = series.pairs().iter().filter(|p| p.prev.n() >= 2).collect();
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no dyads in transition series".into()));
    }
    let mut theta = theta0.to_vec();
    let mut converged = false;
    let mut iterations = 0;
    let mut notes = Vec::new();
    let mut blocks;
    loop {
        iterations += 1;
        blocks = par::map_range(pairs.len(), |t| simulate_block(spec, pairs[t], &theta, settings, t as u64));
        let mut delta = maximise_in_box(&blocks, p, settings.step_cap);
        let mut shrunk = false;
        while min_ess_fraction(&blocks, p, &delta) < settings.min_ess && norm(&delta) > 1e-12 {
            delta.iter_mut().for_each(|d| *d *= 0.5);
            shrunk = true;
        }
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Numerical("non-finite update in mcmc-mle".into()));
        }
        let change = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        theta.iter_mut().zip(&delta).for_each(|(t, d)| *t += d);
        if change < settings.tol && !shrunk {
            converged = true;
            break;
        }
        if iterations >= settings.max_outer {
            notes.push(format!("stopped after {iterations} outer iterations; last change {change:.2e}"));
            break;
        }
    }
    // Information at the final coefficients from the last sample set.
    let delta_last: Vec<f64> = vec![0.0; p];
    let (_, _, h) = is_objective(&blocks, p, &delta_last);
    let info: Vec<Vec<f64>> = h.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    Ok(FitResult {
        terms: spec.names(),
        theta,
        std_err: std_errors(&info),
        method: FitMethod::McmcMle,
        iterations,
        converged,
        loglik: None,
        naive_std_err: false,
        notes,
    })
}

/// Builds each cluster's transitions from its remain-sets. Remain-sets with
/// fewer than `min_nodes` members are skipped.
pub fn cluster_series(net: &DynamicNetwork, m: &MembershipSeries, min_nodes: usize) -> Result<Vec<Vec<TransitionPair>>> {
    m.check_matches(net)?;
    let mut out = vec![Vec::new(); m.k()];
    for t in 1..net.len() {
        for v in transition_views(net.slice(t - 1), net.slice(t), m.at(t - 1), m.at(t), m.k()) {
            if v.remain.len() >= min_nodes {
                out[v.cluster].push(TransitionPair { prev: v.prev_adj, curr: v.curr_adj });
            }
        }
    }
    Ok(out)
}

/// Minimum remain-set size for a transition to enter a cluster fit.
pub const MIN_REMAIN: usize = 3;

/// MPLE start followed by MCMC-MLE; falls back to the MPLE when the Monte
/// Carlo stage fails.
pub fn fit_series(spec: &StatisticSpec, series: &TransitionSeries, settings: &McmcMleSettings) -> Result<FitResult> {
    let start = mple(spec, series)?;
    let theta0: Vec<f64> = start.theta.iter().map(|t| t.clamp(-10.0, 10.0)).collect();
    match mcmc_mle(spec, series, &theta0, settings) {
        Ok(mut fit) if fit.theta.iter().all(|t| t.is_finite()) => {
            if !start.converged {
                fit.notes.push("pseudo-likelihood start did not converge".into());
            }
            Ok(fit)
        }
        Ok(_) | Err(_) => {
            let mut fallback = start;
            fallback.notes.push("mcmc-mle failed; reporting pseudo-likelihood estimate".into());
            Ok(fallback)
        }
    }
}

/// Fits one coefficient vector per cluster from the remain-set transitions
/// implied by `m`. Clusters are fitted in parallel with seeds derived from
/// `settings.seed` and the cluster index.
pub fn pooled_cluster_fit(
    spec: &StatisticSpec,
    net: &DynamicNetwork,
    m: &MembershipSeries,
    settings: &McmcMleSettings,
) -> Result<Vec<Result<FitResult>>> {
    let per_cluster = cluster_series(net, m, MIN_REMAIN)?;
    Ok(par::map_range(per_cluster.len(), |c| {
        if per_cluster[c].is_empty() {
            return Err(Error::ClusterTooSmall { cluster: c + 1 });
        }
        let series = TransitionSeries::new(per_cluster[c].clone())?;
        let s = McmcMleSettings { seed: seed::derive_seed(settings.seed, "cluster-fit", c as u64, 0), ..settings.clone() };
        fit_series(spec, &series, &s)
    }))
}

/// One coefficient vector shared by every cluster.
pub fn shared_cluster_fit(
    spec: &StatisticSpec,
    net: &DynamicNetwork,
    m: &MembershipSeries,
    settings: &McmcMleSettings,
) -> Result<FitResult> {
    let pairs: Vec<TransitionPair> = cluster_series(net, m, MIN_REMAIN)?.into_iter().flatten().collect();
    if pairs.is_empty() {
        return Err(Error::ClusterTooSmall { cluster: 0 });
    }
    fit_series(spec, &TransitionSeries::new(pairs)?, settings)
}
