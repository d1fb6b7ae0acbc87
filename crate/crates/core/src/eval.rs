//! Evaluation: label alignment and mis-clustering, transition estimates,
//! goodness of fit against forward simulations, and one-step link prediction.

use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::assign::best_permutation;
use crate::dlsm::DlsmFit;
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::generator::{transition_step, StepModel, TransitionMatrix};
use crate::net::{degrees, geodesic_histogram, subgraph, Adjacency, DynamicNetwork, MembershipSeries};
use crate::stats::{logistic, StatisticSpec};
use crate::{par, seed};

/// Permutation `perm` with `perm[hat_label] = ref_label` minimising the
/// Hamming distance between relabelled `m_hat` and `m_ref`.
pub fn align_labels(m_hat: &[usize], m_ref: &[usize], k: usize) -> Vec<usize> {
    best_permutation(m_hat, m_ref, k)
}

fn hamming_after(m_hat: &[usize], m_ref: &[usize], perm: &[usize]) -> usize {
    m_hat.iter().zip(m_ref).filter(|(a, b)| perm[**a] != **b).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Misclustering {
    /// Error at each time with the permutation chosen at that time.
    pub per_time: Vec<f64>,
    pub average: f64,
    pub permutations: Vec<Vec<usize>>,
    /// Error at each time under the single permutation chosen at time 0.
    pub chained: Vec<f64>,
}

pub fn misclustering(m_hat: &MembershipSeries, m_true: &MembershipSeries) -> Result<Misclustering> {
    if m_hat.k() != m_true.k() {
        return Err(Error::Dimension(format!("estimate has K={} but truth has K={}", m_hat.k(), m_true.k())));
    }
    if m_hat.len() != m_true.len() || m_hat.n() != m_true.n() {
        return Err(Error::Dimension(format!(
            "estimate is {}x{} but truth is {}x{}",
            m_hat.len(),
            m_hat.n(),
            m_true.len(),
            m_true.n()
        )));
    }
    let n = m_true.n().max(1) as f64;
    let k = m_true.k();
    let permutations: Vec<Vec<usize>> = (0..m_true.len()).map(|t| align_labels(m_hat.at(t), m_true.at(t), k)).collect();
    let per_time: Vec<f64> =
        (0..m_true.len()).map(|t| hamming_after(m_hat.at(t), m_true.at(t), &permutations[t]) as f64 / n).collect();
    let chained = match permutations.first() {
        Some(p0) => (0..m_true.len()).map(|t| hamming_after(m_hat.at(t), m_true.at(t), p0) as f64 / n).collect(),
        None => Vec::new(),
    };
    let average = if per_time.is_empty() { 0.0 } else { per_time.iter().sum::<f64>() / per_time.len() as f64 };
    Ok(Misclustering { per_time, average, permutations, chained })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEstimate {
    pub matrix: TransitionMatrix,
    pub counts: Vec<Vec<u64>>,
    /// Rows with no observed departures, filled with `1/K`.
    pub empty_rows: Vec<usize>,
}

/// Row-normalised counts of consecutive label pairs.
pub fn estimate_transition(m: &MembershipSeries) -> Result<TransitionEstimate> {
    let k = m.k();
    let mut counts = vec![vec![0u64; k]; k];
    for t in 1..m.len() {
        for (&a, &b) in m.at(t - 1).iter().zip(m.at(t)) {
            counts[a][b] += 1;
        }
    }
    let mut empty_rows = Vec::new();
    let rows = counts
        .iter()
        .enumerate()
        .map(|(h, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                log::warn!("cluster {} has no departures; using a uniform transition row", h + 1);
                empty_rows.push(h);
                vec![1.0 / k as f64; k]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(TransitionEstimate { matrix: TransitionMatrix::new(rows)?, counts, empty_rows })
}

/// Fraction of between-cluster dyads that are ties, pooled over slices.
pub fn between_rate(net: &DynamicNetwork, m: &MembershipSeries) -> Result<f64> {
    m.check_matches(net)?;
    let (mut ties, mut dyads) = (0u64, 0u64);
    for (t, y) in net.slices().iter().enumerate() {
        let lab = m.at(t);
        let mut size = vec![0u64; m.k()];
        lab.iter().for_each(|&l| size[l] += 1);
        let n = lab.len() as u64;
        let within: u64 = size.iter().map(|s| s * s.saturating_sub(1) / 2).sum();
        dyads += n * n.saturating_sub(1) / 2 - within;
        ties += y.edges().filter(|&(i, j)| lab[i] != lab[j]).count() as u64;
    }
    Ok(if dyads == 0 { 0.0 } else { ties as f64 / dyads as f64 })
}

/// Fitted two-stage model: per-cluster transition coefficients, estimated
/// memberships at the last two times, and cross-cluster tie rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThergmBundle {
    pub spec: StatisticSpec,
    pub theta: Vec<Vec<f64>>,
    pub transition: TransitionMatrix,
    pub p_between: f64,
    pub m_attach: usize,
    pub gibbs_sweeps: usize,
    pub labels_prev: Vec<usize>,
    pub labels_last: Vec<usize>,
}

/// Latent space working model at the last two times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlsmBundle {
    pub dim: usize,
    pub rho: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub mu: Vec<Vec<f64>>,
    pub sigma2: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub positions_prev: Vec<f64>,
    pub positions_last: Vec<f64>,
    pub labels_prev: Vec<usize>,
    pub labels_last: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelBundle {
    Thergm(ThergmBundle),
    Dlsm(DlsmBundle),
}

impl ThergmBundle {
    /// Bundles per-cluster fits with memberships `m` and rates estimated
    /// from `net`.
    pub fn new(net: &DynamicNetwork, m: &MembershipSeries, spec: &StatisticSpec, fits: &[FitResult]) -> Result<Self> {
        if fits.len() != m.k() {
            return Err(Error::Dimension(format!("{} fits for {} clusters", fits.len(), m.k())));
        }
        if net.len() < 2 {
            return Err(Error::InvalidInput("need at least two time points".into()));
        }
        for f in fits {
            if f.theta.len() != spec.len() || f.theta.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("cluster fit does not match the statistic spec".into()));
            }
        }
        let last = net.last_time();
        Ok(Self {
            spec: spec.clone(),
            theta: fits.iter().map(|f| f.theta.clone()).collect(),
            transition: estimate_transition(m)?.matrix,
            p_between: between_rate(net, m)?,
            m_attach: 2,
            gibbs_sweeps: 20,
            labels_prev: m.at(last - 1).to_vec(),
            labels_last: m.at(last).to_vec(),
        })
    }
}

impl DlsmBundle {
    pub fn from_fit(fit: &DlsmFit) -> Result<Self> {
        let st = &fit.state;
        let last = st.positions.len().checked_sub(1).filter(|&l| l >= 1).ok_or_else(|| {
            Error::InvalidInput("need at least two time points".into())
        })?;
        Ok(Self {
            dim: st.dim,
            rho: st.rho,
            beta0: st.beta0,
            beta1: st.beta1,
            mu: st.mu.clone(),
            sigma2: st.sigma2.clone(),
            transition: st.transition.clone(),
            positions_prev: st.positions[last - 1].clone(),
            positions_last: st.positions[last].clone(),
            labels_prev: fit.membership.at(last - 1).to_vec(),
            labels_last: fit.membership.at(last).to_vec(),
        })
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl ModelBundle {
    pub fn n(&self) -> usize {
        match self {
            ModelBundle::Thergm(b) => b.labels_last.len(),
            ModelBundle::Dlsm(b) => b.labels_last.len(),
        }
    }

    /// Memberships at the final time point.
    pub fn labels_last(&self) -> &[usize] {
        match self {
            ModelBundle::Thergm(b) => &b.labels_last,
            ModelBundle::Dlsm(b) => &b.labels_last,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelBundle::Thergm(_) => "thergm",
            ModelBundle::Dlsm(_) => "dlsm",
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match self {
            ModelBundle::Thergm(b) => {
                !b.theta.is_empty()
                    && b.theta.len() == b.transition.k()
                    && b.labels_prev.len() == b.labels_last.len()
                    && b.labels_prev.iter().chain(&b.labels_last).all(|&l| l < b.theta.len())
            }
            ModelBundle::Dlsm(b) => {
                let n = b.labels_last.len();
                b.dim > 0
                    && b.positions_prev.len() == n * b.dim
                    && b.positions_last.len() == n * b.dim
                    && b.labels_prev.len() == n
                    && b.labels_last.iter().all(|&l| l < b.mu.len() && l < b.sigma2.len())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{} bundle is incomplete or inconsistent", self.name())))
        }
    }

    /// One draw of the final slice given the slice before it.
    pub fn simulate_last(&self, y_prev: &Adjacency, seed: u64) -> Adjacency {
        match self {
            ModelBundle::Thergm(b) => {
                let model = StepModel {
                    spec: &b.spec,
                    theta: &b.theta,
                    p_between: b.p_between,
                    m_attach: b.m_attach,
                    gibbs_sweeps: b.gibbs_sweeps,
                };
                transition_step(&model, y_prev, &b.labels_prev, &b.labels_last, seed, 1).0
            }
            ModelBundle::Dlsm(b) => {
                let n = b.labels_last.len();
                let d = b.dim;
                let mut rng = seed::stream(seed, "dlsm-forward", 0, 0);
                let mut z = vec![0.0; n * d];
                for i in 0..n {
                    let l = b.labels_last[i];
                    let sd = b.sigma2[l].sqrt();
                    for c in 0..d {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        z[i * d + c] = b.rho * b.positions_prev[i * d + c] + (1.0 - b.rho) * b.mu[l][c] + sd * e;
                    }
                }
                let mut y = Adjacency::empty(n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let p = logistic(b.beta0 - b.beta1 * distance(&z[i * d..(i + 1) * d], &z[j * d..(j + 1) * d]));
                        if rng.random::<f64>() < p {
                            y.set(i, j, true);
                        }
                    }
                }
                y
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    pub bin: String,
    pub observed: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofTable {
    pub statistic: String,
    pub bins: Vec<GofBin>,
    /// Share of bins with mass in the observation or any simulation whose
    /// observed value lies inside the 5%-95% band.
    pub coverage: f64,
    /// Mean over all bins of `|observed - median|`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub model: String,
    pub n_sims: usize,
    pub degree: GofTable,
    pub geodesic: GofTable,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Degree distribution as node shares over degrees `0..n`.
pub fn degree_shares(y: &Adjacency) -> Vec<f64> {
    let n = y.n();
    let mut h = vec![0.0; n.max(1)];
    for d in degrees(y) {
        h[d] += 1.0;
    }
    h.iter_mut().for_each(|v| *v /= n.max(1) as f64);
    h
}

/// Geodesic distribution as dyad shares over distances `1..n` followed by
/// an unreachable bin.
pub fn geodesic_shares(y: &Adjacency) -> Vec<f64> {
    let n = y.n();
    let g = geodesic_histogram(y);
    let total = (n * n.saturating_sub(1) / 2).max(1) as f64;
    let mut h: Vec<f64> = (1..n.max(1)).map(|d| g.count(d) as f64 / total).collect();
    h.push(g.unreachable as f64 / total);
    h
}

fn gof_table(statistic: &str, labels: Vec<String>, observed: &[f64], sims: &[Vec<f64>]) -> GofTable {
    let mut bins = Vec::with_capacity(observed.len());
    let (mut support, mut covered, mut dev) = (0usize, 0usize, 0.0);
    for (b, label) in labels.into_iter().enumerate() {
        let mut col: Vec<f64> = sims.iter().map(|s| s[b]).collect();
        col.sort_by(f64::total_cmp);
        let (q05, q50, q95) = (quantile(&col, 0.05), quantile(&col, 0.5), quantile(&col, 0.95));
        let obs = observed[b];
        if obs > 0.0 || col.last().is_some_and(|&m| m > 0.0) {
            support += 1;
            if obs >= q05 - 1e-12 && obs <= q95 + 1e-12 {
                covered += 1;
            }
        }
        dev += (obs - q50).abs();
        bins.push(GofBin { bin: label, observed: obs, q05, q50, q95 });
    }
    let n_bins = bins.len().max(1) as f64;
    GofTable {
        statistic: statistic.to_string(),
        bins,
        coverage: if support == 0 { 1.0 } else { covered as f64 / support as f64 },
        discrepancy: dev / n_bins,
    }
}

/// Compares the observed final slice with `n_sims` forward draws of the
/// final transition under `bundle`.
pub fn gof(net: &DynamicNetwork, bundle: &ModelBundle, n_sims: usize, seed: u64) -> Result<GofReport> {
    bundle.check()?;
    if net.len() < 2 {
        return Err(Error::InvalidInput("need at least two time points".into()));
    }
    if bundle.n() != net.n() {
        return Err(Error::Dimension(format!("bundle has {} nodes, network has {}", bundle.n(), net.n())));
    }
    if n_sims == 0 {
        return Err(Error::Config("n_sims must be positive".into()));
    }
    let last = net.last_time();
    let prev = net.slice(last - 1);
    let obs = net.slice(last);
    let sims = par::map_range(n_sims, |r| bundle.simulate_last(prev, seed::derive_seed(seed, "gof", r as u64, 0)));
    let n = net.n();
    let deg_sims: Vec<Vec<f64>> = sims.iter().map(degree_shares).collect();
    let geo_sims: Vec<Vec<f64>> = sims.iter().map(geodesic_shares).collect();
    let deg_labels = (0..n.max(1)).map(|d| d.to_string()).collect();
    let mut geo_labels: Vec<String> = (1..n.max(1)).map(|d| d.to_string()).collect();
    geo_labels.push("inf".into());
    Ok(GofReport {
        model: bundle.name().into(),
        n_sims,
        degree: gof_table("degree", deg_labels, &degree_shares(obs), &deg_sims),
        geodesic: gof_table("geodesic", geo_labels, &geodesic_shares(obs), &geo_sims),
    })
}

/// Tie probabilities for the next time point given the current slice `y`
/// and memberships `labels` (taken as the memberships at the next time).
/// Within-cluster dyads use the conditional tie probability of the cluster
/// model with change statistics evaluated on `y`; cross-cluster dyads get the
/// between-cluster rate. With `expect_moves`, a within dyad is weighted by
/// the chance that both endpoints stay under the estimated transition matrix.
pub fn predict_proba(bundle: &ModelBundle, y: &Adjacency, labels: &[usize], expect_moves: bool) -> Result<Vec<Vec<f64>>> {
    bundle.check()?;
    let n = y.n();
    if labels.len() != n || bundle.n() != n {
        return Err(Error::Dimension(format!("{} labels, {} bundle nodes, {} graph nodes", labels.len(), bundle.n(), n)));
    }
    let mut p = vec![vec![0.0; n]; n];
    match bundle {
        ModelBundle::Thergm(b) => {
            let k = b.theta.len();
            if labels.iter().any(|&l| l >= k) {
                return Err(Error::Dimension("label outside the bundle's clusters".into()));
            }
            for row in p.iter_mut() {
                row.iter_mut().for_each(|v| *v = b.p_between);
            }
            for c in 0..k {
                let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                if members.len() < 2 {
                    continue;
                }
                let sub = subgraph(y, &members)?;
                let stay = b.transition.get(c, c);
                for a in 0..members.len() {
                    for bb in (a + 1)..members.len() {
                        let mut v = logistic(b.spec.logit_unchecked(&b.theta[c], &sub, &sub, a, bb));
                        if expect_moves {
                            let both = stay * stay;
                            v = both * v + (1.0 - both) * b.p_between;
                        }
                        let (i, j) = (members[a], members[bb]);
                        p[i][j] = v;
                        p[j][i] = v;
                    }
                }
            }
        }
        ModelBundle::Dlsm(b) => {
            let d = b.dim;
            let z = &b.positions_last;
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = logistic(b.beta0 - b.beta1 * distance(&z[i * d..(i + 1) * d], &z[j * d..(j + 1) * d]));
                    p[i][j] = v;
                    p[j][i] = v;
                }
            }
        }
    }
    for (i, row) in p.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    Ok(p)
}

/// Area under the ROC curve over dyads `i < j` (optionally only dyads whose
/// endpoints share a label), with tied scores counted one half.
pub fn auc(scores: &[Vec<f64>], y: &Adjacency, within: Option<&[usize]>) -> Result<f64> {
    let n = y.n();
    if scores.len() != n || scores.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!("score matrix does not match {n} nodes")));
    }
    if within.is_some_and(|l| l.len() != n) {
        return Err(Error::Dimension("label vector does not match the graph".into()));
    }
    let mut items: Vec<(f64, bool)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if within.is_some_and(|l| l[i] != l[j]) {
                continue;
            }
            let s = scores[i][j];
            if !s.is_finite() {
                return Err(Error::Numerical(format!("non-finite score for dyad ({i},{j})")));
            }
            items.push((s, y.has_edge(i, j)));
        }
    }
    let pos = items.iter().filter(|x| x.1).count();
    let neg = items.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateResponse("AUC needs both ties and non-ties".into()));
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < items.len() {
        let mut end = start;
        while end + 1 < items.len() && items[end + 1].0 == items[start].0 {
            end += 1;
        }
        let mid = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += mid * items[start..=end].iter().filter(|x| x.1).count() as f64;
        start = end + 1;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Reassigns `round(frac * n)` nodes per time to a different, uniformly
/// chosen cluster.
pub fn corrupt_labels<R: Rng + ?Sized>(m: &MembershipSeries, frac: f64, rng: &mut R) -> Result<MembershipSeries> {
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::Config(format!("corruption fraction {frac} outside [0,1]")));
    }
    let k = m.k();
    let n = m.n();
    let count = (frac * n as f64).round() as usize;
    let mut labels = m.labels().to_vec();
    if k < 2 {
        return MembershipSeries::new(labels, k);
    }
    for row in labels.iter_mut() {
        for i in sample(rng, n, count.min(n)) {
            let mut c = rng.random_range(0..k - 1);
            if c >= row[i] {
                c += 1;
            }
            row[i] = c;
        }
    }
    MembershipSeries::new(labels, k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub misclustering: Option<Misclustering>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gof: Option<GofReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
}

/// `time,rate,chained_rate` with 0-based times.
pub fn write_misclustering_csv<W: Write>(w: W, m: &Misclustering) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "rate", "chained_rate"])?;
    for (t, (r, c)) in m.per_time.iter().zip(&m.chained).enumerate() {
        out.write_record([t.to_string(), r.to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// `from,to,count,probability` with 1-based clusters.
pub fn write_transition_csv<W: Write>(w: W, est: &TransitionEstimate) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["from", "to", "count", "probability"])?;
    for (h, row) in est.matrix.rows().iter().enumerate() {
        for (k, p) in row.iter().enumerate() {
            out.write_record([(h + 1).to_string(), (k + 1).to_string(), est.counts[h][k].to_string(), p.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `model,statistic,bin,observed,q05,q50,q95`.
pub fn write_gof_csv<W: Write>(w: W, reports: &[GofReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "statistic", "bin", "observed", "q05", "q50", "q95"])?;
    for r in reports {
        for table in [&r.degree, &r.geodesic] {
            for b in &table.bins {
                out.write_record([
                    r.model.clone(),
                    table.statistic.clone(),
                    b.bin.clone(),
                    b.observed.to_string(),
                    b.q05.to_string(),
                    b.q50.to_string(),
                    b.q95.to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
