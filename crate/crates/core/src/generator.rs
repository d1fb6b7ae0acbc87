//! Forward simulation of the temporal hierarchical model.
//!
//! Each step draws new memberships from a Markov transition matrix, evolves
//! the ties among each cluster's remaining members with a cluster-specific
//! temporal ERGM, attaches nodes that joined a cluster to its incumbents by
//! preferential attachment, and fills cross-cluster dyads with independent
//! Bernoulli noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::TransitionSampler;
use crate::net::{transition_views, triangle_count, Adjacency, ClusterView, DynamicNetwork, MembershipSeries};
use crate::par;
use crate::seed;
use crate::stats::{logit, StatisticSpec, Term};

/// Row-stochastic `K x K` matrix of membership transition probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for TransitionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<TransitionMatrix> for Vec<Vec<f64>> {
    fn from(b: TransitionMatrix) -> Self {
        b.rows
    }
}

impl TransitionMatrix {
    /// Validates entries in `[0, 1]` and row sums within `1e-9`, then
    /// renormalises each row exactly.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::Config("transition matrix is empty".into()));
        }
        let mut rows = rows;
        for (h, row) in rows.iter_mut().enumerate() {
            if row.len() != k {
                return Err(Error::Config(format!("transition row {} has {} entries, expected {k}", h + 1, row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p) || !p.is_finite()) {
                return Err(Error::Config(format!("transition row {} has entries outside [0,1]", h + 1)));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("transition row {} sums to {s}", h + 1)));
            }
            row.iter_mut().for_each(|p| *p /= s);
        }
        Ok(Self { rows })
    }

    pub fn identity(k: usize) -> Self {
        Self::sticky(k, 1.0)
    }

    /// `stay` on the diagonal and the remainder spread evenly off it.
    pub fn sticky(k: usize, stay: f64) -> Self {
        let off = if k > 1 { (1.0 - stay) / (k - 1) as f64 } else { 0.0 };
        let rows = (0..k).map(|h| (0..k).map(|c| if c == h || k == 1 { if k == 1 { 1.0 } else { stay } } else { off }).collect()).collect();
        Self { rows }
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.rows[from][to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.rows[from]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (c, &p) in self.rows[from].iter().enumerate() {
            acc += p;
            if u < acc {
                return c;
            }
        }
        // Floating round-off: fall back to the last state with positive mass.
        self.rows[from].iter().rposition(|&p| p > 0.0).unwrap_or(from)
    }
}

/// Generative parameters of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThergmConfig {
    pub k: usize,
    pub n_per_cluster: Vec<usize>,
    /// Number of transitions; the output has `steps + 1` slices.
    pub steps: usize,
    pub spec: StatisticSpec,
    /// One coefficient vector per cluster, indexed like `spec`.
    pub theta: Vec<Vec<f64>>,
    pub transition: TransitionMatrix,
    /// Within-cluster tie probability of the initial slice.
    pub p_within: f64,
    pub p_between: f64,
    pub m_attach: usize,
    pub gibbs_sweeps: usize,
    pub seed: u64,
}

impl Default for ThergmConfig {
    fn default() -> Self {
        let spec: StatisticSpec = "edges,triangles,stability".parse().expect("static spec");
        let theta = calibrate_theta(&spec, 0.1, 0.1, 0.2, 30).expect("static calibration");
        Self {
            k: 3,
            n_per_cluster: vec![30; 3],
            steps: 4,
            spec,
            theta: vec![theta; 3],
            transition: TransitionMatrix::sticky(3, 0.9),
            p_within: 0.1,
            p_between: 0.01,
            m_attach: 2,
            gibbs_sweeps: 20,
            seed: 1,
        }
    }
}

impl ThergmConfig {
    pub fn n(&self) -> usize {
        self.n_per_cluster.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.n_per_cluster.len() != self.k {
            return fail(format!("{} cluster sizes for k={}", self.n_per_cluster.len(), self.k));
        }
        if self.n_per_cluster.contains(&0) {
            return fail("cluster sizes must be positive".into());
        }
        if self.theta.len() != self.k {
            return fail(format!("{} coefficient vectors for k={}", self.theta.len(), self.k));
        }
        if let Some((c, th)) = self.theta.iter().enumerate().find(|(_, th)| th.len() != self.spec.len()) {
            return fail(format!("cluster {} has {} coefficients for {} statistics", c + 1, th.len(), self.spec.len()));
        }
        if self.theta.iter().flatten().any(|x| !x.is_finite()) {
            return fail("coefficients must be finite".into());
        }
        if self.transition.k() != self.k {
            return fail(format!("transition matrix is {0}x{0} for k={1}", self.transition.k(), self.k));
        }
        if !(0.0..=1.0).contains(&self.p_within) {
            return fail(format!("p_within={} outside [0,1]", self.p_within));
        }
        if !(0.0..=1.0).contains(&self.p_between) {
            return fail(format!("p_between={} outside [0,1]", self.p_between));
        }
        if self.k > 1 && self.p_between > 0.0 && self.p_between >= self.p_within {
            return fail(format!("p_between={} must be below p_within={}", self.p_between, self.p_within));
        }
        if self.m_attach == 0 {
            return fail("m_attach must be at least 1".into());
        }
        if self.gibbs_sweeps == 0 {
            return fail("gibbs_sweeps must be at least 1".into());
        }
        Ok(())
    }
}

/// Coefficients whose one-step dynamics keep the density near `density` and
/// dissolve an existing tie with probability `dissolve` per step.
///
/// The expected triangle change statistic in a cluster of `cluster_size`
/// nodes at that density, `(n - 2) d^2`, is folded into the edges term so
/// that `triangle` shifts clustering rather than density. Without a
/// stability term `dissolve` is ignored and ties are redrawn each step.
pub fn calibrate_theta(spec: &StatisticSpec, density: f64, dissolve: f64, triangle: f64, cluster_size: usize) -> Result<Vec<f64>> {
    if !(0.0 < density && density < 1.0) {
        return Err(Error::Config(format!("target density {density} outside (0,1)")));
    }
    if !(0.0 < dissolve && dissolve < 1.0) {
        return Err(Error::Config(format!("dissolution probability {dissolve} outside (0,1)")));
    }
    if spec.position(Term::Edges).is_none() {
        return Err(Error::Config("calibration needs an edges term".into()));
    }
    let tri_shift = if spec.position(Term::Triangles).is_some() {
        triangle * cluster_size.saturating_sub(2) as f64 * density * density
    } else {
        0.0
    };
    let (edges, stability) = if spec.position(Term::Stability).is_some() {
        let form = dissolve * density / (1.0 - density);
        let keep = logit(1.0 - dissolve);
        let make = logit(form);
        ((keep + make) / 2.0 - tri_shift, (keep - make) / 2.0)
    } else {
        (logit(density) - tri_shift, 0.0)
    };
    Ok(spec
        .terms()
        .iter()
        .map(|t| match t {
            Term::Edges => edges,
            Term::Triangles => triangle,
            Term::Stability => stability,
        })
        .collect())
}

/// Per-step summary of a simulated transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub time: usize,
    pub movers: usize,
    pub within_edges: usize,
    pub joiner_edges: usize,
    pub between_edges: usize,
    pub triangles: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub net: DynamicNetwork,
    pub truth: MembershipSeries,
    pub config: ThergmConfig,
    pub trace: Vec<StepTrace>,
}

/// Initial slice: contiguous blocks of the configured sizes, Bernoulli
/// `p_within` ties inside blocks and `p_between` across them.
pub fn init_state<R: Rng + ?Sized>(cfg: &ThergmConfig, rng: &mut R) -> (Adjacency, Vec<usize>) {
    let labels: Vec<usize> = cfg.n_per_cluster.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
    let n = labels.len();
    let mut y = Adjacency::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { cfg.p_within } else { cfg.p_between };
            if rng.random::<f64>() < p {
                y.set(i, j, true);
            }
        }
    }
    (y, labels)
}

/// Draws each node's next label from its current label's transition row.
pub fn step_membership<R: Rng + ?Sized>(prev: &[usize], transition: &TransitionMatrix, rng: &mut R) -> Vec<usize> {
    prev.iter().map(|&h| transition.sample_next(h, rng)).collect()
}

/// Preferential-attachment ties for the nodes that joined `view.cluster`.
///
/// Each joiner picks `m_attach` distinct incumbents (remaining members), each
/// with probability proportional to one plus its degree at `t-1` among the
/// cluster's members at `t-1`. With fewer incumbents than `m_attach` it links
/// to all of them. Returned edges use global node indices.
pub fn attach_joiners<R: Rng + ?Sized>(
    view: &ClusterView,
    prev_slice: &Adjacency,
    m_attach: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    if view.joiners.is_empty() || view.remain.is_empty() {
        return Vec::new();
    }
    let weights = attachment_weights(view, prev_slice);
    let picks = m_attach.min(view.remain.len());
    let mut edges = Vec::with_capacity(view.joiners.len() * picks);
    for &j in &view.joiners {
        let mut w = weights.clone();
        let mut total: f64 = w.iter().sum();
        for _ in 0..picks {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = w.iter().rposition(|&x| x > 0.0).unwrap_or(0);
            for (a, &x) in w.iter().enumerate() {
                if x > 0.0 && u < x {
                    chosen = a;
                    break;
                }
                u -= x;
            }
            total -= w[chosen];
            w[chosen] = 0.0;
            let target = view.remain[chosen];
            edges.push((j.min(target), j.max(target)));
        }
    }
    edges
}

/// `1 + degree` of every incumbent at `t-1`, counting only ties to nodes that
/// belonged to the cluster at `t-1`.
pub fn attachment_weights(view: &ClusterView, prev_slice: &Adjacency) -> Vec<f64> {
    view.remain
        .iter()
        .map(|&u| 1.0 + view.previous.iter().filter(|&&v| prev_slice.has_edge(u, v)).count() as f64)
        .collect()
}

/// Runs `sweeps` Gibbs passes of the cluster's transition model, starting from
/// its remaining members' ties at `t-1`. Returns ties on the remain-set.
pub fn gibbs_within<R: Rng + ?Sized>(
    view: &ClusterView,
    spec: &StatisticSpec,
    theta: &[f64],
    sweeps: usize,
    rng: &mut R,
) -> Adjacency {
    let mut sampler = TransitionSampler::new(spec, theta, &view.prev_adj, view.prev_adj.clone());
    for _ in 0..sweeps {
        sampler.sweep(rng);
    }
    sampler.into_state()
}

/// Independent Bernoulli ties on every dyad whose endpoints carry different labels.
pub fn sample_between<R: Rng + ?Sized>(labels: &[usize], p_between: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let n = labels.len();
    let mut edges = Vec::new();
    if p_between <= 0.0 {
        return edges;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] != labels[j] && rng.random::<f64>() < p_between {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Parameters of one THERGM transition given both membership vectors.
#[derive(Debug, Clone, Copy)]
pub struct StepModel<'a> {
    pub spec: &'a StatisticSpec,
    /// One coefficient vector per cluster.
    pub theta: &'a [Vec<f64>],
    pub p_between: f64,
    pub m_attach: usize,
    pub gibbs_sweeps: usize,
}

/// Draws slice `t` from slice `t-1` with memberships `m_prev -> m_curr`:
/// within-cluster Gibbs on remain-sets, preferential attachment for
/// joiners, independent between-cluster ties. Random streams derive from
/// `seed` and `t`.
pub fn transition_step(
    model: &StepModel<'_>,
    prev: &Adjacency,
    m_prev: &[usize],
    m_curr: &[usize],
    seed: u64,
    t: usize,
) -> (Adjacency, StepTrace) {
    let k = model.theta.len();
    let n = prev.n();
    let views = transition_views(prev, prev, m_prev, m_curr, k);
    let per_cluster = par::map_range(k, |c| {
        let view = &views[c];
        let mut rng = seed::stream(seed, "within", c as u64, t as u64);
        let within = gibbs_within(view, model.spec, &model.theta[c], model.gibbs_sweeps, &mut rng);
        let joined = attach_joiners(view, prev, model.m_attach, &mut rng);
        (within, joined)
    });
    let mut b_rng = seed::stream(seed, "between", t as u64, 0);
    let between = sample_between(m_curr, model.p_between, &mut b_rng);

    let mut y = Adjacency::empty(n);
    let mut step = StepTrace {
        time: t,
        movers: m_prev.iter().zip(m_curr).filter(|(a, b)| a != b).count(),
        within_edges: 0,
        joiner_edges: 0,
        between_edges: between.len(),
        triangles: 0,
    };
    for (view, (within, joined)) in views.iter().zip(&per_cluster) {
        for (a, b) in within.edges() {
            y.set(view.remain[a], view.remain[b], true);
        }
        step.within_edges += within.edge_count();
        for &(a, b) in joined {
            y.set(a, b, true);
        }
        step.joiner_edges += joined.len();
    }
    for (a, b) in between {
        y.set(a, b, true);
    }
    step.triangles = triangle_count(&y);
    (y, step)
}

/// Full forward simulation. Random streams are derived per step and cluster
/// from `cfg.seed`, so the result does not depend on the worker count.
pub fn simulate(cfg: &ThergmConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let mut init_rng = seed::stream(cfg.seed, "init", 0, 0);
    let (y0, m0) = init_state(cfg, &mut init_rng);
    let mut slices = vec![y0];
    let mut labels = vec![m0];
    let mut trace = Vec::with_capacity(cfg.steps);
    for t in 1..=cfg.steps {
        let prev = &slices[t - 1];
        let m_prev = &labels[t - 1];
        let mut m_rng = seed::stream(cfg.seed, "membership", t as u64, 0);
        let m_curr = step_membership(m_prev, &cfg.transition, &mut m_rng);
        let model = StepModel {
            spec: &cfg.spec,
            theta: &cfg.theta,
            p_between: cfg.p_between,
            m_attach: cfg.m_attach,
            gibbs_sweeps: cfg.gibbs_sweeps,
        };
        let (y, step) = transition_step(&model, prev, m_prev, &m_curr, cfg.seed, t);
        trace.push(step);
        slices.push(y);
        labels.push(m_curr);
    }
    Ok(SimulationOutput {
        net: DynamicNetwork::new(slices)?,
        truth: MembershipSeries::new(labels, cfg.k)?,
        config: cfg.clone(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(s: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(s)
    }

    fn small_cfg() -> ThergmConfig {
        let spec: StatisticSpec = "edges,triangles,stability".parse().unwrap();
        let theta = calibrate_theta(&spec, 0.15, 0.1, 0.1, 20).unwrap();
        ThergmConfig {
            k: 3,
            n_per_cluster: vec![20, 20, 20],
            steps: 4,
            theta: vec![theta; 3],
            spec,
            transition: TransitionMatrix::sticky(3, 0.85),
            p_within: 0.15,
            p_between: 0.02,
            m_attach: 2,
            gibbs_sweeps: 5,
            seed: 11,
        }
    }

    #[test]
    fn transition_matrix_validation() {
        assert!(TransitionMatrix::new(vec![vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![1.2, -0.2], vec![0.0, 1.0]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![1.0]]).is_ok());
        let b = TransitionMatrix::sticky(3, 0.95);
        for r in b.rows() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(TransitionMatrix::sticky(1, 0.3).get(0, 0), 1.0);
    }

    #[test]
    fn init_state_extremes() {
        let mut cfg = small_cfg();
        cfg.p_within = 1.0;
        cfg.p_between = 0.0;
        let (y, m) = init_state(&cfg, &mut rng(1));
        for i in 0..y.n() {
            for j in (i + 1)..y.n() {
                assert_eq!(y.has_edge(i, j), m[i] == m[j]);
            }
        }
        let a = init_state(&small_cfg(), &mut rng(5));
        let b = init_state(&small_cfg(), &mut rng(5));
        assert_eq!(a, b);
    }

    #[test]
    fn init_density_near_target() {
        let mut cfg = small_cfg();
        cfg.n_per_cluster = vec![100, 100];
        cfg.k = 2;
        cfg.p_within = 0.1;
        let (y, m) = init_state(&cfg, &mut rng(2));
        let (mut ties, mut dyads) = (0usize, 0usize);
        for i in 0..y.n() {
            for j in (i + 1)..y.n() {
                if m[i] == m[j] {
                    dyads += 1;
                    ties += usize::from(y.has_edge(i, j));
                }
            }
        }
        let d = ties as f64 / dyads as f64;
        // 9900 dyads: binomial sd ~ 0.003
        assert!((d - 0.1).abs() < 0.012, "density {d}");
    }

    #[test]
    fn membership_steps() {
        let prev = vec![0, 1, 2, 0, 1];
        assert_eq!(step_membership(&prev, &TransitionMatrix::identity(3), &mut rng(1)), prev);
        let b = TransitionMatrix::new(vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(step_membership(&[0; 6], &b, &mut rng(2)), vec![2; 6]);
    }

    #[test]
    fn membership_move_fraction() {
        let b = TransitionMatrix::new(vec![vec![0.8, 0.2], vec![0.0, 1.0]]).unwrap();
        let draws = 20_000;
        let moved = step_membership(&vec![0; draws], &b, &mut rng(9)).iter().filter(|&&l| l == 1).count();
        // 99.9% normal interval around 0.2: sd = sqrt(.16 / 20000) = 0.00283
        let frac = moved as f64 / draws as f64;
        assert!((frac - 0.2).abs() < 3.3 * 0.00283, "fraction {frac}");
    }

    fn view_with(previous: Vec<usize>, remain: Vec<usize>, joiners: Vec<usize>, prev: &Adjacency) -> ClusterView {
        ClusterView {
            cluster: 0,
            prev_adj: crate::net::restrict(prev, &remain),
            curr_adj: crate::net::restrict(prev, &remain),
            previous,
            remain,
            joiners,
        }
    }

    #[test]
    fn single_incumbent_always_chosen() {
        let prev = Adjacency::empty(3);
        let view = view_with(vec![0], vec![0], vec![2], &prev);
        for s in 0..20 {
            assert_eq!(attach_joiners(&view, &prev, 2, &mut rng(s)), vec![(0, 2)]);
        }
    }

    #[test]
    fn attachment_frequencies_follow_degree_plus_one() {
        // Incumbents 0,1,2 have degrees 3,1,0 among cluster members at t-1
        // (nodes 3 and 4 left the cluster); node 5 joins.
        let prev = Adjacency::from_edges(6, &[(0, 1), (0, 3), (0, 4)]).unwrap();
        let view = view_with(vec![0, 1, 2, 3, 4], vec![0, 1, 2], vec![5], &prev);
        assert_eq!(attachment_weights(&view, &prev), vec![4.0, 2.0, 1.0]);
        let draws = 10_000;
        let mut counts = [0usize; 3];
        let mut r = rng(17);
        for _ in 0..draws {
            let e = attach_joiners(&view, &prev, 1, &mut r);
            counts[e[0].0] += 1;
        }
        let expected = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
        let chi2: f64 = counts
            .iter()
            .zip(expected)
            .map(|(&c, p)| (c as f64 - p * draws as f64).powi(2) / (p * draws as f64))
            .sum();
        // chi-square(2) upper 1% point
        assert!(chi2 < 9.21, "chi2 {chi2}, counts {counts:?}");
    }

    #[test]
    fn fewer_incumbents_than_requested_connects_all() {
        let prev = Adjacency::empty(5);
        let view = view_with(vec![0, 1], vec![0, 1], vec![4], &prev);
        let mut e = attach_joiners(&view, &prev, 3, &mut rng(1));
        e.sort();
        assert_eq!(e, vec![(0, 4), (1, 4)]);
    }

    #[test]
    fn gibbs_saturation_and_fair_coin() {
        let spec: StatisticSpec = "edges".parse().unwrap();
        let prev = Adjacency::complete(12);
        let view = view_with((0..12).collect(), (0..12).collect(), vec![], &prev);
        let y = gibbs_within(&view, &spec, &[-50.0], 1, &mut rng(1));
        assert_eq!(y.edge_count(), 0);
        let view = view_with((0..60).collect(), (0..60).collect(), vec![], &Adjacency::empty(60));
        let y = gibbs_within(&view, &spec, &[0.0], 1, &mut rng(2));
        // 1770 fair coins: sd = 0.0119
        assert!((y.density() - 0.5).abs() < 0.045);
    }

    #[test]
    fn between_extremes_and_rate() {
        let labels = vec![0, 0, 1, 1, 2];
        assert!(sample_between(&labels, 0.0, &mut rng(1)).is_empty());
        let all = sample_between(&labels, 1.0, &mut rng(1));
        assert_eq!(all.len(), 10 - 1 - 1);
        let labels: Vec<usize> = (0..150).map(|i| i / 50).collect();
        let e = sample_between(&labels, 0.02, &mut rng(4));
        let dyads = 3.0 * 50.0 * 50.0;
        let rate = e.len() as f64 / dyads;
        // binomial sd = sqrt(.02 * .98 / 7500) = 0.00162
        assert!((rate - 0.02).abs() < 3.3 * 0.00162, "rate {rate}");
    }

    #[test]
    fn simulate_is_deterministic_and_valid() {
        let cfg = small_cfg();
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.trace.len(), cfg.steps);
        assert_eq!(a.net.len(), cfg.steps + 1);
        for y in a.net.slices() {
            for i in 0..y.n() {
                assert!(!y.has_edge(i, i));
                for j in 0..y.n() {
                    assert_eq!(y.has_edge(i, j), y.has_edge(j, i));
                }
            }
        }
    }

    #[test]
    fn identity_transitions_without_noise_stay_block_diagonal() {
        let mut cfg = small_cfg();
        cfg.transition = TransitionMatrix::identity(3);
        cfg.p_between = 0.0;
        let out = simulate(&cfg).unwrap();
        for (t, y) in out.net.slices().iter().enumerate() {
            assert!(y.edges().all(|(i, j)| out.truth.get(t, i) == out.truth.get(t, j)));
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_cfg();
        cfg.p_between = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.theta.pop();
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.m_attach = 0;
        assert!(cfg.validate().is_err());
        assert!(ThergmConfig::default().validate().is_ok());
    }

    #[test]
    fn calibration_hits_dissolution_rate() {
        let spec: StatisticSpec = "edges,stability".parse().unwrap();
        let th = calibrate_theta(&spec, 0.1, 0.1, 0.0, 30).unwrap();
        assert!((crate::stats::logistic(th[0] + th[1]) - 0.9).abs() < 1e-12);
        let form = crate::stats::logistic(th[0] - th[1]);
        assert!((form / (form + 0.1) - 0.1).abs() < 1e-12);
    }
}
