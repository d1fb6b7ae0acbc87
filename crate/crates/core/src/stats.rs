//! Sufficient statistics of a network transition and their change statistics.
//!
//! A model is specified by an ordered list of [`Term`]s; the order fixes the
//! indexing of coefficient vectors. Each term supplies its value on a
//! transition `(y_t, y_prev)` and the change caused by switching dyad `(i, j)`
//! of `y_t` from absent to present. Adding a term means adding one variant
//! and its two rules below.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{triangle_count, Adjacency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    /// Number of ties in `y_t`.
    Edges,
    /// Number of closed triads in `y_t`.
    Triangles,
    /// Number of dyads with the same state in `y_t` and `y_prev`.
    Stability,
}

impl Term {
    pub const ALL: [Term; 3] = [Term::Edges, Term::Triangles, Term::Stability];

    pub fn name(self) -> &'static str {
        match self {
            Term::Edges => "edges",
            Term::Triangles => "triangles",
            Term::Stability => "stability",
        }
    }

    fn value(self, y_t: &Adjacency, y_prev: &Adjacency) -> f64 {
        match self {
            Term::Edges => y_t.edge_count() as f64,
            Term::Triangles => triangle_count(y_t) as f64,
            Term::Stability => (y_t.dyad_count() - y_t.hamming(y_prev)) as f64,
        }
    }

    #[inline]
    fn change(self, y_t: &Adjacency, y_prev: &Adjacency, i: usize, j: usize) -> f64 {
        match self {
            Term::Edges => 1.0,
            Term::Triangles => y_t.common_neighbors(i, j) as f64,
            Term::Stability => {
                if y_prev.has_edge(i, j) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// True when the term's change statistic does not depend on other dyads of `y_t`.
    pub fn is_dyadic(self) -> bool {
        !matches!(self, Term::Triangles)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Term::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown statistic `{}` (expected edges, triangles or stability)", s.trim())))
    }
}

/// Ordered, duplicate-free list of model terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct StatisticSpec {
    terms: Vec<Term>,
}

impl TryFrom<Vec<Term>> for StatisticSpec {
    type Error = Error;

    fn try_from(terms: Vec<Term>) -> Result<Self> {
        Self::new(terms)
    }
}

impl From<StatisticSpec> for Vec<Term> {
    fn from(spec: StatisticSpec) -> Self {
        spec.terms
    }
}

impl FromStr for StatisticSpec {
    type Err = Error;

    /// Parses a comma-separated list such as `edges,triangles,stability`.
    fn from_str(s: &str) -> Result<Self> {
        let terms = s.split(',').filter(|p| !p.trim().is_empty()).map(Term::from_str).collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }
}

impl fmt::Display for StatisticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.terms.iter().map(|t| t.name()).collect();
        f.write_str(&names.join(","))
    }
}

impl StatisticSpec {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Config("statistic list is empty".into()));
        }
        for (a, t) in terms.iter().enumerate() {
            if terms[..a].contains(t) {
                return Err(Error::Config(format!("statistic `{t}` listed twice")));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: Term) -> Option<usize> {
        self.terms.iter().position(|&t| t == term)
    }

    pub fn names(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.name().to_string()).collect()
    }

    /// True when every term's change statistic ignores the rest of `y_t`.
    pub fn is_dyadic(&self) -> bool {
        self.terms.iter().all(|t| t.is_dyadic())
    }

    /// Statistic vector of the transition, without dimension checks.
    pub fn stats_unchecked(&self, y_t: &Adjacency, y_prev: &Adjacency) -> Vec<f64> {
        self.terms.iter().map(|t| t.value(y_t, y_prev)).collect()
    }

    /// Writes the change statistics of dyad `(i, j)` into `out`, without checks.
    #[inline]
    pub fn change_into(&self, y_t: &Adjacency, y_prev: &Adjacency, i: usize, j: usize, out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = t.change(y_t, y_prev, i, j);
        }
    }

    /// `theta . change(i, j)`, without checks.
    #[inline]
    pub fn logit_unchecked(&self, theta: &[f64], y_t: &Adjacency, y_prev: &Adjacency, i: usize, j: usize) -> f64 {
        self.terms.iter().zip(theta).map(|(t, th)| th * t.change(y_t, y_prev, i, j)).sum()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.len() {
            return Err(Error::Dimension(format!("{} coefficients for {} statistics", theta.len(), self.len())));
        }
        Ok(())
    }
}

fn check_pair(y_t: &Adjacency, y_prev: &Adjacency) -> Result<()> {
    if y_t.n() != y_prev.n() {
        return Err(Error::Dimension(format!("current slice has {} nodes, previous has {}", y_t.n(), y_prev.n())));
    }
    Ok(())
}

fn check_dyad(n: usize, i: usize, j: usize) -> Result<()> {
    if i == j {
        return Err(Error::InvalidInput(format!("dyad ({i},{j}) is a self-pair")));
    }
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!("dyad ({i},{j}) outside 0..{n}")));
    }
    Ok(())
}

/// Sufficient statistic `S(y_t, y_prev)` of one transition.
pub fn temporal_stats(spec: &StatisticSpec, y_t: &Adjacency, y_prev: &Adjacency) -> Result<Vec<f64>> {
    check_pair(y_t, y_prev)?;
    Ok(spec.stats_unchecked(y_t, y_prev))
}

/// `S(y with (i,j)=1) - S(y with (i,j)=0)` for the transition statistic.
pub fn change_stats(spec: &StatisticSpec, y_t: &Adjacency, y_prev: &Adjacency, i: usize, j: usize) -> Result<Vec<f64>> {
    check_pair(y_t, y_prev)?;
    check_dyad(y_t.n(), i, j)?;
    let mut out = vec![0.0; spec.len()];
    spec.change_into(y_t, y_prev, i, j, &mut out);
    Ok(out)
}

/// Conditional log-odds of tie `(i, j)` given every other dyad.
pub fn conditional_logit(
    spec: &StatisticSpec,
    theta: &[f64],
    y_t: &Adjacency,
    y_prev: &Adjacency,
    i: usize,
    j: usize,
) -> Result<f64> {
    spec.check_theta(theta)?;
    check_pair(y_t, y_prev)?;
    check_dyad(y_t.n(), i, j)?;
    Ok(spec.logit_unchecked(theta, y_t, y_prev, i, j))
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}
