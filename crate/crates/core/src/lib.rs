//! Temporal hierarchical exponential random graph models.
//!
//! The crate simulates longitudinal networks whose nodes move between a fixed
//! number of communities, recovers the communities with a dynamic latent space
//! working model (or a spectral baseline), fits a temporal ERGM inside each
//! community, and scores the results by mis-clustering, goodness of fit and
//! one-step link prediction.

pub mod assign;
pub mod dlsm;
pub mod dsbm;
pub mod error;
pub mod eval;
pub mod gibbs;
pub mod generator;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod net;
pub mod par;
pub mod scenario;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use net::{Adjacency, ClusterView, DynamicNetwork, MembershipSeries};
pub use stats::{StatisticSpec, Term};
