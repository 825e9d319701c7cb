//! Negative binomial-reciprocal inverse Gaussian (NBRIG) count distribution.
//!
//! `X | λ ~ NB(r, e^-λ)` with `λ` drawn from a reciprocal inverse Gaussian.
//! The crate provides exact PMF evaluation, moments, the compound
//! aggregate-loss recursion, the multivariate extension and maximum-likelihood
//! fitting against Poisson and negative binomial baselines.

// `!(x > 0.0)` style checks must also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod compound;
pub mod dd;
pub mod dist;
pub mod error;
mod mixture;
pub mod multivariate;
pub mod optim;
pub mod par;
pub mod quad;
pub mod rig;
pub mod special;
pub mod fit;

pub use baselines::{NbParams, PoissonParams};
pub use compound::{AggregateDist, SeverityPmf};
pub use dist::{DispersionReport, Evaluation, Method, NbrigParams, PmfTable};
pub use error::{NbrigError, Result};
pub use fit::{CountData, FitOptions, FitReport, Model, ModelParams};
pub use multivariate::MvNbrigParams;
pub use par::Execution;
pub use rig::RigParams;
