//! Post-hoc-valid inference for a mean: e-values whose expectation is
//! controlled in the large-sample limit, confidence intervals that stay
//! risk-controlled when the significance level is chosen after seeing the
//! data, the matching confidence sequence, and a Monte Carlo harness for
//! auditing all of it.
//!
//! The organizing quantity is the post-hoc risk
//! `E[sup_{alpha > 0} 1{theta not in H(alpha)} / alpha]`: a family of
//! intervals is post-hoc valid when this stays at most one even though
//! alpha may depend on the data. Thresholding an e-variable E(theta) at
//! 1/alpha is both sufficient and (for monotone families) necessary, so the
//! crate is structured around the e-variables in [`evalues`], their
//! inversions in [`intervals`], and the risk audit in [`risk`].

pub mod cli;
pub mod error;
pub mod evalues;
pub mod intervals;
pub mod risk;
pub mod sim;
pub mod special;
pub mod summary;

pub use error::{Error, Result};
pub use evalues::{EVariableSpec, IwrParams, MixParams, RegParams, RwsParams, SnSchedule};
pub use intervals::{CiMethod, ConfSeqHandle, Interval};
pub use risk::{AlphaSearchConfig, Regime, RiskReport};
pub use sim::{Family, Generator};
pub use summary::SampleSummary;
