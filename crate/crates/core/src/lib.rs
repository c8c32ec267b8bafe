//! Growth dynamics of a two-community weighted random graph.
//!
//! A population of red and blue vertices re-draws its collaboration edges
//! every round from a block model (same-color pairs connect at rate `a/n`
//! with weight `alpha`, cross-color pairs at `b/n` with weight `beta`,
//! self-loops allowed) and then grows by a `lambda` fraction: recruiters
//! are drawn with replacement proportionally to weighted degree, and each
//! draw brings in one new vertex of the recruiter's color.
//!
//! The long-run fate of the minority is governed by the single ratio
//! `rho = a*alpha / (b*beta)`: above 1 the minority fraction drifts to
//! zero, below 1 the colors approach parity, at 1 the fraction freezes.
//! [`detmap`] carries the matching deterministic one-dimensional map with
//! its fixed-point and stability analysis; [`verify`] ties the sampler to
//! its closed-form expectations and concentration behavior.
//!
//! Modules:
//! - [`params`]: validated parameters, populations, seeding.
//! - [`sbm`]: one round's weighted graph sampler and per-color weights.
//! - [`dynamics`]: the round loop and trajectory recording.
//! - [`detmap`]: the deterministic update map `f` and its analysis.
//! - [`verify`]: expectation identities, bounds, and the check suite.

pub mod alias;
pub mod detmap;
pub mod dynamics;
pub mod fmt;
pub mod params;
pub mod sbm;
pub mod verify;

pub use params::{Color, ModelParams, ParamError, Population, SeedSpec, TrialRng};
