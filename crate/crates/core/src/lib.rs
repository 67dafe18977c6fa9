//! Fixation of a beneficial type in a Λ-Wright–Fisher population with
//! `Λ = Beta(2−α, α)`, `α ∈ (1, 2)`, under moderate selection.
//!
//! The fixation probability of a single mutant is computed through the ancestral
//! selection process: `π_N = E[A_eq] / N`, where `A_eq` is the stationary number of
//! potential ancestors. The crate provides the process itself ([`asp`]), the forward
//! type-count chain and its Monte Carlo simulator ([`forward`]), a numerical check of
//! the duality linking them ([`duality`]), the drift bounds on `E[A_eq]`
//! ([`lyapunov`]), and the offspring laws of the neutral reproduction events
//! ([`offspring`]).
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix `f64`.

pub mod asp;
pub mod ctmc;
pub mod duality;
pub mod error;
pub mod forward;
pub mod lyapunov;
pub mod model;
pub mod offspring;
pub mod scalar;
pub mod special;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams = model::ModelParams<f64>;
pub type DerivedConstants = model::DerivedConstants<f64>;
pub type AspChain = asp::AspChain<f64>;
pub type BsAspChain = asp::BsAspChain<f64>;
pub type StationaryDist = asp::StationaryDist<f64>;
pub type OffspringLaw = offspring::OffspringLaw<f64>;
pub type FrequencyChain = forward::FrequencyChain<f64>;
pub type DualityReport = duality::DualityReport<f64>;
pub type DriftProfile = lyapunov::DriftProfile<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type ModelParams = crate::model::ModelParams<f32>;
    pub type AspChain = crate::asp::AspChain<f32>;
    pub type StationaryDist = crate::asp::StationaryDist<f32>;
    pub type OffspringLaw = crate::offspring::OffspringLaw<f32>;
}
