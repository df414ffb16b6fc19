//! Game-theoretic learning and revealed-preference detection of equilibrium
//! play in networked multi-agent systems.
//!
//! The crate has two halves:
//!
//! * [`game`] and [`learning`]: normal-form games on a connectivity graph,
//!   regret matching with diffusion cooperation over neighbors, and the
//!   distance of the agents' regrets to the correlated-equilibrium set.
//! * [`revealed`] and [`detection`]: Afriat-style feasibility tests for
//!   utility maximization and Nash rationality of a concave potential game,
//!   a noise-robust statistical test and SPSA probe design. Both rest on the
//!   phase-1 simplex in [`lp`].
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the type aliases
//! below fix `f64`, which is what the experiments and the CLI use.

pub mod detection;
pub mod error;
pub mod experiment;
pub mod game;
pub mod io;
pub mod learning;
pub mod lp;
pub mod matrix;
pub mod revealed;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Game = game::NormalFormGame<f64>;
pub type Weights = game::WeightMatrix<f64>;
pub type Behavior = game::GlobalBehavior<f64>;
pub type System = lp::LinearSystem<f64>;
pub type Dataset = revealed::Dataset<f64>;
