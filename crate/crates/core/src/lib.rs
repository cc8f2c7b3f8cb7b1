//! Derivative-free optimization of noisy objectives with active subspaces.

pub mod astars;
pub mod bench;
pub mod error;
pub mod faastars;
pub mod history;
pub mod learning;
pub mod ledger;
pub mod oracle;
pub mod rng;
pub mod stars;
pub mod subspace;
pub mod surrogate;

pub use error::{Error, Result};
