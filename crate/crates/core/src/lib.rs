//! Gaussian-state simulation of 1→2 telecloning of optical coherent states.
//!
//! The crate is layered bottom-up: [`gaussian`] states and symplectic maps,
//! [`homodyne`] measurement, the tripartite [`resource`], the end-to-end
//! [`protocol`], fidelity [`metrics`], the [`opo`] squeezing model, and the
//! [`config`] / [`cli`] front end.

pub mod error;
pub mod gaussian;
pub mod homodyne;
pub mod metrics;
pub mod opo;
pub mod protocol;
pub mod resource;

pub use error::{Error, Result};
pub mod config;
pub mod cli;
