//! Independent checks of the closed forms: Monte-Carlo estimates built from
//! raw small-scale channel draws, and a generic generalized-eigenvector
//! solver for the filter design.

mod components;
mod eig;
mod realization;

pub use components::{
    estimate_all_components, estimate_components, ComponentCheck, ComponentEstimates, CHUNK_SIZE,
};
pub use eig::{dominant_generalized_eigvec, rayleigh_quotient, EigenSolution, MAX_ITERATIONS, TOLERANCE};
pub use realization::{sample_realization, ChannelRealization};
