//! Post-coder feedback for MIMO-TDD downlinks.
//!
//! The receiver's unitary post-coder is split into Givens angles, each angle is
//! scalar-quantized, and the resulting feedback is evaluated through MSE
//! bounds, ergodic rate bounds, and Monte Carlo link simulation.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod givens;
pub mod linalg;
pub mod montecarlo;
pub mod quadrature;
pub mod quantizer;
pub mod rates;
pub mod spectral;
pub mod stats;
pub mod streams;

pub use channel::{sample_channel, sample_postcoder, svd_canonical, ChannelSample, SvdFactors};
pub use error::{Error, Result};
pub use givens::{
    decompose_postcoder, decompose_unit_vector, givens_matrix, reconstruct_postcoder, reconstruct_unit_vector,
    PostcoderAngles, UnitVectorAngles,
};
pub use linalg::CMatrix;
pub use quantizer::{BitAllocation, CodebookSet, ScalarCodebook};
pub use spectral::PowerPolicy;
pub use stats::Estimate;
pub use streams::Streams;
