//! Canonical forms: open-chain gauge fixing, translation-invariant
//! representations, block and periodic decompositions, injectivity, and
//! recovery of a site-independent tensor from an open-chain form.

mod blocks;
mod extraction;
mod injectivity;
mod obc;
mod periodic;

pub use blocks::{block_residuals, tensor_blocks, ti_canonical_blocks, Block, BlockResiduals, BlocksReport, CanonicalBlocks};
pub use extraction::{simultaneous_similarity, solve_ti_extraction, ExtractionOptions};
pub use injectivity::{check_invertible_a0_bound, injectivity_length, shift_example, A0Report, InjectivityReport};
pub use obc::{canonical_residuals, gauge_to_canonical, is_translation_invariant, ti_from_obc, CanonicalResiduals, GaugeRecord};
pub use periodic::{periodic_decomposition, PeriodicDecomposition};
