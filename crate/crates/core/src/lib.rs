//! Matrix product state toolkit.
//!
//! Open, translation-invariant and periodic chains share one contraction
//! engine ([`mps`]); the remaining modules build canonical forms, transfer-map
//! analysis, parent Hamiltonians, compression, circuit simulation and
//! sequential-generation schedules on top of it. Dense-vector routines are
//! provided throughout as brute-force cross-checks for small chains.

pub mod canonical;
pub mod circuit;
pub mod compress;
pub mod error;
pub mod generation;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod mps;
pub mod parent;
pub mod states;
pub mod tensor;
pub mod transfer;

pub use error::{MpsError, Result};
pub use linalg::{Mat, C64};
pub use mps::{AnyMps, CanonicalFlag, Chain, ObcMps, PbcMps, ProductObservable, TiMps};
pub use states::{build_state, StateName};
pub use tensor::SiteTensor;
