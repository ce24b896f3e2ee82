//! Analysis of translationally invariant matrix product states and classical
//! matrix product density operators.
//!
//! The crate covers the full pipeline around local purifications of TI
//! MPDOs: building the integer reduction instances from 3×3 matrix families,
//! scanning them for negative word traces with exact arithmetic, canonical
//! forms and gauge equivalence of MPS tensors, power-sum machinery, and a
//! bounded numerical search for purification tensors of fixed bond
//! dimension.

pub mod canonical;
pub mod error;
pub mod format;
pub mod linalg;
pub mod matrix;
pub mod necklace;
pub mod positivity;
pub mod powersum;
pub mod purifier;
pub mod reduction;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use scalar::{Exact, Scalar, ScalarMode, C64};
pub use tensor::{DenseCap, MpsTensor, PurificationTensor, StateVector};
pub use format::{AnyPurification, AnyTensor};
