//! Rank-4 entangled PPT states of the 3x3 bipartite system.
//!
//! Construction: four positive parameters `(a, b, c, d)` fix an orthogonal
//! unextendible product basis (UPB) in standard form; the normalized projection
//! onto its orthogonal complement is an entangled PPT state of rank four.
//!
//! Classification: a rank-(4,4) PPT state is mapped back to its parameters by
//! finding the six product vectors in its kernel, ordering them so that four
//! determinant-ratio invariants are positive, and solving for the product
//! transformation to standard form. Parameters are reported modulo an order-60
//! group of reorderings.
//!
//! All numerics are generic over [`Real`] (`f32`, `f64`); the aliases at the
//! crate root fix `f64`, which the default tolerances assume.

// `!(x > tol)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod invariants;
pub mod io;
pub mod orthogonalizer;
pub mod product_search;
pub mod scalar;
pub mod symmetry;
pub mod tensor;
pub mod transform;
pub mod upb;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Double-precision aliases.
pub type Complex64 = C<f64>;
pub type Matrix = tensor::CMat<f64>;
pub type Hermitian = tensor::HermMat<f64>;
pub type State = density::DensityMatrix<f64>;
pub type Params = upb::UpbParams<f64>;
pub type ProductVector = upb::ProductVector<f64>;
pub type Upb = upb::Upb<f64>;
pub type Transform = transform::ProductTransform<f64>;
pub type SearchConfig = product_search::SearchConfig<f64>;
