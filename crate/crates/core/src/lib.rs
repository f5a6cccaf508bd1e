//! Symmetric factorizations H = B·B* − C·C* of Hermitian Toeplitz, Hankel and
//! low displacement rank matrices, with factors kept as implicit operator trees.

pub mod dense;
pub mod displacement;
pub mod error;
pub mod factor;
pub mod fft;
pub mod hankel;
pub mod io;
pub mod krylov;
pub mod sos;
pub mod structured;
pub mod toeplitz;

pub use num_complex::Complex64 as C64;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use factor::{FactorNode, FactorPair};
pub use structured::{HankelGen, StructuredOp, ToeplitzGen};
