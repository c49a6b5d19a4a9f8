//! Classical, fractional and discrete fractional signatures of
//! piecewise-linear paths, a Picard solver for linear controlled Caputo
//! equations, and signature features for MNIST-format digit images.

pub mod caputo;
pub mod classical;
pub mod discrete;
pub mod error;
pub mod features;
pub mod fractional;
pub mod idx;
pub mod path;
pub mod quadrature;
pub mod specfun;
pub mod words;

pub use error::{Error, Result};
pub use fractional::Alpha;
pub use path::PiecewiseLinearPath;
pub use words::{TruncatedSignature, Word};
