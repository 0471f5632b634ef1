//! Hardy–Littlewood inequalities for m-linear forms on ℓ_{p_1}^n × ⋯ × ℓ_{p_m}^n.
//!
//! * [`exponents`]: reciprocal sums, regimes, critical exponents, constant bounds.
//! * [`tensor`]: dense coefficient tensors, coefficient norms, ensembles, file format.
//! * [`norms`]: the sup norm over products of ℓ_p balls, heuristic and exact.
//! * [`verify`]: inequality checks on single forms and seeded ensembles.
//! * [`search`]: lower bounds on optimal constants by ratio ascent.
//! * [`ksz`]: growth of the best ratio in `n` below and at the critical exponent.
//! * [`cli`]: the `hllab` command line.

pub mod cli;
pub mod error;
pub mod exponents;
pub mod ksz;
pub mod norms;
pub mod par;
pub mod scalar;
pub mod search;
pub mod seed;
pub mod tensor;
pub mod verify;

pub use error::{HlError, Result};
pub use exponents::{BoundSource, Exponent, PVector, Regime, RegimeTag, SubsetMode};
pub use num_complex::Complex64;
pub use scalar::{Field, Scalar};
pub use tensor::{AnyTensor, CoeffTensor, Distribution, MixedExponents};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
