//! oskit-core: a desk-scale workbench for concrete operator spaces.
//!
//! An operator space is given as a corner presentation: a linear span of
//! h×k complex matrices acting from ℂᵏ to ℂʰ. On top of that the crate
//! computes multiplier spaces (left, right, quasi), algebrizes a space by a
//! contractive quasi-multiplier, searches and verifies quasi-identities,
//! decides the C*-algebra and one-sided-ideal characterizations, and runs
//! two constructive decompositions: the Smith reduction of a TRO to
//! rectangular blocks and the extreme-point ideal decomposition
//! X = X_T ⊕∞ X_L ⊕∞ X_R.
//!
//! Quasi-multiplier semantics are embedding relative: everything is
//! computed against the supplied corner presentation after nondegenerate
//! reduction, not against an abstract envelope.

pub mod algebras;
pub mod error;
pub mod multipliers;
pub mod numcore;
pub mod osj;
pub mod spaces;

pub use error::{Error, Result};
pub use numcore::{CMatrix, CVector, Side, Subspace, Tolerances};
pub use spaces::{OperatorSpace, Reduction, StarAlgebra};
