//! Gelfand-Tsetlin coordinates of Hermitian matrices, the explicit
//! Alekseev-Meinrenken diffeomorphism, and Stokes and connection matrices of
//! the system `dF/dz = (i u - A / (2 pi i z)) F`, together with two numerical
//! oracles: direct integration of the linear system and the isomonodromy flow.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod am;
pub mod caterpillar;
pub mod error;
pub mod gt;
pub mod iso;
pub mod linalg;
pub mod oracle;
pub mod sampling;

pub use error::{Error, Result};
