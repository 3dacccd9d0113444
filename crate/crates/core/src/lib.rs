// NaN must fail validation, so comparisons are written as `!(x <= tol)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod lindblad;
pub mod numkernel;
pub mod phase;
pub mod purification;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};

/// Guide chapters, compiled so their code blocks run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/geometric-phase.md")]
    mod geometric_phase {}
    #[doc = include_str!("../../../book/src/purification.md")]
    mod purification {}
    #[doc = include_str!("../../../book/src/dephasing.md")]
    mod dephasing {}
    #[doc = include_str!("../../../book/src/degenerate.md")]
    mod degenerate {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
