#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod error;
pub mod experiments;
mod fft;
pub mod fractional;
pub mod fullline;
pub mod functionals;
pub mod measure;
pub mod quadrature;
pub mod registry;
pub mod symbol;

pub use error::{Error, Result};
pub use measure::{
    apply_to_sequence, convolution_power, convolve, truncate, SignedMeasure, SpatialSequence,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/fractional.md")]
    mod fractional {}
    #[doc = include_str!("../../../book/src/symbols.md")]
    mod symbols {}
    #[doc = include_str!("../../../book/src/functionals.md")]
    mod functionals {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
