//! Hyperbolic fillings of compact metric spaces and the discrete moduli
//! and capacities computed on them.

pub mod boundary_modulus;
pub mod capacity;
pub mod covering_capacity;
pub mod error;
pub mod experiment;
pub mod filling;
pub mod metric;
pub mod path_solver;
pub mod qs_maps;
pub mod weak_norm;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    pub mod spaces {}
    #[doc = include_str!("../../../book/src/fillings.md")]
    pub mod fillings {}
    #[doc = include_str!("../../../book/src/weak-norms.md")]
    pub mod weak_norms {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    pub mod capacity {}
    #[doc = include_str!("../../../book/src/modulus.md")]
    pub mod modulus {}
    #[doc = include_str!("../../../book/src/covering.md")]
    pub mod covering {}
    #[doc = include_str!("../../../book/src/quasisymmetry.md")]
    pub mod quasisymmetry {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    pub mod scenarios {}
}
