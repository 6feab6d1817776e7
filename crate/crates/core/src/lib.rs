//! Cohomology, compatible pairs and branch periodicity for p-groups of fixed
//! coclass.
//!
//! The crate works with finite groups given by multiplication tables acting
//! on free `Z_p`-modules, truncated to a working precision `p^N`. All linear
//! algebra is exact over `Z/p^N` and rests on a Smith normal form routine.

pub mod abelian;
pub mod cohomology;
pub mod compatible;
pub mod error;
pub mod extensions;
pub mod lattice;
pub mod lattice_module;
pub mod finite_group;
pub mod matrix;
pub mod presentation;
pub mod report;
pub mod scenarios;
pub mod snf;
pub mod tree;
pub mod zmod;

pub use error::{Error, Result};
