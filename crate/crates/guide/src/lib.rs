//! The chapters of the book, compiled so that `cargo test` runs every
//! snippet in them. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/arithmetic.md")]
pub mod arithmetic {}
#[doc = include_str!("../../../book/src/groups.md")]
pub mod groups {}
#[doc = include_str!("../../../book/src/lattices.md")]
pub mod lattices {}
#[doc = include_str!("../../../book/src/cohomology.md")]
pub mod cohomology {}
#[doc = include_str!("../../../book/src/orbits.md")]
pub mod orbits {}
#[doc = include_str!("../../../book/src/extensions.md")]
pub mod extensions {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
#[doc = include_str!("../../../book/src/branches.md")]
pub mod branches {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
