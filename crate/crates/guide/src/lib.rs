//! Compiles the code listings of the book as doctests. mdbook cannot link
//! against workspace crates, so each chapter is included as the docs of an
//! empty module and `cargo test --doc` runs its listings.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/measures.md")]
pub mod measures {}
#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}
#[doc = include_str!("../../../book/src/robustness.md")]
pub mod robustness {}
#[doc = include_str!("../../../book/src/smoothing.md")]
pub mod smoothing {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
