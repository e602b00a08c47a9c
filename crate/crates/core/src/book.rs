//! The guide's chapters, compiled as doctests so their snippets stay current.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/controllability.md")]
pub mod controllability {}

#[doc = include_str!("../../../book/src/betweenness.md")]
pub mod betweenness {}

#[doc = include_str!("../../../book/src/hypergraphs.md")]
pub mod hypergraphs {}

#[doc = include_str!("../../../book/src/tensors.md")]
pub mod tensors {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
