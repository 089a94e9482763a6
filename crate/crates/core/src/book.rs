//! Doc-test bridge for the book: every fenced Rust block in book/src runs
//! under `cargo test --doc`, keeping the guide in sync with the API.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/permutations.md")]
mod permutations {}

#[doc = include_str!("../../../book/src/matrix.md")]
mod matrix {}

#[doc = include_str!("../../../book/src/secular.md")]
mod secular {}

#[doc = include_str!("../../../book/src/limit-fields.md")]
mod limit_fields {}

#[doc = include_str!("../../../book/src/spectra.md")]
mod spectra {}

#[doc = include_str!("../../../book/src/statistics.md")]
mod statistics {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
