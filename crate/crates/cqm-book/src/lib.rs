//! Compile-checks the guide. Each chapter of `book/` is attached as rustdoc
//! to an empty module, so every fenced Rust sample in the book runs under
//! `cargo test` as a doctest and the prose can never drift from the API.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/polarization.md")]
pub mod polarization {}

#[doc = include_str!("../../../book/src/storage-loop.md")]
pub mod storage_loop {}

#[doc = include_str!("../../../book/src/drive-timing.md")]
pub mod drive_timing {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
