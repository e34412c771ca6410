//! The guide in `book/src`, compiled so its examples run under `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/device.md")]
pub mod device {}

#[doc = include_str!("../../../book/src/variation.md")]
pub mod variation {}

#[doc = include_str!("../../../book/src/mitigation.md")]
pub mod mitigation {}

#[doc = include_str!("../../../book/src/dbn.md")]
pub mod dbn {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
