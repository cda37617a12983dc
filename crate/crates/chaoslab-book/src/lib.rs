//! The guide under `book/` included chapter by chapter, so `cargo test`
//! compiles and runs every code block in it. A snippet that drifts from the
//! library API fails here before it can mislead a reader.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/asynchronous-iterations.md")]
pub mod asynchronous_iterations {}

#[doc = include_str!("../../../book/src/certifying-chaos.md")]
pub mod certifying_chaos {}

#[doc = include_str!("../../../book/src/distance-and-sensitivity.md")]
pub mod distance_and_sensitivity {}

#[doc = include_str!("../../../book/src/datasets.md")]
pub mod datasets {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/networks-as-systems.md")]
pub mod networks_as_systems {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
