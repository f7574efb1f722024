//! Shared fixtures for the integration tests: the seeded synthetic harness,
//! independent oracles and an in-process `/v1` gateway backed by the mocks.

#![allow(dead_code)]

pub mod gateway;
pub mod harness;
pub mod oracle;

#[allow(unused_imports)]
pub use harness::*;
