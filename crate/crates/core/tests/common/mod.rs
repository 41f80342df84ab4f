//! Oracles and fixtures shared by the integration tests and the acceptance
//! runner.
#![allow(dead_code)]

pub mod fd;
pub mod fixtures;
pub mod geometry;
pub mod invariants;
pub mod naive;
pub mod selection;
