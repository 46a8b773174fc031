//! Retrospective interference alignment for the K-user MISO interference
//! channel with delayed local CSIT: exact DoF calculus, replication plans,
//! a slot-level protocol simulator and a backward decoder.

pub mod channel;
pub mod cli;
pub mod decoder;
pub mod dof;
pub mod error;
pub mod linalg;
pub mod protocol;
pub mod rational;
pub mod report;
pub mod sim;
pub mod symbols;

pub use rational::Rational;
