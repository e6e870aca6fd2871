//! Deterministic two-character duel simulator with neuroevolution (a
//! fixed-topology GA and NEAT) and a competitive coevolution harness.

pub mod config;
pub mod controller;
pub mod enemies;
pub mod engine;
pub mod evaluation;
pub mod experiment;
pub mod ga;
pub mod geom;
pub mod neat;
pub mod network;
pub mod par;
pub mod replay;
pub mod rng;
pub mod sensors;
pub mod session;
