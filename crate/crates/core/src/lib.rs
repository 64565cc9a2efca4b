//! Simulated HC-12 ground station.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod geo;
pub mod linkmodel;
pub mod sim;
pub mod station;
pub mod tracker;
