//! Directed communication graph (leader = node 0) and delayed channels.

mod channel;
mod graph;

pub use channel::{DelayedChannel, Message};
pub use graph::{CommGraph, Edge, GraphViolation, DEFAULT_EDGE_DELAY};
