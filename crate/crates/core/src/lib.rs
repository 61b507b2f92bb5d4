//! Anomaly detection in weighted directed networks.
//!
//! Nodes are scored by 140 features drawn from degree and weight statistics,
//! community structure, heavy paths, distance-based motif tests and spectral
//! localisation, each tested against configuration-model replicas. Features
//! are combined either by summation or by a random forest trained on
//! synthetic networks with planted structures.

pub mod basic;
pub mod combine;
pub mod community;
pub mod generators;
pub mod graph;
pub mod metrics;
pub mod netemd;
pub mod oddball;
pub mod null_model;
pub mod pathfinder;
pub mod pipeline;
pub mod seed;
pub mod spectral;
pub mod stats;
