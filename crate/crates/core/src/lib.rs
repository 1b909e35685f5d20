//! Person-entity profiling over offline search-result snapshots.
//!
//! Pages retrieved for a target person are classified as relevant or not,
//! related entities and their relation types are extracted from the relevant
//! pages, and the result is assembled into a typed, weighted, temporal
//! profile graph that can be filtered, ranked, searched for paths and served
//! over HTTP.

pub mod corpus;
pub mod digest;
pub mod extraction;
pub mod features;
pub mod graph;
pub mod learners;
pub mod pipeline;
pub mod relations;
pub mod relevance;
pub mod rng;
pub mod service;
pub mod synth;
pub mod text;
