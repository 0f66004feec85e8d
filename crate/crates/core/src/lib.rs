//! Embedded labeled-property-graph engine for life-cycle inventory data.
//!
//! The crate is organised around a single in-memory [`graph::Graph`]:
//!
//! * [`graph`] stores nodes and edges, keeps the label and adjacency
//!   indexes, and converts to and from snapshot dumps and triples.
//! * [`ontology`] holds the canonical inventory schema and validates graphs
//!   against it.
//! * [`harmonize`] rewrites graphs written in other inventory vocabularies
//!   into the canonical one.
//! * [`ingest`] loads the unified workflow, metadata, agent and reference
//!   tables.
//! * [`query`] parses and runs pattern-matching queries.
//! * [`quality`] scores data quality and FAIR readiness.

pub mod graph;
pub mod harmonize;
pub mod ingest;
pub mod ontology;
pub mod quality;
pub mod query;
