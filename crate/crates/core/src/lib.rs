//! Agentic key-value extraction and question answering over Declaration of Performance
//! documents, with QA dataset generation and an evaluation harness.

pub mod agent;
pub mod annotations;
pub mod baseline;
pub mod ingest;
pub mod llm;
pub mod metrics;
pub mod par;
pub mod report;
pub mod schema;
pub mod tools;
