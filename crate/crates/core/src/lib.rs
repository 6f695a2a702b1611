//! Core engine for eliciting sustainability requirements, classifying how a
//! product's requirements correlate with them, and revising the ones that
//! work against them.

pub mod agent;
pub mod corpus;
pub mod knowledge_graph;
pub mod provider;
pub mod relationship_integrator;
pub mod review;
pub mod semantic_index;
pub mod sr_elicitor;
pub mod sustainability_optimizer;
pub mod util;
