pub mod annotator;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod discovery;
pub mod json;
pub mod llm;
pub mod metrics;
pub mod pointer;
pub mod retry;
pub mod schema;
