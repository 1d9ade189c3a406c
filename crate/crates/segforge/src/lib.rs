//! IO side of segforge: EDGAR access, filing parsing, the LLM gateway, the
//! staged extraction pipeline, the panel store and the comparability and
//! evaluation front ends used by the `segforge` binary.

pub mod compare;
pub mod config;
pub mod edgar;
pub mod gateway;
pub mod index;
pub mod manifest;
pub mod parser;
pub mod pipeline;
pub mod report;
pub mod store;
