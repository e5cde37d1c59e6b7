//! Guarded multi-energy timed automata: data model, textual format,
//! exact concrete semantics, clock regions, and the model-to-model
//! transformations behind every opacity decision pipeline.

pub mod dot;
pub mod model;
pub mod parse;
pub mod regions;
pub mod semantics;
pub mod transforms;
pub mod twocm;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("semantics error: {0}")]
    Semantics(String),
    #[error("unsupported class: {0}")]
    Unsupported(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error(transparent)]
    Lang(#[from] opaq_lang::LangError),
}
