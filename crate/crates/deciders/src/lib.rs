//! Opacity deciders for guarded multi-energy timed automata: per-class
//! pipelines over region automata, Parikh images, energy pushdown
//! automata and Parikh-by-block products, with subclass dispatch and a
//! grid-oracle cross-validation harness.

pub mod oracle;
pub mod pbb;
mod pipelines;

use serde::{Deserialize, Serialize};

use opaq_core::model::GuardedMeta;
use opaq_lang::cfg::ParikhCaps;
use opaq_lang::nfa::DEFAULT_DETERMINIZE_CAP;
use opaq_lang::semilinear::{SemilinearSet, DEFAULT_PARIKH_STATE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    En,
    EtEn,
    De,
    Bde,
}

impl Property {
    pub fn as_str(&self) -> &'static str {
        match self {
            Property::En => "en",
            Property::EtEn => "et-en",
            Property::De => "de",
            Property::Bde => "bde",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Exists,
    Weak,
    Full,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Exists => "exists",
            Variant::Weak => "weak",
            Variant::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpacityQuery {
    pub property: Property,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VerdictStatus {
    Holds,
    Fails,
    Unsupported,
    Resource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A letter-count vector common to both Parikh images.
    ParikhVector { alphabet: Vec<String>, vector: Vec<u64> },
    /// A vector realized on one side but not the other.
    CounterexampleVector { alphabet: Vec<String>, vector: Vec<u64> },
    /// A word common to both languages.
    Word { letters: Vec<String> },
    /// A word realized on one side but not the other.
    CounterexampleWord { letters: Vec<String> },
    /// An accepting path of the Parikh-by-block product with one common
    /// block vector per tick.
    PbbPath { inc_alphabet: Vec<String>, steps: Vec<pbb::PbbWitnessStep> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// The construction that produced the verdict.
    pub pipeline: String,
    pub property: Property,
    pub variant: Variant,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unsupported_reason: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn strip_witness(mut self) -> Verdict {
        self.witness = None;
        self
    }
}

/// Side artifacts of a pipeline, exposed for tests and reports.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub counted_alphabet: Vec<String>,
    pub private_image: Option<SemilinearSet>,
    pub public_image: Option<SemilinearSet>,
}

#[derive(Debug, Clone, Copy)]
pub struct DecideOptions {
    pub parikh_state_cap: usize,
    pub determinize_cap: usize,
    pub parikh_caps: ParikhCaps,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            parikh_state_cap: DEFAULT_PARIKH_STATE_CAP,
            determinize_cap: DEFAULT_DETERMINIZE_CAP,
            parikh_caps: ParikhCaps::default(),
        }
    }
}

fn error_verdict(e: &pipelines::PipelineError, pipeline: &str, query: OpacityQuery) -> Verdict {
    let (status, reason) = match e {
        pipelines::PipelineError::Unsupported(r) => (VerdictStatus::Unsupported, r.clone()),
        pipelines::PipelineError::Resource(r) => (VerdictStatus::Resource, r.clone()),
        pipelines::PipelineError::Other(r) => (VerdictStatus::Resource, r.clone()),
    };
    Verdict {
        status,
        pipeline: pipeline.to_string(),
        property: query.property,
        variant: query.variant,
        witness: None,
        unsupported_reason: Some(reason),
        notes: Vec::new(),
    }
}

/// Decide the query, selecting the pipeline from the input's subclass.
pub fn decide(meta: &GuardedMeta, query: OpacityQuery, opts: &DecideOptions) -> Verdict {
    decide_with_artifacts(meta, query, opts).0
}

pub fn decide_with_artifacts(
    meta: &GuardedMeta,
    query: OpacityQuery,
    opts: &DecideOptions,
) -> (Verdict, Artifacts) {
    match pipelines::dispatch(meta, query, opts) {
        Ok(pair) => pair,
        Err(e) => (error_verdict(&e, "dispatch", query), Artifacts::default()),
    }
}

/// The integer-switching dispatch entry point, applicable to unguarded
/// inputs whose rates only change at integer absolute times.
pub fn decide_via_is_transform(
    meta: &GuardedMeta,
    query: OpacityQuery,
    opts: &DecideOptions,
) -> Verdict {
    match pipelines::is_route(meta, query, opts) {
        Ok((v, _)) => v,
        Err(e) => error_verdict(&e, "integer-switch", query),
    }
}
