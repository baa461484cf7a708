//! Gender representation bias measurement for parallel Spanish/English
//! corpora.
//!
//! * [`corpus`]: line-aligned corpus loading, sample sizes, seeded subsets
//! * [`polarity`]: English unigram gender-polarity counts
//! * [`annotation`]: prompt rendering and parsing of LLM noun/pronoun analyses
//! * [`llm_backend`]: HTTP, replay and cached completion backends
//! * [`metrics`]: person/gender aggregation, validation scores, epicenes
//! * [`report`]: text/CSV/JSON tables
//! * [`cli`]: the `genderscope` command line

pub mod annotation;
pub mod cli;
pub mod corpus;
pub mod llm_backend;
pub mod metrics;
pub mod polarity;
pub mod report;
