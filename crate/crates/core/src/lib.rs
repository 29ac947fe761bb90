//! Top-k query answering over Datalog+/- ontologies, with answers ranked by
//! subjective reports.
//!
//! The pipeline: parse a knowledge base ([`parser`]), answer a simple
//! conjunctive query over its bounded chase ([`reasoner`]), attach reports
//! to the answers ([`report`]), and rank them with trust and relevance
//! measures ([`measures`], [`ranking`]). Generalized reports describe sets of
//! atoms by a query and are weighted by specificity ([`greport`]).

pub mod chase;
pub mod error;
pub mod exec;
pub mod greport;
pub mod measures;
pub mod parser;
pub mod ranking;
pub mod reasoner;
pub mod report;
pub mod spo;
pub mod syntax;

pub use error::{Error, ParseError, ReportError, Result, SpoError};
pub use exec::Execution;
pub use parser::{parse_ground_atom, parse_program, parse_query};
pub use reasoner::{answer_cq, answers_in_atom_form, check_consistency, entails, Consistency, Reasoner};
pub use spo::{sim, Spo, SpoSpec};
pub use syntax::{name, Atom, Name, Ontology, Query, Term, Tgd};
