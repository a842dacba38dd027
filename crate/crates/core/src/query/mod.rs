//! Keyword query language: wildcard terms, order-free bounded proximity
//! (`w1 4d w2`), `or`, and parentheses.
//!
//! Queries run against preprocessed token streams, so proximity distances
//! count only tokens that survive stopword removal.

mod ast;
mod eval;
mod parser;
mod wildcard;

pub use ast::QueryAst;
pub use eval::{
    candidate_spans, count_at_least, count_up_to, evaluate, MatchResult, MatchSpan, ZeroThreshold,
};
pub use parser::{parse_query, ParseError, ParseErrorKind};
pub use wildcard::term_matches;
