//! Grounded question answering over a knowledge base of parsed English
//! sentences.
//!
//! Sentences are parsed with a probabilistic grammar into their most probable
//! constituency tree, translated into logical terms, and either stored as
//! facts or matched against stored facts by unification. Answers are always
//! bindings taken from stored facts.
//!
//! The grammar, parser and benchmark types are generic over the probability
//! scalar; the aliases below fix it to `f64` (the default everywhere) or to
//! exact rationals.

pub mod bench;
pub mod grammar;
pub mod kb;
pub mod parser;
pub mod prob;
pub mod semantics;
pub mod term;

pub use prob::{Exact, Probability};
pub use term::{Substitution, Term, Var};

pub type Grammar = grammar::Grammar<f64>;
pub type ExactGrammar = grammar::Grammar<Exact>;
pub type ParseTree = parser::ParseTree<f64>;
pub type ExactParseTree = parser::ParseTree<Exact>;
pub type Statement = semantics::Statement<f64>;
pub type Analysis = semantics::Analysis<f64>;

pub use kb::{Answer, AnswerForm, KnowledgeBase};
